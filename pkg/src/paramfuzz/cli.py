"""Command-line entry point.

Subcommands cover the whole pipeline:

    validate   parse a corpus and print lint findings
    perturb    apply one operator to one case and print the artifact
    run        execute a campaign (optionally classify + report in one go)
    classify   append classifications to an existing campaign log
    report     emit report.json / report_table.csv / report.md
    demo       run the five shipped failure fixtures and check them

Exit codes: 0 success, 1 validation failure, 2 campaign error, 3 demo
assertion failure.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import sys
import tempfile

from paramfuzz import __version__
from paramfuzz.campaign import (
    CampaignConfig,
    classify_log,
    run_campaign,
)
from paramfuzz.corpus import (
    filter_cases,
    lint_case,
    load_corpus,
    tool_to_json,
)
from paramfuzz.driver import (
    DEFAULT_MAX_OBSERVATION_LENGTH,
    DEFAULT_STEP_LIMIT,
    EndpointConfig,
)
from paramfuzz.errors import (
    CampaignError,
    MalformedInput,
    ParamFuzzError,
    PerturbSkip,
    SchemaViolation,
    SpanMismatch,
)
from paramfuzz.perturb import (
    ALL_OPERATORS,
    SOURCE_OF_OPERATOR,
    apply_document_operator,
    apply_query_operator,
    apply_return_operator,
)
from paramfuzz.reporting import collect_results, emit_report

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CAMPAIGN = 2
EXIT_DEMO = 3


def _print_json(obj: object) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False))


def cmd_validate(args: argparse.Namespace) -> int:
    cases = load_corpus(args.corpus)
    findings = [finding for case in cases for finding in lint_case(case)]
    kept = filter_cases(cases)
    print(
        f"{len(cases)} case(s) parsed, {len(kept)} survive filtering, "
        f"{len(findings)} lint finding(s)"
    )
    for finding in findings:
        print(f"{finding.case_id}: {finding.code}: {finding.message}", file=sys.stderr)
    return EXIT_VALIDATION if findings else EXIT_OK


def cmd_perturb(args: argparse.Namespace) -> int:
    cases = load_corpus(args.corpus)
    case = next((c for c in cases if c.case_id == args.case), None)
    if case is None:
        raise CampaignError(f"case {args.case!r} not found in {args.corpus}")
    operator = args.operator
    source = SOURCE_OF_OPERATOR.get(operator)
    if source is None:
        raise CampaignError(
            f"unknown operator {operator!r}; valid ids: {', '.join(ALL_OPERATORS)}"
        )
    if source == "document":
        from paramfuzz.corpus import all_tools

        donors = all_tools(cases)
        for tool in case.tools:
            try:
                perturbed, record = apply_document_operator(
                    operator, tool, seed=args.seed, donors=donors
                )
            except PerturbSkip as exc:
                print(f"skip {tool.tool_name}: {exc}")
                continue
            _print_json({"tool": tool_to_json(perturbed), "record": record.to_json()})
    elif source == "query":
        try:
            perturbed_query, record = apply_query_operator(operator, case.query)
        except PerturbSkip as exc:
            print(f"skip query: {exc}")
            return EXIT_OK
        _print_json(
            {
                "query": {
                    "text": perturbed_query.text,
                    "mentions": [
                        {
                            "span": [m.start, m.end],
                            "param_name": m.param_name,
                            "tool_name": m.tool_name,
                            "value_text": m.value_text,
                        }
                        for m in perturbed_query.mentions
                    ],
                },
                "record": record.to_json(),
            }
        )
    else:
        if not case.scripted_returns:
            print("skip return: case has no scripted returns")
            return EXIT_OK
        first = case.scripted_returns[0]
        try:
            perturbed_return, record = apply_return_operator(operator, first.value)
        except PerturbSkip as exc:
            print(f"skip return: {exc}")
            return EXIT_OK
        shape: dict[str, object]
        if perturbed_return.raw_text is not None:
            shape = {"raw_text": perturbed_return.raw_text}
        else:
            shape = {"payload": perturbed_return.payload}
        _print_json({"return": shape, "record": record.to_json()})
    return EXIT_OK


def _load_config_file(path: str | None) -> dict[str, object]:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"config file is not valid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise MalformedInput("config file must hold a JSON object")
    return obj


def _build_campaign_config(args: argparse.Namespace) -> CampaignConfig:
    file_config = _load_config_file(args.config)

    def pick(flag_value: object, key: str, fallback: object) -> object:
        if flag_value is not None:
            return flag_value
        if key in file_config:
            return file_config[key]
        return fallback

    corpus_path = pick(args.corpus, "corpus", None)
    out_dir = pick(args.out, "out", None)
    if corpus_path is None:
        raise CampaignError("a corpus path is required (--corpus or config 'corpus')")
    if out_dir is None:
        raise CampaignError("an output directory is required (--out or config 'out')")
    operators_value = pick(args.operators, "operators", None)
    if operators_value is None:
        operators = ALL_OPERATORS
    elif isinstance(operators_value, str):
        operators = tuple(op.strip() for op in operators_value.split(",") if op.strip())
    else:
        operators = tuple(str(op) for op in operators_value)
    endpoint = None
    if "endpoint" in file_config:
        raw_endpoint = file_config["endpoint"]
        if not isinstance(raw_endpoint, dict):
            raise MalformedInput("config 'endpoint' must be an object")
        endpoint = EndpointConfig.from_json(raw_endpoint)
    return CampaignConfig(
        corpus_path=str(corpus_path),
        out_dir=str(out_dir),
        operators=operators,
        driver=str(pick(args.driver, "driver", "replay")),
        seed=int(pick(args.seed, "seed", 0)),  # type: ignore[arg-type]
        workers=int(pick(args.workers, "workers", 1)),  # type: ignore[arg-type]
        step_limit=int(pick(args.step_limit, "step_limit", DEFAULT_STEP_LIMIT)),  # type: ignore[arg-type]
        max_observation_length=int(
            pick(args.max_obs_len, "max_observation_length", DEFAULT_MAX_OBSERVATION_LENGTH)  # type: ignore[arg-type]
        ),
        scripts_path=pick(args.scripts, "scripts", None),  # type: ignore[arg-type]
        endpoint=endpoint,
    )


def cmd_run(args: argparse.Namespace) -> int:
    config = _build_campaign_config(args)
    log_path = run_campaign(config)
    print(f"campaign log: {log_path}")
    if args.classify or args.report:
        appended = classify_log(log_path, config.corpus_path)
        print(f"classified {appended} trajectory(ies)")
    if args.report:
        paths = emit_report(log_path, config.out_dir)
        for kind in ("json", "csv", "md"):
            print(f"report {kind}: {paths[kind]}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    appended = classify_log(args.log, args.corpus)
    print(f"classified {appended} trajectory(ies)")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    paths = emit_report(args.log, args.out)
    for kind in ("json", "csv", "md"):
        print(f"report {kind}: {paths[kind]}")
    return EXIT_OK


def _demo_dir():
    return importlib.resources.files("paramfuzz").joinpath("data", "demo")


def cmd_demo(args: argparse.Namespace) -> int:
    data = _demo_dir()
    with importlib.resources.as_file(data) as root:
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        with tempfile.TemporaryDirectory(prefix="paramfuzz-demo-") as out_dir:
            config = CampaignConfig(
                corpus_path=str(root / "corpus.json"),
                out_dir=out_dir,
                operators=(str(manifest["operator"]),),
                driver="replay",
                scripts_path=str(root / "scripts.json"),
            )
            log_path = run_campaign(config)
            classify_log(log_path, config.corpus_path)
            results = collect_results(log_path)
    outcomes = {outcome.case_id: outcome for outcome in results.outcomes}
    failures = 0
    for fixture in manifest["cases"]:
        case_id = str(fixture["case_id"])
        category = str(fixture["category"])
        exact = sorted(str(f) for f in fixture["exact_flags"])
        outcome = outcomes.get(case_id)
        problems: list[str] = []
        if outcome is None:
            problems.append("no trajectory was classified")
        else:
            flagged = sorted({f for label in outcome.labels for f in label.flagged_categories()})
            hits = [
                label
                for label in outcome.labels
                if getattr(label, category) and label.evidence.get(category)
            ]
            if not hits:
                problems.append(f"{category} did not fire with evidence")
            if flagged != exact:
                problems.append(f"flagged {flagged or ['nothing']}, wanted {exact}")
        if problems:
            failures += 1
            print(f"FAIL {case_id} [{category}]: " + "; ".join(problems))
        else:
            print(f"pass {case_id} [{category}]")
    total = len(manifest["cases"])
    print(f"{total - failures}/{total} fixtures classified as intended")
    return EXIT_OK if failures == 0 else EXIT_DEMO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paramfuzz",
        description=(
            "Perturb the parameter-information sources of tool-agent test "
            "cases, replay an agent over them, and classify every tool "
            "invocation against the case oracle."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse a corpus and lint every case")
    p_validate.add_argument("--corpus", required=True, help="corpus JSON path")
    p_validate.set_defaults(func=cmd_validate)

    p_perturb = sub.add_parser("perturb", help="apply one operator to one case")
    p_perturb.add_argument("--corpus", required=True)
    p_perturb.add_argument("--operator", required=True, metavar="ID")
    p_perturb.add_argument("--case", required=True, metavar="CASE_ID")
    p_perturb.add_argument("--seed", type=int, default=0)
    p_perturb.set_defaults(func=cmd_perturb)

    p_run = sub.add_parser("run", help="execute a perturbation campaign")
    p_run.add_argument("--corpus")
    p_run.add_argument("--out")
    p_run.add_argument("--operators", help="comma-separated operator ids (default: all 15)")
    p_run.add_argument("--driver", choices=("replay", "http"))
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--workers", type=int)
    p_run.add_argument("--step-limit", type=int, dest="step_limit")
    p_run.add_argument("--max-obs-len", type=int, dest="max_obs_len")
    p_run.add_argument("--scripts", help="script book JSON for the replay driver")
    p_run.add_argument("--config", help="JSON config file (endpoint, defaults)")
    p_run.add_argument("--classify", action="store_true", help="classify after running")
    p_run.add_argument("--report", action="store_true", help="classify and report after running")
    p_run.set_defaults(func=cmd_run)

    p_classify = sub.add_parser("classify", help="append classifications to a log")
    p_classify.add_argument("--log", required=True)
    p_classify.add_argument("--corpus", required=True)
    p_classify.set_defaults(func=cmd_classify)

    p_report = sub.add_parser("report", help="emit reports from a classified log")
    p_report.add_argument("--log", required=True)
    p_report.add_argument("--out", required=True)
    p_report.set_defaults(func=cmd_report)

    p_demo = sub.add_parser("demo", help="run the five shipped failure fixtures")
    p_demo.set_defaults(func=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MalformedInput, SchemaViolation, SpanMismatch) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ParamFuzzError as exc:
        print(f"campaign error: {exc}", file=sys.stderr)
        return EXIT_CAMPAIGN


if __name__ == "__main__":
    sys.exit(main())
