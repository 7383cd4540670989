"""Campaign execution: operators x cases, logged as JSON lines.

A campaign takes every filtered case through every selected operator,
one trajectory per (operator, case) pair. All randomness flows from one
campaign seed through per-pair derived seeds, so a single integer
reproduces every run byte for byte.

The log is append-only JSON lines with three event kinds:

    campaign_meta    one header line: corpus hash, seed, versions
    trajectory       one line per (operator, case) agent run
    classification   one line per trajectory, appended by classify_log

Runs are resumable: pairs already present in the log are skipped, and a
resumed run must match the header's corpus hash, seed and driver.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
from dataclasses import dataclass, field

from paramfuzz import __version__
from paramfuzz.classify import CLASSIFIER_VERSION, classify_trajectory
from paramfuzz.corpus import TestCase, all_tools, filter_cases, load_corpus
from paramfuzz.driver import (
    DEFAULT_MAX_OBSERVATION_LENGTH,
    DEFAULT_STEP_LIMIT,
    PROMPT_TEMPLATE_VERSION,
    EndpointConfig,
    HttpDriver,
    ReplayDriver,
    ScriptedBehavior,
    Trajectory,
    run_case,
)
from paramfuzz.errors import CampaignError, DriverError, MalformedInput
from paramfuzz.perturb import ALL_OPERATORS

LOG_FILE_NAME = "campaign.jsonl"


def derived_seed(campaign_seed: int, operator: str, case_id: str) -> int:
    """Stable per-(operator, case) seed from the one campaign seed."""
    material = f"{campaign_seed}|{operator}|{case_id}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def log_line(event: dict[str, object]) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def read_log(path: str) -> list[dict[str, object]]:
    """Parse a JSON-lines campaign log."""
    events: list[dict[str, object]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedInput(
                    f"log line {number} is not valid JSON: {exc.msg}"
                ) from exc
            if not isinstance(event, dict) or "event" not in event:
                raise MalformedInput(f"log line {number} is not a tagged event")
            events.append(event)
    return events


@dataclass(frozen=True)
class ScriptBook:
    """Scripted agent behaviors for replay campaigns.

    Lookup tries "<operator>:<case_id>" first, then "<case_id>", then
    falls back to replaying the case's own oracle. The fallback means an
    unscripted pair passes classification; fixtures plant failures by
    scripting exactly the pairs that should misbehave.
    """

    scripts: dict[str, ScriptedBehavior] = field(default_factory=dict)

    def resolve(self, operator: str, case: TestCase) -> ScriptedBehavior:
        for key in (f"{operator}:{case.case_id}", case.case_id):
            if key in self.scripts:
                return self.scripts[key]
        return ScriptedBehavior.replaying(case)

    @classmethod
    def from_json(cls, obj: dict[str, object]) -> "ScriptBook":
        raw = obj.get("scripts")
        if not isinstance(raw, dict):
            raise MalformedInput("script book needs a top-level 'scripts' object")
        return cls(
            scripts={
                str(key): ScriptedBehavior.from_json(steps)  # type: ignore[arg-type]
                for key, steps in raw.items()
            }
        )

    @classmethod
    def load(cls, path: str) -> "ScriptBook":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                return cls.from_json(json.load(handle))
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"script book is not valid JSON: {exc.msg}") from exc


@dataclass(frozen=True)
class CampaignConfig:
    """Everything a campaign run needs, reproducibly."""

    corpus_path: str
    out_dir: str
    operators: tuple[str, ...] = ALL_OPERATORS
    driver: str = "replay"
    seed: int = 0
    workers: int = 1
    step_limit: int = DEFAULT_STEP_LIMIT
    max_observation_length: int = DEFAULT_MAX_OBSERVATION_LENGTH
    scripts_path: str | None = None
    endpoint: EndpointConfig | None = None

    def __post_init__(self) -> None:
        unknown = [op for op in self.operators if op not in ALL_OPERATORS]
        if unknown:
            raise CampaignError(
                f"unknown operator id(s): {', '.join(unknown)}; "
                f"valid ids are {', '.join(ALL_OPERATORS)}"
            )
        if not self.operators:
            raise CampaignError("a campaign needs at least one operator")
        if self.driver not in ("replay", "http"):
            raise CampaignError(f"driver must be 'replay' or 'http', not {self.driver!r}")
        if self.driver == "http" and self.endpoint is None:
            raise CampaignError("the http driver needs an endpoint config")
        if self.workers < 1:
            raise CampaignError("workers must be at least 1")
        if self.step_limit < 1:
            raise CampaignError("step_limit must be at least 1")

    @property
    def ordered_operators(self) -> tuple[str, ...]:
        """The selected operators in canonical reporting order."""
        selected = set(self.operators)
        return tuple(op for op in ALL_OPERATORS if op in selected)


def corpus_sha256(path: str) -> str:
    with open(path, "rb") as handle:
        return hashlib.sha256(handle.read()).hexdigest()


def _campaign_meta(config: CampaignConfig, case_count: int) -> dict[str, object]:
    return {
        "event": "campaign_meta",
        "corpus_sha256": corpus_sha256(config.corpus_path),
        "seed": config.seed,
        "driver": config.driver,
        "operators": list(config.ordered_operators),
        "step_limit": config.step_limit,
        "max_observation_length": config.max_observation_length,
        "case_count": case_count,
        "classifier_version": CLASSIFIER_VERSION,
        "prompt_template_version": PROMPT_TEMPLATE_VERSION,
        "package_version": __version__,
    }


def _check_resume(meta: dict[str, object], existing: dict[str, object]) -> None:
    for key in ("corpus_sha256", "seed", "driver", "step_limit", "max_observation_length"):
        if existing.get(key) != meta[key]:
            raise CampaignError(
                f"cannot resume: log was written with {key}={existing.get(key)!r}, "
                f"this run uses {meta[key]!r}"
            )


def run_campaign(config: CampaignConfig) -> str:
    """Execute (or resume) the campaign; returns the log path.

    Trajectories are computed by a bounded worker pool but written in
    submission order, so the log is deterministic for any worker count.
    """
    cases = filter_cases(load_corpus(config.corpus_path))
    if not cases:
        raise CampaignError("no cases survive filtering; nothing to run")
    donors = all_tools(cases)
    script_book = ScriptBook()
    if config.scripts_path is not None:
        script_book = ScriptBook.load(config.scripts_path)
    shared_http: HttpDriver | None = None
    if config.driver == "http":
        assert config.endpoint is not None
        shared_http = HttpDriver(config.endpoint)
    os.makedirs(config.out_dir, exist_ok=True)
    log_path = os.path.join(config.out_dir, LOG_FILE_NAME)
    meta = _campaign_meta(config, len(cases))
    done: set[tuple[str, str, int]] = set()
    needs_header = True
    if os.path.exists(log_path) and os.path.getsize(log_path) > 0:
        events = read_log(log_path)
        headers = [e for e in events if e["event"] == "campaign_meta"]
        if not headers:
            raise CampaignError("existing log has no campaign_meta header")
        _check_resume(meta, headers[0])
        needs_header = False
        for event in events:
            if event["event"] in ("trajectory", "trajectory_error"):
                done.add((str(event["operator"]), str(event["case_id"]), int(event["seed"])))  # type: ignore[arg-type]
    pairs = [
        (operator, case)
        for operator in config.ordered_operators
        for case in cases
    ]
    jobs = [
        (operator, case, derived_seed(config.seed, operator, case.case_id))
        for operator, case in pairs
        if (operator, case.case_id, derived_seed(config.seed, operator, case.case_id)) not in done
    ]

    def execute(operator: str, case: TestCase, seed: int) -> dict[str, object]:
        if shared_http is not None:
            agent = shared_http
        else:
            agent = ReplayDriver(script_book.resolve(operator, case))
        try:
            trajectory = run_case(
                case,
                operator,
                agent,
                seed=seed,
                donors=donors,
                step_limit=config.step_limit,
                max_observation_length=config.max_observation_length,
            )
        except DriverError as exc:
            return {
                "event": "trajectory_error",
                "operator": operator,
                "case_id": case.case_id,
                "seed": seed,
                "error": type(exc).__name__,
                "message": str(exc),
            }
        return {"event": "trajectory", **trajectory.to_json()}

    with open(log_path, "a", encoding="utf-8") as handle:
        if needs_header:
            handle.write(log_line(meta) + "\n")
            handle.flush()
        if config.workers == 1:
            for operator, case, seed in jobs:
                handle.write(log_line(execute(operator, case, seed)) + "\n")
                handle.flush()
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(execute, *job) for job in jobs]
                for future in futures:
                    handle.write(log_line(future.result()) + "\n")
                    handle.flush()
    return log_path


def classify_log(log_path: str, corpus_path: str) -> int:
    """Append one classification event per unclassified trajectory.

    Classification always runs against the original corpus documents and
    oracle: the agent saw perturbed inputs, the judge never does. Returns
    the number of events appended; idempotent on a fully classified log.
    """
    cases = {case.case_id: case for case in load_corpus(corpus_path)}
    events = read_log(log_path)
    headers = [e for e in events if e["event"] == "campaign_meta"]
    if headers and headers[0].get("corpus_sha256") != corpus_sha256(corpus_path):
        raise CampaignError(
            "corpus file does not match the log's corpus_sha256; "
            "classify with the corpus the campaign ran on"
        )
    classified = {
        (str(e["operator"]), str(e["case_id"]), int(e["seed"]))  # type: ignore[arg-type]
        for e in events
        if e["event"] == "classification"
    }
    appended = 0
    with open(log_path, "a", encoding="utf-8") as handle:
        for event in events:
            if event["event"] != "trajectory":
                continue
            key = (str(event["operator"]), str(event["case_id"]), int(event["seed"]))  # type: ignore[arg-type]
            if key in classified:
                continue
            case = cases.get(key[1])
            if case is None:
                raise CampaignError(
                    f"log references case {key[1]!r} absent from the corpus"
                )
            trajectory = Trajectory.from_json(event)
            outcome = classify_trajectory(
                trajectory.invocations, list(case.oracle), list(case.tools)
            )
            handle.write(
                log_line(
                    {
                        "event": "classification",
                        "operator": key[0],
                        "case_id": key[1],
                        "seed": key[2],
                        "classifier_version": CLASSIFIER_VERSION,
                        "case_pass": outcome.case_pass,
                        "labels": [aligned.to_json() for aligned in outcome.aligned],
                    }
                )
                + "\n"
            )
            appended += 1
    return appended
