"""Corpus model: test cases, tool documents, annotated queries, oracles.

A corpus file is one UTF-8 JSON document:

    {"schema_version": 1, "cases": [ ... ]}

Every case bundles an annotated user query, the tool documents visible to
the agent, an ordered reference trajectory (the oracle), and optional
scripted returns for deterministic replay. All values are immutable after
parsing and safe to share across worker threads.

Span offsets are Unicode code points, never bytes.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

from paramfuzz.errors import MalformedInput, SchemaViolation, SpanMismatch

SCHEMA_VERSION = 1

PARAM_TYPES = ("string", "integer", "number", "boolean", "array", "object")

_JSON_TYPE_NAMES = {
    str: "string",
    bool: "boolean",
    int: "integer",
    float: "number",
    list: "array",
    dict: "object",
    type(None): "null",
}


def json_type_name(value: object) -> str:
    """Name the JSON type of a decoded value ("string", "integer", ...)."""
    for pytype, name in _JSON_TYPE_NAMES.items():
        if type(value) is pytype:
            return name
    return type(value).__name__


def _canonicalize(value: object) -> object:
    # bool is a subclass of int; test it first so True never collapses to 1.
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return int(value) if value.is_integer() else value
    if isinstance(value, list):
        return [_canonicalize(item) for item in value]
    if isinstance(value, dict):
        return {str(key): _canonicalize(item) for key, item in value.items()}
    raise SchemaViolation(f"value of type {type(value).__name__} is not a JSON value")


def canonical_json(value: object) -> str:
    """Serialize a JSON value in canonical form.

    Keys are sorted, separators are compact, and integral floats collapse
    to integers so 5 and 5.0 compare equal. Booleans stay distinct from
    numbers.
    """
    return json.dumps(
        _canonicalize(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )


def values_equal(a: object, b: object) -> bool:
    """Structural equality of two JSON values under canonicalization."""
    return canonical_json(a) == canonical_json(b)


def canonical_args_hash(arguments: dict[str, object]) -> str:
    """Order-insensitive fingerprint of an argument map."""
    return hashlib.sha256(canonical_json(arguments).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ParameterSpec:
    """One parameter slot in a tool document.

    ``ptype`` is the declared JSON type. ``enum_values``, ``format`` (a
    regex matched against the whole string value), ``range`` (inclusive
    numeric bounds) and ``example`` are optional refinements.
    """

    name: str
    ptype: str
    description: str
    required: bool
    enum_values: tuple[object, ...] | None = None
    format: str | None = None
    range: tuple[float, float] | None = None
    example: object = None
    has_example: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise SchemaViolation("parameter name must be a non-empty string")
        if self.ptype not in PARAM_TYPES:
            raise SchemaViolation(
                f"parameter {self.name!r} has unknown ptype {self.ptype!r}"
            )
        if self.enum_values is not None and len(self.enum_values) == 0:
            raise SchemaViolation(f"parameter {self.name!r} has an empty enum")
        if self.range is not None:
            lo, hi = self.range
            if lo > hi:
                raise SchemaViolation(
                    f"parameter {self.name!r} has inverted range [{lo}, {hi}]"
                )


@dataclass(frozen=True)
class ToolDocument:
    """A tool as documented to the agent.

    Parameter order is significant and preserved by serialization; the
    shuffle operator perturbs exactly that order.
    """

    tool_name: str
    description: str
    parameters: tuple[ParameterSpec, ...] = ()
    usage_examples: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.tool_name, str) or not self.tool_name:
            raise SchemaViolation("tool_name must be a non-empty string")

    def param(self, name: str) -> ParameterSpec | None:
        for spec in self.parameters:
            if spec.name == name:
                return spec
        return None

    @property
    def required_names(self) -> frozenset[str]:
        return frozenset(p.name for p in self.parameters if p.required)


@dataclass(frozen=True)
class Mention:
    """One annotated parameter-information span inside the query text."""

    start: int
    end: int
    param_name: str
    tool_name: str
    value_text: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.start >= self.end:
            raise SpanMismatch(
                f"span [{self.start}, {self.end}) is empty or negative",
                span=(self.start, self.end),
            )


@dataclass(frozen=True)
class AnnotatedQuery:
    """The user query plus ordered, non-overlapping parameter mentions."""

    text: str
    mentions: tuple[Mention, ...] = ()

    def __post_init__(self) -> None:
        previous_end = 0
        for mention in self.mentions:
            if mention.start < previous_end:
                raise SchemaViolation(
                    f"mention span [{mention.start}, {mention.end}) overlaps or "
                    "precedes an earlier mention; spans must be sorted and disjoint"
                )
            if mention.end > len(self.text):
                raise SpanMismatch(
                    f"span [{mention.start}, {mention.end}) runs past the end "
                    f"of the query ({len(self.text)} code points)",
                    span=(mention.start, mention.end),
                )
            covered = self.text[mention.start : mention.end]
            if covered != mention.value_text:
                raise SpanMismatch(
                    f"span [{mention.start}, {mention.end}) covers {covered!r}, "
                    f"not the annotated value {mention.value_text!r}",
                    span=(mention.start, mention.end),
                )
            previous_end = mention.end


@dataclass(frozen=True)
class ToolReturn:
    """A tool's response: either parsed JSON or raw unparseable text."""

    payload: object = None
    raw_text: str | None = None

    def __post_init__(self) -> None:
        if self.raw_text is not None and self.payload is not None:
            raise SchemaViolation("a tool return is JSON or raw text, never both")

    @property
    def is_json(self) -> bool:
        return self.raw_text is None

    def rendered(self) -> str:
        """The observation string an agent would actually see."""
        if self.raw_text is not None:
            return self.raw_text
        return json.dumps(self.payload, separators=(", ", ": "), ensure_ascii=False)


@dataclass(frozen=True)
class OracleInvocation:
    """One step of the reference trajectory.

    ``needed_params`` names the parameters the task genuinely requires for
    this call; it may exceed the schema-required set (an optional
    parameter can still be essential to the specific query).
    """

    tool_name: str
    arguments: dict[str, object]
    needed_params: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not isinstance(self.tool_name, str) or not self.tool_name:
            raise SchemaViolation("oracle tool_name must be a non-empty string")


@dataclass(frozen=True)
class ScriptedReturn:
    """A canned response for one exact (tool, arguments) pair."""

    tool_name: str
    arguments: dict[str, object]
    value: ToolReturn


@dataclass(frozen=True)
class TestCase:
    """The unit of campaign data: query, tools, oracle, scripted returns."""

    case_id: str
    query: AnnotatedQuery
    tools: tuple[ToolDocument, ...]
    oracle: tuple[OracleInvocation, ...]
    scripted_returns: tuple[ScriptedReturn, ...] = ()
    solvable: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.case_id, str) or not self.case_id:
            raise SchemaViolation("case_id must be a non-empty string")
        seen: set[str] = set()
        for tool in self.tools:
            if tool.tool_name in seen:
                raise SchemaViolation(
                    f"tool {tool.tool_name!r} appears twice in case {self.case_id!r}",
                    case_id=self.case_id,
                )
            seen.add(tool.tool_name)
        for position, invocation in enumerate(self.oracle):
            tool = self.tool(invocation.tool_name)
            if tool is None:
                raise SchemaViolation(
                    f"oracle step {position} calls unknown tool "
                    f"{invocation.tool_name!r}",
                    case_id=self.case_id,
                    field=f"oracle[{position}].tool_name",
                )
            for arg_name in invocation.arguments:
                if tool.param(arg_name) is None:
                    raise SchemaViolation(
                        f"oracle step {position} passes {arg_name!r}, which "
                        f"{invocation.tool_name!r} does not declare",
                        case_id=self.case_id,
                        field=f"oracle[{position}].arguments.{arg_name}",
                    )

    def tool(self, name: str) -> ToolDocument | None:
        for tool in self.tools:
            if tool.tool_name == name:
                return tool
        return None

    def scripted_lookup(self, tool_name: str, arguments: dict[str, object]) -> ToolReturn | None:
        """Find the canned return for an exact (tool, arguments) pair."""
        wanted = canonical_args_hash(arguments)
        for entry in self.scripted_returns:
            if entry.tool_name == tool_name and canonical_args_hash(entry.arguments) == wanted:
                return entry.value
        return None


@dataclass(frozen=True)
class LintFinding:
    """One advisory problem found in a case; never fatal by itself."""

    code: str
    case_id: str
    message: str


def _require_object(value: object, where: str, case_id: str | None = None) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(
            f"{where} must be a JSON object, got {json_type_name(value)}",
            case_id=case_id,
            field=where,
        )
    return value


def _require_list(value: object, where: str, case_id: str | None = None) -> list:
    if not isinstance(value, list):
        raise SchemaViolation(
            f"{where} must be a JSON array, got {json_type_name(value)}",
            case_id=case_id,
            field=where,
        )
    return value


def _require_str(value: object, where: str, case_id: str | None = None) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(
            f"{where} must be a string, got {json_type_name(value)}",
            case_id=case_id,
            field=where,
        )
    return value


def _require_bool(value: object, where: str, case_id: str | None = None) -> bool:
    if not isinstance(value, bool):
        raise SchemaViolation(
            f"{where} must be a boolean, got {json_type_name(value)}",
            case_id=case_id,
            field=where,
        )
    return value


def _check_keys(
    obj: dict,
    required: tuple[str, ...],
    optional: tuple[str, ...],
    where: str,
    case_id: str | None = None,
) -> None:
    for key in required:
        if key not in obj:
            raise SchemaViolation(
                f"{where} is missing required key {key!r}",
                case_id=case_id,
                field=f"{where}.{key}",
            )
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise SchemaViolation(
            f"{where} has unknown key {unknown[0]!r}",
            case_id=case_id,
            field=f"{where}.{unknown[0]}",
        )


def _parse_parameter(obj: object, where: str, case_id: str) -> ParameterSpec:
    obj = _require_object(obj, where, case_id)
    _check_keys(
        obj,
        required=("name", "ptype", "description", "required"),
        optional=("enum_values", "format", "range", "example"),
        where=where,
        case_id=case_id,
    )
    name = _require_str(obj["name"], f"{where}.name", case_id)
    ptype = _require_str(obj["ptype"], f"{where}.ptype", case_id)
    description = _require_str(obj["description"], f"{where}.description", case_id)
    required = _require_bool(obj["required"], f"{where}.required", case_id)
    enum_values: tuple[object, ...] | None = None
    if obj.get("enum_values") is not None:
        enum_values = tuple(_require_list(obj["enum_values"], f"{where}.enum_values", case_id))
    format_pattern: str | None = None
    if obj.get("format") is not None:
        format_pattern = _require_str(obj["format"], f"{where}.format", case_id)
        try:
            re.compile(format_pattern)
        except re.error as exc:
            raise SchemaViolation(
                f"{where}.format is not a valid regex: {exc}",
                case_id=case_id,
                field=f"{where}.format",
            ) from exc
    value_range: tuple[float, float] | None = None
    if obj.get("range") is not None:
        raw_range = _require_list(obj["range"], f"{where}.range", case_id)
        if len(raw_range) != 2 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw_range
        ):
            raise SchemaViolation(
                f"{where}.range must be a [min, max] pair of numbers",
                case_id=case_id,
                field=f"{where}.range",
            )
        if ptype not in ("integer", "number"):
            raise SchemaViolation(
                f"{where}.range is only meaningful for numeric parameters, "
                f"not ptype {ptype!r}",
                case_id=case_id,
                field=f"{where}.range",
            )
        value_range = (raw_range[0], raw_range[1])
    example = obj.get("example")
    has_example = "example" in obj and obj["example"] is not None
    if has_example and enum_values is not None:
        if not any(values_equal(example, member) for member in enum_values):
            raise SchemaViolation(
                f"{where}.example {canonical_json(example)} is not an enum member",
                case_id=case_id,
                field=f"{where}.example",
            )
    try:
        return ParameterSpec(
            name=name,
            ptype=ptype,
            description=description,
            required=required,
            enum_values=enum_values,
            format=format_pattern,
            range=value_range,
            example=example,
            has_example=has_example,
        )
    except SchemaViolation as exc:
        exc.case_id = case_id
        exc.field = where
        raise


def _parse_tool(obj: object, where: str, case_id: str) -> ToolDocument:
    obj = _require_object(obj, where, case_id)
    _check_keys(
        obj,
        required=("tool_name", "description", "parameters"),
        optional=("usage_examples",),
        where=where,
        case_id=case_id,
    )
    tool_name = _require_str(obj["tool_name"], f"{where}.tool_name", case_id)
    description = _require_str(obj["description"], f"{where}.description", case_id)
    raw_params = _require_list(obj["parameters"], f"{where}.parameters", case_id)
    parameters = tuple(
        _parse_parameter(raw, f"{where}.parameters[{i}]", case_id)
        for i, raw in enumerate(raw_params)
    )
    names = [p.name for p in parameters]
    for name in names:
        if names.count(name) > 1:
            raise SchemaViolation(
                f"{where} declares parameter {name!r} more than once",
                case_id=case_id,
                field=f"{where}.parameters",
            )
    usage_examples: tuple[str, ...] = ()
    if obj.get("usage_examples") is not None:
        usage_examples = tuple(
            _require_str(raw, f"{where}.usage_examples[{i}]", case_id)
            for i, raw in enumerate(_require_list(obj["usage_examples"], f"{where}.usage_examples", case_id))
        )
    return ToolDocument(
        tool_name=tool_name,
        description=description,
        parameters=parameters,
        usage_examples=usage_examples,
    )


def _parse_mention(obj: object, where: str, case_id: str) -> Mention:
    obj = _require_object(obj, where, case_id)
    _check_keys(
        obj,
        required=("span", "param_name", "tool_name", "value_text"),
        optional=(),
        where=where,
        case_id=case_id,
    )
    span = _require_list(obj["span"], f"{where}.span", case_id)
    if len(span) != 2 or not all(isinstance(v, int) and not isinstance(v, bool) for v in span):
        raise SchemaViolation(
            f"{where}.span must be a [start, end) pair of integers",
            case_id=case_id,
            field=f"{where}.span",
        )
    try:
        return Mention(
            start=span[0],
            end=span[1],
            param_name=_require_str(obj["param_name"], f"{where}.param_name", case_id),
            tool_name=_require_str(obj["tool_name"], f"{where}.tool_name", case_id),
            value_text=_require_str(obj["value_text"], f"{where}.value_text", case_id),
        )
    except SpanMismatch as exc:
        exc.case_id = case_id
        raise


def _parse_query(obj: object, case_id: str) -> AnnotatedQuery:
    obj = _require_object(obj, "query", case_id)
    _check_keys(obj, required=("text", "mentions"), optional=(), where="query", case_id=case_id)
    text = _require_str(obj["text"], "query.text", case_id)
    mentions = tuple(
        _parse_mention(raw, f"query.mentions[{i}]", case_id)
        for i, raw in enumerate(_require_list(obj["mentions"], "query.mentions", case_id))
    )
    try:
        return AnnotatedQuery(text=text, mentions=mentions)
    except (SpanMismatch, SchemaViolation) as exc:
        exc.case_id = case_id
        raise


def _parse_arguments(obj: object, where: str, case_id: str) -> dict[str, object]:
    obj = _require_object(obj, where, case_id)
    return dict(obj)


def _parse_oracle_invocation(obj: object, where: str, case_id: str) -> OracleInvocation:
    obj = _require_object(obj, where, case_id)
    _check_keys(
        obj,
        required=("tool_name", "arguments", "needed_params"),
        optional=(),
        where=where,
        case_id=case_id,
    )
    needed = _require_list(obj["needed_params"], f"{where}.needed_params", case_id)
    return OracleInvocation(
        tool_name=_require_str(obj["tool_name"], f"{where}.tool_name", case_id),
        arguments=_parse_arguments(obj["arguments"], f"{where}.arguments", case_id),
        needed_params=frozenset(
            _require_str(raw, f"{where}.needed_params[{i}]", case_id)
            for i, raw in enumerate(needed)
        ),
    )


def _parse_tool_return(obj: object, where: str, case_id: str) -> ToolReturn:
    obj = _require_object(obj, where, case_id)
    if set(obj) == {"payload"}:
        return ToolReturn(payload=obj["payload"])
    if set(obj) == {"raw_text"}:
        return ToolReturn(raw_text=_require_str(obj["raw_text"], f"{where}.raw_text", case_id))
    raise SchemaViolation(
        f"{where} must have exactly one of the keys 'payload' or 'raw_text'",
        case_id=case_id,
        field=where,
    )


def _parse_scripted_return(obj: object, where: str, case_id: str) -> ScriptedReturn:
    obj = _require_object(obj, where, case_id)
    _check_keys(
        obj,
        required=("tool_name", "arguments", "return"),
        optional=(),
        where=where,
        case_id=case_id,
    )
    return ScriptedReturn(
        tool_name=_require_str(obj["tool_name"], f"{where}.tool_name", case_id),
        arguments=_parse_arguments(obj["arguments"], f"{where}.arguments", case_id),
        value=_parse_tool_return(obj["return"], f"{where}.return", case_id),
    )


def _parse_case(obj: object, index: int) -> TestCase:
    obj = _require_object(obj, f"cases[{index}]")
    case_id_raw = obj.get("case_id")
    case_id = case_id_raw if isinstance(case_id_raw, str) and case_id_raw else f"cases[{index}]"
    _check_keys(
        obj,
        required=("case_id", "query", "tools", "oracle", "solvable"),
        optional=("scripted_returns",),
        where=f"cases[{index}]",
        case_id=case_id,
    )
    _require_str(obj["case_id"], f"cases[{index}].case_id", case_id)
    tools = tuple(
        _parse_tool(raw, f"tools[{i}]", case_id)
        for i, raw in enumerate(_require_list(obj["tools"], "tools", case_id))
    )
    oracle = tuple(
        _parse_oracle_invocation(raw, f"oracle[{i}]", case_id)
        for i, raw in enumerate(_require_list(obj["oracle"], "oracle", case_id))
    )
    scripted: tuple[ScriptedReturn, ...] = ()
    if obj.get("scripted_returns") is not None:
        scripted = tuple(
            _parse_scripted_return(raw, f"scripted_returns[{i}]", case_id)
            for i, raw in enumerate(_require_list(obj["scripted_returns"], "scripted_returns", case_id))
        )
    seen_scripts: set[tuple[str, str]] = set()
    for entry in scripted:
        key = (entry.tool_name, canonical_args_hash(entry.arguments))
        if key in seen_scripts:
            raise SchemaViolation(
                f"duplicate scripted return for tool {entry.tool_name!r} with "
                "identical arguments",
                case_id=case_id,
                field="scripted_returns",
            )
        seen_scripts.add(key)
    try:
        return TestCase(
            case_id=obj["case_id"],
            query=_parse_query(obj["query"], case_id),
            tools=tools,
            oracle=oracle,
            scripted_returns=scripted,
            solvable=_require_bool(obj["solvable"], "solvable", case_id),
        )
    except SchemaViolation as exc:
        if exc.case_id is None:
            exc.case_id = case_id
        raise


def parse_corpus(raw: bytes | str) -> list[TestCase]:
    """Parse corpus bytes into validated test cases.

    Raises MalformedInput (with a byte offset) for encoding or JSON
    failures, SchemaViolation for structural problems, and SpanMismatch
    when a mention span does not address its own value text.
    """
    if isinstance(raw, (bytes, bytearray)):
        try:
            text = bytes(raw).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInput(
                f"corpus is not valid UTF-8 at byte {exc.start}: {exc.reason}",
                byte_offset=exc.start,
            ) from exc
    else:
        text = raw
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise MalformedInput(
            f"corpus is not valid JSON at byte {byte_offset}: {exc.msg}",
            byte_offset=byte_offset,
        ) from exc
    document = _require_object(document, "corpus")
    _check_keys(document, required=("schema_version", "cases"), optional=(), where="corpus")
    if document["schema_version"] != SCHEMA_VERSION:
        raise SchemaViolation(
            f"unsupported schema_version {document['schema_version']!r}; "
            f"this reader understands {SCHEMA_VERSION}",
            field="schema_version",
        )
    cases = [
        _parse_case(raw_case, index)
        for index, raw_case in enumerate(_require_list(document["cases"], "cases"))
    ]
    seen_ids: set[str] = set()
    for case in cases:
        if case.case_id in seen_ids:
            raise SchemaViolation(
                f"case_id {case.case_id!r} appears more than once",
                case_id=case.case_id,
                field="case_id",
            )
        seen_ids.add(case.case_id)
    tools_by_name: dict[str, ToolDocument] = {}
    for case in cases:
        for tool in case.tools:
            known = tools_by_name.get(tool.tool_name)
            if known is None:
                tools_by_name[tool.tool_name] = tool
            elif known != tool:
                raise SchemaViolation(
                    f"tool {tool.tool_name!r} is defined twice with different "
                    "documents; a name must mean one document corpus-wide",
                    case_id=case.case_id,
                    field="tools",
                )
    return cases


def load_corpus(path: str) -> list[TestCase]:
    """Read and parse a corpus file from disk."""
    with open(path, "rb") as handle:
        return parse_corpus(handle.read())


def _parameter_to_json(spec: ParameterSpec) -> dict[str, object]:
    out: dict[str, object] = {
        "name": spec.name,
        "ptype": spec.ptype,
        "description": spec.description,
        "required": spec.required,
    }
    if spec.enum_values is not None:
        out["enum_values"] = list(spec.enum_values)
    if spec.format is not None:
        out["format"] = spec.format
    if spec.range is not None:
        out["range"] = list(spec.range)
    if spec.has_example:
        out["example"] = spec.example
    return out


def _tool_to_json(tool: ToolDocument) -> dict[str, object]:
    return {
        "tool_name": tool.tool_name,
        "description": tool.description,
        "parameters": [_parameter_to_json(p) for p in tool.parameters],
        "usage_examples": list(tool.usage_examples),
    }


def _return_to_json(value: ToolReturn) -> dict[str, object]:
    if value.raw_text is not None:
        return {"raw_text": value.raw_text}
    return {"payload": value.payload}


def tool_to_json(tool: ToolDocument) -> dict[str, object]:
    """Convert one tool document to its corpus-JSON shape."""
    return _tool_to_json(tool)


def tool_from_json(obj: object) -> ToolDocument:
    """Parse one tool document from its corpus-JSON shape."""
    return _parse_tool(obj, "tool", case_id="(standalone)")


def case_to_json(case: TestCase) -> dict[str, object]:
    """Convert one case back to its corpus-JSON shape."""
    return {
        "case_id": case.case_id,
        "query": {
            "text": case.query.text,
            "mentions": [
                {
                    "span": [m.start, m.end],
                    "param_name": m.param_name,
                    "tool_name": m.tool_name,
                    "value_text": m.value_text,
                }
                for m in case.query.mentions
            ],
        },
        "tools": [_tool_to_json(t) for t in case.tools],
        "oracle": [
            {
                "tool_name": inv.tool_name,
                "arguments": inv.arguments,
                "needed_params": sorted(inv.needed_params),
            }
            for inv in case.oracle
        ],
        "scripted_returns": [
            {
                "tool_name": entry.tool_name,
                "arguments": entry.arguments,
                "return": _return_to_json(entry.value),
            }
            for entry in case.scripted_returns
        ],
        "solvable": case.solvable,
    }


def serialize_corpus(cases: list[TestCase]) -> str:
    """Serialize cases to corpus-JSON; parse(serialize(x)) == x."""
    document = {
        "schema_version": SCHEMA_VERSION,
        "cases": [case_to_json(case) for case in cases],
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def filter_cases(cases: list[TestCase]) -> list[TestCase]:
    """Drop unsolvable cases and cases where no tool takes any parameter."""
    kept = []
    for case in cases:
        if not case.solvable:
            continue
        if not any(tool.parameters for tool in case.tools):
            continue
        kept.append(case)
    return kept


def violations_against_spec(spec: ParameterSpec, value: object) -> list[tuple[str, str]]:
    """Check one argument value against its declared parameter spec.

    Returns (rule, detail) pairs; empty means the value conforms. Rules:
    type_mismatch, enum_violation, format_violation, range_violation.
    """
    out: list[tuple[str, str]] = []
    if not _type_matches(spec.ptype, value):
        out.append(
            (
                "type_mismatch",
                f"declared {spec.ptype}, got {json_type_name(value)} "
                f"{canonical_json(value)}",
            )
        )
    if spec.enum_values is not None and not any(
        values_equal(value, member) for member in spec.enum_values
    ):
        admissible = ", ".join(canonical_json(m) for m in spec.enum_values)
        out.append(
            (
                "enum_violation",
                f"value {canonical_json(value)} is not one of [{admissible}]",
            )
        )
    if spec.format is not None and isinstance(value, str):
        if re.fullmatch(spec.format, value) is None:
            out.append(
                (
                    "format_violation",
                    f"value {value!r} does not match pattern {spec.format!r}",
                )
            )
    if spec.range is not None and isinstance(value, (int, float)) and not isinstance(value, bool):
        lo, hi = spec.range
        if not (lo <= value <= hi):
            out.append(
                (
                    "range_violation",
                    f"value {canonical_json(value)} is outside [{lo}, {hi}]",
                )
            )
    return out


def _type_matches(ptype: str, value: object) -> bool:
    if ptype == "string":
        return isinstance(value, str)
    if ptype == "boolean":
        return isinstance(value, bool)
    if ptype == "integer":
        if isinstance(value, bool):
            return False
        return isinstance(value, int) or (isinstance(value, float) and value.is_integer())
    if ptype == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if ptype == "array":
        return isinstance(value, list)
    if ptype == "object":
        return isinstance(value, dict)
    return False


def lint_case(case: TestCase) -> list[LintFinding]:
    """Advisory checks: annotation coverage, name clashes, oracle quality.

    The oracle must itself be failure-free; any oracle argument that
    violates its own parameter spec is reported, as is a needed_params set
    that does not square with the schema or the arguments actually passed.
    """
    findings: list[LintFinding] = []
    owners: dict[str, list[str]] = {}
    for tool in case.tools:
        for p in tool.parameters:
            owners.setdefault(p.name, []).append(tool.tool_name)
    for name in sorted(owners):
        tools = owners[name]
        if len(tools) > 1:
            findings.append(
                LintFinding(
                    code="DuplicateParamName",
                    case_id=case.case_id,
                    message=(
                        f"parameter name {name!r} appears in several tools "
                        f"({', '.join(sorted(tools))}), which reads ambiguously"
                    ),
                )
            )
    covered = {(m.tool_name, m.param_name) for m in case.query.mentions}
    for position, invocation in enumerate(case.oracle):
        for arg_name, arg_value in sorted(invocation.arguments.items()):
            literal = arg_value if isinstance(arg_value, str) else canonical_json(arg_value)
            if literal and literal in case.query.text:
                if (invocation.tool_name, arg_name) not in covered:
                    findings.append(
                        LintFinding(
                            code="UncoveredMention",
                            case_id=case.case_id,
                            message=(
                                f"oracle step {position} argument {arg_name!r} value "
                                f"{literal!r} appears in the query but carries no "
                                "mention annotation"
                            ),
                        )
                    )
    for position, invocation in enumerate(case.oracle):
        tool = case.tool(invocation.tool_name)
        if tool is None:
            continue
        schema_names = {p.name for p in tool.parameters}
        for arg_name, arg_value in sorted(invocation.arguments.items()):
            spec = tool.param(arg_name)
            if spec is None:
                continue
            for rule, detail in violations_against_spec(spec, arg_value):
                findings.append(
                    LintFinding(
                        code="OracleViolatesSpec",
                        case_id=case.case_id,
                        message=(
                            f"oracle step {position} argument {arg_name!r}: "
                            f"{rule}: {detail}"
                        ),
                    )
                )
        for name in sorted(invocation.needed_params - schema_names):
            findings.append(
                LintFinding(
                    code="OracleViolatesSpec",
                    case_id=case.case_id,
                    message=(
                        f"oracle step {position} marks {name!r} as needed but "
                        f"{invocation.tool_name!r} does not declare it"
                    ),
                )
            )
        missing_required = sorted(tool.required_names - invocation.needed_params)
        for name in missing_required:
            findings.append(
                LintFinding(
                    code="OracleViolatesSpec",
                    case_id=case.case_id,
                    message=(
                        f"oracle step {position} omits schema-required parameter "
                        f"{name!r} from needed_params"
                    ),
                )
            )
        for name in sorted(invocation.needed_params - set(invocation.arguments)):
            findings.append(
                LintFinding(
                    code="OracleViolatesSpec",
                    case_id=case.case_id,
                    message=(
                        f"oracle step {position} marks {name!r} as needed but "
                        "does not pass it"
                    ),
                )
            )
    known_tools = {tool.tool_name for tool in case.tools}
    for i, mention in enumerate(case.query.mentions):
        tool = case.tool(mention.tool_name)
        if mention.tool_name not in known_tools:
            findings.append(
                LintFinding(
                    code="DanglingMentionRef",
                    case_id=case.case_id,
                    message=f"mention {i} references unknown tool {mention.tool_name!r}",
                )
            )
        elif tool is not None and tool.param(mention.param_name) is None:
            findings.append(
                LintFinding(
                    code="DanglingMentionRef",
                    case_id=case.case_id,
                    message=(
                        f"mention {i} references parameter {mention.param_name!r}, "
                        f"which {mention.tool_name!r} does not declare"
                    ),
                )
            )
    return findings


def all_tools(cases: list[TestCase]) -> list[ToolDocument]:
    """Every distinct tool document in the corpus, first-seen order."""
    seen: set[str] = set()
    out: list[ToolDocument] = []
    for case in cases:
        for tool in case.tools:
            if tool.tool_name not in seen:
                seen.add(tool.tool_name)
                out.append(tool)
    return out
