"""Tool-return perturbations.

Five operators degrade the parameter information an agent reads back out
of tool responses:

    FK  fuzz_keys         rename object keys to Object_1..Object_n
    AP  prefix_id_values  rewrite ID-keyed values to "ID_" + value
    CK  camel_case_keys   re-spell every key in lowerCamelCase
    UK  snake_case_keys   re-spell every key in snake_case
    CF  corrupt_format    truncate the serialized JSON into raw text

All five are deterministic and use no randomness. FK, AP, CK and UK keep
the output valid JSON and never touch leaf values outside their targets;
CF is the one operator that destroys parseability on purpose.

Key transforms recurse through nesting by default; recursive=False
restricts them to the top-level object for strict flat-key behavior.
"""

from __future__ import annotations

import json
import re
from typing import Callable

from paramfuzz.corpus import ToolReturn, canonical_json
from paramfuzz.errors import NoIdFields, NoObjects, NotJson
from paramfuzz.perturb.base import PerturbationRecord

KeyPath = tuple[object, ...]

_DEFAULT_ID_KEY = re.compile(r"(?i:^id$)|.*(_id|Id|ID)$")

_KEY_CHUNK = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|\d+")


def _require_json(ret: ToolReturn, operator: str) -> object:
    if not ret.is_json:
        raise NotJson(f"{operator} needs parsed JSON; this return is raw text")
    return ret.payload


def split_key_tokens(key: str) -> list[str]:
    """Tokenize a key on underscores, hyphens, spaces, case humps and
    letter-digit boundaries; tokens come back lowercased."""
    tokens: list[str] = []
    for chunk in re.split(r"[_\-\s]+", key):
        for match in _KEY_CHUNK.finditer(chunk):
            tokens.append(match.group(0).lower())
    return tokens


def to_camel_case(key: str) -> str:
    tokens = split_key_tokens(key)
    if not tokens:
        return key
    return tokens[0] + "".join(t.capitalize() for t in tokens[1:])


def to_snake_case(key: str) -> str:
    tokens = split_key_tokens(key)
    if not tokens:
        return key
    return "_".join(tokens)


def fuzz_keys(ret: ToolReturn, recursive: bool = True) -> tuple[ToolReturn, PerturbationRecord]:
    """Rename every object's keys to Object_1..Object_n in place order (FK).

    Numbering restarts inside each object. Values are untouched, so the
    multiset of leaf values survives exactly.
    """
    payload = _require_json(ret, "FK")
    renames: list[dict[str, object]] = []

    def walk(value: object, path: KeyPath) -> object:
        if isinstance(value, dict):
            out = {}
            for index, (key, item) in enumerate(value.items()):
                new_key = f"Object_{index + 1}"
                if new_key != key:
                    renames.append({"path": list(path), "from": key, "to": new_key})
                out[new_key] = walk(item, path + (key,)) if recursive else item
            return out
        if isinstance(value, list) and recursive:
            return [walk(item, path + (i,)) for i, item in enumerate(value)]
        return value

    reachable = _contains_object(payload) if recursive else isinstance(payload, dict)
    if not reachable:
        raise NoObjects("FK found no JSON object to rename")
    perturbed = walk(payload, ())
    record = PerturbationRecord(operator="FK", details={"renames": renames})
    return ToolReturn(payload=perturbed), record


def _contains_object(value: object) -> bool:
    if isinstance(value, dict):
        return True
    if isinstance(value, list):
        return any(_contains_object(item) for item in value)
    return False


def prefix_id_values(
    ret: ToolReturn,
    id_pattern: str | None = None,
    value_pattern: str | None = None,
) -> tuple[ToolReturn, PerturbationRecord]:
    """Rewrite every ID-keyed value to the string "ID_" + value (AP).

    A key counts as an ID when it equals "id" case-insensitively or ends
    with "_id", "Id" or "ID"; pass id_pattern to override the heuristic.
    value_pattern additionally targets string values matching the given
    regex regardless of key, and is off by default.
    """
    payload = _require_json(ret, "AP")
    key_matcher = re.compile(id_pattern) if id_pattern is not None else _DEFAULT_ID_KEY
    value_matcher = re.compile(value_pattern) if value_pattern is not None else None
    modified: list[list[object]] = []

    def hit(key: str, item: object) -> bool:
        if key_matcher.fullmatch(key):
            return True
        if value_matcher is not None and isinstance(item, str):
            return value_matcher.fullmatch(item) is not None
        return False

    def stringify(item: object) -> str:
        return item if isinstance(item, str) else canonical_json(item)

    def walk(value: object, path: KeyPath) -> object:
        if isinstance(value, dict):
            out = {}
            for key, item in value.items():
                if hit(key, item):
                    modified.append(list(path) + [key])
                    out[key] = "ID_" + stringify(item)
                else:
                    out[key] = walk(item, path + (key,))
            return out
        if isinstance(value, list):
            return [walk(item, path + (i,)) for i, item in enumerate(value)]
        return value

    perturbed = walk(payload, ())
    if not modified:
        raise NoIdFields("AP found no ID-keyed entries to prefix")
    record = PerturbationRecord(operator="AP", details={"modified_paths": modified})
    return ToolReturn(payload=perturbed), record


def _respell_keys(
    ret: ToolReturn, operator: str, respell: Callable[[str], str], recursive: bool
) -> tuple[ToolReturn, PerturbationRecord]:
    payload = _require_json(ret, operator)
    renames: list[dict[str, object]] = []
    collisions: list[dict[str, object]] = []

    def walk(value: object, path: KeyPath, at_top: bool) -> object:
        if isinstance(value, dict) and (recursive or at_top):
            out = {}
            for key, item in value.items():
                new_key = respell(key)
                if new_key != key:
                    renames.append({"path": list(path), "from": key, "to": new_key})
                if new_key in out:
                    collisions.append({"path": list(path), "key": new_key})
                out[new_key] = walk(item, path + (key,), False)
            return out
        if isinstance(value, list) and recursive:
            return [walk(item, path + (i,), False) for i, item in enumerate(value)]
        return value

    perturbed = walk(payload, (), True)
    details: dict[str, object] = {"renames": renames}
    if collisions:
        details["collisions"] = collisions
    record = PerturbationRecord(operator=operator, details=details)
    return ToolReturn(payload=perturbed), record


def camel_case_keys(ret: ToolReturn, recursive: bool = True) -> tuple[ToolReturn, PerturbationRecord]:
    """Re-spell every object key as lowerCamelCase (CK). Idempotent.

    When two keys collapse to one spelling the later key wins and the
    loss is reported as a collision in the record.
    """
    return _respell_keys(ret, "CK", to_camel_case, recursive)


def snake_case_keys(ret: ToolReturn, recursive: bool = True) -> tuple[ToolReturn, PerturbationRecord]:
    """Re-spell every object key as snake_case (UK). Idempotent."""
    return _respell_keys(ret, "UK", to_snake_case, recursive)


def corrupt_format(ret: ToolReturn) -> tuple[ToolReturn, PerturbationRecord]:
    """Break the return's JSON syntax (CF).

    The payload is serialized compactly, its final code point dropped,
    and "..." appended; the result is raw text that no longer parses for
    any object or array payload.
    """
    payload = _require_json(ret, "CF")
    serialized = json.dumps(payload, separators=(",", ":"), ensure_ascii=False)
    corrupted = serialized[:-1] + "..."
    record = PerturbationRecord(
        operator="CF",
        details={"serialized_length": len(serialized)},
    )
    return ToolReturn(raw_text=corrupted), record
