"""User-query perturbations.

Four operators degrade the parameter information carried by the query:

    RPF remove_first_mention   excise the first annotated mention
    RPL remove_last_mention    excise the last annotated mention
    CP  complicate_mentions    rewrite each mention as a descriptive phrase
    AN  append_noise           append one distractor sentence per mention

Excision normalizes the surrounding whitespace (no doubled spaces, no
space left dangling before punctuation) and re-offsets every surviving
mention, so the output still satisfies text[span] == value_text.

CP and AN delegate their text generation to a pluggable, pure Rewriter;
the shipped defaults are deterministic, and llm_rewriter wraps an
arbitrary callable (for example a model client) behind the same contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable

from paramfuzz.corpus import AnnotatedQuery, Mention
from paramfuzz.errors import NoMentions, SchemaViolation
from paramfuzz.perturb.base import PerturbationRecord

_NO_SPACE_BEFORE = ".,!?;:"

_INTEGER_SHAPE = re.compile(r"[+-]?\d+")
_DECIMAL_SHAPE = re.compile(r"[+-]?\d+\.\d+")


@dataclass(frozen=True)
class Rewriter:
    """A pure value_text -> replacement function with a kind tag."""

    kind: str
    name: str
    fn: Callable[[str], str]

    def __post_init__(self) -> None:
        if self.kind not in ("complicate", "noise"):
            raise SchemaViolation(
                f"rewriter kind must be 'complicate' or 'noise', not {self.kind!r}"
            )

    def __call__(self, value_text: str) -> str:
        out = self.fn(value_text)
        if not isinstance(out, str) or not out:
            raise SchemaViolation(
                f"rewriter {self.name!r} produced an empty replacement for "
                f"{value_text!r}"
            )
        return out


def _complicate(value_text: str) -> str:
    return f"the value that would be written as '{value_text}'"


def _distract(value_text: str) -> str:
    """Produce a near-miss of the value: off by one, or one case flip."""
    if _INTEGER_SHAPE.fullmatch(value_text):
        candidate = str(int(value_text) + 1)
    elif _DECIMAL_SHAPE.fullmatch(value_text):
        candidate = str(float(value_text) + 1)
    else:
        lowered = value_text.lower()
        pivot = len(lowered) // 2
        candidate = lowered[:pivot] + lowered[pivot:].capitalize()
    if candidate == value_text:
        candidate = f"not {value_text}"
    return candidate


DEFAULT_COMPLICATOR = Rewriter(kind="complicate", name="descriptive-phrase", fn=_complicate)
DEFAULT_NOISER = Rewriter(kind="noise", name="near-miss", fn=_distract)


def llm_rewriter(kind: str, fn: Callable[[str], str], name: str) -> Rewriter:
    """Wrap an external text generator as a Rewriter.

    The callable must be pure for a given input; campaigns replay records,
    so a nondeterministic generator breaks reproducibility.
    """
    return Rewriter(kind=kind, name=name, fn=fn)


def _excise(
    query: AnnotatedQuery, index: int
) -> tuple[AnnotatedQuery, dict[str, object]]:
    """Remove mentions[index] from the text, keeping other spans intact."""
    target = query.mentions[index]
    text = query.text
    left = target.start
    floor = max(
        (m.end for m in query.mentions if m is not target and m.end <= target.start),
        default=0,
    )
    while left > floor and text[left - 1].isspace():
        left -= 1
    right = target.end
    ceiling = min(
        (m.start for m in query.mentions if m is not target and m.start >= target.end),
        default=len(text),
    )
    while right < ceiling and text[right].isspace():
        right += 1
    head, tail = text[:left], text[right:]
    joiner = " "
    if not head or not tail:
        joiner = ""
    elif head[-1].isspace() or tail[0].isspace():
        joiner = ""
    elif tail[0] in _NO_SPACE_BEFORE:
        joiner = ""
    elif left == target.start and right == target.end:
        joiner = ""
    shift = (right - left) - len(joiner)
    survivors = []
    for m in query.mentions:
        if m is target:
            continue
        if m.start >= right:
            survivors.append(replace(m, start=m.start - shift, end=m.end - shift))
        else:
            survivors.append(m)
    details = {
        "removed": {
            "span": [target.start, target.end],
            "param_name": target.param_name,
            "tool_name": target.tool_name,
            "value_text": target.value_text,
        },
        "shift": shift,
    }
    return AnnotatedQuery(text=head + joiner + tail, mentions=tuple(survivors)), details


def remove_first_mention(query: AnnotatedQuery) -> tuple[AnnotatedQuery, PerturbationRecord]:
    """Excise the first annotated parameter mention (RPF)."""
    if not query.mentions:
        raise NoMentions("query carries no annotated parameter mentions")
    out, details = _excise(query, 0)
    return out, PerturbationRecord(operator="RPF", details=details)


def remove_last_mention(query: AnnotatedQuery) -> tuple[AnnotatedQuery, PerturbationRecord]:
    """Excise the last annotated parameter mention (RPL)."""
    if not query.mentions:
        raise NoMentions("query carries no annotated parameter mentions")
    out, details = _excise(query, len(query.mentions) - 1)
    return out, PerturbationRecord(operator="RPL", details=details)


def complicate_mentions(
    query: AnnotatedQuery, rewriter: Rewriter = DEFAULT_COMPLICATOR
) -> tuple[AnnotatedQuery, PerturbationRecord]:
    """Rewrite every mention into a longer descriptive phrase (CP)."""
    if not query.mentions:
        raise NoMentions("query carries no annotated parameter mentions")
    if rewriter.kind != "complicate":
        raise SchemaViolation(
            f"complicate_mentions needs a 'complicate' rewriter, got {rewriter.kind!r}"
        )
    pieces: list[str] = []
    mentions: list[Mention] = []
    replacements: list[dict[str, str]] = []
    cursor = 0
    offset = 0
    for m in query.mentions:
        replacement = rewriter(m.value_text)
        pieces.append(query.text[cursor : m.start])
        start = m.start + offset
        pieces.append(replacement)
        mentions.append(
            Mention(
                start=start,
                end=start + len(replacement),
                param_name=m.param_name,
                tool_name=m.tool_name,
                value_text=replacement,
            )
        )
        replacements.append(
            {"param_name": m.param_name, "original": m.value_text, "replacement": replacement}
        )
        offset += len(replacement) - (m.end - m.start)
        cursor = m.end
    pieces.append(query.text[cursor:])
    record = PerturbationRecord(
        operator="CP",
        details={"rewriter": rewriter.name, "replacements": replacements},
    )
    return AnnotatedQuery(text="".join(pieces), mentions=tuple(mentions)), record


def append_noise(
    query: AnnotatedQuery, rewriter: Rewriter = DEFAULT_NOISER
) -> tuple[AnnotatedQuery, PerturbationRecord]:
    """Append one distractor sentence per mention after the query (AN).

    The original text and all mention annotations survive byte-for-byte;
    the appended sentences carry no annotations.
    """
    if not query.mentions:
        raise NoMentions("query carries no annotated parameter mentions")
    if rewriter.kind != "noise":
        raise SchemaViolation(
            f"append_noise needs a 'noise' rewriter, got {rewriter.kind!r}"
        )
    distractors: list[dict[str, str]] = []
    suffix: list[str] = []
    for m in query.mentions:
        noise = rewriter(m.value_text)
        distractors.append(
            {"param_name": m.param_name, "original": m.value_text, "distractor": noise}
        )
        suffix.append(f" Unrelated note: {noise}.")
    record = PerturbationRecord(
        operator="AN",
        details={"rewriter": rewriter.name, "distractors": distractors},
    )
    out = AnnotatedQuery(text=query.text + "".join(suffix), mentions=query.mentions)
    return out, record
