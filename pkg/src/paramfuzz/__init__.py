"""Robustness fuzzing for tool-calling LLM agents.

The package perturbs the three places an agent learns about tool
parameters (the tool document, the user query, the tool return), replays
an agent over the perturbed cases, and classifies every tool invocation
against the case's reference trajectory into five parameter-failure
categories.
"""

from paramfuzz.errors import (
    AuthFailure,
    CampaignError,
    DriverError,
    EmptyCampaign,
    MalformedInput,
    ParamFuzzError,
    PerturbSkip,
    RateLimited,
    SchemaViolation,
    SpanMismatch,
    ToolMismatch,
    TransportError,
)

__version__ = "0.1.0"

__all__ = [
    "AuthFailure",
    "CampaignError",
    "DriverError",
    "EmptyCampaign",
    "MalformedInput",
    "ParamFuzzError",
    "PerturbSkip",
    "RateLimited",
    "SchemaViolation",
    "SpanMismatch",
    "ToolMismatch",
    "TransportError",
    "__version__",
]
