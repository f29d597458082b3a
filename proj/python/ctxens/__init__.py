"""Context-aware ensemble weighting (Python bindings)."""

from ._core import (
    CtxensError,
    generate,
    optimal_weights,
    run_config,
    run_config_text,
    transform,
    verify,
)

__all__ = [
    "CtxensError",
    "generate",
    "optimal_weights",
    "run_config",
    "run_config_text",
    "transform",
    "verify",
]
__version__ = "0.1.0"
