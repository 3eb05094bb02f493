"""Event-driven simulation of heterogeneous PS server farms.

The per-replication event loop has two interchangeable engines: a
compiled Cython kernel and a pure-Python fallback.  The compiled one is
picked automatically when the extension built; set HETJSQ_PURE_PYTHON=1
to force the fallback.  Both produce bit-identical results for the same
seed.
"""

import os

from . import _engine_py

if os.environ.get("HETJSQ_PURE_PYTHON"):
    _engine = _engine_py
    ENGINE = "python"
else:
    try:
        from . import _engine_cy as _engine

        ENGINE = "compiled"
    except ImportError:
        _engine = _engine_py
        ENGINE = "python"

simulate_replication = _engine.simulate_replication

from .harness import (  # noqa: E402
    HybridScheme,
    SimConfig,
    SimResult,
    SQd,
    StaticScheme,
    run,
)

__all__ = [
    "ENGINE",
    "simulate_replication",
    "SimConfig",
    "SimResult",
    "StaticScheme",
    "SQd",
    "HybridScheme",
    "run",
]
