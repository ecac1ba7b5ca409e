"""Kernel-based transition manifold reaction coordinates."""

import os

# numba probes an old TBB on import otherwise and warns
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

__version__ = "0.1.0"
