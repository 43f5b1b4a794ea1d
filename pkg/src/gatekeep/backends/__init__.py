"""Batch-kernel backend selection.

The compiled kernel is used when its extension module importable; otherwise
the numpy fallback takes over.  Both expose the same two functions and
return bit-identical rejection masks (the per-replication arithmetic order
is pinned).  Set ``GATEKEEP_BACKEND=fallback`` to force the pure-Python
kernels, e.g. for benchmarking or debugging.
"""

from __future__ import annotations

import os

from gatekeep.backends import _batch

if os.environ.get("GATEKEEP_BACKEND", "").lower() == "fallback":
    _impl = _batch
    BACKEND = "fallback"
else:
    try:
        from gatekeep.backends import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _batch
        BACKEND = "fallback"

reject_batch = _impl.reject_batch
reject_batch_two_layer = _impl.reject_batch_two_layer

__all__ = ["BACKEND", "reject_batch", "reject_batch_two_layer"]
