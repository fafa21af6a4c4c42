"""Backend selection and threading for the scoring kernel.

The compiled extension is preferred when present; otherwise the numpy
fallback is used.  ``SMR_BACKEND=python`` or ``SMR_BACKEND=compiled``
forces the choice at import time.  ``SMR_THREADS`` (read per call) caps
how many threads score bands of the offset grid; the resulting map is
identical for any thread count because every offset is computed
independently into its own slot.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py

_forced = os.environ.get("SMR_BACKEND", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise ImportError(f"SMR_BACKEND must be 'python' or 'compiled', got {_forced!r}")

if _forced == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _kernels_py
        BACKEND = "python"


def thread_budget() -> int:
    """Thread cap from SMR_THREADS; defaults to 1 (sequential)."""
    raw = os.environ.get("SMR_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def compute_score_map(
    frame: np.ndarray,
    tmpl: np.ndarray,
    x0: int,
    y0: int,
    radius: int,
    lut: np.ndarray,
    threads: int | None = None,
) -> np.ndarray:
    """Score every offset in [-radius, radius]^2 around anchor (x0, y0).

    ``frame`` and ``tmpl`` are 2-D uint8 arrays; ``lut`` maps each absolute
    pixel difference 0..255 to its score contribution.  Returns a
    (2*radius+1, 2*radius+1) float64 map, rows indexed by the vertical
    offset h2 + radius and columns by h1 + radius.
    """
    side = 2 * radius + 1
    out = np.empty((side, side), dtype=np.float64)
    if threads is None:
        threads = thread_budget()
    threads = min(threads, side)
    if threads <= 1:
        _impl.score_map_band(frame, tmpl, x0, y0, radius, lut, out, 0, side)
        return out
    bounds = np.linspace(0, side, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_impl.score_map_band, frame, tmpl, x0, y0, radius, lut, out, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for future in futures:
            future.result()
    return out
