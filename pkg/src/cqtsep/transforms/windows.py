"""Window shapes evaluated on the unit interval.

Every shape peaks at u = 0.5 with value 1 and is symmetric about it, so the
same function can sample a frequency-domain band window or a time window.
"""
from __future__ import annotations

import numpy as np

WINDOW_KINDS = ("hann", "hamming", "blackman", "cosine")


def window_shape(kind: str, u):
    """Evaluate window ``kind`` at positions ``u`` in [0, 1]; zero outside."""
    u = np.asarray(u, dtype=np.float64)
    if kind == "hann":
        w = 0.5 - 0.5 * np.cos(2 * np.pi * u)
    elif kind == "hamming":
        w = 0.54 - 0.46 * np.cos(2 * np.pi * u)
    elif kind == "blackman":
        w = 0.42 - 0.5 * np.cos(2 * np.pi * u) + 0.08 * np.cos(4 * np.pi * u)
    elif kind == "cosine":
        w = np.sin(np.pi * u)
    else:
        raise ValueError(f"unknown window kind {kind!r}; expected one of {WINDOW_KINDS}")
    return np.where((u >= 0) & (u <= 1), np.maximum(w, 0.0), 0.0)


def symmetric_window(kind: str, n: int) -> np.ndarray:
    """Length-``n`` symmetric window, w[i] = shape(i / (n - 1))."""
    if n == 1:
        return np.ones(1)
    return window_shape(kind, np.arange(n) / (n - 1))
