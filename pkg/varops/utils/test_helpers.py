"""Brute-force oracles and assertions shared by the tests and `varops selftest`."""
from typing import Sequence, Tuple

import numpy as np

from varops.grid import GridFunction
from varops.operators import HomogeneousKernel


def window_scan_maximal(values: Sequence[float], lengths: Sequence[int]) -> np.ndarray:
    """1d maximal function: max over every window of the given lengths that
    contains the point, by explicit enumeration."""
    a = np.abs(np.asarray(values, dtype=np.float64))
    n = a.size
    out = a.copy()
    for L in lengths:
        for start in range(n - L + 1):
            avg = a[start : start + L].mean()
            out[start : start + L] = np.maximum(out[start : start + L], avg)
    return out


def window_scan_ap(values: Sequence[float], p: float, lengths: Sequence[int]) -> float:
    """1d A_p constant by explicit enumeration of windows."""
    w = np.asarray(values, dtype=np.float64)
    u = w ** (-1.0 / (p - 1))
    best = 1.0
    for L in lengths:
        for start in range(w.size - L + 1):
            aw = w[start : start + L].mean()
            au = u[start : start + L].mean()
            best = max(best, aw * au ** (p - 1))
    return best


def window_scan_sharp(values: Sequence[float], lengths: Sequence[int]) -> np.ndarray:
    """1d sharp maximal function by explicit enumeration of windows."""
    a = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(a)
    for L in lengths:
        if L == 1:
            continue
        for start in range(a.size - L + 1):
            chunk = a[start : start + L]
            osc = np.abs(chunk - chunk.mean()).mean()
            out[start : start + L] = np.maximum(out[start : start + L], osc)
    return out


def direct_truncated(f: GridFunction, K: HomogeneousKernel, t: float) -> np.ndarray:
    """K_t f by a double loop over the grid samples."""
    x = np.asarray(f.grid.coordinates())
    fv = np.asarray(f.flat)
    out = np.zeros(fv.size)
    for i in range(fv.size):
        for j in range(fv.size):
            diff = x[i] - x[j]
            dist = float(np.sqrt(np.sum(diff**2)))
            if dist > t:
                out[i] += float(K.evaluate(diff)) * fv[j] * f.grid.cell_volume
    return out.reshape(f.grid.shape)


def direct_average(f: GridFunction, t: float) -> np.ndarray:
    """Mean of the samples strictly within distance t of each point."""
    x = np.asarray(f.grid.coordinates())
    fv = np.asarray(f.flat)
    dist = np.sqrt(np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1))
    inside = dist < t
    return ((inside * fv[None, :]).sum(axis=1) / inside.sum(axis=1)).reshape(f.grid.shape)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + abs(b))


def assert_close(a, b, rtol: float = 1e-12, atol: float = 1e-12) -> None:
    assert np.allclose(np.asarray(a), np.asarray(b), rtol=rtol, atol=atol), (a, b)


def comparability(m_dyadic: np.ndarray, m_full: np.ndarray) -> Tuple[bool, bool]:
    """(M_dyadic <= M_full, M_full <= 2 M_dyadic), both pointwise and exact."""
    return bool(np.all(m_dyadic <= m_full)), bool(np.all(m_full <= 2 * m_dyadic))
