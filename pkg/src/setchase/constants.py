"""Competitive-ratio constants D_k and switching thresholds x_k."""

from __future__ import annotations

import math

KMAX = 64

_D = [math.nan, 1.0]
for _k in range(2, KMAX + 1):
    _d = _D[-1]
    _D.append(2.0 * _d + math.sqrt(8.0 + 8.0 * _d) + 3.0)


def _extend(k: int) -> None:
    while len(_D) <= k:
        d = _D[-1]
        _D.append(2.0 * d + math.sqrt(8.0 + 8.0 * d) + 3.0)


def dk(k: int) -> float:
    """D_1 = 1, D_{k+1} = 2 D_k + sqrt(8 + 8 D_k) + 3."""
    if k < 1:
        raise ValueError(f"D_k needs k >= 1, got {k}")
    if k >= len(_D):
        _extend(k)
    return _D[k]


def xk(k: int) -> float:
    """Switching threshold 1 + sqrt(2 / (1 + D_{k-1})), defined for k >= 2."""
    if k < 2:
        raise ValueError(f"x_k needs k >= 2, got {k}")
    return 1.0 + math.sqrt(2.0 / (1.0 + dk(k - 1)))


def switch_coeff(k: int) -> float:
    """(x_k + 1) / (x_k - 1), the weight of the other-side OPT in the potential."""
    x = xk(k)
    return (x + 1.0) / (x - 1.0)


def recursion_residual(k: int) -> float:
    """|D_k - (D_{k-1}(1 + x_k) + x_k(x_k + 1)/(x_k - 1))|."""
    x = xk(k)
    return abs(dk(k) - (dk(k - 1) * (1.0 + x) + x * (x + 1.0) / (x - 1.0)))


def growth_bound(k: int) -> float:
    """Upper bound 2^{k+4} - sqrt(2^{k+9}) on D_k, valid for k >= 2."""
    return 2.0 ** (k + 4) - math.sqrt(2.0 ** (k + 9))


def distortion_bound(level: int, k: int) -> float:
    """Largest allowed w/w0 for an edge at ``level`` when the depth bound is ``k``.

    Product over j = 2..level of x_{j+1} ... x_k; equals 1 on level 1 and
    whenever k <= 2.
    """
    out = 1.0
    for j in range(2, level + 1):
        for m in range(j + 1, k + 1):
            out *= xk(m)
    return out


def global_distortion_bound(k: int) -> float:
    """prod_{i=3}^{k} x_i^{i-2}; stays below 60 for every k."""
    return distortion_bound(k, k)


def table(kmax: int = 20) -> list[dict]:
    rows = []
    for k in range(1, kmax + 1):
        rows.append({
            "k": k,
            "D_k": dk(k),
            "x_k": xk(k) if k >= 2 else math.nan,
            "bound": growth_bound(k) if k >= 2 else math.nan,
            "recursion_residual": recursion_residual(k) if k >= 2 else 0.0,
        })
    return rows
