"""Friedrichs mollifier built from the canonical smooth bump.

The bump j(x) = Z^-1 exp(1/(x^2 - 1)) on (-1, 1), Z chosen so that the
bump integrates to one, is nonnegative, even and smooth, so its Fourier
transform jhat is real, even, equals 1 at the origin and satisfies
|jhat| <= 1 everywhere.  Mollification at scale eps multiplies mode k by
jhat(eps xi_k); tables of those samples are cached per (grid, eps).

jhat is evaluated by adaptive quadrature of
2 int_0^1 exp(1/(x^2-1)) cos(w x) dx, normalised by the value at w = 0 so
that the zero mode is preserved exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .spectral import Field, Grid, dx, multiplier_apply, pad_to

__all__ = ["MollifierTable", "build_mollifier", "mollify", "commutator_mollifier"]

_QUAD_TOL = 1e-12


def _bump(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 / (x[inside] ** 2 - 1.0))
    return out


def _bump_scalar(x: float) -> float:
    return float(np.exp(1.0 / (x * x - 1.0))) if abs(x) < 1.0 else 0.0


def bump_transform_raw(w: float) -> float:
    """Unnormalised cosine transform of the bump at frequency w."""
    val, _ = quad(
        _bump_scalar, 0.0, 1.0, weight="cos", wvar=float(w),
        epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200,
    )
    return 2.0 * val


@dataclass(frozen=True)
class MollifierTable:
    """Samples jhat(eps xi_k) for one grid and mollification scale."""

    grid: Grid
    eps: float
    multiplier: np.ndarray

    def __post_init__(self):
        self.multiplier.flags.writeable = False


_cache: dict[tuple[int, float, float], MollifierTable] = {}
_cache_lock = threading.Lock()


def build_mollifier(grid: Grid, eps: float) -> MollifierTable:
    """Build (or fetch from cache) the multiplier table for one scale.

    Requires 0 < eps <= 1 and eps < L/2 so the periodised bump support
    does not wrap onto itself.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"mollifier scale must lie in (0, 1], got {eps}")
    if not (eps < grid.length / 2.0):
        raise ValueError(
            f"mollifier scale {eps} too large for domain length {grid.length}"
        )
    key = (grid.n, grid.length, float(eps))
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit

    norm = bump_transform_raw(0.0)
    args = np.abs(eps * grid.xi)
    uniq, inverse = np.unique(args, return_inverse=True)
    vals = np.array([bump_transform_raw(w) for w in uniq]) / norm
    table = MollifierTable(grid, float(eps), np.clip(vals[inverse], -1.0, 1.0))
    with _cache_lock:
        _cache[key] = table
    return table


def mollify(f: Field, table: MollifierTable) -> Field:
    """Low-pass the field through the mollifier multiplier."""
    if table.grid != f.grid:
        raise ValueError("mollifier table was built on a different grid")
    return multiplier_apply(f, table.multiplier)


def commutator_mollifier(table: MollifierTable, f: Field, g: Field) -> Field:
    """Mollifier commutator applied to the derivative: J(f g') - f J(g').

    Evaluated alias-free on the doubled grid (the matching table for the
    doubled grid is pulled from the cache).
    """
    if table.grid != f.grid or f.grid != g.grid:
        raise ValueError("fields and table must share one grid")
    fine = f.grid.doubled()
    fine_table = build_mollifier(fine, table.eps)
    ff = pad_to(f, fine)
    gx = pad_to(dx(g, 1), fine)
    term1 = mollify(Field.from_values(fine, ff.values * gx.values), fine_table)
    term2 = Field.from_values(fine, ff.values * mollify(gx, fine_table).values)
    return term1 - term2
