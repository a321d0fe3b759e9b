"""Radial cutoff profiles and exact Cartesian derivatives of radial weights.

Every family is a rescaling ``η(r) = η₁(r/R)`` of a fixed profile, so
``sup|η^(l)| R^l`` does not depend on ``R``.  ``polyN`` is the polynomial
smoothstep of odd degree N, with (N−1)/2 vanishing derivatives at both ends
(``poly9`` is C⁴); ``mollified`` is the C^∞ step built from ``exp(−1/u)``.
Weighted integrals carry up to ``η⁗``, so their trapezoid error is governed by
the first derivative that jumps at the seams: ``poly9`` gives roughly O(h²),
``poly17``/``poly21`` converge faster than the sixth-order fields they multiply,
and ``mollified`` needs many nodes across its thin boundary layers.  Cartesian derivatives of radial
weights such as ``η(r)``, ``rη'(r)`` or ``η'(r) x_i x_j / r`` are generated
symbolically with the chain rule ``∂_j e_l = e_{l+1} x_j / r`` (``e_l`` standing
for ``η^(l)(r)``) and evaluated only on the transition band ``R < r < 2R``,
which keeps every ``1/r`` factor away from the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from ..errors import ConfigurationError

FAMILIES = ("poly9", "mollified", "poly13", "poly17", "poly21")
MAX_ORDER = 5


@lru_cache(maxsize=None)
def _profile_derivatives(family):
    """Lambdified ``s^(l)(u)``, l = 0..MAX_ORDER, for the transition ``s`` on [0, 1]."""
    u = sp.Symbol("u")
    if family == "poly9":
        s = 126 * u**5 - 420 * u**6 + 540 * u**7 - 315 * u**8 + 70 * u**9
    elif family.startswith("poly"):
        k = (int(family[4:]) - 1) // 2
        s = u**(k + 1) * sum(sp.binomial(k + j, j) * (1 - u)**j for j in range(k + 1))
    elif family == "mollified":
        f = lambda v: sp.exp(-1 / v)
        s = f(u) / (f(u) + f(1 - u))
    else:
        raise ConfigurationError(f"unknown cutoff family {family!r}; expected one of {FAMILIES}")
    return tuple(sp.lambdify(u, sp.diff(s, u, l), "numpy") for l in range(MAX_ORDER + 1))


@dataclass(frozen=True)
class CutoffProfile:
    """``η = 1`` on ``[0, R]``, ``η = 0`` on ``[2R, ∞)``, ``η = 1 − s((r − R)/R)`` between."""

    R: float
    family: str = "mollified"
    bounds: dict = field(default_factory=dict, compare=False)

    def derivative(self, r, l=0):
        """``η^(l)(r)`` (exact); zero off the band for ``l ≥ 1``."""
        if not 0 <= l <= MAX_ORDER:
            raise ConfigurationError(f"derivative order must lie in 0..{MAX_ORDER}")
        r = np.asarray(r, dtype=float)
        R = self.R
        band = (r > R) & (r < 2 * R)
        out = np.zeros_like(r)
        if l == 0:
            out[r <= R] = 1.0
        u = (r[band] - R) / R
        val = _profile_derivatives(self.family)[l](u)
        out[band] = 1.0 - val if l == 0 else -val / R**l
        return out

    def __call__(self, r):
        return self.derivative(r, 0)

    def band(self, r):
        r = np.asarray(r)
        return (r > self.R) & (r < 2 * self.R)


def measured_bounds(family, R, orders=(1, 2, 3, 4), samples=20001):
    """``sup_r |η^(l)(r)| R^l`` on a dense sampling of the band ``[R, 2R]``."""
    prof = CutoffProfile(float(R), family)
    r = R * (1.0 + np.linspace(0.0, 1.0, samples)[1:-1])
    return {l: float(np.abs(prof.derivative(r, l)).max() * R**l) for l in orders}


def cutoff_profile(R, family="mollified"):
    """Build a :class:`CutoffProfile` and record its derivative bound constants."""
    R = float(R)
    if not np.isfinite(R) or R <= 0:
        raise ConfigurationError(f"cutoff radius must be positive, got {R}")
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown cutoff family {family!r}; expected one of {FAMILIES}")
    prof = CutoffProfile(R, family)
    prof.bounds.update(measured_bounds(family, R))
    return prof


# ---------------------------------------------------------------------------
# Cartesian derivatives of radial weights


@lru_cache(maxsize=None)
def _symbols(m):
    x = sp.symbols(f"x0:{m}", real=True)
    r = sp.Symbol("r", positive=True)
    e = sp.symbols(f"e0:{MAX_ORDER + 2}", real=True)
    return x, r, e


def _d(expr, j, m):
    """Total derivative ``∂/∂x_j`` of an expression in ``x``, ``r`` and ``e_l = η^(l)(r)``."""
    x, r, e = _symbols(m)
    out = sp.diff(expr, x[j]) + sp.diff(expr, r) * x[j] / r
    for l in range(MAX_ORDER + 1):
        out += sp.diff(expr, e[l]) * e[l + 1] * x[j] / r
    return out


@lru_cache(maxsize=None)
def weight_library(m):
    """Lambdified weight tensors as functions of ``(x_0..x_{m-1}, r, e_0..e_5)``.

    Keys (``f_ij = η' x_i x_j / r``, ``u = rη'``; repeated indices summed):

    ``eta_j``, ``eta_jj``, ``eta_jk``, ``eta_jkk`` (index j), ``u``, ``u_j``, ``u_jk``,
    ``u_jkk`` (index j), ``f`` (ij), ``f_j`` = Σ_j ∂_j f_ij (i), ``f_jk`` (ik),
    ``f_jkk`` (i), ``f_kk`` (ij), ``f_k`` (ijk).
    """
    x, r, e = _symbols(m)
    rng = range(m)
    eta = e[0]
    u = r * e[1]
    f = [[e[1] * x[i] * x[j] / r for j in rng] for i in rng]
    eta_j = [_d(eta, j, m) for j in rng]
    eta_jk = [[_d(eta_j[j], k, m) for k in rng] for j in rng]
    eta_jkk = [sum(_d(eta_jk[j][k], k, m) for k in rng) for j in rng]
    u_j = [_d(u, j, m) for j in rng]
    u_jk = [[_d(u_j[j], k, m) for k in rng] for j in rng]
    u_jkk = [sum(_d(u_jk[j][k], k, m) for k in rng) for j in rng]
    f_k = [[[_d(f[i][j], k, m) for k in rng] for j in rng] for i in rng]
    f_j = [sum(f_k[i][j][j] for j in rng) for i in rng]
    f_jk = [[sum(_d(f_k[i][j][j], k, m) for j in rng) for k in rng] for i in rng]
    f_jkk = [sum(_d(f_jk[i][k], k, m) for k in rng) for i in rng]
    f_kk = [[sum(_d(f_k[i][j][k], k, m) for k in rng) for j in rng] for i in rng]
    table = {
        "eta_j": eta_j, "eta_jj": sum(eta_jk[j][j] for j in rng), "eta_jk": eta_jk,
        "eta_jkk": eta_jkk, "u": u, "u_j": u_j, "u_jk": u_jk, "u_jkk": u_jkk,
        "f": f, "f_j": f_j, "f_jk": f_jk, "f_jkk": f_jkk, "f_kk": f_kk, "f_k": f_k,
    }
    args = (*x, r, *e[:MAX_ORDER + 1])
    lib = {}
    for key, val in table.items():
        arr = np.array(val, dtype=object)
        lib[key] = (arr.shape, sp.lambdify(args, list(arr.ravel()), "numpy"))
    return lib


def radial_weights(profile, grid):
    """Evaluate :func:`weight_library` on the grid (zero outside the band).

    Returns a dict of arrays with the grid axes first and weight indices last,
    plus ``eta`` itself on the whole grid.
    """
    m = grid.m
    X = grid.coordinates
    r = grid.radius
    band = profile.band(r)
    xb = [X[..., a][band] for a in range(m)]
    rb = r[band]
    eb = [profile.derivative(rb, l) for l in range(MAX_ORDER + 1)]
    out = {"eta": profile(r)}
    for key, (shape, fn) in weight_library(m).items():
        full = np.zeros(grid.shape + shape)
        if band.any():
            vals = [np.broadcast_to(v, rb.shape) for v in fn(*xb, rb, *eb)]
            full[band] = np.stack(vals, axis=-1).reshape(rb.shape + shape)
        out[key] = full
    return out


def displayed_cutoff_gap(profile, grid):
    """Compare exact ``(η)_jkk`` and ``(η' x_i x_j/r)_jkk`` with their displayed
    leading-order forms ``η‴ x_j / r`` and ``η⁗ x_i + 3η‴ x_i / r``.

    Returns the max absolute gaps and the max exact values; the displayed forms
    drop lower-order terms, so the gaps are O(1/R³) like the terms themselves.
    """
    w = radial_weights(profile, grid)
    X = grid.coordinates
    r = grid.radius
    band = profile.band(r)
    safe = np.where(band, r, 1.0)
    e3 = profile.derivative(r, 3)
    e4 = profile.derivative(r, 4)
    lead_a = e3[..., None] * X / safe[..., None]
    lead_b = e4[..., None] * X + 3 * e3[..., None] * X / safe[..., None]
    return {
        "eta_jkk_gap": float(np.abs(w["eta_jkk"] - lead_a).max()),
        "eta_jkk_max": float(np.abs(w["eta_jkk"]).max()),
        "f_jkk_gap": float(np.abs(w["f_jkk"] - lead_b).max()),
        "f_jkk_max": float(np.abs(w["f_jkk"]).max()),
    }
