"""Named map constructors and seeded band-limited random fields.

Sphere maps are built in the embedding ``S² ⊂ ℝ³`` and pushed into the
stereographic chart (projection from the north pole), so their closed forms
stay readable:

    X = (sin θ cos ψ, sin θ sin ψ, cos θ)  ↦  y = cot(θ/2) (cos ψ, sin ψ).
"""
from __future__ import annotations

from math import comb

import numpy as np

from .calculus import MapField
from .errors import ConfigurationError
from .grid import DomainMetric

FAMILIES = ("constant", "sinusoid", "great_circle", "latitude_circle", "latitude_profile",
            "bump", "random")


def stereographic(X, radius=1.0):
    """Embedding points on the sphere of radius ``radius`` to chart coordinates."""
    X = np.asarray(X, dtype=float) / radius
    return X[..., :-1] / (1.0 - X[..., -1:])


def inverse_stereographic(y, radius=1.0):
    y = np.asarray(y, dtype=float)
    s = np.sum(y**2, axis=-1, keepdims=True)
    return radius * np.concatenate([2 * y, s - 1], axis=-1) / (1 + s)


def _latitude_chart(theta, psi):
    c = 1.0 / np.tan(0.5 * theta)
    return np.stack([c * np.cos(psi), c * np.sin(psi)], axis=-1)


def _wave_number(grid, k, axis=0):
    return 2 * np.pi * k / grid.lengths[axis]


def _need(target, kind, family):
    if target.kind != kind and not (kind == "sphere" and target.label == "generic(sphere_stereo)"):
        raise ConfigurationError(f"map family {family!r} needs a {kind} target, got {target.label}")


# ---------------------------------------------------------------------------
# families


def constant_map(grid, target, point=None, metric=None):
    point = np.zeros(target.dim_n) if point is None else np.asarray(point, float)
    values = np.broadcast_to(point, grid.shape + (target.dim_n,)).copy()
    return MapField(grid, target, values, metric)


def sinusoid_map(grid, target, amplitude=1.0, k=1, axis=0, metric=None):
    """``φ = A sin(ωx_axis)`` (every target component), ``ω = 2πk/L``."""
    if not target.is_flat:
        raise ConfigurationError("the sinusoid family needs a euclidean target")
    omega = _wave_number(grid, k, axis)
    x = grid.coordinates[..., axis]
    values = np.repeat((amplitude * np.sin(omega * x))[..., None], target.dim_n, axis=-1)
    return MapField(grid, target, values, metric)


def great_circle_map(grid, target, k=1, axis=0, metric=None):
    """Equator of S² traversed ``k`` times along one domain axis (a geodesic)."""
    return latitude_circle_map(grid, target, theta0=0.5 * np.pi, k=k, axis=axis, metric=metric)


def latitude_circle_map(grid, target, theta0=1.0, k=1, axis=0, metric=None):
    """Latitude circle at polar angle ``theta0`` at angular speed ``ω = 2πk/L``.

    The tension has constant length ``|τ| = (ω²/2) sin 2θ₀`` (unit sphere).
    """
    _need(target, "sphere", "latitude_circle")
    omega = _wave_number(grid, k, axis)
    psi = omega * grid.coordinates[..., axis]
    values = _latitude_chart(np.full(grid.shape, float(theta0)), psi)
    return MapField(grid, target, values, metric)


def latitude_profile_map(grid, target, theta0=1.2, amplitude=0.4, k=1, profile_k=1,
                         metric=None):
    """``(x, y, ...) ↦ (sin f cos ωx, sin f sin ωx, cos f)`` with
    ``f = θ₀ + a Σ_{d≥1} sin(2π k_p x_d / L_d)``."""
    _need(target, "sphere", "latitude_profile")
    if grid.m < 2:
        raise ConfigurationError("latitude_profile needs a domain of dimension >= 2")
    X = np.moveaxis(grid.coordinates, -1, 0)
    f = np.full(grid.shape, float(theta0))
    for d in range(1, grid.m):
        f = f + amplitude * np.sin(_wave_number(grid, profile_k, d) * X[d] + 0.5 * (d - 1))
    if f.min() <= 0 or f.max() >= 2 * np.pi:
        raise ConfigurationError("latitude profile leaves (0, 2π); reduce the amplitude")
    values = _latitude_chart(f, _wave_number(grid, k, 0) * X[0])
    return MapField(grid, target, values, metric)


def smooth_step(u):
    """C^∞ transition: 0 for u ≤ 0, 1 for u ≥ 1."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


BUMP_PROFILES = ("polynomial", "plateau", "smooth_step")


def poly_step(u, k):
    """Polynomial smoothstep of degree 2k+1 with k vanishing derivatives at both ends."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return u ** (k + 1) * sum(comb(k + j, j) * (1 - u) ** j for j in range(k + 1))


def bump_map(grid, target, amplitude=0.5, profile="polynomial", exponent=12, inner=None,
             kappa=0.5, metric=None):
    """Compactly supported ``φ(x) = exp_p(χ(|x|) W(x))`` around the chart origin ``p``.

    ``χ`` vanishes for ``r ≥ r_supp``.  ``profile="polynomial"`` uses
    ``χ = (1 − r²/r_supp²)^exponent`` (C^{exponent−1} at the edge, derivatives of
    moderate size).  ``profile="plateau"`` is 1 for ``r ≤ inner`` and falls off
    through the polynomial smoothstep with ``exponent`` vanishing derivatives,
    so the map stays active out to ``r_supp``.  ``profile="smooth_step"`` is the
    C^∞ version of the plateau, whose high derivatives are much larger.  ``W``
    is a smooth tangent field of size ``amplitude``.
    """
    if grid.mode != "compact_support":
        raise ConfigurationError("bump maps need a compact_support grid")
    r_supp = grid.r_supp
    r = grid.radius
    if profile == "polynomial":
        if int(exponent) < 10:
            raise ConfigurationError("bump exponent must be at least 10 for fourth-order maps")
        chi = np.clip(1.0 - (r / r_supp) ** 2, 0.0, None) ** int(exponent)
    elif profile in ("plateau", "smooth_step"):
        inner = 0.25 * r_supp if inner is None else float(inner)
        if not 0 <= inner < r_supp:
            raise ConfigurationError("bump inner radius must lie in [0, r_supp)")
        u = (r - inner) / (r_supp - inner)
        chi = 1.0 - (poly_step(u, int(exponent)) if profile == "plateau" else smooth_step(u))
    else:
        raise ConfigurationError(f"unknown bump profile {profile!r}; expected one of "
                                 f"{BUMP_PROFILES}")
    X = np.moveaxis(grid.coordinates, -1, 0)
    n, m = target.dim_n, grid.m
    W = np.stack([np.cos(kappa * X[a % m] + 0.3 * a) * (1 + 0.2 * np.sin(kappa * X[(a + 1) % m]))
                  for a in range(n)], axis=-1)
    w = amplitude * chi[..., None] * W
    values = w if target.is_flat else target.exp_from_origin(w)
    return MapField(grid, target, values, metric)


def random_map(grid, target, amplitude=0.2, center=None, seed=0, kmax=None, metric=None):
    """``φ = center + random band-limited field`` (periodic grids)."""
    center = np.zeros(target.dim_n) if center is None else np.asarray(center, float)
    values = center + random_field(grid, (target.dim_n,), seed=seed, kmax=kmax,
                                   amplitude=amplitude)
    return MapField(grid, target, values, metric)


BUILDERS = {
    "constant": constant_map,
    "sinusoid": sinusoid_map,
    "great_circle": great_circle_map,
    "latitude_circle": latitude_circle_map,
    "latitude_profile": latitude_profile_map,
    "bump": bump_map,
    "random": random_map,
}


def make_map(grid, target, family, metric=None, **params):
    try:
        builder = BUILDERS[family]
    except KeyError:
        raise ConfigurationError(f"unknown map family {family!r}; expected one of {FAMILIES}",
                                 path="map.family") from None
    try:
        return builder(grid, target, metric=metric, **params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for map family {family!r}: {exc}",
                                 path="map.params") from None


def map_from_config(grid, target, spec, metric=None):
    spec = dict(spec)
    family = spec.get("family")
    if family is None:
        raise ConfigurationError("missing 'family'", path="map")
    params = dict(spec.get("params") or {})
    if "point" in params:
        params["point"] = np.asarray(params["point"], float)
    return make_map(grid, target, family, metric=metric, **params)


# ---------------------------------------------------------------------------
# random smooth fields


def random_field(grid, components, seed=0, kmax=None, amplitude=1.0):
    """Seeded band-limited Fourier series with shape ``(*grid.shape, *components)``.

    Every mode with ``max|k_d| ≤ kmax`` (default ``N/8``) gets a Gaussian
    cosine and sine coefficient damped by ``1/(1+|k|²)``; the result is
    rescaled so ``max|field| = amplitude``.  On compact-support grids the
    field is multiplied by a radial C^∞ cutoff vanishing beyond ``r_supp``.
    """
    components = tuple(int(c) for c in components)
    rng = np.random.default_rng(seed)
    if kmax is None:
        kmax = max(1, min(grid.resolutions) // 8)
    X = np.moveaxis(grid.coordinates, -1, 0)
    ranges = [np.arange(-kmax, kmax + 1)] * grid.m
    modes = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, grid.m)
    modes = modes[[tuple(k) > tuple(-k) or not k.any() for k in modes]]  # one of ±k
    field = np.zeros(grid.shape + components)
    for k in modes:
        phase = sum(2 * np.pi * k[d] * X[d] / grid.lengths[d] for d in range(grid.m))
        damp = 1.0 / (1.0 + float(k @ k))
        a = rng.standard_normal(components) * damp
        b = rng.standard_normal(components) * damp if k.any() else 0.0
        field = field + np.cos(phase)[(...,) + (None,) * len(components)] * a \
            + np.sin(phase)[(...,) + (None,) * len(components)] * b
    if grid.mode == "compact_support":
        cut = 1.0 - smooth_step(grid.radius / grid.r_supp * 2 - 1)
        field = field * cut[(...,) + (None,) * len(components)]
    scale = np.abs(field).max()
    return field * (amplitude / scale if scale > 0 else 0.0)


def random_section(phi, seed=0, kmax=None, amplitude=1.0):
    return random_field(phi.grid, (phi.n,), seed=seed, kmax=kmax, amplitude=amplitude)


def random_symmetric(grid, seed=0, kmax=None, amplitude=1.0):
    """Random smooth symmetric 2-tensor field ``ω_ij``."""
    w = random_field(grid, (grid.m, grid.m), seed=seed, kmax=kmax, amplitude=amplitude)
    return 0.5 * (w + np.swapaxes(w, -1, -2))


def random_metric(grid, seed=0, amplitude=0.2, kmax=None):
    """A smooth SPD metric ``g = δ + ω`` with ``max|ω| = amplitude``."""
    omega = random_symmetric(grid, seed=seed, kmax=kmax, amplitude=amplitude)
    return DomainMetric(grid, np.eye(grid.m) + omega)
