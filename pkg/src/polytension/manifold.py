"""Target manifolds described in a single coordinate chart.

Every target exposes the metric ``h``, its Christoffel symbols, the curvature
operator ``R(X, Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`` and the covariant
derivative ``(∇_W R)(X, Y)Z``.  All functions accept batched chart points of
shape ``(..., n)`` and batched vectors of matching shape.

Array conventions
-----------------
``christoffels(y)[..., a, b, c]``      Γ^a_bc
``riemann(y)[..., a, x, y, z]``        component a of R(∂_x, ∂_y)∂_z
``riemann_derivative(y)[..., a, w, x, y, z]``  component a of (∇_w R)(∂_x, ∂_y)∂_z
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ChartExitError, ConfigurationError, GeometryError

KINDS = ("euclidean", "sphere", "hyperbolic", "generic")

# 4th-order centred first-derivative stencil: offsets and weights.
_FD4 = ((1, 2.0 / 3.0), (2, -1.0 / 12.0))


def _fd_derivative(fun, y, step):
    """Partial derivatives of ``fun`` at ``y``; derivative index is inserted
    right after the batch axes of ``y``."""
    n = y.shape[-1]
    parts = []
    for k in range(n):
        acc = None
        for off, w in _FD4:
            e = np.zeros(n)
            e[k] = off * step
            term = w * (fun(y + e) - fun(y - e))
            acc = term if acc is None else acc + term
        parts.append(acc / step)
    return np.stack(parts, axis=y.ndim - 1)


@dataclass(frozen=True)
class ChartTarget:
    """Immutable descriptor of a target manifold ``N`` in one chart.

    Use :func:`make_target` to build instances; it validates parameters.
    """

    kind: str
    dim_n: int
    radius: float = 1.0
    metric_fn: Optional[Callable] = None
    step: float = 1e-3
    curvature_step: float = 1e-2
    y_max: float = 10.0
    label: str = ""
    params: dict = field(default_factory=dict, compare=False)

    # -- classification ---------------------------------------------------
    @property
    def is_space_form(self):
        return self.kind in ("euclidean", "sphere", "hyperbolic")

    @property
    def sectional_curvature(self):
        """Constant sectional curvature of a space form (None for generic)."""
        if self.kind == "euclidean":
            return 0.0
        if self.kind == "sphere":
            return 1.0 / self.radius**2
        if self.kind == "hyperbolic":
            return -1.0 / self.radius**2
        return None

    @property
    def is_flat(self):
        return self.kind == "euclidean"

    # -- chart domain -----------------------------------------------------
    def in_domain(self, y):
        y = np.asarray(y, dtype=float)
        ok = np.all(np.isfinite(y), axis=-1)
        if self.kind == "sphere":
            ok &= np.linalg.norm(y, axis=-1) <= self.y_max
        elif self.kind == "hyperbolic":
            ok &= np.linalg.norm(y, axis=-1) <= self.y_max
        elif self.kind == "generic" and np.isfinite(self.y_max):
            ok &= np.linalg.norm(y, axis=-1) <= self.y_max
        return ok

    def check_domain(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim_n:
            raise ConfigurationError(
                f"chart points must have {self.dim_n} components, got shape {y.shape}")
        ok = np.atleast_1d(self.in_domain(y))
        if not np.all(ok):
            flat = int(np.flatnonzero(~ok.ravel())[0])
            index = np.unravel_index(flat, ok.shape)
            point = y.reshape(-1, self.dim_n)[flat]
            raise ChartExitError(
                f"point {point.tolist()} (index {tuple(int(i) for i in index)}) "
                f"is outside the chart domain of the {self.kind} target", point=point)
        return y

    # -- metric and connection -------------------------------------------
    def _conformal_log_gradient(self, y):
        s = np.sum(y * y, axis=-1, keepdims=True)
        if self.kind == "sphere":
            return -2.0 * y / (1.0 + s)
        return 2.0 * y / (1.0 - s)

    def conformal_factor(self, y):
        """``σ`` with ``h = σ² δ`` for space forms."""
        s = np.sum(y * y, axis=-1)
        if self.kind == "euclidean":
            return np.ones_like(s)
        if self.kind == "sphere":
            return 2.0 * self.radius / (1.0 + s)
        return 2.0 * self.radius / (1.0 - s)

    def metric(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "generic":
            return np.asarray(self.metric_fn(y), dtype=float)
        sigma2 = self.conformal_factor(y) ** 2
        return sigma2[..., None, None] * np.eye(self.dim_n)

    def christoffels(self, y):
        y = np.asarray(y, dtype=float)
        n = self.dim_n
        if self.kind == "euclidean":
            return np.zeros(y.shape[:-1] + (n, n, n))
        if self.kind in ("sphere", "hyperbolic"):
            du = self._conformal_log_gradient(y)
            eye = np.eye(n)
            # δ^a_b u_c + δ^a_c u_b − δ_bc u^a
            return (np.einsum("ab,...c->...abc", eye, du)
                    + np.einsum("ac,...b->...abc", eye, du)
                    - np.einsum("bc,...a->...abc", eye, du))
        return self._generic_christoffels(y)

    def _generic_christoffels(self, y):
        h = self.metric(y)
        hinv = np.linalg.inv(h)
        dh = _fd_derivative(self.metric, y, self.step)  # [..., k, a, b] = ∂_k h_ab
        # Γ_dbc (lowered) = ½(∂_b h_dc + ∂_c h_db − ∂_d h_bc)
        low = 0.5 * (np.einsum("...bdc->...dbc", dh) + np.einsum("...cdb->...dbc", dh)
                     - dh)
        return np.einsum("...ad,...dbc->...abc", hinv, low)

    # -- curvature --------------------------------------------------------
    def riemann(self, y):
        """Full curvature tensor ``[..., a, x, y, z]``."""
        y = np.asarray(y, dtype=float)
        n = self.dim_n
        if self.is_space_form:
            c = self.sectional_curvature
            h = self.metric(y)
            eye = np.eye(n)
            # c (h_yz δ^a_x − h_xz δ^a_y)
            return c * (np.einsum("...yz,ax->...axyz", h, eye)
                         - np.einsum("...xz,ay->...axyz", h, eye))
        gam = self._generic_christoffels(y)
        dgam = _fd_derivative(self._generic_christoffels, y, self.step)  # [..., x, a, y, z]
        term = np.einsum("...xayz->...axyz", dgam) - np.einsum("...yaxz->...axyz", dgam)
        term = term + np.einsum("...axm,...myz->...axyz", gam, gam)
        term = term - np.einsum("...aym,...mxz->...axyz", gam, gam)
        return term

    def riemann_derivative(self, y):
        """Covariant derivative tensor ``[..., a, w, x, y, z]``."""
        y = np.asarray(y, dtype=float)
        n = self.dim_n
        if self.is_space_form:
            return np.zeros(y.shape[:-1] + (n,) * 5)
        rie = self.riemann(y)
        gam = self._generic_christoffels(y)
        old = np.seterr(all="ignore")
        try:
            drie = _fd_derivative(self.riemann, y, self.curvature_step)
        finally:
            np.seterr(**old)
        out = np.einsum("...waxyz->...awxyz", drie)
        out = out + np.einsum("...awm,...mxyz->...awxyz", gam, rie)
        out = out - np.einsum("...mwx,...amyz->...awxyz", gam, rie)
        out = out - np.einsum("...mwy,...axmz->...awxyz", gam, rie)
        out = out - np.einsum("...mwz,...axym->...awxyz", gam, rie)
        return out

    def curvature(self, y, X, Y, Z, *, riemann=None, metric=None):
        """``R(X, Y)Z`` at ``y``.  Space forms use the closed form
        ``c(⟨Y,Z⟩X − ⟨X,Z⟩Y)``; ``riemann``/``metric`` may pass cached node arrays."""
        if self.kind == "euclidean":
            return np.zeros(np.broadcast_shapes(np.shape(X), np.shape(Y), np.shape(Z)))
        if self.is_space_form:
            h = self.metric(y) if metric is None else metric
            c = self.sectional_curvature
            yz = np.einsum("...a,...ab,...b->...", Y, h, Z)
            xz = np.einsum("...a,...ab,...b->...", X, h, Z)
            return c * (yz[..., None] * X - xz[..., None] * Y)
        rie = self.riemann(y) if riemann is None else riemann
        return np.einsum("...axyz,...x,...y,...z->...a", rie, X, Y, Z)

    def curvature_derivative(self, y, W, X, Y, Z, *, riemann_derivative=None):
        if self.is_space_form:
            return np.zeros(np.broadcast_shapes(np.shape(W), np.shape(X), np.shape(Y),
                                                np.shape(Z)))
        drie = self.riemann_derivative(y) if riemann_derivative is None else riemann_derivative
        return np.einsum("...awxyz,...w,...x,...y,...z->...a", drie, W, X, Y, Z)

    # -- geodesic helpers used by the map catalog -------------------------
    def exp_from_origin(self, w):
        """Exponential map at the chart origin for tangent chart components ``w``.

        For the conformal space forms the geodesics through the origin are
        radial lines, so only the radial profile has to be inverted.
        """
        w = np.asarray(w, dtype=float)
        if self.kind == "euclidean":
            return w.copy()
        if self.kind not in ("sphere", "hyperbolic"):
            raise ConfigurationError("exp_from_origin is only available for space forms")
        s = np.linalg.norm(w, axis=-1, keepdims=True)
        # h(0) = 4ρ² δ, so |w|_h = 2ρ|w| and the geodesic angle is 2|w|;
        # the chart radius of that point is tan(|w|) (sphere) or tanh(|w|).
        f = np.tan(s) if self.kind == "sphere" else np.tanh(s)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(s > 1e-8, f / np.where(s > 0, s, 1.0), 1.0 + s**2 / 3.0)
        return ratio * w


# ---------------------------------------------------------------------------
# built-in metric table for generic charts


def _conformal_wave(amp=0.3, slope=0.2):
    def metric(y):
        y = np.asarray(y, dtype=float)
        n = y.shape[-1]
        u = amp * np.sin(y[..., 0]) + slope * np.sum(y, axis=-1) ** 2 / (1 + n)
        return np.exp(2 * u)[..., None, None] * np.eye(n)
    return metric


def _sphere_stereo(radius=1.0):
    def metric(y):
        y = np.asarray(y, dtype=float)
        s = np.sum(y * y, axis=-1)
        return ((2 * radius / (1 + s)) ** 2)[..., None, None] * np.eye(y.shape[-1])
    return metric


def _hyperbolic_ball(radius=1.0):
    def metric(y):
        y = np.asarray(y, dtype=float)
        s = np.sum(y * y, axis=-1)
        return ((2 * radius / (1 - s)) ** 2)[..., None, None] * np.eye(y.shape[-1])
    return metric


def _polynomial(constant, linear=None, quadratic=None):
    h0 = np.asarray(constant, dtype=float)
    h1 = None if linear is None else np.asarray(linear, dtype=float)
    h2 = None if quadratic is None else np.asarray(quadratic, dtype=float)

    def metric(y):
        y = np.asarray(y, dtype=float)
        h = np.broadcast_to(h0, y.shape[:-1] + h0.shape).copy()
        if h1 is not None:  # h1[k, a, b]
            h = h + np.einsum("...k,kab->...ab", y, h1)
        if h2 is not None:  # h2[k, l, a, b]
            h = h + np.einsum("...k,...l,klab->...ab", y, y, h2)
        return 0.5 * (h + np.swapaxes(h, -1, -2))
    return metric


METRIC_TABLE = {
    "conformal_wave": _conformal_wave,
    "sphere_stereo": _sphere_stereo,
    "hyperbolic_ball": _hyperbolic_ball,
    "polynomial": _polynomial,
}


def _probe_spd(target, rng_seed=0, count=32):
    rng = np.random.default_rng(rng_seed)
    scale = min(1.0, target.y_max) if np.isfinite(target.y_max) else 1.0
    pts = np.vstack([np.zeros(target.dim_n),
                     rng.uniform(-0.5, 0.5, size=(count, target.dim_n)) * scale])
    h = target.metric(pts)
    if h.shape != (len(pts), target.dim_n, target.dim_n):
        raise GeometryError(f"metric returned shape {h.shape} for {len(pts)} probe points")
    for p, hp in zip(pts, h):
        if not np.allclose(hp, hp.T, rtol=1e-12, atol=1e-14):
            raise GeometryError(f"metric not symmetric at {p.tolist()}", point=p)
        if not np.all(np.isfinite(hp)) or np.linalg.eigvalsh(hp).min() <= 0:
            raise GeometryError(f"metric not positive definite at {p.tolist()}", point=p)


def make_target(kind, **params):
    """Build a :class:`ChartTarget`.

    Parameters
    ----------
    kind : {"euclidean", "sphere", "hyperbolic", "generic"}
    n : int
        Target dimension (default 2 for curved targets, 1 for euclidean).
    radius : float
        Radius of the sphere / hyperbolic space (curvature ±1/radius²).
    metric : callable or str
        Generic charts only: a vectorised ``h(y)`` or the name of a table entry
        (``conformal_wave``, ``sphere_stereo``, ``hyperbolic_ball``, ``polynomial``);
        table entries take their own keyword arguments via ``metric_params``.
    step, curvature_step : float
        Differentiation steps of the generic pipeline.
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown target kind {kind!r}; expected one of {KINDS}")
    radius = float(params.get("radius", 1.0))
    if not np.isfinite(radius) or radius <= 0:
        raise ConfigurationError(f"radius must be positive, got {radius}")
    n = int(params.get("n", 1 if kind == "euclidean" else 2))
    if n < 1:
        raise ConfigurationError(f"target dimension must be positive, got {n}")

    if kind == "euclidean":
        return ChartTarget("euclidean", n, y_max=np.inf, label="euclidean")
    if kind == "sphere":
        return ChartTarget("sphere", n, radius=radius, y_max=float(params.get("y_max", 10.0)),
                           label=f"sphere(radius={radius})")
    if kind == "hyperbolic":
        y_max = float(params.get("y_max", 0.95))
        if not 0 < y_max < 1:
            raise ConfigurationError("hyperbolic chart bound y_max must lie in (0, 1)")
        return ChartTarget("hyperbolic", n, radius=radius, y_max=y_max,
                           label=f"hyperbolic(radius={radius})")

    metric = params.get("metric")
    metric_params = dict(params.get("metric_params", {}))
    if isinstance(metric, str):
        if metric not in METRIC_TABLE:
            raise ConfigurationError(f"unknown built-in metric {metric!r}")
        label = metric
        metric = METRIC_TABLE[metric](**metric_params)
    elif callable(metric):
        label = getattr(metric, "__name__", "callable")
    else:
        raise ConfigurationError("generic targets need a metric callable or table name")
    step = float(params.get("step", 1e-3))
    cstep = float(params.get("curvature_step", 1e-2))
    if not (step > 0 and cstep > 0):
        raise ConfigurationError("differentiation steps must be positive")
    default_ymax = 0.9 if label == "hyperbolic_ball" else np.inf
    target = ChartTarget("generic", n, radius=radius, metric_fn=metric, step=step,
                         curvature_step=cstep,
                         y_max=float(params.get("y_max", default_ymax)),
                         label=f"generic({label})",
                         params={"metric": label, "metric_params": metric_params})
    _probe_spd(target)
    return target


def target_from_config(spec):
    """Build a target from a config mapping such as ``{kind: sphere, radius: 1.0}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind is None:
        raise ConfigurationError("missing 'kind'", path="target")
    return make_target(kind, **spec)


# Module-level wrappers mirroring the method API.

def christoffels(target, y):
    return target.christoffels(target.check_domain(y))


def curvature(target, y, X, Y, Z):
    return target.curvature(target.check_domain(y), np.asarray(X, float),
                            np.asarray(Y, float), np.asarray(Z, float))


def curvature_derivative(target, y, W, X, Y, Z):
    return target.curvature_derivative(target.check_domain(y), np.asarray(W, float),
                                       np.asarray(X, float), np.asarray(Y, float),
                                       np.asarray(Z, float))
