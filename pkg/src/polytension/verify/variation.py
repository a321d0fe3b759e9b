"""First variations in the map and in the domain metric, by extrapolated finite differences."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..calculus import second_fundamental_form, tension
from ..errors import ChartExitError, ConfigurationError, GeometryError, PerturbationError
from ..grid import DomainMetric
from ..stress import SymTensorField, stress4_es, stress4_hat, stress4
from ..tension import ENERGIES, tension_for

log = logging.getLogger(__name__)

# δE(φ)[V] = C_VARIATION ∫⟨τ_E(φ), V⟩ for every energy E with the Δ̄ = d*d sign convention
C_VARIATION = -2.0
MAX_SHRINK = 12


@dataclass
class VariationReport:
    check: str
    kind: str
    t: float
    derivative: float
    predicted: float
    mismatch: float
    raw_derivative: float
    tolerance: float | None = None
    passed: bool | None = None

    def to_dict(self):
        return asdict(self)

    def judge(self, tol):
        self.tolerance = tol
        self.passed = bool(self.mismatch <= tol)
        return self


def richardson(D, t):
    """Central difference at ``t`` and ``t/2`` combined to cancel the O(t²) term."""
    d1, d2 = D(t), D(t / 2)
    return (4 * d2 - d1) / 3, d1


def relative_mismatch(a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def _shrinking(fn, t, what):
    """Evaluate ``fn(t)``, halving ``t`` whenever the perturbed geometry is invalid."""
    for _ in range(MAX_SHRINK):
        try:
            return fn(t), t
        except (ChartExitError, GeometryError) as exc:
            log.info("%s: step %.3g invalid (%s), halving", what, t, exc)
            t *= 0.5
    raise PerturbationError(f"{what}: no admissible step found down to t={t:.3g}")


# ---------------------------------------------------------------------------
# variation of the map


def map_variation_check(phi, V, kind="E4", t=None, c=C_VARIATION):
    """Compare ``d/dt E(φ + tV)|₀`` with ``c ∫⟨τ_kind(φ), V⟩``.

    The perturbation is chart-linear; the derivative is a central difference at
    ``t`` and ``t/2`` with one Richardson step.  ``t`` defaults to
    ``1e-3 · max(1, max|φ|) / max|V|``.
    """
    if kind not in ENERGIES:
        raise ConfigurationError(f"unknown energy {kind!r}; expected one of {tuple(ENERGIES)}")
    V = np.asarray(V, dtype=float)
    if V.shape != phi.values.shape:
        raise ConfigurationError("variation field must match the map's shape")
    vmax = float(np.abs(V).max())
    if vmax == 0:
        return VariationReport("map", kind, 0.0, 0.0, 0.0, 0.0, 0.0)
    energy = ENERGIES[kind]
    if t is None:
        t = 1e-3 * max(1.0, float(np.abs(phi.values).max())) / vmax

    def D(s):
        plus = phi.with_values(phi.values + s * V)
        minus = phi.with_values(phi.values - s * V)
        return (energy(plus) - energy(minus)) / (2 * s)

    (deriv, raw), t = _shrinking(lambda s: richardson(D, s), t, "map variation")
    density = phi.inner(tension_for(phi, kind), V)
    predicted = c * phi.grid.integrate(density, phi.metric)
    return VariationReport("map", kind, t, deriv, predicted, relative_mismatch(deriv, predicted),
                           raw)


# ---------------------------------------------------------------------------
# variation of the domain metric

METRIC_TARGETS = {
    "E4hat": ("E4_hat", lambda phi: stress4_hat(phi)),
    "E4": ("E4", stress4),
    "E4ES": ("E4_ES", stress4_es),
}


def _omega_values(omega, grid):
    values = omega.values if isinstance(omega, SymTensorField) else np.asarray(omega, float)
    if values.shape != grid.shape + (grid.m, grid.m):
        raise ConfigurationError("ω must be a symmetric 2-tensor field on the grid")
    return 0.5 * (values + np.swapaxes(values, -1, -2))


def _default_step(omega):
    wmax = float(np.abs(omega).max())
    return 1e-3 / wmax if wmax > 0 else 0.0


def metric_variation_check(phi, omega, which="E4hat", t=None):
    """Compare ``d/dt E(φ; g + tω)|₀`` with ``∫⟨S, ω⟩ dV_g``.

    ``which`` selects the pair: ``E4hat`` (Ŝ₄), ``E4`` (S₄) or ``E4ES`` (S₄^ES).
    The perturbed energy re-derives ``g^{ij}``, the volume element and the
    domain Christoffels from ``g + tω``.
    """
    if phi.grid.mode != "periodic":
        raise ConfigurationError("metric variations need a periodic grid", path="grid.mode")
    if which not in METRIC_TARGETS:
        raise ConfigurationError(f"unknown metric check {which!r}; expected one of "
                                 f"{tuple(METRIC_TARGETS)}")
    kind, stress_fn = METRIC_TARGETS[which]
    omega = _omega_values(omega, phi.grid)
    if not np.abs(omega).max() > 0:
        return VariationReport("metric", which, 0.0, 0.0, 0.0, 0.0, 0.0)
    energy = ENERGIES[kind]
    g0 = np.asarray(phi.metric.g)
    t = _default_step(omega) if t is None else t

    def D(s):
        plus = phi.with_metric(DomainMetric(phi.grid, g0 + s * omega))
        minus = phi.with_metric(DomainMetric(phi.grid, g0 - s * omega))
        return (energy(plus) - energy(minus)) / (2 * s)

    (deriv, raw), t = _shrinking(lambda s: richardson(D, s), t, "metric variation")
    S = stress_fn(phi)
    predicted = phi.grid.integrate(S.pair(omega, phi.metric), phi.metric)
    return VariationReport("metric", which, t, deriv, predicted,
                           relative_mismatch(deriv, predicted), raw)


def tension_metric_derivative(phi, omega):
    """Closed form of ``d/dt τ(φ; g + tω)|₀``:
    ``−ω^{ij}(∇̄dφ)_ij − (∇_i ω^{ki}) dφ_k + ½(∇^k tr ω) dφ_k``."""
    metric = phi.metric
    grid = phi.grid
    gi = metric.ginv
    omega = _omega_values(omega, grid)
    up = np.einsum("...ik,...jl,...kl->...ij", gi, gi, omega)
    term1 = -np.einsum("...ij,...ija->...a", up, second_fundamental_form(phi))
    # covariant divergence ∇_i ω^{ki} = ∂_i ω^{ki} + Γ^k_il ω^{li} + Γ^i_il ω^{kl}
    dup = grid.gradient(up)  # [..., i, k, l] = ∂_i ω^{kl}
    div = np.einsum("...iki->...k", dup)
    if not metric.is_flat:
        G = metric.christoffels  # [..., k, i, j]
        div = div + np.einsum("...kil,...li->...k", G, up) + np.einsum("...iil,...kl->...k", G, up)
    tr = np.einsum("...ij,...ij->...", gi, omega)
    grad_tr = np.einsum("...kl,...l->...k", gi, grid.gradient(tr))
    coeff = -div + 0.5 * grad_tr
    return term1 + np.einsum("...k,...ka->...a", coeff, phi.dphi)


def tension_metric_variation_check(phi, omega, t=None):
    """Finite-difference ``dτ/dt`` against :func:`tension_metric_derivative`.

    ``mismatch`` is ``max|FD − closed| / max|closed|`` over all nodes and components.
    """
    if phi.grid.mode != "periodic":
        raise ConfigurationError("metric variations need a periodic grid", path="grid.mode")
    omega = _omega_values(omega, phi.grid)
    closed = tension_metric_derivative(phi, omega)
    if not np.abs(omega).max() > 0:
        return VariationReport("tension_metric", "tau", 0.0, 0.0, 0.0, 0.0, 0.0)
    g0 = np.asarray(phi.metric.g)
    t = _default_step(omega) if t is None else t

    def D(s):
        plus = tension(phi.with_metric(DomainMetric(phi.grid, g0 + s * omega)))
        minus = tension(phi.with_metric(DomainMetric(phi.grid, g0 - s * omega)))
        return (plus - minus) / (2 * s)

    (fd, raw), t = _shrinking(lambda s: richardson(D, s), t, "tension metric variation")
    scale = float(np.abs(closed).max())
    err = float(np.abs(fd - closed).max())
    return VariationReport("tension_metric", "tau", t, float(np.abs(fd).max()), scale,
                           err / scale if scale > 0 else err, float(np.abs(raw - closed).max()))
