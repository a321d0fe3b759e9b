"""Stress-energy tensors of ``E₄`` and ``Ê₄``, divergence and conservation residuals."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .calculus import pair_one_forms, pullback_derivative, sharp, tension
from .errors import ConfigurationError
from .tension import (curvature_energy_density, curvature_quantities, curvature_two_form,
                      grad_lap_tau, lap_tau, tau4, tau4_es)


class SymTensorField:
    """Symmetric 2-tensor field ``T_ij`` on the grid.

    The full ``m×m`` block is kept for vectorised contractions, but it is
    always the symmetric part of whatever was passed in; ``asymmetry`` keeps
    the size of the discarded antisymmetric part for diagnostics.
    """

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape + (grid.m, grid.m):
            raise ConfigurationError(
                f"tensor field must have shape {grid.shape + (grid.m, grid.m)}")
        sym = 0.5 * (values + np.swapaxes(values, -1, -2))
        self.grid = grid
        self.values = sym
        self.asymmetry = float(np.abs(values - sym).max()) if values.size else 0.0

    def upper(self):
        """Upper-triangle components, shape ``(*shape, m(m+1)/2)``."""
        iu = np.triu_indices(self.grid.m)
        return self.values[..., iu[0], iu[1]]

    def trace(self, metric):
        return np.einsum("...ij,...ij->...", metric.ginv, self.values)

    def pair(self, omega, metric):
        """``⟨T, ω⟩ = g^{ik} g^{jl} T_ij ω_kl``."""
        omega = omega.values if isinstance(omega, SymTensorField) else np.asarray(omega)
        gi = metric.ginv
        return np.einsum("...ik,...jl,...ij,...kl->...", gi, gi, self.values, omega)

    def __add__(self, other):
        return SymTensorField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return SymTensorField(self.grid, self.values - other.values)

    def max_abs(self):
        return float(np.abs(self.values).max())


def _g(phi):
    return np.asarray(phi.metric.g)


def _sym_pairs(phi, A, B):
    """``⟨A_i, B_j⟩ + ⟨A_j, B_i⟩`` for bundle one-forms."""
    P = np.einsum("...ia,...ab,...jb->...ij", A, phi.h, B)
    return P + np.swapaxes(P, -1, -2)


def stress4(phi):
    """Stress-energy tensor of ``E₄ = ∫|Δ̄τ|²``.

    ``S₄ = g(−½|Δ̄τ|² − ⟨τ, Δ̄²τ⟩ − ⟨dφ, ∇̄Δ̄²τ⟩ + ⟨∇̄τ, ∇̄Δ̄τ⟩)
    − ⟨∇̄_iτ, ∇̄_jΔ̄τ⟩ − ⟨∇̄_jτ, ∇̄_iΔ̄τ⟩ + ⟨dφ_i, ∇̄_jΔ̄²τ⟩ + ⟨dφ_j, ∇̄_iΔ̄²τ⟩``
    """
    if "S4" in phi.cache:
        return phi.cache["S4"]
    tau, lt, l2t = lap_tau(phi, 0), lap_tau(phi, 1), lap_tau(phi, 2)
    g0, g1, g2 = grad_lap_tau(phi, 0), grad_lap_tau(phi, 1), grad_lap_tau(phi, 2)
    d = phi.dphi
    scalar = (-0.5 * phi.inner(lt, lt) - phi.inner(tau, l2t) - pair_one_forms(phi, d, g2)
              + pair_one_forms(phi, g0, g1))
    S = scalar[..., None, None] * _g(phi) - _sym_pairs(phi, g0, g1) + _sym_pairs(phi, d, g2)
    phi.cache["S4"] = SymTensorField(phi.grid, S)
    return phi.cache["S4"]


def _omega0_terms(phi):
    """``−½⟨∇̄_iΩ₀, dφ_j⟩ − ½⟨∇̄_jΩ₀, dφ_i⟩ + ½⟨∇̄^kΩ₀, dφ_k⟩ g_ij`` and the trace scalar."""
    omega0 = curvature_quantities(phi)[0]
    D = pullback_derivative(phi, omega0)
    contr = pair_one_forms(phi, D, phi.dphi)
    return -0.5 * _sym_pairs(phi, D, phi.dphi) + 0.5 * contr[..., None, None] * _g(phi), contr


FORMS = ("curvature", "omega")


def stress4_hat(phi, form="curvature"):
    """Stress-energy tensor of ``Ê₄ = ½∫|R^N(dφ_i, dφ_j)τ|²``.

    ``form="curvature"``: ``−⟨A_ki, A_kj⟩ − ¼|A|² g + Ω₀-terms`` with
    ``A_ij = R^N(dφ_i, dφ_j)τ``; ``form="omega"``: ``−⟨Ω₁(e_j), dφ_i⟩ + ¼⟨Ω₀, τ⟩ g
    + Ω₀-terms``.  The Ω₀-terms are ``−½⟨∇̄_iΩ₀, dφ_j⟩ − ½⟨∇̄_jΩ₀, dφ_i⟩ +
    ½⟨∇̄^kΩ₀, dφ_k⟩ g``.
    """
    if form not in FORMS:
        raise ConfigurationError(f"unknown stress form {form!r}; expected one of {FORMS}")
    key = ("S4_hat", form)
    if key in phi.cache:
        return phi.cache[key]
    grid, m = phi.grid, phi.m
    if phi.target.is_flat or m == 1:
        phi.cache[key] = SymTensorField(grid, np.zeros(grid.shape + (m, m)))
        return phi.cache[key]
    extra, _ = _omega0_terms(phi)
    if form == "curvature":
        A = curvature_two_form(phi)
        Au = sharp(phi, A, 0)
        quad = np.einsum("...kia,...ab,...kjb->...ij", Au, phi.h, A)
        scalar = -0.25 * curvature_energy_density(phi)
        S = -quad + scalar[..., None, None] * _g(phi) + extra
    else:
        omega0, omega1, _ = curvature_quantities(phi)
        quad = np.einsum("...ja,...ab,...ib->...ij", omega1, phi.h, phi.dphi)
        scalar = 0.25 * phi.inner(omega0, tension(phi))
        S = -quad + scalar[..., None, None] * _g(phi) + extra
    phi.cache[key] = SymTensorField(grid, S)
    return phi.cache[key]


def stress4_es(phi, form="curvature"):
    return stress4(phi) + stress4_hat(phi, form)


# ---------------------------------------------------------------------------
# divergence and conservation


def divergence(T, metric):
    """``(div T)_i = g^{jk}(∂_k T_ij − Γ^l_ki T_lj − Γ^l_kj T_il)``, shape ``(*shape, m)``."""
    values = T.values if isinstance(T, SymTensorField) else np.asarray(T)
    grid = metric.grid
    D = grid.gradient(values)  # [..., k, i, j]
    if metric.is_flat:
        return np.einsum("...jij->...i", D)
    G = metric.christoffels  # [..., l, k, i]
    D = D - np.einsum("...lki,...lj->...kij", G, values) \
        - np.einsum("...lkj,...il->...kij", G, values)
    return np.einsum("...jk,...kij->...i", metric.ginv, D)


LAWS = {"S4": (stress4, tau4), "S4ES": (stress4_es, tau4_es)}


@dataclass
class ResidualReport:
    law: str
    grid: str
    scheme: str
    N: int
    residual_max: float
    residual_l2: float
    scale: float
    relative: float

    def to_dict(self):
        return dict(self.__dict__)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _covector_norm(metric, v):
    return np.sqrt(np.einsum("...i,...ij,...j->...", v, metric.ginv, v))


def conservation_residual(phi, which="S4"):
    """``r_i = (div S)_i + ⟨τ_which(φ), dφ(e_i)⟩`` and its norms.

    ``scale`` is the larger of ``max|div S|`` and ``max|⟨τ, dφ⟩|``; ``relative``
    is ``residual_max / scale`` (0 when both sides vanish identically).
    """
    if which not in LAWS:
        raise ConfigurationError(f"unknown conservation law {which!r}; expected one of "
                                 f"{tuple(LAWS)}")
    stress_fn, tension_fn = LAWS[which]
    metric = phi.metric
    div = divergence(stress_fn(phi), metric)
    source = np.einsum("...a,...ab,...ib->...i", tension_fn(phi), phi.h, phi.dphi)
    r = div + source
    rn = _covector_norm(metric, r)
    scale = max(float(_covector_norm(metric, div).max()),
                float(_covector_norm(metric, source).max()))
    rmax = float(rn.max())
    grid = phi.grid
    report = ResidualReport(
        law=which, grid=grid.mode, scheme=grid.scheme, N=int(max(grid.resolutions)),
        residual_max=rmax, residual_l2=float(np.sqrt(grid.integrate(rn**2, metric))),
        scale=scale, relative=rmax / scale if scale > 0 else 0.0)
    return r, report


# ---------------------------------------------------------------------------
# trace identities


def trace_prefactor(m):
    """Coefficient ``m/4 − 2`` of ``∫|R^N(dφ_i, dφ_j)τ|²`` in ``∫Tr Ŝ₄``; zero at m=8."""
    return m / 4 - 2


@dataclass
class TraceReport:
    m: int
    pointwise_residual: float
    pointwise_scale: float
    integral_trace: float
    integral_curvature: float
    integral_residual: float
    integral_relative: float
    prefactor: float

    def to_dict(self):
        return dict(self.__dict__)


def trace_checks(phi, form="curvature"):
    """Trace identities of ``Ŝ₄`` on closed (periodic) domains.

    Pointwise: ``Tr Ŝ₄ = (−1 − m/4)|A|² + (−1 + m/2)⟨∇̄^kΩ₀, dφ_k⟩``.
    Integrated: ``∫Tr Ŝ₄ = (m/4 − 2)∫|A|²``.
    """
    if phi.grid.mode != "periodic":
        raise ConfigurationError("trace integral identity needs a periodic grid (no boundary)",
                                 path="grid.mode")
    m = phi.m
    metric = phi.metric
    S = stress4_hat(phi, form)
    tr = S.trace(metric)
    if phi.target.is_flat or m == 1:
        a2 = np.zeros(phi.grid.shape)
        contr = np.zeros(phi.grid.shape)
    else:
        a2 = curvature_energy_density(phi)
        contr = _omega0_terms(phi)[1]
    formula = (-1 - m / 4) * a2 + (-1 + m / 2) * contr
    pw = float(np.abs(tr - formula).max())
    pw_scale = float(max(np.abs(tr).max(), np.abs(formula).max()))
    it = phi.grid.integrate(tr, metric)
    ia = phi.grid.integrate(a2, metric)
    pref = trace_prefactor(m)
    res = it - pref * ia
    denom = max(abs(it), abs(pref * ia))
    return TraceReport(m=m, pointwise_residual=pw, pointwise_scale=pw_scale, integral_trace=it,
                       integral_curvature=ia, integral_residual=res,
                       integral_relative=abs(res) / denom if denom > 0 else 0.0,
                       prefactor=pref)
