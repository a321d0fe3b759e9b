"""Higher-order tension fields, curvature quantities and energies.

Every frame sum ``Σ_j X(e_j) ... Y(e_j)`` is realised as a ``g^{ij}``
contraction, which is the literal orthonormal-frame sum for flat domains.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .calculus import (covariant_derivative, energy_density, pullback_derivative,
                       rough_laplacian, second_fundamental_form, codifferential, sharp, tension)
from .errors import ConfigurationError

log = logging.getLogger(__name__)

MAX_K = 5


def lap_tau(phi, k):
    """Memoised ``Δ̄^k τ(φ)``; ``k = -1`` gives zero."""
    if k < 0:
        return np.zeros_like(tension(phi))
    key = ("lap_tau", k)
    if key not in phi.cache:
        phi.cache[key] = tension(phi) if k == 0 else rough_laplacian(phi, lap_tau(phi, k - 1))
    return phi.cache[key]


def grad_lap_tau(phi, k):
    """Memoised ``∇̄Δ̄^k τ(φ)`` (a bundle one-form)."""
    key = ("grad_lap_tau", k)
    if key not in phi.cache:
        phi.cache[key] = pullback_derivative(phi, lap_tau(phi, k))
    return phi.cache[key]


def _dphi_sharp(phi):
    if "dphi_sharp" not in phi.cache:
        phi.cache["dphi_sharp"] = sharp(phi, phi.dphi)
    return phi.cache["dphi_sharp"]


def rsum(phi, A, B):
    """``Σ_j R^N(A_j, B_j) dφ(e_j)``; a plain section argument is used for every j."""
    Z = _dphi_sharp(phi)
    m = phi.m
    if A.ndim == m + 1:
        A = A[..., None, :]
    if B.ndim == m + 1:
        B = B[..., None, :]
    return phi.curv(A, B, Z).sum(axis=m)


def check_resolution(phi, derivatives):
    """Warn when fewer than four nodes per wavelength remain for the highest derivative."""
    n = min(phi.grid.resolutions)
    if n < 2 * derivatives:
        log.warning("grid with %d nodes per axis is coarse for %d nested derivatives",
                    n, derivatives)


def poly_tension(phi, k):
    """``τ_k(φ)`` for ``k ≥ 2`` (even and odd formulas, ``Δ̄^{-1} = 0``)."""
    k = int(k)
    if k < 2:
        raise ConfigurationError(f"poly_tension needs k >= 2, got {k}")
    if k > MAX_K:
        raise ConfigurationError(f"k is limited to {MAX_K}")
    check_resolution(phi, 2 * k)
    L, G = (lambda j: lap_tau(phi, j)), (lambda j: grad_lap_tau(phi, j) if j >= 0 else
                                         np.zeros_like(phi.dphi))
    if k % 2 == 0:
        s = k // 2
        out = L(2 * s - 1) - rsum(phi, L(2 * s - 2), phi.dphi)
        for l in range(1, s):
            out = out - (rsum(phi, G(s + l - 2), L(s - l - 1))
                         - rsum(phi, L(s + l - 2), G(s - l - 1)))
        return out
    s = (k - 1) // 2
    out = L(2 * s) - rsum(phi, L(2 * s - 1), phi.dphi)
    for l in range(1, s):
        out = out - (rsum(phi, G(s + l - 1), L(s - l - 1))
                     - rsum(phi, L(s + l - 1), G(s - l - 1)))
    return out - rsum(phi, G(s - 1), L(s - 1))


def tau4(phi):
    """4-tension ``Δ̄³τ − R(Δ̄²τ, dφ_j)dφ_j + R(τ, ∇̄_jΔ̄τ)dφ_j − R(∇̄_jτ, Δ̄τ)dφ_j``."""
    if "tau4" not in phi.cache:
        check_resolution(phi, 8)
        phi.cache["tau4"] = (lap_tau(phi, 3) - rsum(phi, lap_tau(phi, 2), phi.dphi)
                             + rsum(phi, lap_tau(phi, 0), grad_lap_tau(phi, 1))
                             - rsum(phi, grad_lap_tau(phi, 0), lap_tau(phi, 1)))
    return phi.cache["tau4"]


def curvature_two_form(phi):
    """``A_ij = R^N(dφ(e_i), dφ(e_j)) τ(φ)``, shape ``(*shape, m, m, n)``."""
    if "A" not in phi.cache:
        d = phi.dphi
        tau = tension(phi)
        phi.cache["A"] = phi.curv(d[..., :, None, :], d[..., None, :, :],
                                  tau[..., None, None, :])
    return phi.cache["A"]


def curvature_energy_density(phi):
    """``|R^N(dφ(e_i), dφ(e_j)) τ(φ)|²`` summed over both frame indices."""
    return phi.norm2(curvature_two_form(phi), 2)


def curvature_quantities(phi):
    """Return ``(Ω₀, Ω₁, ξ₁)``.

    ``Ω₀ = R(dφ_i, dφ_j) R(dφ_i, dφ_j) τ``, ``Ω₁(e_i) = R(R(dφ_i, dφ_j)τ, τ) dφ_j``
    and ``ξ₁ = −(∇_{dφ_j} R)(R(dφ_i, dφ_j)τ, τ) dφ_i``.
    """
    if "omega" in phi.cache:
        return phi.cache["omega"]
    d = phi.dphi
    ds = _dphi_sharp(phi)
    tau = tension(phi)
    A = curvature_two_form(phi)
    Au = sharp(phi, sharp(phi, A, 0), 1)
    omega0 = phi.curv(d[..., :, None, :], d[..., None, :, :], Au).sum(axis=(phi.m, phi.m + 1))
    # Ω₁(e_i) = Σ_j R(A_ij, τ) dφ^j
    omega1 = phi.curv(A, tau[..., None, None, :], ds[..., None, :, :]).sum(axis=phi.m + 1)
    if phi.target.is_space_form:
        xi1 = np.zeros_like(tau)
    else:
        # −Σ_ij (∇_{dφ^j} R)(A_ij, τ) dφ^i
        xi1 = -phi.curv_deriv(ds[..., None, :, :], A, tau[..., None, None, :],
                              ds[..., :, None, :]).sum(axis=(phi.m, phi.m + 1))
    phi.cache["omega"] = (omega0, omega1, xi1)
    return phi.cache["omega"]


def tau4_hat(phi):
    """``τ̂₄ = −½(2ξ₁ + 2d*Ω₁ + Δ̄Ω₀ + Tr R^N(dφ(·), Ω₀)dφ(·))``."""
    if "tau4_hat" not in phi.cache:
        if phi.target.is_flat:
            phi.cache["tau4_hat"] = np.zeros_like(tension(phi))
        else:
            omega0, omega1, xi1 = curvature_quantities(phi)
            trace_term = rsum(phi, phi.dphi, omega0)
            phi.cache["tau4_hat"] = -0.5 * (2 * xi1 + 2 * codifferential(phi, omega1)
                                            + rough_laplacian(phi, omega0) + trace_term)
    return phi.cache["tau4_hat"]


def tau4_es(phi):
    return tau4(phi) + tau4_hat(phi)


# ---------------------------------------------------------------------------
# energies


def dirichlet_energy(phi):
    return phi.grid.integrate(energy_density(phi), phi.metric)


def poly_energy(phi, k):
    """``E_k``: ``∫|dφ|²`` for k=1, ``∫|Δ̄^{s-1}τ|²`` (k=2s), ``∫|∇̄Δ̄^{s-1}τ|²`` (k=2s+1)."""
    k = int(k)
    if not 1 <= k <= MAX_K:
        raise ConfigurationError(f"energy order must lie in 1..{MAX_K}, got {k}")
    if k == 1:
        return dirichlet_energy(phi)
    s = k // 2
    if k % 2 == 0:
        density = phi.inner(lap_tau(phi, s - 1), lap_tau(phi, s - 1))
    else:
        density = phi.norm2(grad_lap_tau(phi, s - 1), 1)
    return phi.grid.integrate(density, phi.metric)


def energy4(phi):
    return poly_energy(phi, 4)


def energy4_hat(phi):
    """``Ê₄ = ½∫|R^N(dφ(e_i), dφ(e_j)) τ(φ)|²``."""
    if phi.target.is_flat or phi.m == 1:
        return 0.0
    return 0.5 * phi.grid.integrate(curvature_energy_density(phi), phi.metric)


def energy4_es(phi):
    return energy4(phi) + energy4_hat(phi)


ENERGIES = {
    "E": dirichlet_energy,
    "E2": lambda phi: poly_energy(phi, 2),
    "E3": lambda phi: poly_energy(phi, 3),
    "E4": energy4,
    "E5": lambda phi: poly_energy(phi, 5),
    "E4_hat": energy4_hat,
    "E4_ES": energy4_es,
}


def tension_for(phi, kind):
    """Euler–Lagrange operator paired with an energy name from :data:`ENERGIES`."""
    if kind == "E":
        return tension(phi)
    if kind in ("E2", "E3", "E5"):
        return poly_tension(phi, int(kind[1]))
    if kind == "E4":
        return tau4(phi)
    if kind == "E4_hat":
        return tau4_hat(phi)
    if kind == "E4_ES":
        return tau4_es(phi)
    raise ConfigurationError(f"unknown energy {kind!r}")


def iterated_dphi(phi, j):
    """``∇̄^j dφ`` as a bundle tensor with ``j + 1`` domain slots."""
    key = ("nabla_dphi", j)
    if key not in phi.cache:
        if j == 0:
            out = phi.dphi
        elif j == 1:
            out = second_fundamental_form(phi)
        else:
            out = covariant_derivative(phi, iterated_dphi(phi, j - 1), j)
        phi.cache[key] = out
    return phi.cache[key]


@dataclass
class EnergyReport:
    E: float
    E4: float
    E4_hat: float
    E4_ES: float
    poly: dict = field(default_factory=dict)
    finiteness: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"E": self.E}
        out.update({f"E{k}": v for k, v in sorted(self.poly.items()) if k != 1})
        out.update({"E4": self.E4, "E4_hat": self.E4_hat, "E4_ES": self.E4_ES})
        out.update(self.finiteness)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def energy_report(phi, ks=(2, 3, 4), finiteness=True):
    """Energies ``E``, ``E_k``, ``E₄``, ``Ê₄``, ``E₄^ES`` and the integrals F1..F6."""
    ks = sorted({int(k) for k in ks})
    if any(k < 1 or k > MAX_K for k in ks):
        raise ConfigurationError(f"ks must be a subset of 1..{MAX_K}, got {ks}")
    integ = lambda f: phi.grid.integrate(f, phi.metric)
    E4 = energy4(phi)
    E4_hat = energy4_hat(phi)
    rep = EnergyReport(E=dirichlet_energy(phi), E4=E4, E4_hat=E4_hat, E4_ES=E4 + E4_hat,
                       poly={k: poly_energy(phi, k) for k in ks})
    if finiteness:
        d2 = energy_density(phi)
        n1 = phi.norm2(iterated_dphi(phi, 1), 2)
        rep.finiteness = {
            "F1": integ(d2),
            "F2": integ(n1),
            "F3": integ(phi.norm2(iterated_dphi(phi, 2), 3)),
            "F4": integ(phi.norm2(iterated_dphi(phi, 3), 4)),
            "F5": integ(d2**2 * n1),
            "F6": integ(d2**3),
        }
    return rep


def energy_report_dict(report):
    return asdict(report)
