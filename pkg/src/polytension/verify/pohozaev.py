"""Pohozaev-type identities for ``E₄`` and ``E₄^ES`` with the radial field ``Y = xη(r)``.

For any smooth compactly supported map the conservation law turns
``∫ ∂_jY_i S(e_i, e_j) = ∫⟨τ, dφ(Y)⟩``.  Splitting the left side into the trace
part (H-terms, weight ``δ_ij η``) and the radial part (J-terms, weight
``f_ij = η' x_i x_j / r``) and integrating by parts gives

    (4 − m/2) ∫η|Δ̄τ|² = RHS − ∫⟨τ₄, dφ(Y)⟩,

so the report's ``correction`` is ``−∫⟨τ₄, dφ(Y)⟩`` and
``residual = LHS − RHS − correction``.  For 4-harmonic maps the correction
vanishes and the identity is the one used for the Liouville argument.

The split of the trace part into four named terms is a labeling choice:
``H₁ = −(m/2)∫η|Δ̄τ|²``, ``H₂ = −m∫η⟨τ, Δ̄²τ⟩``, ``H₃ = (2−m)∫η⟨dφ, ∇̄Δ̄²τ⟩``,
``H₄ = (m−2)∫η⟨∇̄τ, ∇̄Δ̄τ⟩``; only their sum is fixed by the stress tensor.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..calculus import pullback_derivative, rough_laplacian, second_fundamental_form
from ..errors import ConfigurationError
from ..stress import stress4, stress4_hat
from ..tension import (curvature_energy_density, curvature_quantities, curvature_two_form,
                       grad_lap_tau, lap_tau, tau4, tau4_es)
from .cutoff import cutoff_profile, radial_weights

MODES = ("fourth", "ES")
H_LABELS = ("H1 = -(m/2) int eta |Lap tau|^2", "H2 = -m int eta <tau, Lap^2 tau>",
            "H3 = (2-m) int eta <dphi, grad Lap^2 tau>",
            "H4 = (m-2) int eta <grad tau, grad Lap tau>")


@dataclass
class PohozaevReport:
    mode: str
    R: float
    m: int
    family: str
    H: dict
    J: dict
    es: dict
    lhs: float
    rhs: float
    correction: float
    residual: float
    max_term: float
    relative: float
    lhs_prefactor: float
    degenerate: bool
    labels: tuple = H_LABELS
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _check(phi, R, mode):
    grid = phi.grid
    if mode not in MODES:
        raise ConfigurationError(f"unknown Pohozaev mode {mode!r}; expected one of {MODES}")
    if grid.mode != "compact_support":
        raise ConfigurationError("the Pohozaev harness needs a compact_support grid",
                                 path="grid.mode")
    if not phi.metric.is_flat:
        raise ConfigurationError("the Pohozaev harness works on flat domains")
    R = float(R)
    if not R > 0:
        raise ConfigurationError(f"cutoff radius must be positive, got {R}")
    half = min(grid.lengths) / 2
    if 2 * R + grid.stencil_margin * max(grid.spacing) >= half:
        raise ConfigurationError(
            f"cutoff support 2R = {2 * R} plus stencil margin does not fit in the box "
            f"(half-width {half})", path="pohozaev.R")
    return R


class _Context:
    """Fields and weights shared by the report and the ledger."""

    def __init__(self, phi, R, family):
        self.phi = phi
        self.grid = phi.grid
        self.m = phi.m
        self.w = radial_weights(cutoff_profile(R, family), phi.grid)
        self.tau = lap_tau(phi, 0)
        self.lt = lap_tau(phi, 1)
        self.l2t = lap_tau(phi, 2)
        self.gt = grad_lap_tau(phi, 0)
        self.glt = grad_lap_tau(phi, 1)
        self.gl2t = grad_lap_tau(phi, 2)
        self.d = phi.dphi
        self.sff = second_fundamental_form(phi)
        self._slot_terms()

    def I(self, f):
        return self.grid.integrate(f)

    def ip(self, A, B):
        """Pointwise ``⟨A, B⟩`` broadcasting any leading slot axes."""
        return self.phi.inner(A, B)

    def with_lt(self, A):
        """``⟨A_{slots}, Δ̄τ⟩`` keeping the slot axes."""
        slots = A.ndim - self.m - 1
        return self.ip(A, self.lt[(...,) + (None,) * slots + (slice(None),)])

    def _slot_terms(self):
        """Slot-by-slot products that would otherwise need ``∇̄³dφ`` in memory.

        ``lap_d_lt[j] = ⟨Δ̄dφ_j, Δ̄τ⟩``, ``lap_sff_lt[j, i] = ⟨Δ̄∇̄_jdφ_i, Δ̄τ⟩``,
        ``nn_fk = Σ_ijk (f_ij)_k ⟨∇̄_k∇̄_jdφ_i, Δ̄τ⟩`` and
        ``hess_f = Σ_ij f_ij ⟨∇̄_j∇̄_iτ, Δ̄τ⟩``.
        """
        phi, m, lt = self.phi, self.m, self.lt
        shape = self.grid.shape
        self.lap_d_lt = np.zeros(shape + (m,))
        self.lap_sff_lt = np.zeros(shape + (m, m))
        self.nn_fk = np.zeros(shape)
        self.hess_f = np.zeros(shape)
        fk, f = self.w["f_k"], self.w["f"]
        for j in range(m):
            self.lap_d_lt[..., j] = self.ip(rough_laplacian(phi, self.d[..., j, :]), lt)
            hess = pullback_derivative(phi, self.gt[..., j, :])  # [k] = ∇̄_k∇̄_j τ
            self.hess_f += np.einsum("...k,...k->...", f[..., j, :], self.with_lt(hess))
            for i in range(m):
                sec = self.sff[..., j, i, :]
                self.lap_sff_lt[..., j, i] = self.ip(rough_laplacian(phi, sec), lt)
                grad = pullback_derivative(phi, sec)  # [k] = ∇̄_k∇̄_j dφ_i
                self.nn_fk += np.einsum("...k,...k->...", fk[..., i, j, :], self.with_lt(grad))


def _ctx(phi, R, family):
    key = ("pohozaev", R, family)
    if key not in phi.cache:
        phi.cache[key] = _Context(phi, R, family)
    return phi.cache[key]


def _scale(*values):
    return max((abs(float(v)) for v in values), default=0.0)


def _step(name, lhs, terms, flagged=False):
    rhs = float(sum(terms))
    scale = _scale(lhs, rhs, *terms)
    res = float(lhs) - rhs
    return {"step": name, "lhs": float(lhs), "rhs": rhs, "residual": res,
            "relative": abs(res) / scale if scale > 0 else 0.0, "flagged": flagged}


class _Terms:
    """Pointwise products and weighted integrals used by every identity."""

    def __init__(self, ctx):
        self.c = c = ctx
        w = ctx.w
        self.w = w
        ip = ctx.ip
        m = ctx.m
        self.lt2 = ip(ctx.lt, ctx.lt)
        self.tl = ip(ctx.tau, ctx.lt)
        self.tl2t = ip(ctx.tau, ctx.l2t)
        self.d_gl2t = ip(ctx.d, ctx.gl2t).sum(-1)
        self.gt_glt = ip(ctx.gt, ctx.glt).sum(-1)
        self.gtl = c.with_lt(ctx.gt)
        self.dl = c.with_lt(ctx.d)
        self.sffl = c.with_lt(ctx.sff)
        self.dg2 = ip(ctx.d[..., :, None, :], ctx.gl2t[..., None, :, :])
        self.gg1 = ip(ctx.gt[..., :, None, :], ctx.glt[..., None, :, :])
        self.m = m

    def I(self, f):
        return self.c.grid.integrate(f)

    def W(self, w, F):
        """``∫ Σ w_{idx} F_{idx}`` over all trailing index axes."""
        shape = self.c.grid.shape
        return self.I(np.sum((w * F).reshape(shape + (-1,)), axis=-1))

    # -- H and J pieces --------------------------------------------------------
    def h_terms(self):
        w, m = self.w, self.m
        eta = w["eta"]
        return {"H1": -(m / 2) * self.I(eta * self.lt2), "H2": -m * self.I(eta * self.tl2t),
                "H3": (2 - m) * self.I(eta * self.d_gl2t),
                "H4": (m - 2) * self.I(eta * self.gt_glt)}

    def j_terms(self):
        w = self.w
        u = w["u"]
        return {"J1": -0.5 * self.I(u * self.lt2), "J2": -self.I(u * self.tl2t),
                "J3": -self.I(u * self.d_gl2t), "J4": self.I(u * self.gt_glt),
                "J5": 2 * self.W(w["f"], self.dg2), "J6": -2 * self.W(w["f"], self.gg1)}

    # -- integration-by-parts right-hand sides ---------------------------------------
    def x3(self, prefix):
        """``∫a_jkk⟨dφ_j, Δ̄τ⟩ + 2∫a_jk⟨∇̄_kdφ_j, Δ̄τ⟩ − ∫a_j⟨Δ̄dφ_j, Δ̄τ⟩`` for ``a = η`` or ``u``."""
        w, c = self.w, self.c
        sffT = np.swapaxes(self.sffl, -1, -2)
        return [self.W(w[prefix + "_jkk"], self.dl), 2 * self.W(w[prefix + "_jk"], sffT),
                -self.W(w[prefix + "_j"], c.lap_d_lt)]

    def j5_half(self):
        w, c = self.w, self.c
        sffT = np.swapaxes(self.sffl, -1, -2)
        return [self.W(w["f_jkk"], self.dl), 2 * self.W(w["f_jk"], sffT),
                -self.W(w["f_j"], c.lap_d_lt), self.W(w["f_kk"], sffT), 2 * self.I(c.nn_fk),
                -self.W(w["f"], np.swapaxes(c.lap_sff_lt, -1, -2))]

    def j6_half(self):
        return [self.I(self.c.hess_f), self.W(self.w["f_j"], self.gtl)]

    def ledger4(self):
        w, c = self.w, self.c
        eta, u = w["eta"], w["u"]
        H, J = self.h_terms(), self.j_terms()
        S = stress4(c.phi).values
        steps = [
            _step("H2", self.I(eta * self.tl2t),
                  [-self.I(w["eta_jj"] * self.tl), -2 * self.W(w["eta_j"], self.gtl),
                   self.I(eta * self.lt2)]),
            _step("H3", self.I(eta * self.d_gl2t), [-self.I(eta * self.tl2t)] + self.x3("eta")),
            _step("H4", self.I(eta * self.gt_glt),
                  [self.I(eta * self.lt2), -self.W(w["eta_j"], self.gtl)]),
            _step("J3", J["J3"], [-J["J2"]] + [-t for t in self.x3("u")]),
            _step("J4", J["J4"], [self.I(u * self.lt2), -self.W(w["u_j"], self.gtl)]),
            _step("J5", J["J5"] / 2, self.j5_half()),
            _step("J6", J["J6"] / 2, self.j6_half()),
            _step("trace_part", self.I(eta * np.einsum("...ii->...", S)), list(H.values())),
            _step("radial_part", self.W(w["f"], S), list(J.values())),
        ]
        return steps

    def rhs4(self):
        w, m = self.w, self.m
        return ([2 * self.I(w["eta_jj"] * self.tl), -(m - 6) * self.W(w["eta_j"], self.gtl)]
                + [(2 - m) * t for t in self.x3("eta")]
                + [0.5 * self.I(w["u"] * self.lt2), -self.W(w["u_j"], self.gtl)]
                + [-t for t in self.x3("u")]
                + [2 * t for t in self.j5_half()] + [2 * t for t in self.j6_half()])

    def correction(self, source):
        """``−∫η⟨source, dφ(x)⟩``."""
        c = self.c
        X = c.grid.coordinates
        dx = np.einsum("...i,...ia->...a", X, c.d)
        return -self.I(self.w["eta"] * c.ip(source, dx))

    # -- curvature part ------------------------------------------------------------
    def es_setup(self):
        c = self.c
        phi = c.phi
        self.A = curvature_two_form(phi)
        self.a2 = curvature_energy_density(phi)
        omega0 = curvature_quantities(phi)[0]
        self.o_d = c.ip(c.d, omega0[..., None, :])  # ⟨Ω₀, dφ_k⟩
        D = pullback_derivative(phi, omega0)
        self.do_d = c.ip(D[..., :, None, :], c.d[..., None, :, :])  # ⟨∇̄_iΩ₀, dφ_j⟩
        m = c.m
        d = c.d
        rs = np.zeros(c.grid.shape + (m, m))
        rs_var = np.zeros(c.grid.shape + (m, m))
        # Σ_kl ⟨R(dφ_k, dφ_l) ∇̄_idφ_j, A_kl⟩ and the variant pairing A_jl with ∇̄_idφ_k
        for i in range(m):
            for j in range(m):
                sec = c.sff[..., i, j, :]
                RS = phi.curv(d[..., :, None, :], d[..., None, :, :], sec[..., None, None, :])
                rs[..., i, j] = c.ip(RS, self.A).sum(axis=(-1, -2))
                RV = phi.curv(d[..., :, None, :], d[..., None, :, :],
                              c.sff[..., i, :, None, :])  # [k, l] = R(dφ_k, dφ_l)∇̄_idφ_k
                rs_var[..., i, j] = c.ip(RV, self.A[..., j, None, :, :]).sum(axis=(-1, -2))
        self.rs = rs
        self.rs_var = rs_var

    def es_terms(self):
        w, m = self.w, self.m
        eta, u, f = w["eta"], w["u"], w["f"]
        contr = np.einsum("...kk->...", self.do_d)
        quad = np.einsum("...kia,...ab,...kjb->...ij", self.A, self.c.phi.h, self.A)
        es1 = _step("ES-1", self.I(eta * contr),
                    [-self.W(w["eta_j"], self.o_d), self.I(eta * self.a2)])
        es2 = _step("ES-2", self.I(u * contr),
                    [-self.W(w["u_j"], self.o_d), self.I(u * self.a2)])
        es3 = _step("ES-3", self.W(f, self.do_d), [-self.W(w["f_j"], self.o_d), self.W(f, self.rs)])
        S_hat = stress4_hat(self.c.phi).values
        tr = np.einsum("...ii->...", S_hat)
        esa_def = _step("ES-a definitional", self.I(eta * tr),
                        [(-1 - m / 4) * self.I(eta * self.a2), (-1 + m / 2) * self.I(eta * contr)])
        esa_terms = [(-2 + m / 4) * self.I(eta * self.a2),
                     (1 - m / 2) * self.W(w["eta_j"], self.o_d)]
        esa = _step("ES-a", self.I(eta * tr), esa_terms)
        radial = self.W(f, S_hat)
        esb_def = _step("ES-b definitional", radial,
                        [-0.25 * self.I(u * self.a2), 0.5 * self.I(u * contr), -self.W(f, quad),
                         -self.W(f, self.do_d)])
        esb_terms = [0.25 * self.I(u * self.a2), -0.5 * self.W(w["u_j"], self.o_d),
                     -self.W(f, quad), self.W(w["f_j"], self.o_d), -self.W(f, self.rs)]
        esb = _step("ES-b", radial, esb_terms)
        variant = esb_terms[:-1] + [-self.W(f, self.rs_var)]
        esb_var = _step("ES-b displayed variant", radial, variant, flagged=True)
        pieces = {"ES_a": float(sum(esa_terms)), "ES_b": float(sum(esb_terms)),
                  "ES_b_displayed_variant": float(sum(variant)),
                  "ES_b_variant_gap": esb_var["relative"]}
        return [es1, es2, es3, esa_def, esa, esb_def, esb, esb_var], esa_terms, esb_terms, pieces


def _terms(phi, R, family):
    ctx = _ctx(phi, R, family)
    if not hasattr(ctx, "terms"):
        ctx.terms = _Terms(ctx)
    return ctx.terms


def ibp_ledger(phi, R, mode="fourth", family="poly21"):
    """Every integration-by-parts step as ``{step, lhs, rhs, residual, relative, flagged}``.

    ``trace_part`` and ``radial_part`` check the H/J split against the stress
    tensor itself.  In ES mode the curvature steps follow; the ``flagged`` row
    is the displayed variant of the radial curvature term, reported but never
    part of the pass decision.  Every ``relative`` is the step residual over the
    largest single integral in that step.
    """
    R = _check(phi, R, mode)
    T = _terms(phi, R, family)
    steps = T.ledger4()
    if mode == "ES" and not phi.target.is_flat:
        if not hasattr(T, "rs"):
            T.es_setup()
        steps += T.es_terms()[0]
    return steps


def pohozaev_report(phi, R, mode="fourth", family="poly21"):
    """Assemble the Pohozaev identity with cutoff radius ``R``.

    ``mode="fourth"`` uses ``S₄`` and ``τ₄``; ``mode="ES"`` adds the curvature
    part (``Ŝ₄``, ``τ̂₄``) with
    ``LHS = (4 − m/2)∫η(|Δ̄τ|² + ½|R^N(dφ_i, dφ_j)τ|²)``.
    ``relative`` is ``|residual|`` over the largest single term.  At ``m = 8``
    the prefactor vanishes; ``degenerate`` is set and the residual is still
    formed without dividing by it.
    """
    R = _check(phi, R, mode)
    T = _terms(phi, R, family)
    m = phi.m
    eta = T.w["eta"]
    pref = 4 - m / 2
    H, J = T.h_terms(), T.j_terms()
    a = T.I(eta * T.lt2)
    rhs_terms = T.rhs4()
    es = {}
    notes = []
    if mode == "ES" and not phi.target.is_flat:
        if not hasattr(T, "rs"):
            T.es_setup()
        a2 = T.I(eta * T.a2)
        _, esa_terms, esb_terms, es = T.es_terms()
        # ∫Ŝ_ii η moves its |A|² part to the left; what remains joins the right
        extra = esa_terms[1:] + esb_terms
        rhs_terms = rhs_terms + extra
        lhs = pref * (a + 0.5 * a2)
        correction = T.correction(tau4_es(phi))
        es.update(int_eta_A2=a2, curvature_rhs=float(sum(extra)))
        notes.append("ES_b uses the form derivable from the preceding manipulation; "
                     "ES_b_displayed_variant pairs A_jl with the second fundamental form "
                     "slot k and is reported only")
        lhs_terms = [pref * a, pref * 0.5 * a2]
    else:
        if mode == "ES":
            notes.append("flat target: the curvature part vanishes identically")
        lhs = pref * a
        correction = T.correction(tau4(phi))
        lhs_terms = [lhs]
    rhs = float(sum(rhs_terms))
    residual = lhs - rhs - correction
    max_term = _scale(*lhs_terms, *rhs_terms, correction, *H.values(), *J.values())
    if m == 8:
        notes.append("m = 8: the left-hand prefactor 4 - m/2 vanishes")
    return PohozaevReport(
        mode=mode, R=R, m=m, family=family, H=H, J=J, es=es, lhs=float(lhs), rhs=rhs,
        correction=float(correction), residual=float(residual), max_term=max_term,
        relative=abs(residual) / max_term if max_term > 0 else 0.0, lhs_prefactor=pref,
        degenerate=m == 8, notes=notes)
