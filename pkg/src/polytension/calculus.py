"""Differential calculus on the pullback bundle ``φ*TN``.

Sections of ``φ*TN`` are arrays of shape ``(*grid.shape, n)``; bundle
one-forms (``dφ``, ``∇̄τ``, ``Ω₁``) have shape ``(*grid.shape, m, n)`` and
higher bundle-valued tensors carry further domain indices before the target
index.  The rough Laplacian has positive spectrum,
``Δ̄ = d*d = −(∇̄_{e_i}∇̄_{e_i} − ∇̄_{∇_{e_i}e_i})``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .grid import DomainMetric

_FORM = "jklpqrs"  # letters for domain slots (never 'i', 'a', 'b', 'c')


class MapField:
    """A map ``φ`` from the grid into a :class:`~polytension.manifold.ChartTarget`.

    Node-level geometric data (target metric, Christoffels, curvature) are
    evaluated once and cached; higher derived quantities are memoised in
    ``self.cache`` by the operators that compute them.
    """

    def __init__(self, grid, target, values, metric=None, check=True):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape + (target.dim_n,):
            raise ConfigurationError(
                f"map values must have shape {grid.shape + (target.dim_n,)}, got {values.shape}")
        if check:
            target.check_domain(values)
            if grid.mode == "compact_support":
                outside = grid.radius > grid.r_supp
                if outside.any():
                    ref = values[outside][0]
                    if np.abs(values[outside] - ref).max() > 1e-12 * (1 + np.abs(ref).max()):
                        raise ConfigurationError(
                            "map is not constant outside the support radius")
        self.grid = grid
        self.target = target
        self.values = values
        self.metric = metric if metric is not None else DomainMetric.flat(grid)
        if self.metric.grid is not grid and self.metric.grid != grid:
            raise ConfigurationError("domain metric lives on a different grid")
        self.cache = {}

    @property
    def m(self):
        return self.grid.m

    @property
    def n(self):
        return self.target.dim_n

    def with_metric(self, metric):
        return MapField(self.grid, self.target, self.values, metric, check=False)

    def with_values(self, values, check=True):
        return MapField(self.grid, self.target, values, self.metric, check=check)

    # -- node-level target data ------------------------------------------------
    @cached_property
    def h(self):
        return self.target.metric(self.values)

    @cached_property
    def gamma(self):
        return self.target.christoffels(self.values)

    @cached_property
    def riemann(self):
        return None if self.target.is_space_form else self.target.riemann(self.values)

    @cached_property
    def riemann_derivative(self):
        if self.target.is_space_form:
            return None
        return self.target.riemann_derivative(self.values)

    @cached_property
    def dphi(self):
        """``(dφ)_i^α = ∂_i φ^α``, shape ``(*shape, m, n)``."""
        return self.grid.gradient(self.values)

    @cached_property
    def conn(self):
        """Pullback connection matrices ``C_i^α_γ = Γ^α_βγ(φ) ∂_iφ^β``."""
        return np.einsum("...abc,...ib->...iac", self.gamma, self.dphi)

    # -- pointwise algebra -------------------------------------------------------
    def inner(self, V, W):
        """``⟨V, W⟩_h`` for sections (or matching stacks of sections)."""
        return np.einsum("...a,...ab,...b->...", V, _expand(self.h, V), W)

    def curv(self, X, Y, Z):
        """``R^N(X, Y)Z`` evaluated along ``φ``."""
        like = max((X, Y, Z), key=np.ndim)
        h = _expand(self.h, like) if self.target.is_space_form else None
        rie = None if self.riemann is None else _expand(self.riemann, like, extra=4)
        return self.target.curvature(None, X, Y, Z, riemann=rie, metric=h)

    def curv_deriv(self, W, X, Y, Z):
        """``(∇_W R^N)(X, Y)Z`` evaluated along ``φ``."""
        if self.target.is_space_form:
            return np.zeros(np.broadcast_shapes(W.shape, X.shape, Y.shape, Z.shape))
        drie = _expand(self.riemann_derivative, max((W, X, Y, Z), key=np.ndim), extra=5)
        return self.target.curvature_derivative(None, W, X, Y, Z, riemann_derivative=drie)

    # -- domain contractions -------------------------------------------------------
    def norm2(self, T, nform):
        """Full tensor norm ``|T|²`` of a bundle tensor with ``nform`` domain slots."""
        if nform == 0:
            return self.inner(T, T)
        m = self.m
        flat = T.reshape(self.grid.shape + (m**nform, self.n))
        if self.metric.is_flat:
            return np.einsum("...ka,...ab,...kb->...", flat, self.h, flat)
        G = self.metric.ginv
        for _ in range(nform - 1):
            G = np.einsum("...ij,...kl->...ikjl", G, self.metric.ginv).reshape(
                G.shape[:-2] + (G.shape[-2] * m, G.shape[-1] * m))
        return np.einsum("...kl,...ka,...ab,...lb->...", G, flat, self.h, flat)


def _expand(node_array, like, extra=2):
    """Broadcast a node array ``(*shape, [n]*extra)`` against ``like`` which may
    carry additional domain slots between the grid axes and the target axis."""
    gap = like.ndim - 1 - (node_array.ndim - extra)
    if gap <= 0:
        return node_array
    shape = node_array.shape[:node_array.ndim - extra] + (1,) * gap + \
        node_array.shape[node_array.ndim - extra:]
    return node_array.reshape(shape)


# ---------------------------------------------------------------------------
# first-order operators


def differential(phi):
    return phi.dphi


def covariant_derivative(phi, T, nform):
    """``∇̄_i T_{j...}`` for a bundle tensor with ``nform`` domain slots.

    Output shape ``(*shape, m, m^nform..., n)`` with the new slot first.
    """
    grid = phi.grid
    D = grid.gradient(T)
    slots = _FORM[:nform]
    D = D + np.einsum(f"...iac,...{slots}c->...i{slots}a", phi.conn, T)
    if not phi.metric.is_flat:
        G = phi.metric.christoffels  # [..., k, i, j]
        for s in slots:
            src = slots.replace(s, "z")
            D = D - np.einsum(f"...zi{s},...{src}a->...i{slots}a", G, T)
    return D


def pullback_derivative(phi, V):
    """``(∇̄V)_i^α = ∂_iV^α + Γ^α_βγ(φ) ∂_iφ^β V^γ``."""
    return covariant_derivative(phi, V, 0)


def second_fundamental_form(phi):
    """``(∇̄dφ)_ij``, shape ``(*shape, m, m, n)``."""
    key = "sff"
    if key not in phi.cache:
        phi.cache[key] = covariant_derivative(phi, phi.dphi, 1)
    return phi.cache[key]


def contract(phi, T):
    """``g^{ij} T_ij^α`` for a bundle tensor with two domain slots."""
    if phi.metric.is_flat:
        return np.einsum("...iia->...a", T)
    return np.einsum("...ij,...ija->...a", phi.metric.ginv, T)


def tension(phi):
    """``τ(φ) = Tr_g ∇̄dφ``."""
    key = "tau"
    if key not in phi.cache:
        phi.cache[key] = contract(phi, second_fundamental_form(phi))
    return phi.cache[key]


def codifferential(phi, A):
    """``d*A = −g^{ij}(∇̄_i A)_j`` including the domain-Christoffel correction."""
    return -contract(phi, covariant_derivative(phi, A, 1))


def rough_laplacian(phi, V):
    """``Δ̄V = d*(∇̄V)`` with the positive-spectrum sign."""
    return codifferential(phi, pullback_derivative(phi, V))


def laplacian_power(phi, V, k):
    """``Δ̄^k V`` by repeated application; ``k = -1`` returns zero."""
    if k < 0:
        return np.zeros_like(V)
    out = V
    for _ in range(k):
        out = rough_laplacian(phi, out)
    return out


def energy_density(phi):
    """``|dφ|² = g^{ij} h_αβ ∂_iφ^α ∂_jφ^β``."""
    return phi.norm2(phi.dphi, 1)


def sharp(phi, A, slot=0):
    """Raise one domain slot of a bundle tensor: ``A^i = g^{ij} A_j``."""
    if phi.metric.is_flat:
        return A
    slots = _FORM[:A.ndim - phi.m - 1]
    s = slots[slot]
    return np.einsum(f"...{s}z,...{slots.replace(s, 'z')}a->...{slots}a", phi.metric.ginv, A)


def pair_one_forms(phi, A, B):
    """``⟨A, B⟩ = g^{ij}⟨A_i, B_j⟩`` for two bundle one-forms."""
    if phi.metric.is_flat:
        return np.einsum("...ia,...ab,...ib->...", A, phi.h, B)
    return np.einsum("...ij,...ia,...ab,...jb->...", phi.metric.ginv, A, phi.h, B)
