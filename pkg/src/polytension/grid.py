"""Uniform grids on a torus or on a box holding compactly supported fields.

Fields are numpy arrays whose leading ``m`` axes are the grid axes; any
trailing axes hold components (target index, form indices, ...).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, GeometryError, NumericalError

# centred first-derivative weights: f'(x) ≈ Σ_k c_k (f(x+kh) − f(x−kh)) / h
FD_WEIGHTS = {
    2: (0.5,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
    8: (4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0),
}

MODES = ("periodic", "compact_support")
SCHEMES = ("spectral", "finite_difference")


@dataclass(frozen=True)
class DomainGrid:
    """Uniform grid with ``N_a`` nodes and length ``L_a`` per axis.

    Periodic grids cover ``[0, L_a)``; compact-support boxes cover
    ``[-L_a/2, L_a/2)`` and record the support radius of the maps they carry.

    ``spectral_cutoff`` is the fraction of the Nyquist wavenumber kept by the
    spectral derivative (modes above it are zeroed).  Eight nested spectral
    derivatives amplify double-precision roundoff in mode ``k`` by ``k⁸``;
    truncating the top of the spectrum caps that growth for fields that are
    resolved well below Nyquist.
    """

    lengths: tuple
    resolutions: tuple
    mode: str = "periodic"
    scheme: str = "spectral"
    fd_order: int = 6
    r_supp: float | None = None
    spectral_cutoff: float = 1.0

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        resolutions = tuple(int(v) for v in self.resolutions)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "resolutions", resolutions)
        if len(lengths) != len(resolutions) or not lengths:
            raise ConfigurationError("lengths and resolutions must have the same positive length")
        if any(not np.isfinite(v) or v <= 0 for v in lengths):
            raise ConfigurationError(f"axis lengths must be positive, got {lengths}")
        if any(n < 8 for n in resolutions):
            raise ConfigurationError(f"each axis needs at least 8 nodes, got {resolutions}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown grid mode {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown derivative scheme {self.scheme!r}")
        if self.scheme == "spectral" and self.mode != "periodic":
            raise ConfigurationError("the spectral scheme requires a periodic grid")
        if not 0 < self.spectral_cutoff <= 1:
            raise ConfigurationError("spectral_cutoff must lie in (0, 1]")
        if self.scheme == "finite_difference" and self.fd_order not in FD_WEIGHTS:
            raise ConfigurationError(f"fd_order must be one of {sorted(FD_WEIGHTS)}")
        if self.mode == "compact_support":
            if self.r_supp is None or self.r_supp <= 0:
                raise ConfigurationError("compact_support grids need a positive r_supp")
            for L, h in zip(lengths, self.spacing):
                if self.r_supp + self.stencil_margin * h >= L / 2:
                    raise ConfigurationError(
                        f"support radius {self.r_supp} plus stencil margin does not fit "
                        f"inside a box of half-width {L / 2}")

    # -- geometry ----------------------------------------------------------
    @property
    def m(self):
        return len(self.lengths)

    @property
    def shape(self):
        return self.resolutions

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.resolutions))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def stencil_margin(self):
        # edge extension reproduces the constant continuation once the last p
        # nodes are outside the support; nested tails are then O(h^order)
        return len(FD_WEIGHTS[self.fd_order]) if self.scheme == "finite_difference" else 0

    @property
    def order(self):
        """Nominal convergence order (``inf`` for spectral)."""
        return np.inf if self.scheme == "spectral" else self.fd_order

    def axis_coordinates(self, axis):
        L, n = self.lengths[axis], self.resolutions[axis]
        x = np.arange(n) * (L / n)
        if self.mode == "compact_support":
            x = x - L / 2
        return x

    @cached_property
    def coordinates(self):
        """Node coordinates, shape ``(*shape, m)``."""
        axes = [self.axis_coordinates(a) for a in range(self.m)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @cached_property
    def radius(self):
        return np.linalg.norm(self.coordinates, axis=-1)

    @cached_property
    def _wavenumbers(self):
        out = []
        for L, n in zip(self.lengths, self.resolutions):
            idx = np.arange(n // 2 + 1)
            k = 2 * np.pi / L * idx
            if n % 2 == 0:
                k[-1] = 0.0  # drop the Nyquist mode for odd derivatives
            k[idx > self.spectral_cutoff * (n / 2)] = 0.0
            out.append(1j * k)
        return out

    # -- calculus ------------------------------------------------------------
    def derivative(self, field, axis):
        """First partial derivative along grid ``axis``."""
        field = np.asarray(field, dtype=float)
        if self.scheme == "spectral":
            n = self.resolutions[axis]
            F = np.fft.rfft(field, axis=axis)
            shape = [1] * field.ndim
            shape[axis] = -1
            F *= self._wavenumbers[axis].reshape(shape)
            return np.fft.irfft(F, n=n, axis=axis)
        h = self.spacing[axis]
        weights = FD_WEIGHTS[self.fd_order]
        p = len(weights)
        if self.mode == "periodic":
            out = np.zeros_like(field)
            for k, c in enumerate(weights, start=1):
                out += c * (np.roll(field, -k, axis=axis) - np.roll(field, k, axis=axis))
            return out / h
        # constant extension beyond the box
        pad = [(0, 0)] * field.ndim
        pad[axis] = (p, p)
        ext = np.pad(field, pad, mode="edge")
        n = field.shape[axis]
        out = np.zeros_like(field)
        for k, c in enumerate(weights, start=1):
            fwd = np.take(ext, np.arange(p + k, p + k + n), axis=axis)
            bwd = np.take(ext, np.arange(p - k, p - k + n), axis=axis)
            out += c * (fwd - bwd)
        return out / h

    def gradient(self, field):
        """Stack of partial derivatives; the derivative index is appended
        right after the grid axes, i.e. shape ``(*shape, m, *components)``."""
        return np.stack([self.derivative(field, a) for a in range(self.m)], axis=self.m)

    def integrate(self, field, metric=None):
        """Quadrature ``Σ f √det g ∏ h_a`` with a fixed pairwise reduction order."""
        field = np.asarray(field, dtype=float)
        if field.shape != self.shape:
            raise ConfigurationError(
                f"integrand must be a scalar field of shape {self.shape}, got {field.shape}")
        bad = ~np.isfinite(field)
        if bad.any():
            node = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NumericalError(f"non-finite integrand at node {node}", node=node)
        if metric is not None and not metric.is_flat:
            field = field * metric.sqrt_det
        # np.add.reduce over a contiguous 1-D array is numpy's pairwise summation
        return float(np.add.reduce(np.ascontiguousarray(field).ravel())) * self.cell_volume

    def to_config(self):
        cfg = {"m": self.m, "lengths": list(self.lengths), "resolutions": list(self.resolutions),
               "mode": self.mode, "scheme": self.scheme, "fd_order": self.fd_order}
        if self.spectral_cutoff != 1.0:
            cfg["spectral_cutoff"] = self.spectral_cutoff
        if self.r_supp is not None:
            cfg["r_supp"] = self.r_supp
        return cfg

    def refined(self, resolution):
        """Same grid with every axis at ``resolution`` nodes."""
        res = (resolution,) * self.m if np.isscalar(resolution) else tuple(resolution)
        return DomainGrid(self.lengths, res, self.mode, self.scheme, self.fd_order, self.r_supp,
                          self.spectral_cutoff)


def make_grid(m, lengths, resolutions, mode="periodic", scheme=None, fd_order=6, r_supp=None,
              spectral_cutoff=1.0):
    """Convenience constructor broadcasting scalar ``lengths``/``resolutions``."""
    if np.isscalar(lengths):
        lengths = (lengths,) * m
    if np.isscalar(resolutions):
        resolutions = (resolutions,) * m
    if len(lengths) != m or len(resolutions) != m:
        raise ConfigurationError(f"expected {m} lengths and resolutions")
    if scheme is None:
        scheme = "spectral" if mode == "periodic" else "finite_difference"
    return DomainGrid(tuple(lengths), tuple(resolutions), mode, scheme, fd_order, r_supp,
                      float(spectral_cutoff))


def grid_from_config(spec):
    spec = dict(spec)
    try:
        m = int(spec.pop("m"))
    except KeyError:
        raise ConfigurationError("missing 'm'", path="grid") from None
    grid = make_grid(m, spec.pop("lengths", 2 * np.pi), spec.pop("resolutions", 32),
                     mode=spec.pop("mode", "periodic"), scheme=spec.pop("scheme", None),
                     fd_order=int(spec.pop("fd_order", 6)), r_supp=spec.pop("r_supp", None),
                     spectral_cutoff=float(spec.pop("spectral_cutoff", 1.0)))
    if spec:
        raise ConfigurationError(f"unknown grid keys {sorted(spec)}", path="grid")
    return grid


class DomainMetric:
    """Metric ``g`` on the grid with inverse, volume density and Christoffels.

    ``g`` has shape ``(*grid.shape, m, m)``; ``None`` means the flat metric.
    """

    def __init__(self, grid, g=None):
        self.grid = grid
        m = grid.m
        if g is None:
            self.is_flat = True
            self.g = np.broadcast_to(np.eye(m), grid.shape + (m, m))
            return
        g = np.asarray(g, dtype=float)
        if g.shape != grid.shape + (m, m):
            raise ConfigurationError(f"metric field must have shape {grid.shape + (m, m)}")
        self.is_flat = False
        self.g = 0.5 * (g + np.swapaxes(g, -1, -2))
        if not np.all(np.isfinite(self.g)):
            raise GeometryError("domain metric has non-finite entries")
        lowest = np.linalg.eigvalsh(self.g)[..., 0]
        bad = ~(lowest > 0)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise GeometryError(f"domain metric not positive definite at node {idx}",
                                point=idx)

    @classmethod
    def flat(cls, grid):
        return cls(grid)

    @cached_property
    def ginv(self):
        if self.is_flat:
            return self.g
        return np.linalg.inv(self.g)

    @cached_property
    def sqrt_det(self):
        if self.is_flat:
            return np.ones(self.grid.shape)
        return np.sqrt(np.linalg.det(self.g))

    @cached_property
    def christoffels(self):
        """``Γ^k_ij`` with shape ``(*shape, k, i, j)``."""
        m = self.grid.m
        if self.is_flat:
            return np.zeros(self.grid.shape + (m, m, m))
        return domain_christoffels(self)

    def perturbed(self, omega, t):
        return DomainMetric(self.grid, np.asarray(self.g) + t * np.asarray(omega))


def domain_christoffels(metric):
    """``Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`` via the grid scheme."""
    grid = metric.grid
    if metric.is_flat:
        m = grid.m
        return np.zeros(grid.shape + (m, m, m))
    dg = grid.gradient(np.asarray(metric.g))  # [..., i, j, l] = ∂_i g_jl
    low = 0.5 * (dg + np.einsum("...jil->...ijl", dg) - np.einsum("...lij->...ijl", dg))
    return np.einsum("...kl,...ijl->...kij", metric.ginv, low)


def partial_derivative(grid, field, axis):
    return grid.derivative(field, axis)


def integrate(grid, field, metric=None):
    return grid.integrate(field, metric)


# ---------------------------------------------------------------------------
# field serialisation: raw little-endian float64 + JSON sidecar


def content_hash(array):
    a = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    h = hashlib.sha256()
    h.update(json.dumps(list(a.shape)).encode())
    h.update(a.tobytes())
    return h.hexdigest()


def save_field(path, array, grid=None, **meta):
    """Write ``path`` (.bin, row-major float64) and ``path.json``; return the hash."""
    path = Path(path)
    a = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    path.write_bytes(a.tobytes())
    digest = content_hash(a)
    header = {"shape": list(a.shape), "dtype": "float64", "order": "C",
              "sha256": digest, **meta}
    if grid is not None:
        header["grid"] = grid.to_config()
    Path(str(path) + ".json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return digest


def load_field(path):
    path = Path(path)
    header = json.loads(Path(str(path) + ".json").read_text())
    a = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(header["shape"]).copy()
    if content_hash(a) != header["sha256"]:
        raise NumericalError(f"content hash mismatch for {path}")
    return a, header
