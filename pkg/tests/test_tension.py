import numpy as np
import pytest
import sympy as sp

from oracles import ambient_nabla, latitude_profile, stereo_push, trapezoid_periodic
from conftest import TWO_PI, lat_profile, rel_max, sinusoid
from polytension import ConfigurationError, make_grid, make_map, make_target
from polytension.tension import (curvature_quantities, energy4, energy4_hat, energy_report,
                                 poly_tension, tau4, tau4_es, tau4_hat)

# ∫|Δ̄τ|² and ½∫|R(dφ_i,dφ_j)τ|² of the latitude-profile map (θ₀=2, a=0.5, k=2, L=2π),
# from the embedding oracle on a 32² periodic trapezoid rule, frozen
E4_LAT = 268.982077888292
E4HAT_LAT = 27.421871864270067

# Nested spectral derivatives amplify roundoff in mode k by k^(2·order); the
# high-order checks keep modes |k| ≤ N/8, far above what the maps need.
CUT = 0.25


@pytest.fixture(scope="module")
def oracle():
    return latitude_profile(2, TWO_PI, 2.0, 0.5, 2)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_flat_sinusoid_poly_tension(k):
    phi = sinusoid(32, amplitude=0.7, k=2, cutoff=CUT)
    x = phi.grid.coordinates[..., 0]
    expected = -0.7 * 2.0 ** (2 * k) * np.sin(2 * x)
    assert rel_max(poly_tension(phi, k)[..., 0], expected) < 1e-12


def test_poly_tension_argument_errors(lat32):
    with pytest.raises(ConfigurationError):
        poly_tension(lat32, 1)
    with pytest.raises(ConfigurationError):
        poly_tension(lat32, 6)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_harmonic_input_annihilates(sphere, k):
    g = make_grid(2, TWO_PI, 32, spectral_cutoff=CUT)
    phi = make_map(g, sphere, "great_circle", k=2)
    # roundoff floor ε·4^(2k)·|dφ|^(2k−1)
    assert np.abs(poly_tension(phi, k)).max() < 1e-16 * 4.0 ** (2 * k) * 2.0 ** (2 * k)


def test_tau4_consistency(lat32):
    a, b = tau4(lat32), poly_tension(lat32, 4)
    assert rel_max(a, b) < 1e-13


def test_tau4_constant_and_flat(sphere):
    g = make_grid(2, TWO_PI, 16)
    phi = make_map(g, sphere, "constant", point=[0.2, 0.1])
    assert np.all(tau4(phi) == 0) and np.all(tau4_es(phi) == 0)
    phi = sinusoid(32, n=2, m=2)
    assert np.all(tau4_hat(phi) == 0)
    assert np.array_equal(tau4_es(phi), tau4(phi))


def test_curvature_quantities_degenerate(sphere):
    phi = sinusoid(32, n=2, m=2)
    assert all(np.all(q == 0) for q in curvature_quantities(phi))
    g = make_grid(1, TWO_PI, 32)
    phi = make_map(g, sphere, "latitude_circle", theta0=1.1, k=2)
    assert np.all(curvature_quantities(phi)[0] == 0)


def test_omega0_matches_embedding(lat32, oracle):
    ref = oracle.chart_section(oracle.omega0(), lat32.grid.coordinates)
    assert rel_max(curvature_quantities(lat32)[0], ref) < 1e-11


def test_tau4_hat_matches_embedding(lat32, oracle):
    """τ̂₄ = −½(2d*Ω₁ + Δ̄Ω₀ + Σ_i R(dφ_i, Ω₀)dφ_i) assembled in ℝ³ (ξ₁ = 0 on S²).

    Ω₀ and Ω₁ are symbolic; the outer derivatives are tangential projections of
    numpy-FFT derivatives of their samples.
    """
    o, m = oracle, 2
    c = lat32.grid.coordinates
    L = lat32.grid.lengths[0]
    u = o.evaluate(o.u, c)
    du = [o.evaluate(o.du(i), c) for i in range(m)]
    om0 = o.evaluate(o.omega0(), c)
    om1 = [o.evaluate(sum((o.curv(o.A(i, j), o.tau, o.du(j)) for j in range(m)),
                          sp.zeros(3, 1)), c) for i in range(m)]
    dot = lambda a, b: np.sum(a * b, axis=-1, keepdims=True)
    d_star = -sum(ambient_nabla(u, om1[i], i, L) for i in range(m))
    lap = -sum(ambient_nabla(u, ambient_nabla(u, om0, i, L), i, L) for i in range(m))
    trace = sum(dot(om0, du[i]) * du[i] - dot(du[i], du[i]) * om0 for i in range(m))
    ambient = -(2 * d_star + lap + trace) / 2
    ref = stereo_push(u, ambient)
    # two sampled derivatives of the broadband Ω₀ at N=32 leave ~3e-9
    assert rel_max(tau4_hat(lat32), ref) < 1e-8


def test_harmonic_tau4_hat(sphere):
    g = make_grid(2, TWO_PI, 32, spectral_cutoff=CUT)
    phi = make_map(g, sphere, "great_circle", k=1)
    assert np.abs(tau4_hat(phi)).max() < 1e-12
    assert np.abs(tau4_es(phi)).max() < 1e-10


def test_energies_frozen(lat32):
    assert energy4(lat32) == pytest.approx(E4_LAT, rel=1e-11)
    assert energy4_hat(lat32) == pytest.approx(E4HAT_LAT, rel=1e-11)


def test_energy_oracle_live(lat32, oracle):
    lt = oracle.rough_laplacian(oracle.tau)
    value = trapezoid_periodic(oracle.evaluate(lt.dot(lt), lat32.grid.coordinates),
                               lat32.grid.lengths)
    assert value == pytest.approx(E4_LAT, rel=1e-11)


def test_energy_report_sinusoid():
    A, w, L = 0.7, 2.0, TWO_PI
    phi = sinusoid(32, amplitude=A, k=2)
    rep = energy_report(phi)
    assert rep.E == pytest.approx(A**2 * w**2 * L / 2, rel=1e-13)
    assert rep.E4 == pytest.approx(A**2 * w**8 * L / 2, rel=1e-13)
    assert rep.poly[2] == pytest.approx(A**2 * w**4 * L / 2, rel=1e-13)
    assert rep.poly[3] == pytest.approx(A**2 * w**6 * L / 2, rel=1e-13)
    assert rep.E4_hat == 0.0 and rep.E4_ES == rep.E4
    # |dφ|⁶ integrand of the finiteness list: A⁶w⁶ ∫cos⁶ = A⁶w⁶ · 5L/16
    assert rep.finiteness["F6"] == pytest.approx(A**6 * w**6 * 5 * L / 16, rel=1e-13)
    assert set(rep.to_dict()) >= {"E", "E2", "E3", "E4", "E4_hat", "E4_ES", "F1", "F6"}


def test_energy_report_constant(sphere):
    g = make_grid(2, TWO_PI, 16)
    phi = make_map(g, sphere, "constant")
    assert all(v == 0 for v in energy_report(phi).to_dict().values())


@pytest.mark.parametrize("k", [1, 2])
def test_energy_report_great_circle_m1(sphere, k):
    L = 3.0
    g = make_grid(1, L, 32)
    phi = make_map(g, sphere, "great_circle", k=k)
    rep = energy_report(phi)
    assert rep.E == pytest.approx((2 * np.pi * k / L) ** 2 * L, rel=1e-13)
    assert abs(rep.E4) < 1e-12 * rep.E and rep.E4_hat == 0.0


def test_energy_report_rejects_orders(lat32):
    with pytest.raises(ConfigurationError):
        energy_report(lat32, ks=(0, 4))
