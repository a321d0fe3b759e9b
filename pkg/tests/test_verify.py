import numpy as np
import pytest

from conftest import TWO_PI, bump, lat_profile, sinusoid
from polytension import ConfigurationError, PerturbationError, make_grid, make_map, make_target
from polytension.calculus import MapField, tension
from polytension.catalog import random_section, random_symmetric, smooth_step
from polytension.verify import (cutoff_profile, ibp_ledger, map_variation_check, measured_bounds,
                                metric_variation_check, pohozaev_report,
                                tension_metric_variation_check)
from polytension.verify.cutoff import CutoffProfile, displayed_cutoff_gap, radial_weights
from polytension.verify.pohozaev import H_LABELS
from polytension.verify.variation import tension_metric_derivative

# Variation checks run at the full spectral band: a truncated derivative makes
# the discrete energy and the discrete tension disagree at the 1e-3 level.


@pytest.fixture(scope="module")
def lat1():
    return lat_profile(32, k=1)


@pytest.fixture(scope="module")
def flat2():
    return sinusoid(32, n=2, m=2, cutoff=0.25)


# ---------------------------------------------------------------------------
# map variations


@pytest.mark.parametrize("kind", ["E", "E2", "E3", "E4", "E5", "E4_ES"])
def test_map_variation_flat(flat2, kind):
    V = random_section(flat2, seed=1, kmax=2)
    rep = map_variation_check(flat2, V, kind)
    assert rep.mismatch < 1e-8 and rep.predicted != 0


@pytest.mark.parametrize("kind", ["E", "E4", "E4_ES", "E4_hat", "E5"])
@pytest.mark.parametrize("seed", [1, 2])
def test_map_variation_sphere(lat1, kind, seed):
    rep = map_variation_check(lat1, random_section(lat1, seed=seed, kmax=2), kind)
    assert rep.mismatch < 1e-8
    # the Richardson step improves on the plain central difference
    assert abs(rep.derivative - rep.predicted) <= abs(rep.raw_derivative - rep.predicted)


def test_map_variation_errors(lat1):
    with pytest.raises(ConfigurationError):
        map_variation_check(lat1, np.zeros_like(lat1.values), "E6")
    with pytest.raises(ConfigurationError):
        map_variation_check(lat1, np.zeros(lat1.grid.shape + (3,)), "E4")


def test_map_variation_zero_field(lat1):
    rep = map_variation_check(lat1, np.zeros_like(lat1.values), "E4")
    assert rep.mismatch == 0 and rep.t == 0


def test_chart_exit_shrinks_step():
    t = make_target("hyperbolic")
    g = make_grid(1, TWO_PI, 16)
    # the hyperbolic chart is cut at |y| ≤ 0.95 by default
    phi = make_map(g, t, "constant", point=[0.9, 0.0])
    V = np.zeros_like(phi.values)
    V[..., 0] = 1.0
    rep = map_variation_check(phi, V, "E", t=0.2)
    assert 0.01 < rep.t <= 0.05
    phi = make_map(g, t, "constant", point=[0.95, 0.0])
    with pytest.raises(PerturbationError):
        map_variation_check(phi, V, "E", t=0.2)


# ---------------------------------------------------------------------------
# metric variations


@pytest.mark.parametrize("which,tol", [("E4hat", 1e-8), ("E4", 1e-8), ("E4ES", 1e-8)])
def test_metric_variation_sphere(lat1, which, tol):
    w = random_symmetric(lat1.grid, seed=3, kmax=2, amplitude=0.1)
    assert metric_variation_check(lat1, w, which).mismatch < tol


def test_metric_variation_flat(flat2):
    w = random_symmetric(flat2.grid, seed=3, kmax=2)
    assert metric_variation_check(flat2, w, "E4").mismatch < 1e-8
    rep = metric_variation_check(flat2, w, "E4hat")
    assert rep.derivative == 0 and rep.predicted == 0


def test_metric_variation_zero_and_errors(lat1):
    zero = np.zeros(lat1.grid.shape + (2, 2))
    assert metric_variation_check(lat1, zero).mismatch == 0
    with pytest.raises(ConfigurationError):
        metric_variation_check(lat1, zero, "E5")
    with pytest.raises(ConfigurationError):
        metric_variation_check(lat1, np.zeros(lat1.grid.shape + (3, 3)))
    with pytest.raises(ConfigurationError):
        metric_variation_check(bump(64), np.zeros((64, 64, 2, 2)))


def test_tension_metric_closed_form(lat1):
    # ω = g rescales the metric: τ(φ; (1+t)g) = τ/(1+t)
    g = np.broadcast_to(np.eye(2), lat1.grid.shape + (2, 2))
    assert np.abs(tension_metric_derivative(lat1, g) + tension(lat1)).max() < 1e-13
    for seed in (3, 4, 5):
        w = random_symmetric(lat1.grid, seed=seed, kmax=2, amplitude=0.1)
        assert tension_metric_variation_check(lat1, w).mismatch < 1e-8


# ---------------------------------------------------------------------------
# cutoff profiles


@pytest.mark.parametrize("family", ["poly9", "mollified", "poly17", "poly21"])
def test_cutoff_plateau_and_support(family):
    prof = cutoff_profile(2.0, family)
    r = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    assert np.array_equal(prof(r)[[0, 1, 2]], [1, 1, 1])
    assert np.array_equal(prof(r)[[4, 5]], [0, 0])
    assert 0 < prof(r)[3] < 1
    for l in range(1, 6):
        d = prof.derivative(r, l)
        assert np.all(d[[0, 1, 2, 4, 5]] == 0)


@pytest.mark.parametrize("family", ["poly9", "mollified"])
def test_cutoff_bound_scaling(family):
    a, b = measured_bounds(family, 1.0), measured_bounds(family, 7.5)
    for l in a:
        assert abs(a[l] - b[l]) < 1e-12 * a[l]
    assert cutoff_profile(3.0, family).bounds == pytest.approx(a, rel=1e-12)


def test_poly9_first_derivative_bound():
    # s(u) = 126u⁵ − …, s'(1/2) = 630/256 is the sup of |η'|R
    assert measured_bounds("poly9", 1.0)[1] == pytest.approx(630 / 256, rel=1e-8)


def test_cutoff_errors():
    for R in (0.0, -1.0, np.inf):
        with pytest.raises(ConfigurationError):
            cutoff_profile(R)
    with pytest.raises(ConfigurationError):
        cutoff_profile(1.0, "gauss")
    with pytest.raises(ConfigurationError):
        CutoffProfile(1.0).derivative(1.5, 6)


def test_radial_weights_vs_finite_difference():
    """FD6 derivatives of the sampled weights converge to the exact ones at sixth order."""
    prof = cutoff_profile(3.0, "poly21")
    errs = []
    for n in (128, 256):
        g = make_grid(2, 16.0, n, mode="compact_support", r_supp=7.2,
                      scheme="finite_difference")
        w = radial_weights(prof, g)
        lap = sum(g.derivative(w["eta_j"][..., j], j) for j in range(2))
        errs.append((np.abs(g.gradient(w["eta"]) - w["eta_j"]).max(),
                     np.abs(lap - w["eta_jj"]).max()))
    for coarse, fine in zip(*errs):
        assert coarse / fine > 40


def test_displayed_cutoff_gap_scaling():
    g = make_grid(2, 40.0, 200, mode="compact_support", r_supp=19.0)
    gaps = [displayed_cutoff_gap(cutoff_profile(R, "poly21"), g) for R in (3.0, 6.0)]
    # the dropped terms and the weights both scale like R⁻³; the gap is never zero
    for key in ("eta_jkk_gap", "f_jkk_gap", "f_jkk_max"):
        assert gaps[0][key] > 0
        assert gaps[1][key] / gaps[0][key] == pytest.approx(1 / 8, rel=0.05)


# ---------------------------------------------------------------------------
# Pohozaev harness


def test_pohozaev_constant_map():
    g = make_grid(2, 16.0, 64, mode="compact_support", r_supp=7.2)
    phi = make_map(g, make_target("sphere"), "constant", point=[0.1, 0.2])
    rep = pohozaev_report(phi, 3.0)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.relative == 0


def test_pohozaev_argument_errors(lat1):
    phi = bump(64)
    with pytest.raises(ConfigurationError) as info:
        pohozaev_report(phi, 4.0)
    assert info.value.path == "pohozaev.R"
    with pytest.raises(ConfigurationError):
        pohozaev_report(phi, 3.0, mode="sixth")
    with pytest.raises(ConfigurationError):
        pohozaev_report(phi, -1.0)
    with pytest.raises(ConfigurationError):
        pohozaev_report(lat1, 1.0)


def test_pohozaev_small_grid_m2():
    phi = bump(80)
    rep = pohozaev_report(phi, 3.6)
    assert rep.relative < 1e-3 and rep.lhs_prefactor == 3.0 and not rep.degenerate
    steps = ibp_ledger(phi, 3.6)
    assert max(s["relative"] for s in steps if not s["flagged"]) < 1e-4
    d = rep.to_dict()
    assert tuple(d["labels"]) == H_LABELS and set(d["H"]) and set(d["J"])


def test_pohozaev_flat_target_es_note():
    g = make_grid(2, 16.0, 64, mode="compact_support", r_supp=7.2)
    x, y = np.moveaxis(g.coordinates, -1, 0)
    values = smooth_step((6.0 - np.hypot(x, y)) / 3.0)[..., None]
    phi = MapField(g, make_target("euclidean", n=1), values)
    rep = pohozaev_report(phi, 3.0, mode="ES")
    assert any("flat target" in n for n in rep.notes) and rep.es == {}
