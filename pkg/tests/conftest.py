import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polytension import make_grid, make_map, make_target  # noqa: E402

TWO_PI = 2 * np.pi
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def sphere():
    return make_target("sphere", radius=1.0)


@pytest.fixture(scope="session")
def flat1():
    return make_target("euclidean", n=1)


def lat_profile(N=32, m=2, theta0=2.0, amplitude=0.5, k=2, cutoff=1.0, scheme="spectral",
                metric=None):
    grid = make_grid(m, TWO_PI, N, scheme=scheme, spectral_cutoff=cutoff)
    return make_map(grid, make_target("sphere"), "latitude_profile", theta0=theta0,
                    amplitude=amplitude, k=k, metric=metric)


def sinusoid(N=32, amplitude=0.7, k=2, n=1, m=1, cutoff=1.0):
    grid = make_grid(m, TWO_PI, N, spectral_cutoff=cutoff)
    return make_map(grid, make_target("euclidean", n=n), "sinusoid", amplitude=amplitude, k=k)


def bump(N=64, m=2, kappa=0.5, L=16.0, r_supp=7.2):
    grid = make_grid(m, L, N, mode="compact_support", r_supp=r_supp)
    return make_map(grid, make_target("sphere"), "bump", amplitude=0.5, exponent=12,
                    kappa=kappa)


def rel_max(a, b):
    scale = max(np.abs(a).max(), np.abs(b).max())
    return float(np.abs(np.asarray(a) - np.asarray(b)).max() / scale) if scale > 0 else 0.0


@pytest.fixture(scope="session")
def lat32():
    return lat_profile(32)
