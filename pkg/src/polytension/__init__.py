"""Fourth-order tension fields, stress-energy tensors and their identities on grids."""
from .errors import (ChartExitError, ConfigurationError, GeometryError, NumericalError,
                     PerturbationError, PolytensionError)
from .manifold import ChartTarget, make_target, target_from_config
from .grid import DomainGrid, DomainMetric, make_grid, grid_from_config
from .calculus import (MapField, differential, pullback_derivative, second_fundamental_form,
                       tension, rough_laplacian, codifferential)
from .tension import (poly_tension, tau4, curvature_quantities, tau4_hat, tau4_es,
                      energy_report, EnergyReport)
from .catalog import make_map, map_from_config

__version__ = "0.1.0"
