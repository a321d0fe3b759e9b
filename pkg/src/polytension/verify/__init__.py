from .cutoff import CutoffProfile, cutoff_profile, measured_bounds
from .pohozaev import PohozaevReport, ibp_ledger, pohozaev_report
from .variation import (VariationReport, map_variation_check, metric_variation_check,
                        tension_metric_variation_check)
