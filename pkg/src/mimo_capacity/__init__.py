"""Ergodic capacity, on-off rates and outage of coherent IID Rayleigh MIMO channels."""

__version__ = "0.1.0"

from .capacity import (  # noqa: E402
    ChannelConfig,
    Method,
    RatePoint,
    Scheme,
    SweepError,
    WaterfillSolution,
    capacity_csit,
    capacity_high_snr_approx,
    capacity_no_csit,
    onoff_power,
    onoff_rate,
    rounded_db_power,
    solve_cutoff,
    sweep,
)
from .errors import ConvergenceError, DomainError, IntegrationError, RootFindingError  # noqa: E402
from .montecarlo import (  # noqa: E402
    McConfig,
    McEstimate,
    mc_capacity_csit,
    mc_capacity_no_csit,
    mc_onoff_rate,
    mc_outage,
    sample_eigenvalues,
)
from .outage import (  # noqa: E402
    OutageResult,
    outage_actual,
    outage_analysis,
    outage_bound_p1,
    outage_bound_p2,
)
from .spectrum import (  # noqa: E402
    AntennaPair,
    EigenDensity,
    eigen_pdf,
    lambda_max_cdf,
    lambda_max_pdf,
    lambda_max_sf,
)
