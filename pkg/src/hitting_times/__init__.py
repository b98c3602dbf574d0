"""Hitting times of threshold exceedances in stationary sequences.

Simulation of ARMAX, moving maxima, AR(1) and iid Frechet processes, Monte
Carlo hitting-time distributions, the matching closed-form models, and the
extremal-index / heavy-tail ACF estimators used on degree data.
"""

import warnings

# numba probes TBB first and warns when the installed version is too old
warnings.filterwarnings("ignore", message="The TBB threading layer")

from .estimators import (  # noqa: E402
    AcfResult,
    ThetaEstimate,
    empirical_quantile,
    estimate_theta,
    heavy_acf,
    intervals_estimator,
)
from .hitting import (  # noqa: E402
    EmpiricalPmf,
    HittingRecord,
    JointPmf,
    ThresholdSpec,
    Timed,
    hitting_times,
    inter_exceedance_gaps,
    mc_pmf,
    timed_first_hitting,
)
from .processes import (  # noqa: E402
    ARMAX,
    AR1Uniform,
    IidFrechet,
    InterArrivalSpec,
    MovingMax,
    ProcessSpec,
    SamplePath,
    frechet_quantile,
    frechet_sample,
    pareto_interarrivals,
    simulate,
)
from .rng import RngStream  # noqa: E402
from .theory import TheoryParams  # noqa: E402

__version__ = "0.1.0"
