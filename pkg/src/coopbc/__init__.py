"""Admissibility of correlated sources over a broadcast channel whose two
receivers cooperate through noisy links."""

__version__ = "0.1.0"

from .common_part import CommonPart, common_part  # noqa: E402
from .estimators import AuxiliarySearch, MarginEvaluator  # noqa: E402
from .errors import BudgetExceeded, InconsistencyError, StateSpaceError, ValidationError  # noqa: E402
from .fme import feasible  # noqa: E402
from .model import AuxiliaryKernels, ProblemSpec, full_joint  # noqa: E402
from .prob import (  # noqa: E402
    ConditionalKernel,
    FactoredJoint,
    FactorGraphSpec,
    LabeledDistribution,
    entropy,
    mutual_information,
)
from .region import (  # noqa: E402
    MarginReport,
    RateVector,
    han_costa_margins,
    raw_system,
    reduction_check_conferencing,
    reduction_check_noncooperative,
    theorem1_margins,
)
from .search import SearchConfig, search  # noqa: E402
