__all__ = ["kernels", "ensembles", "instances", "oracles", "indist", "cli", "descriptor", "excs", "models", "validate"]

from .__version__ import (  # noqa: F401  imported but unused
    __name__,
    __about__,
    __url__,
    __version_info__,
    __version__,
    __author__,
    __author_email__,
    __maintainer__,
    __license__,
    __copyright__,
)
from .kernels import MomentKernel, Side  # noqa: F401
from .models import DiscreteDistribution, EnsembleSpec  # noqa: F401
from .instances import Family, Instance, InstanceParams, forge  # noqa: F401
from .descriptor import InstanceDescriptor  # noqa: F401
from .excs import (  # noqa: F401
    LBForgeError,
    ValidationError,
    InfeasibleParametersError,
    BudgetExceededError,
    HypothesisViolationError,
    SolverError,
)
