"""Channel-resolvability laboratory.

Random codebooks driven by rate-R message sources, their induced output
distributions, and the bounds that show those distributions approach a
product target in unnormalized divergence.
"""

from .errors import (
    CapExceededError,
    ConfigError,
    InfeasibleTargetError,
    InfiniteDivergenceError,
    ResolvabilityError,
    ValidationError,
)
from .prob import (
    ChannelMatrix,
    JointPmf,
    Pmf,
    binary_entropy,
    entropy,
    joint_from,
    kl_divergence,
    mutual_information,
    output_marginal,
    product_extension,
    total_variation,
)

__version__ = "0.1.0"
