"""Dynamic rays for exponential, cosine and scaled Bessel-type entire maps."""
from .core import (
    CycleClass,
    MapSpec,
    PeriodicPointRecord,
    classify,
    cycle_multiplier,
    derivative,
    evaluate,
    find_periodic_points,
    iterate,
    orbit,
)
from .errors import *  # noqa: F401,F403
from .symbolic import (
    ExternalAddress,
    PartitionSpec,
    address_of,
    build_partition,
    default_partition,
    inverse_branch,
    parse_address,
    symbol_of,
)
from .rays import (
    Curve,
    landing_point,
    leg_pullback,
    pullback_sequence,
    straight_leg,
    trace_ray,
    verify_landing,
)
from .hyperbolic import contraction_certificate, horosphere_check, preimage_sequence
from .domains import build_expansion_domain, postsingular_analysis, singular_values, validate_expansion_domain

__version__ = "0.1.0"
