"""Real-analytic and entire approximation with simultaneous derivative control.

Construct analytic approximants to finitely differentiable functions so
that derivatives up to prescribed orders stay within prescribed
tolerances region by region, with grid-measured error certificates.
"""

from .errors import (AnaproxError, CertificateError, ConfigError,
                     EvaluationDomainError, GlueError, JunctionMismatchError,
                     LambdaSearchError, OrderCapError, ParseError,
                     QuadratureError)
from .fnspec import (Jet, PiecewiseFn, eval_jet, junction_check, parse_expr,
                     ORDER_CAP, JUNCTION_TOL)
from .seminorm import CompactSet, GridConfig, SeminormEstimate, seminorm, \
    check_product_bound
from .bump import CutoffFamily, HumpFn, Transition, build_cutoffs, \
    estimate_C, hump_jet, transition_jet
from .mollify import (LambdaResult, MollifiedFn, QuadratureCfg,
                      convergence_profile, eval_complex, eval_real_jet,
                      find_lambda, mollify)
from .glue import BlendFn, ChainResult, GlueResult, glue_chain, glue_pair
from .whitney import (ErrorCertificate, Exhaustion, ToleranceSchedule,
                      WhitneyApproximant, build, choose_deltas,
                      eventual_approx, normalize_schedule,
                      pointwise_adaptive, ray_approx, separate)
from .domains import (DomainSpec, EntireHandle, TailBound, carleman,
                      carleman_exhaustion, contains, eval_entire, rho)

__version__ = "0.1.0"
