"""Numerical settings for the tubekernel package."""

TIE_TOL = 1e-10
"""Relative tolerance for declaring two values of the tilted polynomial equal."""

CLUSTER_TOL = 1e-7
"""Roots closer than ``CLUSTER_TOL * (1 + |root|)`` are merged into one root of higher
multiplicity."""

CLASS_TOL = 1e-8
"""Tolerance for the convergence margin and for membership tests on the singular set."""

QUAD_TOL = 1e-10
"""Default tolerance for the Laplace-type integrals."""

KERNEL_TOL = 1e-6
"""Default relative tolerance for kernel evaluation."""

PROBE_TOL = 1e-4
"""Default relative tolerance for each entry of a divergence probe."""

ETA_BRACKET_WIDTH = 1e-12
"""Relative width at which bisection of a jump of the minimizer map stops."""

SCAN_POINTS = 512
"""Number of slopes scanned per concavity bracket when looking for bitangents."""

PANEL_BUDGET = 500
"""Maximum number of adaptive subintervals per quadrature."""

ETA_MIN = 8.0
"""Initial outer truncation radius of the kernel integrals, before doubling."""

ETA_CAP = 1_000_000
"""Hard cap on the outer truncation radius of the kernel integrals."""

TAU_NODE_BUDGET = 4000
"""Maximum number of nodes on the log-spaced inner grid."""

TAU_MIN = 1e-8
"""Lower end of the inner integration range."""

UNDERFLOW_EXPONENT = 700.0
"""Exponent beyond which ``exp(-x)`` is treated as zero in 64-bit floats."""

LOG_TAU_STEP = 0.25
"""Largest step of the inner grid in ``log(tau)``."""

GROWTH_THRESHOLD = 1.5
"""Smallest growth ratio per halving of delta accepted as divergence evidence."""

UPPER_BOUND_SLACK = 1.05
"""Multiplicative slack allowed when checking the local upper bound on I."""

FLOAT_FORMAT = '%.17g'
"""Float format for CSV output; 17 significant digits round-trip exactly."""

TOL_ENV_VAR = 'TUBEKERNEL_TOL'
"""Environment variable overriding the default ``--tol`` of every subcommand."""
