"""Configuration settings for the Sturm-Liouville spectral toolkit."""

import os as _os
from pathlib import Path

# Integrator settings
ODE_METHOD = "DOP853"  # explicit 8(5,3) Runge-Kutta with dense output
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12

# Quadrature settings
QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-13
QUAD_LIMIT = 4000  # max subintervals before giving up

# Root refinement
ROOT_TOL = 1e-10  # |t-error| <= ROOT_TOL * max(1, |t|)
ROOT_MAX_ITER = 200

# Truncation of non-compact quasiregular intervals
TAIL_TOL = 1e-10
TRUNCATION_INITIAL_LENGTH = 1.0
TRUNCATION_MAX_LENGTH = 1.0e4

# Coefficient sampling (nonnegativity / nontriviality checks)
COEFFICIENT_SAMPLES = 2048

# Entire Nevanlinna pairs
PAIR_VALIDATION_TOL = 1e-9
PAIR_DEGENERATE_SAMPLES = 32
INFINITY_LADDER = (1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)
INFINITY_FALLBACK_LADDER = (10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0)  # used when the main ladder overflows
DHAT_GROWTH_FACTOR = 1e6  # total growth of y*Im tau(iy) declaring Dhat = inf
DHAT_DECADE_RATIO = 2.0  # growth over the last decade declaring Dhat = inf
LIMIT_STABILITY_TOL = 1e-6
INFINITY_ZERO_TOL = 1e-8

# Characteristic function
POLE_THRESHOLD = 1e-13  # |Psi| < POLE_THRESHOLD * (|Phi| + |Psi| + 1) is a pole hit

# Spectrum scan
SCAN_OSCILLATION_FRACTION = 0.25  # initial spacing as a fraction of the local eigenvalue gap
SCAN_MAX_STEP = 2.0  # grid spacing cap, in units of max(1, sqrt|t|)
SCAN_MAX_REFINEMENTS = 8
TANGENT_SCREEN_RATIO = 0.25
TANGENT_TOL = 1e-8
COMMON_ZERO_TOL = 1e-10
SIMPLE_ZERO_TOL = 1e-8
RESIDUE_NEGATIVE_TOL = 1e-9
DERIVATIVE_CROSSCHECK_TOL = 1e-6
CONTOUR_HALF_HEIGHT = 1.0
CONTOUR_MAX_ROUNDS = 40
CONTOUR_MAX_PHASE_STEP = 0.5  # radians
SCAN_CONCURRENCY: int = int(_os.getenv("SL_SCAN_CONCURRENCY", "4"))
SCAN_CHUNK_SIZE = 256  # lambdas per batched integration

# Expansion diagnostics
UNIFORM_GRID_POINTS = 2049
FY_RESIDUAL_TOL = 1e-4  # relative to 1 + max|Delta * f_y|
FD_MESH_POINTS = 4097
BOUNDARY_CONDITION_TOL = 1e-6
BESSEL_SLACK = 1e-8

# Pencil oracle
ORACLE_MIN_GRID = 16
ORACLE_DENSE_LIMIT = 400  # above this the sparse shift-invert solver is used
ORACLE_MATCH_TOL = 1e-3
ORACLE_INFINITE_BETA_TOL = 1e-12

# Output
CSV_DIGITS = 17
DEFAULT_OUTPUT_DIR = Path("out")

# Spectrum cache
SPECTRUM_CACHE_DB_PATH = Path(_os.getenv("SL_SPECTRUM_CACHE_DB", "data/spectrum_cache.db"))
SPECTRUM_CACHE_RETENTION_DAYS: int = int(_os.getenv("SL_SPECTRUM_CACHE_RETENTION_DAYS", "60"))
