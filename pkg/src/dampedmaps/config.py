"""Numerical constants shared by the classical and quantum pipelines."""

# Fourier coefficients below this magnitude are dropped
COEFFICIENT_CUTOFF = 1e-15
# hard cap on the number of steps used to certify mode escape
ESCAPE_CAP = 200

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
DAMPING_SUP_TOL = 1e-12
NEGATIVE_RATE_TOL = 1e-8
# variances below this are treated as exact zeros
ZERO_VARIANCE_TOL = 1e-14

# transfer operator
NOGAP_THRESHOLD = 0.95
WEIGHT_OVERFLOW = 30.0
POWER_ITERATION_MAXITER = 20000
DEFLATION_STEPS = 400
DEFAULT_XI_GRID = tuple(round(-0.5 + 0.05 * i, 10) for i in range(21))

# Monte Carlo
CUMULANT_OVERFLOW = 600.0
MIN_VARIANCE_SAMPLES = 1000
CHUNK_SIZE = 1 << 16
# integer lattice resolution of sampled torus points
LATTICE_BITS = 40
RNG_ALGORITHM = "Philox"

# spectral statistics
NOISE_ALLOWANCE = 0.10
BOUND_SAFETY = 10.0
MAX_DENSE_DIMENSION = 2048

# direction of the exact Egorov identity U^† T(m) U ~ T(κ' m), fixed by
# brute force at N = 8 (see determine_egorov_convention)
EGOROV_CONVENTION = "inverse"
EGOROV_CHECK_DIMENSION = 8

