VERSION = "0.4.0"

# Note attached to every emitted table
M2_CONVENTION = "Magnus M2 carries factor 1/2"

# Full-matrix guard (basis dimension)
DIMENSION_CEILING = 4096

# Default grid resolution: steps per period of the fastest angular frequency
STEPS_PER_PERIOD = 400
MIN_STEPS = 2

# Relative tolerance for Hermiticity of sampled potentials
HERMITICITY_TOL = 1e-10

# |omega_L - omega_R| * t below this switches the analytic amplitude to its series branch
DEGENERATE_SWITCH = 1e-6

# Fraction trimmed at both ends of (0, R/c) for causality leakage
LEAKAGE_TRIM = 0.05

# Gaussian mode taper: the top mode of the ladder sits this many widths out
MODE_TAPER_WIDTHS = 3.0

# Mode block size for the vectorised kernel quadrature
KERNEL_MODE_CHUNK = 64

# Rows emitted per curve (uniform thinning of the time grid)
DEFAULT_OUTPUT_POINTS = 201

# Norm defects at or below this count as unitary in the divergence fit
DEGENERATE_FLOOR = 1e-10
