"""Laboratory constants and configuration."""

# Decoding constants
C1 = 128  # Deterministic outage constant c1
C2 = 2 ** 31  # Gaussian outage constant c2
DET_PENALTY_BASE = 32  # Deterministic loss is log2(32/delta)
GAUSS_PENALTY_BASE = 13104  # Gaussian loss is 6 + log2(13104/delta)
GAUSS_OFFSET = 6

# Modulation
GUARD_BITS = 2  # Zero MSBs ahead of every message portion
MIN_DISTANCE_TARGET = 32
MAX_SIGNAL = 0.25  # |u| bound giving unit input power

# Enumeration budgets
ENUMERATION_BUDGET = 2 ** 24
GROSHEV_BUDGET = 10 ** 7
PENALTY_SEARCH_CHUNK = 1 << 20  # Candidate rate tuples scored per numpy pass
DESK_RATE_BITS = 14

# Monte Carlo
SIM_CHUNK = 1 << 15  # Trials per RNG stream in vectorised simulations
CONFIDENCE = 0.95
MAX_RECORDED_FAILURES = 64

# Numerics
GAUSS_SLACK = 1e-9

# MAC demonstration
MAC_Q1_LEVELS = 8
MAC_Q2_LEVELS = 2
MAC_THRESHOLD = 2

# Process and exit handling
THREADS_ENV = "XCHAN_THREADS"
EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

# Map colors
BLACK = (0, 0, 0)  # Outage cells
WHITE = (255, 255, 255)
