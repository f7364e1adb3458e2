"""Environment-driven defaults.

Values are read once at import time. Each variable has a default that is
good enough for desk-scale runs, so nothing needs to be set locally.
"""

import os

LOG_LEVEL = os.getenv("PST_LOG_LEVEL", "INFO")

# Mixing period used when a command does not give one (seconds).
DEFAULT_TAU_MIX = float(os.getenv("PST_TAU_MIX", "0.3e-3"))

# Upper bound on the harmonic searched by the triad hop mode.
N_MAX = int(os.getenv("PST_N_MAX", "64"))

# Upper bound on the harmonic tried by automatic relay scheduling.
HARMONIC_MAX = int(os.getenv("PST_HARMONIC_MAX", "8"))

WORKERS = int(os.getenv("PST_WORKERS", "4"))

CACHE_SIZE = int(os.getenv("PST_CACHE_SIZE", "256"))

# Largest network the dense 2^N basis is built for.
MAX_FULL_SITES = int(os.getenv("PST_MAX_FULL_SITES", "12"))

# Calibrated on the leucine-style network: below this score the alpha-beta
# pair transfer stays above 0.99.
LEAKAGE_THRESHOLD = 0.05

# Fidelities closer than this are treated as equal by the grid search.
TIE_TOLERANCE = 1e-6

# Largest phase drift, in turns, the onward pair of a triad hop may build
# up over the whole hop.
TRIAD_TOLERANCE = 0.02
