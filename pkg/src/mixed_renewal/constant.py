"""File containing constant values."""

N_MAX = 40
DEFAULT_SEED = 20240229
SEED_ENVVAR = "MIXED_RENEWAL_SEED"

MAX_EVENTS_PER_REPLICATE = 10**7
MIN_MC_REPLICATES = 100
QUAD_NODES = 64
M_RANGE = (1, 200)
M_RANGE_LIMIT = 500

SERIES_TOL = 1e-10
SERIES_RATIO = 0.9
SERIES_MAX_TERMS = 100_000
DP_TOL = 1e-4
DP_WEIGHT_FLOOR = 1e-15
DP_TAIL_FIT_POINTS = 5
DP_TAIL_LIMIT = 0.05
EXACT_PARTITION_LIMIT = 20
EXTENDED_PRECISION_DPS = 50
COEFFICIENT_LIMIT = 1e12
IMAG_TOL = 1e-10
ALPHA_XTOL = 1e-8
FIT_FAILURE_LIMIT = 0.01

CSV_HEADER = ("seq_id", "time")

EXAMPLE_LENGTHS = (15, 8, 23, 22, 7, 18, 12, 21, 5, 10, 20, 20, 21, 21, 15, 14, 14, 18, 18, 22)
EXAMPLE_1 = {"m": 40, "alpha": 2.1}
EXAMPLE_2 = {"m": 1, "alpha": 30.0}

# Hydraulic subsystem of six LHD machines, time unit taken as months.
LHD_M_HAT = 1
LHD_ALPHA_HAT = 5.982

DEFAULT_DIRICHLET_MODEL = {"kind": "dirichlet", "alpha": 2.0, "base": {"kind": "exponential", "rate": 1.0}}

DEFAULT_EXPERIMENT = {
    "format_version": "1.0",
    "model": {"kind": "erlang-gamma", "m": 1, "alpha": 2.0},
    "grid": {"start": 0.0, "stop": 5.0, "step": 0.5},
    "lengths": list(EXAMPLE_LENGTHS),
    "replicates": 1000,
    "seed": DEFAULT_SEED,
    "tolerance": {"series": SERIES_TOL, "dp": DP_TOL},
    "fit": {"m_min": M_RANGE[0], "m_max": M_RANGE[1]},
}
