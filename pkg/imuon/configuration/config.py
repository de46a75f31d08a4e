import os
from typing import Dict, Any

from dotenv import load_dotenv

load_dotenv()

# =====================================================
# PATHS AND LOGGING
# =====================================================

LOG_DIRECTORY = os.getenv("IMUON_LOG_DIRECTORY", os.path.join(os.getcwd(), "logs"))
OUTPUT_DIRECTORY = os.getenv("IMUON_OUTPUT_DIRECTORY", os.path.join(os.getcwd(), "runs"))
LOG_LEVEL = os.getenv("IMUON_LOG_LEVEL", "INFO")
LOG_TO_TERMINAL = os.getenv("IMUON_LOG_TO_TERMINAL", "1") not in ("0", "false", "False", "")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# =====================================================
# DENSE KERNELS
# =====================================================

SVD_RECON_TOL = 1e-10
SYMMETRY_TOL = 1e-10          # relative asymmetry accepted by sym_eig
EIG_ZERO_REL_TOL = 1e-12      # |lambda| below this * max|lambda| is treated as 0
SPD_FLOOR_REL = 1e-12         # lambda_min floor relative to trace(X)/n
QR_RANK_REL_TOL = 1e-12
NS_MAX_ITERS = 15
NS_TOL = 1e-8
POWER_ITERS = 50
POWER_ITERATION_SEED = 0

# =====================================================
# NORM FAMILIES
# =====================================================

SCHATTEN_P_MIN = 1.0
SCHATTEN_P_MAX = 64.0
SIGMA_ORDER_TOL = 1e-12       # slack when checking sigma is nonincreasing

# =====================================================
# MANIFOLDS
# =====================================================

POINT_ORTHO_TOL = 1e-9
TANGENT_TOL = 1e-9
FACTOR_RANK_REL_TOL = 1e-10
GAUGE_MAX_COND = 1e6
ALLOW_SPECNUC_ON_PRODUCT = False
FIXED_RANK_GRAM_ROOT = False  # debug path through (AA^T)^{-1/2}

# =====================================================
# OPTIMIZER
# =====================================================

DEFAULT_TAU = 1.0
DEFAULT_RECORD_EVERY = 10
SMOOTHNESS_SAMPLES = 1000

# =====================================================
# BASELINES
# =====================================================

# 0 means exact spectral norms; 1 is the single power-iteration variant
SPECTRON_POWER_ITERS = 0

# =====================================================
# PROBLEMS
# =====================================================

SPD_SAMPLE_SPREAD = 0.3
SPD_LOGIT_SCALE = 8.0
SPD_ANCHOR_WEIGHT = 1e-3
PRINCIPAL_ANGLE_CLAMP = 1.0 - 1e-10
GRASSMANN_SAMPLE_SPREAD = 0.3
STIEFEL_MARGIN = 0.5
STIEFEL_LOGIT_SCALE = 64.0
STIEFEL_SAMPLE_SPREAD = 0.25

# =====================================================
# VERIFICATION ORACLE
# =====================================================

ORACLE_TOL = 1e-6
DYKSTRA_INNER_ITERS = 500
DYKSTRA_TOL = 1e-12          # inner alternation stops when successive iterates agree to this
ASCENT_OUTER_ITERS = 2000
ASCENT_PATIENCE = 50
ASCENT_STEP_GROWTH = 1.05
ASCENT_STEP_CAP = 1e6
FD_STEP = 1e-5
FD_REL_TOL = 1e-5
DUAL_IDENTITY_TOL = 1e-8
NORM_BOUND_SLACK = 1e-8
GAUGE_INVARIANCE_TOL = 1e-7
SV_INVARIANCE_TOL = 1e-9
PARALLEL_COSINE_TOL = 1e-10
RANDOM_SEARCH_SAMPLES = 100000
RANDOM_SEARCH_SWEEPS = 10
C_PHI_SAMPLES = 20
C_PHI_ASCENT_ITERS = 50

# =====================================================
# EXPERIMENT HARNESS
# =====================================================

LR_GRID = (0.3, 1.0, 3.0, 10.0)
DEFAULT_SEEDS = (0, 1, 2)
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

# Keys the CLI config may override at runtime
TUNABLE_KEYS = (
    "SVD_RECON_TOL", "SYMMETRY_TOL", "EIG_ZERO_REL_TOL", "SPD_FLOOR_REL",
    "QR_RANK_REL_TOL", "NS_MAX_ITERS", "NS_TOL", "POWER_ITERS",
    "POINT_ORTHO_TOL", "TANGENT_TOL", "FACTOR_RANK_REL_TOL",
    "ALLOW_SPECNUC_ON_PRODUCT", "FIXED_RANK_GRAM_ROOT",
    "SPECTRON_POWER_ITERS", "ORACLE_TOL", "DYKSTRA_INNER_ITERS", "DYKSTRA_TOL",
    "ASCENT_OUTER_ITERS", "ASCENT_PATIENCE", "FD_STEP", "FD_REL_TOL",
    "DUAL_IDENTITY_TOL", "NORM_BOUND_SLACK", "GAUGE_INVARIANCE_TOL",
    "SV_INVARIANCE_TOL", "PARALLEL_COSINE_TOL",
)


def apply_overrides(overrides: Dict[str, Any]) -> Dict[str, Any]:
    """
    Override tunable module constants, e.g. from a [tolerances] config table

    Args:
        overrides: Mapping of constant name (any case) to new value

    Returns:
        Previous values of the overridden constants
    """
    module = globals()
    previous = {}
    for key, value in overrides.items():
        name = key.upper()
        if name not in TUNABLE_KEYS:
            raise KeyError(f"Unknown tunable setting: {key}")
        previous[name] = module[name]
        if isinstance(module[name], bool) and not isinstance(value, bool):
            value = str(value).lower() in ("1", "true", "yes", "on")
        module[name] = type(module[name])(value)
    return previous


def snapshot() -> Dict[str, Any]:
    """Current values of every tunable constant"""
    module = globals()
    return {name: module[name] for name in TUNABLE_KEYS}
