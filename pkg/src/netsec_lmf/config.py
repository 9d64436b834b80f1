"""
Configuration settings for netsec_lmf.
Handles environment variables and numeric defaults.
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
# src/netsec_lmf/config.py -> src/netsec_lmf -> src -> root
ROOT_DIR = Path(__file__).parent.parent.parent.absolute()
ENV_PATH = ROOT_DIR / '.env'

if ENV_PATH.exists():
    load_dotenv(ENV_PATH)


def _env_float(name: str, default: float) -> float:
    return float(os.environ.get(name, default))


def _env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


def _env_flag(name: str, default: bool = False) -> bool:
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# RDE solver
RDE_TOL = _env_float("NETSEC_RDE_TOL", 1e-13)
RDE_MAX_ITER = _env_int("NETSEC_RDE_MAX_ITER", 10_000)

# Willingness-to-pay root finding
WTP_XTOL = 1e-12
WTP_MAX_ITER = 200

# Equilibrium search
GAMMA_GRID = _env_int("NETSEC_GAMMA_GRID", 1024)
GAMMA_XTOL = 1e-9
CURVE_POINTS = _env_int("NETSEC_CURVE_POINTS", 401)
DYNAMICS_TOL = 1e-9
DYNAMICS_MAX_STEPS = 1000
TIPPING_TOL = 1e-7

# Degree distributions
D_MAX = _env_int("NETSEC_D_MAX", 200)
TAIL_WARN_MASS = 1e-9

# Simulation
DEFAULT_TRIALS = _env_int("NETSEC_TRIALS", 10_000)
TREE_MAX_NODES = _env_int("NETSEC_TREE_MAX_NODES", 10_000_000)
EXACT_BUDGET_BITS = 24
MAX_WORKERS = _env_int("NETSEC_MAX_WORKERS", 4)

# Output
RESULTS_DIR = Path(os.environ.get("NETSEC_RESULTS_DIR", ROOT_DIR / "results"))
FLOAT_FORMAT = "%.17g"

# Logging
LOG_LEVEL = os.environ.get("NETSEC_LOG_LEVEL", "WARNING").upper()

# Tests
RUN_SLOW_TESTS = _env_flag("NETSEC_RUN_SLOW_TESTS")
