"""
Runtime Settings for expmix
Reads EXPMIX_* environment variables (optionally from a .env file) once at import
"""

import logging
import os
from pathlib import Path
from typing import Optional

import mpmath as mp
from dotenv import load_dotenv

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

load_dotenv()

PROJECT_ROOT = Path(__file__).resolve().parent.parent

PRECISION_DIGITS = max(30, int(os.getenv('EXPMIX_PRECISION', '50')))
DEFAULT_SEED = int(os.getenv('EXPMIX_SEED', '20240501'))
TRIALS_1D = int(os.getenv('EXPMIX_TRIALS_1D', '10000'))
TRIALS_2D = int(os.getenv('EXPMIX_TRIALS_2D', '2000'))
GRID_NODES = int(os.getenv('EXPMIX_GRID_NODES', '64'))
DENSITY_NODES = int(os.getenv('EXPMIX_DENSITY_NODES', '4096'))
X_MAX = float(os.getenv('EXPMIX_X_MAX', '60'))
GOLDEN_PATH = os.getenv('EXPMIX_GOLDEN_PATH', str(PROJECT_ROOT / 'data' / 'golden_values.json'))
OUTPUT_DIR = os.getenv('EXPMIX_OUTPUT_DIR', '.')

# Tolerances shared across modules
BOUNDARY_TOL = 1e-14
ROUND_TRIP_TOL = 1e-10
CROSS_CHECK_TOL = 1e-9


def configure_precision(digits: Optional[int] = None) -> int:
    """
    Set the working precision of mpmath

    Args:
        digits: Significant decimal digits (floor 30); None uses EXPMIX_PRECISION

    Returns:
        The precision now in effect
    """
    if digits is None:
        digits = PRECISION_DIGITS
    digits = max(30, int(digits))
    mp.mp.dps = digits
    logger.debug(f"mpmath precision set to {digits} digits")
    return digits


configure_precision()
