"""
Configuration defaults and environment variables.
Values can be overridden from the environment or a local .env file.
"""
import os
from typing import Dict, Any

from dotenv import load_dotenv

load_dotenv()

# Environment Configuration
ENV = os.getenv("ENVIRONMENT", os.getenv("ENV", "development"))
DEBUG = os.getenv("DEBUG", "false").lower() == "true"

# Toolkit version reported in run manifests
VERSION = "1.0.0"

# Worker pool and output defaults
DEFAULT_WORKERS = int(os.getenv("NDC_OFDM_WORKERS", str(min(8, os.cpu_count() or 1))))
DEFAULT_SEED = int(os.getenv("NDC_OFDM_SEED", "20240601"))
DEFAULT_OUT_DIR = os.getenv("NDC_OFDM_OUT_DIR", "results")

# Frame and link defaults
DEFAULT_FRAME_SIZE = int(os.getenv("NDC_OFDM_FRAME_SIZE", "2048"))
DEFAULT_TRANSMITTERS = 2

# Monte Carlo stopping rule
MIN_BITS = int(float(os.getenv("NDC_OFDM_MIN_BITS", "1e6")))
MIN_ERRORS = int(os.getenv("NDC_OFDM_MIN_ERRORS", "100"))
MAX_FRAMES = int(float(os.getenv("NDC_OFDM_MAX_FRAMES", "1e5")))
ROUND_FRAMES = int(os.getenv("NDC_OFDM_ROUND_FRAMES", "32"))  # stopping rule is checked per round
CALIBRATION_FRAMES = int(os.getenv("NDC_OFDM_CALIBRATION_FRAMES", "64"))

# Analytical pipeline defaults
ANALYSIS_SIGMA_N = float(os.getenv("NDC_OFDM_SIGMA_N", "0.1"))
QUADRATURE_SPAN = 8.0  # integrate over +/- 8 standard deviations
QUADRATURE_EPSABS = 1e-10

# Logging Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_config() -> Dict[str, Any]:
    """
    Get complete configuration dictionary.

    Returns:
        Dictionary containing all configuration values
    """
    return {
        "env": ENV,
        "debug": DEBUG,
        "version": VERSION,
        "runtime": {
            "workers": DEFAULT_WORKERS,
            "seed": DEFAULT_SEED,
            "out_dir": DEFAULT_OUT_DIR,
        },
        "link": {
            "frame_size": DEFAULT_FRAME_SIZE,
            "transmitters": DEFAULT_TRANSMITTERS,
        },
        "stopping": {
            "min_bits": MIN_BITS,
            "min_errors": MIN_ERRORS,
            "max_frames": MAX_FRAMES,
            "round_frames": ROUND_FRAMES,
            "calibration_frames": CALIBRATION_FRAMES,
        },
        "analysis": {
            "sigma_n": ANALYSIS_SIGMA_N,
            "quadrature_span": QUADRATURE_SPAN,
            "quadrature_epsabs": QUADRATURE_EPSABS,
        },
        "logging": {
            "level": LOG_LEVEL,
            "format": LOG_FORMAT
        }
    }
