"""
PnPI Restore Configuration Module
Central configuration and constants for the restoration toolkit.
"""
import os
from pathlib import Path

VERSION = "0.4.0"

# Project structure
PROJECT_ROOT = Path(__file__).parent.parent
APP_DIR = PROJECT_ROOT / "app"
DATA_DIR = Path(os.environ.get("PNPI_DATA_DIR", PROJECT_ROOT / "data"))
DB_PATH = DATA_DIR / "runs.db"

# Create directories if they don't exist
DATA_DIR.mkdir(parents=True, exist_ok=True)

# Image quality metrics
PSNR_CAP = 99.0
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
SSIM_WINDOW = 8

# Jacobian probes
FD_STEP = 1e-4
DENSE_MAX_DIM = 1024
DENSE_FALLBACK_PIXELS = 256  # 16x16

# Spectral estimation defaults (power iteration / modified power iteration)
PROBE_DEFAULTS = {
    "n_power": 10,
    "k_inner": 10,
    "dt": 0.1,
    "eps": 0.1,
    "tol": 1e-6,
    # n_power is a floor; iteration continues while the estimate still moves
    "rtol": 1e-9,
    "max_power": 2000,
}
PENALTY_WEIGHT = 1e-3
CERT_TOL = 1e-6
MPIM_MAX_HALVINGS = 30
NONEXPANSIVE_CHECK_ITERS = 200

# Constraint enforcement on dense linear denoisers
CONSTRAIN_DEFAULTS = {
    "steps": 500,
    "step_size": 0.04,
    "fit_ratio": 0.1,
}

# Ishikawa step sizes: alpha_n = (n + shift)^-a, beta_n = (n + shift)^-b
SCHEDULES = {
    "gd": (0.3, 0.15),
    "hqs": (0.8, 0.15),
    "fbs": (0.8, 0.15),
}
INDEX_SHIFT = 2
SCHEDULE_HORIZON = 10**6
BETA_GROWTH = 1.01
# with a growing beta the fixed point drifts, so the outer step must stay large
GROWTH_SCHEDULE = (0.3, 0.15)
# default beta_0 puts the last denoiser at this multiple of the noise level
END_SIGMA_RATIO = 3.0

# Solver defaults
FP_TOL = 1e-6
TASK_ITERS = {
    "deblur": 300,
    "sisr": 150,
    "poisson": 100,
}

# Fidelity terms
POISSON_FLOOR = 1e-8
CG_RTOL = 1e-10
CG_MAX_ITERS = 500

# Certification sampling (sigma in gray levels out of 255)
DEFAULT_SIGMAS = (15, 25, 40)
DCT_REFERENCE_SIGMA = 25
PROBE_SIZE = 16

# Dense oracle
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10
LEMMA_TOL = 1e-8

# Command line
EXIT_CODES = {
    "ok": 0,
    "config": 1,
    "violated": 2,
    "capability": 3,
    "divergence": 4,
}
TRACE_COLUMNS = ["n", "fp_residual", "step_residual", "psnr", "alpha", "beta"]

# Run ledger settings
RUN_RETENTION_DAYS = 365
