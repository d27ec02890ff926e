#!/usr/bin/env python3
"""
Configuration file for censreg
Contains all tuning constants, solver settings and logging setup
"""

import logging
import os
import sys

# Load environment variables from .env if available
try:
    from dotenv import load_dotenv
    load_dotenv()
except Exception:
    pass

# Logging setup (stream goes to stderr so stdout stays JSON-only for the CLI)
LOG_LEVEL = os.getenv("CENSREG_LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("CENSREG_LOG_FILE", "censreg.log")

_handlers = [logging.StreamHandler(sys.stderr)]
if LOG_FILE:
    _handlers.append(logging.FileHandler(LOG_FILE, encoding='utf-8'))

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format="%(asctime)s [%(levelname)s] %(message)s",
    handlers=_handlers
)

# Resampling search
N_CANDIDATES = int(os.getenv("CENSREG_N_CANDIDATES", "500"))
DEFAULT_SEED = int(os.getenv("CENSREG_SEED", "20080101"))
THREADS = int(os.getenv("CENSREG_THREADS", "1"))
PRUNE_CHUNK = int(os.getenv("CENSREG_PRUNE_CHUNK", "8"))          # large-norm gammas scanned per block
POLISH_STEPS = int(os.getenv("CENSREG_POLISH_STEPS", "10"))       # outer fixed-point steps when refine is on
REFINE_STEPS = int(os.getenv("CENSREG_REFINE_STEPS", "20"))       # inner IRWLS steps after candidate selection

# Loss tuning (bisquare, a = c^2/6)
C1 = float(os.getenv("CENSREG_C1", "1.5476"))          # S-stage: 50% breakdown, uncensored reference
C2 = float(os.getenv("CENSREG_C2", "4.685"))           # MM-stage: 95% normal efficiency
TAU_C2 = float(os.getenv("CENSREG_TAU_C2", "6.08"))    # tau-scale second loss
B_OVER_A = float(os.getenv("CENSREG_B_OVER_A", "0.5"))

# Scale solver
SCALE_TOL = float(os.getenv("CENSREG_SCALE_TOL", "1e-10"))
SCALE_MAX_ITER = int(os.getenv("CENSREG_SCALE_MAX_ITER", "200"))
ZERO_RTOL = float(os.getenv("CENSREG_ZERO_RTOL", "1e-10"))       # |residual| below this * max|y*| counts as zero

# IRWLS
IRWLS_TOL = float(os.getenv("CENSREG_IRWLS_TOL", "1e-8"))
IRWLS_MAX_ITER = int(os.getenv("CENSREG_IRWLS_MAX_ITER", "500"))
IRWLS_RIDGE = float(os.getenv("CENSREG_IRWLS_RIDGE", "1e-12"))
L1_SMOOTHING = float(os.getenv("CENSREG_L1_SMOOTHING", "1e-6"))

# Iterative baselines (Buckley-James LS, L1 fixed point, GM bisection)
BJ_TOL = float(os.getenv("CENSREG_BJ_TOL", "1e-8"))
BJ_MAX_ITER = int(os.getenv("CENSREG_BJ_MAX_ITER", "100"))

# Breakdown analysis
Q_BUDGET = int(float(os.getenv("CENSREG_Q_BUDGET", "1e6")))
PROBE_MAGNITUDES = (1e2, 1e4, 1e6)

# Simulation harness
SIM_REPLICATES = int(os.getenv("CENSREG_SIM_REPLICATES", "200"))
SIM_FULL_REPLICATES = int(os.getenv("CENSREG_SIM_FULL_REPLICATES", "1000"))
SIM_N_CANDIDATES = int(os.getenv("CENSREG_SIM_N_CANDIDATES", "100"))
SIM_MAX_FAILURE_RATE = float(os.getenv("CENSREG_SIM_MAX_FAILURE_RATE", "0.05"))

# Heavy Monte Carlo checks in the test files
SLOW_TESTS = os.getenv("CENSREG_SLOW_TESTS", "0") not in ("", "0", "false", "False")

# Estimator names understood by the CLI and the harness
ESTIMATOR_NAMES = ("ls", "l1", "lms", "s", "mm", "tau", "m", "gm")
TABLE_ESTIMATORS = ("s", "lms", "ls", "mm", "gm", "l1")

logging.debug(
    f"censreg configured: N={N_CANDIDATES}, c1={C1}, c2={C2}, b/a={B_OVER_A}, threads={THREADS}"
)
