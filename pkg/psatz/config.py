"""
Configuration settings for certificate search and verification
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Data Settings
DATA_DIR = os.getenv('PSATZ_DATA_DIR', 'data')

# Logging Settings
LOG_LEVEL = os.getenv('PSATZ_LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('PSATZ_LOG_FILE', 'psatz.log')

# Solver Settings
SOLVER_OPTIONS = {
    'max_iters': int(os.getenv('PSATZ_MAX_ITERS', '100')),
    'tol_eq': float(os.getenv('PSATZ_TOL_EQ', '1e-8')),
    'tol_dual': float(os.getenv('PSATZ_TOL_DUAL', '1e-8')),
    'tol_gap': float(os.getenv('PSATZ_TOL_GAP', '1e-8')),
    'tol_psd': float(os.getenv('PSATZ_TOL_PSD', '1e-9')),
    'step': 0.98,
    'min_step': 1e-9,
    'stall_window': 8,
    'divergence': 1e12,
    'farkas_margin': 1e-9,
    'farkas_psd_tol': 1e-8,
    'farkas_trace_bound': float(os.getenv('PSATZ_FARKAS_TRACE_BOUND', '1e4')),
}

# Verification Settings
VERIFY_TOL = float(os.getenv('PSATZ_VERIFY_TOL', '1e-6'))
PSD_TOL = float(os.getenv('PSATZ_PSD_TOL', '1e-9'))
SYMMETRY_TOL = 1e-12

# Certificate Search Settings
STRICT_MIN_MARGIN = float(os.getenv('PSATZ_STRICT_MIN_MARGIN', '1e-7'))
DEFAULT_LEVEL_SPAN = 3
DEFAULT_THETA_MAX = 3

# Archimedean Probe Settings
PROBE_T_MAX = 3
PROBE_K_MAX = 16.0

# Refutation Settings
WITNESS_THRESHOLD = -1e-9
WITNESS_TRACE_BOUND = float(os.getenv('PSATZ_WITNESS_TRACE_BOUND', '1e3'))
WITNESS_PSD_TOL = 1e-8

# Sampling Settings
SAMPLE_BOX = 10.0
SOUNDNESS_SAMPLES = 1000
MAX_SAMPLE_ATTEMPTS = 200000

# Concurrency
MAX_WORKERS = int(os.getenv('PSATZ_WORKERS', '1'))

# File Format
SCHEMA_VERSION = 1

# Exit Codes
EXIT_CODES = {
    'ok': 0,
    'infeasible': 2,
    'rejected': 3,
    'inconclusive': 4,
    'usage': 64,
}

# Error Messages
ERROR_MESSAGES = {
    'algebra_mismatch': 'operands live in different algebras',
    'size_mismatch': 'matrix sizes are incompatible',
    'not_torus': 'operation requires the torus algebra',
    'not_free': 'operation requires the polynomial algebra',
    'not_hermitian': 'polynomial must have symmetric coefficients',
    'degree_overflow': 'truncation level too small for the polynomial degree',
    'homogeneous_torus': 'homogeneous bases are not defined on the torus',
    'inhomogeneous': 'homogeneous search needs homogeneous inputs of even degree',
}

# Result Messages
SUCCESS_MESSAGES = {
    'certified': '✅ Certificate found and verified',
    'verified': '✅ Certificate accepted',
    'refuted': '❌ Refuted: M_S-positive functional with L(p) < 0',
    'infeasible': '❌ Infeasible at every tried level',
    'no_margin': '❌ No strict margin at any tried level (closure mode may still succeed)',
    'rejected': '❌ Certificate rejected',
    'witness': '✅ Witness accepted: M_S-positive functional with L(p) < 0',
    'inconclusive': '⚠️ Inconclusive: no certificate and no infeasibility proof',
    'archimedean': '✅ Archimedean: ball polynomial found in M_S',
}
