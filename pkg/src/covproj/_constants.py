"""Numerical tolerances shared across the package.

Every threshold used by a solver or validator lives here so experiments can
override them in one place. Tests run with these defaults.
"""

# ingest / hermitian-core
HERMITIAN_INGEST_TOL = 1e-9
PSD_CLAMP_REL = 1e-10          # eigenvalues with |d| <= PSD_CLAMP_REL * d1 are set to zero
PSD_INDEFINITE_REL = 1e-6      # min eigenvalue below -PSD_INDEFINITE_REL * ||a||_2 is an error
PINV_REL_PER_DIM = 1e-12       # pseudo-inverse cutoff is n * PINV_REL_PER_DIM * d1

# projector
GENERIC_U_TOL = 1e-10
GENERIC_PLATEAU_REL = 1e-12
GENERIC_QUAD_CHECK_REL = 1e-10
GENERIC_TIE_REL = 1e-13
# objective differences below this many ulps of max(1, d1) are round-off
GENERIC_ROUNDOFF_ULPS = 16
ORACLE_HI_PAD = 1e-6
ORACLE_MIN_POINTS = 1000

# baselines
NSCM_MIN_ENERGY = 1e-300
FPE_MAX_ITER = 100
FPE_REL_TOL = 1e-8

# harness
SINR_DB_FLOOR = -300.0
