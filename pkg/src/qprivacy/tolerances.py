"""Numerical tolerances shared across the package."""

VALIDATION_TOL = 1e-9
PROPERTY_TOL = 1e-8
CMI_CLAMP = 1e-7
PRUNE_PROB = 1e-12
STATE_EQUAL_TOL = 1e-7
DEFAULT_MAX_AMPLITUDES = 2**22
