"""Tolerance table shared by the identity checks and the test-suite."""

from __future__ import annotations

# pointwise algebraic identities (Clifford relations, Hodge signs, projectors)
ALGEBRA_TOL = 1e-13
# identities that accumulate a few matrix products
IDENTITY_TOL = 1e-12
# imaginary part allowed in a bilinear that must be real
REALITY_TOL = 1e-13
# bracket-homomorphism / anti-Hermiticity of representation matrices
REP_TOL = 1e-12
KILLING_TOL = 1e-10

# finite differences
DEFAULT_STEP = 1e-2
DEFAULT_ORDER = 4
MIN_OBSERVED_ORDER = 3.8

# spectral
OVERLAP_THRESHOLD = 0.9
KERNEL_REL_TOL = 1e-8
HELLMANN_FEYNMAN_TOL = 1e-6
WEYL_SLACK = 1e-10

# instanton number
INSTANTON_TOL = 1e-3

TOLERANCES = {
    "algebra": ALGEBRA_TOL,
    "identity": IDENTITY_TOL,
    "reality": REALITY_TOL,
    "rep": REP_TOL,
    "killing": KILLING_TOL,
    "min_order": MIN_OBSERVED_ORDER,
    "overlap": OVERLAP_THRESHOLD,
    "kernel_rel": KERNEL_REL_TOL,
    "hellmann_feynman": HELLMANN_FEYNMAN_TOL,
    "weyl_slack": WEYL_SLACK,
    "instanton": INSTANTON_TOL,
}
