"""spinlab: numerical and exact checks for the Dirac-Yang-Mills system."""

from __future__ import annotations

from .clifford import CliffordModule, build_clifford_module, chiral_project, clifford_action, conjugation_sum
from .constants import TOLERANCES
from .current import dirac_current, k_eta_apply, pairing_residual
from .exterior import FormValue, hodge_star, wedge
from .gauge import GaugeRep, make_rep

__version__ = "0.1.0"

__all__ = [
    "CliffordModule", "FormValue", "GaugeRep", "TOLERANCES", "build_clifford_module",
    "chiral_project", "clifford_action", "conjugation_sum", "dirac_current", "hodge_star",
    "k_eta_apply", "make_rep", "pairing_residual", "wedge",
]
