"""Entangled two-level systems on the Bloch sphere: photons, kaons and B-mesons.

Submodules:

* :mod:`bellsphere.states` - spinors, Bloch vectors, bases, the singlet.
* :mod:`bellsphere.channels` - birefringence, PDL, kaon and B-meson evolution.
* :mod:`bellsphere.correlations` - correlation functions, CHSH scans, LHV bound.
* :mod:`bellsphere.montecarlo` - coincidence-counting experiments.
* :mod:`bellsphere.cli` - command-line interface.
"""

__version__ = "0.1.0"

from .channels import BirefringenceSpec, BMesonSpec, KaonSpec, PdlSpec
from .correlations import Settings4, chsh_S, chsh_theta_scan, maximize_S
from .montecarlo import ExperimentConfig, estimate_chsh, estimate_E, run_experiment
from .states import BlochVector, JointState, Spinor, singlet

__all__ = [
    "BMesonSpec",
    "BirefringenceSpec",
    "BlochVector",
    "ExperimentConfig",
    "JointState",
    "KaonSpec",
    "PdlSpec",
    "Settings4",
    "Spinor",
    "chsh_S",
    "chsh_theta_scan",
    "estimate_E",
    "estimate_chsh",
    "maximize_S",
    "run_experiment",
    "singlet",
]
