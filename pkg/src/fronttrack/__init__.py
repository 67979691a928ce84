"""Front tracking for scalar conservation laws with nonclassical shocks."""

__version__ = "0.1.0"

from .kinetics import (AxiomReport, Flux, KineticError, KineticModel, compute_phi_sharp, cubic_flux,
                       cubic_kinetic, entropy_dissipation, model_from_config, quadratic_entropy,
                       rankine_hugoniot_speed, tabulated_kinetic, verify_axioms)
from .waves import (InteractionCase, WaveLabel, classify_interaction, classify_wave,
                    predicted_V_bound, wave_strength)
from .riemann import WaveFan, discretize_rarefaction, solve_riemann
from .functionals import (FunctionalReport, Snapshot, Q_pos, Q_weak, isometry_image, total_TV,
                          total_V)
from .engine import InteractionRecord, SimulationState, initialize, run, run_config, step

__all__ = [
    "AxiomReport", "Flux", "KineticError", "KineticModel", "compute_phi_sharp", "cubic_flux",
    "cubic_kinetic", "entropy_dissipation", "model_from_config", "quadratic_entropy",
    "rankine_hugoniot_speed", "tabulated_kinetic", "verify_axioms", "InteractionCase", "WaveLabel",
    "classify_interaction", "classify_wave", "predicted_V_bound", "wave_strength", "WaveFan",
    "discretize_rarefaction", "solve_riemann", "FunctionalReport", "Snapshot", "Q_pos", "Q_weak",
    "isometry_image", "total_TV", "total_V", "InteractionRecord", "SimulationState", "initialize",
    "run", "run_config", "step",
]
