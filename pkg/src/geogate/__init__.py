"""Decoherence of geometric and dynamic phase gates via quantum state diffusion.

Modules
-------
qcore        Pauli algebra, small Hermitian linear algebra, state helpers.
schedule     Pulse sequences and the time-dependent rotating-frame Hamiltonian.
qsd          Stochastic trajectory engine and ensemble averaging.
oracle       Deterministic Lindblad master-equation integrator.
metrics      Fidelity, entropy, tomography, concurrence and thresholds.
experiments  Named parameter sweeps.
cli          Command-line front end.
"""

from . import experiments, metrics, oracle, qcore, qsd, schedule
from .experiments import SCENARIOS, get_scenario, run_scenario, scenario_threshold
from .oracle import integrate_lindblad
from .qsd import IntegratorConfig, NoiseModel, TrajectoryError, run_ensemble

__version__ = "0.1.0"

__all__ = [
    "SCENARIOS", "IntegratorConfig", "NoiseModel", "TrajectoryError", "experiments", "get_scenario",
    "integrate_lindblad", "metrics", "oracle", "qcore", "qsd", "run_ensemble", "run_scenario",
    "scenario_threshold", "schedule",
]
