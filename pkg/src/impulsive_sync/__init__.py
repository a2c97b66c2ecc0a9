"""Synchronization of identical linear agents by impulsive deadbeat coupling."""
from .deadbeat import AgentSystem, DeadbeatDesign, controllability_matrix, design_deadbeat, schur_nilpotent
from .errors import (ControllabilityError, ConvergenceError, NotNilpotentError, NumericalError,
                     SingularMatrixError, SpanningTreeError, SpecError, SyncError)
from .graph import CouplingGraph, LaplacianSpectrum, analyze_spectrum, laplacian
from .sync import (AnalysisReport, MuPolicy, NetworkRun, Trajectory, analyze, diagonal_blocks,
                   dirac_pulse_oracle, impulse_jump, mu_bound, simulate, simulate_time_varying,
                   step_matrix, step_matrix_consensus)

__version__ = "0.1.0"
