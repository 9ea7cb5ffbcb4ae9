"""gatelab: planar ion crystals, axial phonons, and segmented phase gates.

The package is organised as one module per study stage:

- :mod:`gatelab.crystal`: planar equilibria of radially confined ions,
  minimum-spacing scaling, and trap targeting.
- :mod:`gatelab.modes`: out-of-plane (axial) normal modes, stability
  thresholds, and the uniform-mode gap.
- :mod:`gatelab.gate`: spin-dependent segmented drives, accumulated
  displacements and two-ion phase, thermal fidelity, response profiles.
- :mod:`gatelab.optimizer`: amplitude solves at fixed detuning, detuning
  scans, pair selection, and the benchmark table.
- :mod:`gatelab.cli`: file-driven command line front end.
"""

from .crystal import (Crystal, PowerLawFit, TrapConfig, closed_shell_count,
                      fit_power_law, length_scale, min_spacing,
                      min_spacing_scan, omega_r_for_spacing, read_crystal,
                      ring_seed, solve_equilibrium, triangular_seed,
                      with_trap, write_crystal)
from .errors import (BracketFailure, CoincidentIons, ConfigError,
                     CutoffInsufficient, DegenerateSeed, EigenFailure,
                     GatelabError, IndefiniteKernel, InsufficientPoints,
                     NegativeOccupation, NonConvergence, StepFailure,
                     UnstableSpectrum)
from .gate import (GateReport, PulseSchedule, ResponseProfile,
                   entangling_phase, gate_report, mode_displacements,
                   read_report, read_schedule, response_profile,
                   thermal_fidelity, write_report, write_schedule)
from .modes import (AxialSpectrum, axial_spectrum, com_gap, critical_beta,
                    read_spectrum, write_spectrum)
from .optimizer import (OptimizationProblem, OptimizationResult, TableRow,
                        band_edge_optimum, default_mu_grid, default_pair_list,
                        detuning_scan, local_optimum_near, read_scan,
                        read_table, solve_amplitudes, table_one, write_scan,
                        write_table)

__version__ = "0.1.0"

__all__ = [
    "AxialSpectrum", "BracketFailure", "CoincidentIons", "ConfigError",
    "Crystal", "CutoffInsufficient", "DegenerateSeed", "EigenFailure",
    "GateReport", "GatelabError", "IndefiniteKernel", "InsufficientPoints",
    "NegativeOccupation", "NonConvergence", "OptimizationProblem",
    "OptimizationResult", "PowerLawFit", "PulseSchedule", "ResponseProfile",
    "StepFailure", "TableRow", "TrapConfig", "UnstableSpectrum",
    "axial_spectrum", "band_edge_optimum", "closed_shell_count", "com_gap",
    "critical_beta", "default_mu_grid", "default_pair_list", "detuning_scan",
    "entangling_phase", "fit_power_law", "gate_report", "length_scale",
    "local_optimum_near", "min_spacing", "min_spacing_scan",
    "mode_displacements", "omega_r_for_spacing", "read_crystal",
    "read_report", "read_scan", "read_schedule", "read_spectrum",
    "read_table", "response_profile", "ring_seed", "solve_amplitudes",
    "solve_equilibrium", "table_one", "thermal_fidelity", "triangular_seed",
    "with_trap", "write_crystal", "write_report", "write_scan",
    "write_schedule", "write_spectrum", "write_table",
]
