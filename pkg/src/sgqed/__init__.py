"""Simulator for the continuously monitored, resonantly driven
Jaynes-Cummings system: master-equation ensemble layer, homodyne/heterodyne
trajectory unravelings, phase-space observables and closed-form
semiclassical oracles."""

from .config import DetectionConfig, SimParams, max_stable_dt
from .hilbert import (
    DensityMatrix,
    PureState,
    SpaceDescriptor,
    atom_ops,
    build_space,
    coherent_state,
    dressed_ops,
    expectation,
    field_ops,
    jc_hamiltonian,
    quadrature_op,
    vacuum_ground,
)
from .lindblad import (
    Superoperator,
    WaitingTimeDensity,
    evolve_me,
    liouvillian,
    rf_reference_wtd,
    steady_state,
    waiting_time_density,
)
from .phase_space import (
    WignerGrid,
    bloch_coords,
    cat_reference,
    histogram,
    reduced_field,
    wigner,
)
from .semiclassics import (
    AttractorPrediction,
    bimodal_peaks,
    bistability_threshold,
    dressed_attractors,
    quasienergy_drift,
    verify_secular_ansatz,
)
from .trajectories import (
    TrajectoryRecord,
    classify_attractor,
    filter_photocurrent,
    maybe_collapse,
    run_ensemble,
    run_trajectory,
    sse_step_heterodyne,
    sse_step_homodyne,
)
from .runner import ScenarioResult, parse_config, run_scenario

__version__ = "0.1.0"
