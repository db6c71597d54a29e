"""Intensity correlation functions g(tau) of blinking quantum emitters.

A fluorescing system that switches stochastically between periods of
different brightness (dark periods, single- and double-intensity periods)
has a correlation function that factorizes into per-period correlators and
period-switching statistics.  This package provides

* the continuous-time Markov machinery of the period switching
  (:mod:`blinkcorr.markov`),
* the two-level / interacting-pair subsystem correlators and the geometric
  dipole coupling constant (:mod:`blinkcorr.optics`),
* the composed g(tau), its plateau, and the two-V-system application
  (:mod:`blinkcorr.blinking`),
* two independent numerical oracles: Lindblad / quantum-regression
  (:mod:`blinkcorr.lindblad`) and semi-Markov / quantum-jump trajectory
  simulation (:mod:`blinkcorr.stochastic`),
* least-squares parameter recovery (:mod:`blinkcorr.fitting`),
* a CLI (``blinkcorr``) that writes every result as reproducible CSV.

Units: the strong-transition Einstein coefficient A3 = 1 sets the scale.
"""

from .blinking import (
    PeriodSpec,
    VPairParams,
    compose_g,
    compose_vpair_g,
    g0_two_vsystems,
    g_dark_light,
    g_two_vsystems,
    plateau_g,
    plateau_level,
    vpair_rates,
)
from .curves import CorrelationCurve, read_table, write_table
from .fitting import FitProblem, FitResult, fit, model_function, synthesize_data
from .lindblad import (
    OpenSystemModel,
    build_atom_pair,
    build_model,
    build_two_level,
    build_v_pair,
    check_g2_first_order,
    correlation_numeric,
    emission_rate,
    steady_state,
)
from .markov import (
    GeneratorMatrix,
    TransitionRates,
    build_generator,
    mean_durations,
    occupancy_matrix,
    occupancy_stack,
    steady_probabilities,
    three_period_occupancy,
)
from .optics import (
    DipoleCoupling,
    TwoLevelParams,
    dipole_coupling,
    g1_correlation,
    g2_pair_correlation,
    g2_zero,
    intensity_pair,
    intensity_single,
)
from .stochastic import (
    PeriodTrajectory,
    PhotonStream,
    coincidence_g,
    empirical_occupancy,
    gate_stream,
    photon_stream_two_level,
    poisson_stream,
    simulate_period_ensemble,
    simulate_periods,
)

__version__ = "0.1.0"
