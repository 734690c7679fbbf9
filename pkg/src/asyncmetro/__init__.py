"""Asynchronous distributed Metropolis sampler simulator.

A discrete-event simulator of a fully-asynchronous message-passing protocol
that resolves single-site Metropolis updates ahead of full neighborhood
knowledge, coupled coin-for-coin with a sequential continuous-time reference
chain so the two produce identical samples on identical randomness.
"""

from .graphs import (
    Graph,
    complete_graph,
    cycle_graph,
    empty_graph,
    grid_graph,
    path_graph,
    random_regular_graph,
    read_edge_list,
    star_graph,
    write_edge_list,
)
from .models import SpinModel, lipschitz_bound, make_coloring, make_hardcore, make_ising
from .schedule import UpdateId, UpdateSchedule, generate, total_order, updates_before
from .oracle import (
    ContinuousRun,
    PoissonBridge,
    discrete_continuous_bridge,
    exact_distribution,
    horizon_for_steps,
    run_continuous,
    run_discrete,
    total_variation,
)
from .netsim import (
    AdversarialMaxScheduler,
    FixedDelayScheduler,
    Resolution,
    RunStats,
    Scheduler,
    Simulation,
    SimulationInvariantError,
    SimulationResult,
    SynchronousScheduler,
    UniformRandomScheduler,
    make_scheduler,
    possible_states,
    run,
    thresholds,
    thresholds_bruteforce,
)
from .instrument import (
    DependencyRecord,
    ResidenceReport,
    chain_lengths,
    chain_of,
    phase2_residence,
    record_trigger,
)

__version__ = "0.1.0"
