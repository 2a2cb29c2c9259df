"""Simulation and analysis of the bias accumulated by broadcast gossip averaging."""

from .analysis import (
    BiasEstimate,
    BoundReport,
    bound_report,
    complete_graph_bias,
    estimate_bias,
    fit_scaling,
    martingale_oracle,
    prop3_shape,
    tail_bound,
    variance_oracle,
)
from .engine import (
    SimConfig,
    StateVector,
    TrialResult,
    average_increment,
    broadcast_step,
    disagreement,
    run_trial,
    step_bound,
)
from .errors import InvalidParameter, UnsupportedGraph
from .graph import (
    DegreeStats,
    Graph,
    complete,
    de_bruijn,
    hypercube,
    is_balanced,
    is_connected,
    is_symmetric,
    random_geometric,
    ring,
    torus_lattice,
)
from .spectral import SpectralSummary, laplacian, rate_bound, spectral_gap

__version__ = "0.1.0"
