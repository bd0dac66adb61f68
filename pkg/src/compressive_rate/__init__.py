"""Compressive channel-gain and rate estimation for network-assisted D2D links.

Receivers observe all transmitters' pilots at once, feed back compressed
measurements, and a controller estimates channel gains (linear decoders or
l1 recovery), derives achievable-rate estimates, and schedules D2D pairs.
"""

from .channel_model import (
    ChannelMatrix,
    GainMatrix,
    GroupModelConfig,
    SparseModelConfig,
    best_k_term_error,
    gain_matrix,
    gen_group_channels,
    gen_sparse_channels,
)
from .estimators import (
    GainEstimate,
    LinearDecoder,
    linear_gain_estimate,
    matched_filter,
    nonlinear_gain_estimate,
    phi_hermitian_a,
    pseudo_inverse,
)
from .rates import PowerProfile, RateReport, estimated_rate, lipschitz_bound, rate, rate_gap, sinr
from .scheduler import (
    DiscoveryResult,
    RateOracle,
    SchedulingDecision,
    discover_estimated,
    discover_perfect,
    is_feasible,
    pair,
    pair_exhaustive,
    pair_greedy,
)
from .sensing import MeasurementMatrix, NoiseModel, ReceiverFeedback, gen_pilot_matrix, measure, measure_all
from .sparse_solver import BpdnProblem, BpdnSolution, SolverOptions, soft_threshold_complex, solve_bpdn

__version__ = "0.1.0"
