"""Joint sensor scheduling and subset-flooding data collection for wireless sensor networks."""

from stair.trace import SensorTrace, WindowedDataset, load_trace, save_trace, generate_synthetic_trace, windowize
from stair.regression import Estimator, fit_least_squares, predict, mspe_sum
from stair.scheduler import (
    Schedule,
    SelectionResult,
    stair_select,
    standard_greedy_select,
    uniform_schedule,
    round_robin_schedule,
    evaluate_schedule_mse,
    brute_force_select,
)
from stair.topology import (
    ConnectivityGraph,
    MinHopTree,
    generate_topology,
    profile_links,
    build_connectivity_edges,
    build_min_hop_tree,
)
from stair.activation import ActiveSets, initial_active_sets, augment_active_sets, build_active_sets, encode_bitmap, decode_bitmap
from stair.floodsim import FloodConfig, SimReport, run_flood, run_campaign, glossy_mode, run_lifetime_sim, scaling_experiment

__version__ = "0.1.0"
