"""Coalition structure generation on weighted graphs via QUBO bipartitions."""

from .gcsq import GcsqOptions, GcsqResult, SplitDecision, run_gcsq, select_split
from .graph import (
    WeightedGraph,
    coalition_value,
    connected_components,
    cut_weight,
    induced_subgraph,
    structure_value,
)
from .netgraph import WeightModel, build_geometric_graph, generate_synthetic_graph, link_stats
from .qubo import Qubo, VarMap, add_proper_split_penalty, build_split_qubo, energy
from .solvers import (
    AnnealParams,
    SampleSet,
    anneal_sampler,
    exact_partition_oracle,
    exhaustive_sampler,
    most_frequent_sample,
)
from .tle import parse3le, propagate, solve_kepler

__version__ = "0.1.0"
