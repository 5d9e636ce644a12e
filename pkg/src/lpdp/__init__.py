"""Exact longest simple paths by dynamic programming over a partition hierarchy."""

from .graph import (Graph, GraphFormatError, Instance, NoPathError, PathError, PathResult,
                    dump_graph, dump_problem, load_graph, load_problem, validate_path)
from .pairsets import BoundaryPairSet, enumerate_pair_sets, solvable_upper_bound, telephone_number
from .partition import PartitionConfig, PartitionHierarchy, build_hierarchy
from .core import BlockSolutionTable, SolverTimeout, lpdp, solve_instance
from .parallel import ParallelConfig
from .baselines import dfbnb, exhaustive_dfs
from .bench import MazeSpec, extract_subgraph, gen_maze

__version__ = "0.1.0"
