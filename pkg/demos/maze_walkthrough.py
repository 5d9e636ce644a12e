"""
Longest path through a grid maze
================================

Generate a maze, split it into blocks, solve it exactly and draw the route.
"""

import time

import numpy as np

from lpdp.baselines import dfbnb
from lpdp.bench import MazeSpec, build_maze
from lpdp.core import SolverTimeout, lpdp
from lpdp.partition import PartitionConfig, boundary_nodes, build_hierarchy, edge_cut

# a 12x12 grid with 30% of the cells blocked; start top-left, target bottom-right
maze = build_maze(MazeSpec(12, 0.3, seed=4))
inst = maze.instance
print(maze.render())
print(inst.graph.vertex_count, "free cells,", inst.graph.edge_count, "edges")

# the hierarchy: level 0 holds small blocks, each level above merges them
h = build_hierarchy(inst.graph, PartitionConfig(target_block_size=8, seed=0))
for level in range(h.level_count):
    sizes = [len(h.members(level, b)) for b in range(h.block_count(level))]
    print(f"level {level}: {len(sizes)} blocks, sizes {sizes}")
print("cut edges at level 0:", edge_cut(inst.graph, h.levels[0]))

# only boundary nodes enter the tables, so they decide the cost
sizes = [len(boundary_nodes(inst.graph, h, 0, b, inst)) for b in range(h.block_count(0))]
print("boundary nodes per level-0 block:", sizes)

t0 = time.perf_counter()
path = lpdp(inst, PartitionConfig(target_block_size=8, seed=0))
print(f"longest path: {path.weight:g} steps in {time.perf_counter() - t0:.2f}s")

# plain branch and bound on the whole maze is already slow at this size
try:
    ref, stats = dfbnb(inst, time_limit=10)
    print("branch and bound agrees:", ref.weight == path.weight)
except SolverTimeout as exc:
    best = exc.incumbent.weight if exc.incumbent else None
    print("branch and bound gave up after 10s, best so far", best)

# draw it
grid = np.where(maze.blocked, "#", " ").astype("<U1")
for v in path.vertices:
    grid[maze.cells[v]] = "o"
grid[maze.cells[inst.source]] = "S"
grid[maze.cells[inst.target]] = "T"
print("\n".join("".join(row) for row in grid))
