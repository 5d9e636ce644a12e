"""
Solution tables of a small graph
================================

Solve a 4x4 grid with a two-level hierarchy and print what each block stores.
"""

from lpdp.bench import MazeSpec, gen_maze
from lpdp.core import reconstruct_path, solve_tables
from lpdp.partition import PartitionHierarchy

inst = gen_maze(MazeSpec(4, 0.0, 0))

# left half and right half, then the whole grid
left = [0 if v % 4 < 2 else 1 for v in range(16)]
h = PartitionHierarchy([left, [0] * 16])

tables = solve_tables(inst, h)
for (level, block), table in sorted(tables.items()):
    print(f"level {level} block {block}: boundary {list(table.boundary)}, {len(table)} entries")
    print(table.dump())

path = reconstruct_path(tables, h, inst)
print("path", path.vertices, "weight", path.weight)

# entries never stored are either trivial (weight 0) or have no realization
print(tables[0, 0].lookup([(0, 0)]))
