"""
How many boundary pair sets can a block have?
=============================================

A table entry pairs up boundary nodes (path pieces entering and leaving the
block) and may also mark single nodes that a path only touches. The counts
grow fast, which is why blocks are kept to a handful of boundary nodes.
"""

from lpdp.pairsets import enumerate_pair_sets, solvable_upper_bound, telephone_number

# telephone numbers count the matchings alone
print(" n  matchings  pair sets")
for n in range(13):
    print(f"{n:2d} {telephone_number(n):10d} {solvable_upper_bound(n):10d}")

# every pair set over three nodes
for ps in enumerate_pair_sets([1, 2, 3]):
    print(ps)

# the packed key the tables use, 8 bits per boundary position
from lpdp.pairsets import decode, encode

boundary = [4, 9, 11, 20]
position = {v: i for i, v in enumerate(boundary)}
key = encode([(4, 11), (20, 20)], position)
print(hex(key), decode(key, boundary))
