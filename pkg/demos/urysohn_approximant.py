"""
Growing a finite approximant of the rational Urysohn sphere
===========================================================

Each stage picks the extension task with the largest gap and realizes it
with one new point.  The defect is the worst gap over the tracked list.
"""

from cfol import run_fraisse
from cfol.amalgam import farey_extensions

# ten one-point extensions: a new point at each Farey distance of order 5
tracked = farey_extensions(5)
print([str(e.distances[0]) for e in tracked])

state = run_fraisse(500, q=4, tracked=tracked)

# the defect only ever goes down
previous = None
for entry in state.log:
    if entry.defect != previous:
        print(f"stage {entry.stage:4d}  size {entry.size}  defect {entry.defect}")
        previous = entry.defect

# the final space, all distances multiples of 1/4
space = state.current
for p, row in zip(space.points, space.matrix):
    print(p, " ".join(str(v) for v in row))
