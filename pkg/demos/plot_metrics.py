"""
Scoring trajectories on a navigation graph
==========================================

Build a small corridor graph, walk a few trajectories through it and see how
trajectory length, navigation error, success and SPL respond.
"""

# %%
# A corridor of four viewpoints, 2 m apart, with a side room off ``B``.
from vlnloop.environment import Environment
from vlnloop.eval import Episode, aggregate, score_trajectory
from vlnloop.navgraph import NavGraph, Position, geodesic_distance
from vlnloop.suites import make_cells

pos = {
    "A": Position(0, 0),
    "B": Position(0, 2),
    "C": Position(0, 4),
    "D": Position(0, 6),
    "R": Position(3, 2),
}
graph = NavGraph(pos, [("A", "B"), ("B", "C"), ("C", "D"), ("B", "R")])
env = Environment("corridor", graph, {v: make_cells(v) for v in pos})
print("geodesic A -> D:", geodesic_distance(graph, "A", "D"))

# %%
# The ground-truth route runs from A to D. Compare an exact walk, a detour
# through the side room, a walk that stops one viewpoint short, and one that
# ends in the side room.
episode = Episode(0, "corridor", ("Walk to the end of the corridor.",), ("A", "B", "C", "D"))
walks = {
    "exact": ["A", "B", "C", "D"],
    "detour": ["A", "B", "R", "B", "C", "D"],
    "short": ["A", "B", "C"],
    "lost": ["A", "B", "R"],
}
scores = {}
for name, visited in walks.items():
    m = score_trajectory(env, episode, visited)
    scores[name] = m
    print(f"{name:>7}: TL {m.TL:5.2f}  NE {m.NE:4.2f}  success {m.success}  "
          f"oracle {m.oracle_success}  SPL {m.SPL:.3f}")

# %%
# Stopping 2 m short still counts as a success, because the radius is 3 m.
# The detour is also a success, but SPL discounts it by 6 / 12.
# Benchmark-level numbers are means, with the rates given as percentages.
print(aggregate(list(scores.values())).table("four walks"))
