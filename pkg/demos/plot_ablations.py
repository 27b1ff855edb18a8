"""
Ablating question answering and object distances
================================================

Two designed suites isolate the two information channels. In the first, the
right doorway is marked only by a landmark more than 3 m away. The snapshot
filters such objects out, so only the question-answer step can find it. In the
second, the right door is the closer one, so the agent needs the distance
annotations.
"""

# %%
from vlnloop.agent import AgentConfig
from vlnloop.backends import make_backends
from vlnloop.eval import run_benchmark
from vlnloop.suites import distance_suite, qai_suite


def run(suite, **flags):
    cfg = AgentConfig(**flags)
    backends = make_backends(
        "heuristic", seed=0,
        report_distance=cfg.include_distances, use_segmentation=cfg.use_segmentation,
    )
    summary, _ = run_benchmark(suite.envs, suite.episodes, cfg, backends)
    return cfg.label, summary


# %%
qai = qai_suite(20, seed=0)
for flags in ({}, {"qai_enabled": False}):
    label, summary = run(qai, **flags)
    print(summary.table(label).splitlines()[-1])

# %%
# Half of the distance suite has raw depth and masks in place of stored
# distances. Those door frames are open, so turning segmentation off moves
# their estimate onto the back wall.
dist = distance_suite(20, seed=0)
for flags in ({}, {"include_distances": False}, {"use_segmentation": False}):
    label, summary = run(dist, **flags)
    print(summary.table(label).splitlines()[-1])
