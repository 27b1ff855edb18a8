"""Zero-shot vision-language navigation: a think / question-answer / act agent loop
over a navigation-graph simulator, with depth-based object distances, trajectory
memory and standard trajectory metrics."""

from .agent import AgentConfig, Trajectory, act, build_preamble, parse_action, run_episode, think
from .backends import Backends, make_backends
from .environment import Candidate, Environment, candidates_at, load_environment, load_environments
from .eval import Episode, EpisodeMetrics, aggregate, run_benchmark, score_trajectory
from .interaction import Thought, generate_questions, investigate_candidates
from .memory import MemoryBank, MemoryEntry, render_memory, summarize_step
from .navgraph import NavGraph, Pose, Position, geodesic_distance, heading_sector, relative_bearing
from .perception import (
    PerceptionOptions,
    Snapshot,
    build_snapshot,
    consolidate_vertical,
    object_distance_center,
    object_distance_masked,
)

__version__ = "0.1.0"
