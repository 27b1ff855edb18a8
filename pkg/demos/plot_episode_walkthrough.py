"""
One episode, step by step
=========================

Run the heuristic agent on a two-junction world and print what it sees,
thinks, asks and chooses at every step.
"""

# %%
from vlnloop.agent import AgentConfig, run_episode
from vlnloop.backends import make_backends
from vlnloop.suites import qai_suite

suite = qai_suite(1, seed=3)
episode = suite.episodes[0]
env = suite.envs[episode.scan]
print(episode.instructions[0])
print("ground truth:", " -> ".join(episode.path))

# %%
backends = make_backends("heuristic", seed=0)
traj = run_episode(env, episode, AgentConfig(), backends)
for step in traj.steps:
    print(f"\n--- step {step.step} at {step.viewpoint}")
    print("thought :", step.thought)
    print("menu    :")
    print(step.menu)
    print("action  :", step.action)
    print("memory  :", step.memory["summary"])

# %%
# The call log shows which backends were hit and how often.
print("\nvisited:", traj.visited, "termination:", traj.termination)
for phase in ("think", "questions", "act", "vqa"):
    print(f"{phase:>9}: {backends.log.count(phase=phase)} calls")
