"""Optimize a molecule with the PUCT-guided tree search, then show the
selected multi-step trajectory.

Run:  python demos/03_tree_search.py
"""

from moledit import (
    OptimizationTask,
    SearchConfig,
    exact_oracle_scorer,
    get_property,
    parse_smiles,
    run_search,
)

start = "CCO"
task = OptimizationTask(parse_smiles(start), "wiener_index", direction=+1)
cfg = SearchConfig(num_simulations=200, max_depth=5, seed=7)
scorer = exact_oracle_scorer(get_property("wiener_index"))

trajectory, stats = run_search(task, cfg, scorer)

print(f"start            : {start}")
print(f"selected         : {trajectory.selected}")
print(f"predicted total  : {trajectory.predicted_total:+.1f}")
print(f"expansions       : {stats.nodes_expanded} over {stats.simulations} simulations")
print(f"tree size        : {stats.tree_nodes} nodes, {stats.wall_seconds:.2f}s")
print("\ntrajectory:")
cursor = start
for step in trajectory.steps:
    detail = step.action.params or dict(zip(("u", "v"), step.action.sites))
    print(f"  {cursor:<14} --{step.action.op} {detail}--> "
          f"{step.smiles:<14} delta {step.delta_hat:+.1f}")
    cursor = step.smiles

print("\n== direction matters ==")
down = OptimizationTask(parse_smiles(start), "heavy_atom_count", direction=-1)
trajectory, _ = run_search(down, SearchConfig(num_simulations=50, seed=7))
print("shrinking heavy_atom_count is impossible (no deletion op):",
      "flagged" if trajectory.flagged else "unexpected!")
