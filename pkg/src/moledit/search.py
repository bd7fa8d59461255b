"""Multi-step molecule optimization by guided tree search.

A PUCT-driven Monte Carlo tree search composes batch edit-response scores
into child priors and accumulated path responses; the same scores define
leaf values for backup. A breadth-first baseline with matched expansion
budget is provided for comparison, along with switches that ablate the
prior, the leaf value, and scored top-K retention.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from .edits import EditAction, feasible_actions
from .molgraph import Molecule, write_smiles
from .scorer import EditScorer, exact_oracle_scorer, get_property

UNEXPANDED = "unexpanded"
EXPANDED = "expanded"
TERMINAL = "terminal"
PRUNED = "pruned"

RANKING_SCORED = "scored"
RANKING_RANDOM = "random"


class NoViableChildError(RuntimeError):
    """All children of an expanded node are pruned."""


class DegenerateStartError(ValueError):
    """The start molecule admits no feasible edit at all."""


@dataclass
class OptimizationTask:
    """One optimization instance: start state, objective, direction, limits."""

    start: Molecule
    property_name: str
    direction: int
    max_depth: int | None = None
    scorer_name: str = "exact"

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass
class SearchConfig:
    num_simulations: int = 800
    exploration_weight: float = 2.0
    max_depth: int = 10
    pruning_patience: int = 3
    max_branching: int = 10
    seed: int = 0
    use_prior: bool = True
    use_leaf_value: bool = True
    expansion_ranking: str = RANKING_SCORED
    strategy: str = "mcts"

    def __post_init__(self):
        if min(self.num_simulations, self.max_depth,
               self.pruning_patience, self.max_branching) < 1:
            raise ValueError("all search counts must be >= 1")
        if self.exploration_weight <= 0:
            raise ValueError("exploration weight must be > 0")
        if self.expansion_ranking not in (RANKING_SCORED, RANKING_RANDOM):
            raise ValueError(f"bad expansion_ranking {self.expansion_ranking!r}")
        if self.strategy not in ("mcts", "bfs"):
            raise ValueError(f"bad strategy {self.strategy!r}")


class SearchNode:
    """Tree node: molecule state plus standard search statistics."""

    __slots__ = ("molecule", "depth", "g", "visits", "total_value", "prior",
                 "inbound_action", "inbound_delta", "parent", "children",
                 "status", "stagnation")

    def __init__(self, molecule: Molecule, depth: int, g: float,
                 prior: float = 1.0, inbound_action: EditAction | None = None,
                 inbound_delta: float = 0.0, parent: "SearchNode | None" = None,
                 stagnation: int = 0, status: str = UNEXPANDED):
        self.molecule = molecule
        self.depth = depth
        self.g = g
        self.visits = 0
        self.total_value = 0.0
        self.prior = prior
        self.inbound_action = inbound_action
        self.inbound_delta = inbound_delta
        self.parent = parent
        self.children: list[SearchNode] = []
        self.status = status
        self.stagnation = stagnation

    @property
    def q(self) -> float:
        return self.total_value / self.visits if self.visits > 0 else 0.0


@dataclass
class TrajectoryStep:
    action: EditAction
    smiles: str
    delta_hat: float


@dataclass
class Trajectory:
    start: str
    selected: str
    predicted_total: float
    steps: list[TrajectoryStep]
    flagged: bool = False

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "selected": self.selected,
            "predicted_total": self.predicted_total,
            "steps": [
                {"edit": s.action.to_json(), "smiles": s.smiles,
                 "delta_hat": s.delta_hat}
                for s in self.steps
            ],
            "flagged": self.flagged,
        }


@dataclass
class RunStats:
    simulations: int = 0
    nodes_expanded: int = 0
    scorer_batches: int = 0
    tree_nodes: int = 1
    wall_seconds: float = 0.0
    flagged: bool = False

    def to_json(self) -> dict:
        # wall time is excluded: output files must be byte-identical across runs
        return {
            "simulations": self.simulations,
            "nodes_expanded": self.nodes_expanded,
            "scorer_batches": self.scorer_batches,
            "tree_nodes": self.tree_nodes,
        }


def utility(g: float, direction: int) -> float:
    """Signed path response: direction * accumulated predicted delta."""
    return direction * g


def softmax(values: list[float]) -> list[float]:
    peak = max(values)
    exps = [math.exp(v - peak) for v in values]
    total = sum(exps)
    return [e / total for e in exps]


def expand(node: SearchNode, scorer: EditScorer, cfg: SearchConfig,
           direction: int, rng: random.Random, stats: RunStats,
           max_depth: int) -> list[SearchNode]:
    """Enumerate feasible edits, batch-score them, retain top-K, attach
    children with softmax priors and accumulated path responses."""
    candidates = feasible_actions(node.molecule)
    stats.nodes_expanded += 1
    if not candidates:
        node.status = TERMINAL
        return []
    deltas = scorer.score_batch(node.molecule, candidates)
    stats.scorer_batches += 1
    scores = [utility(node.g + d, direction) for d in deltas]

    k = min(cfg.max_branching, len(candidates))
    if cfg.expansion_ranking == RANKING_RANDOM:
        retained = rng.sample(range(len(candidates)), k)
    else:
        retained = sorted(range(len(candidates)),
                          key=lambda i: (-scores[i], i))[:k]

    if cfg.use_prior:
        priors = softmax([scores[i] for i in retained])
    else:
        priors = [1.0 / k] * k

    children = []
    for prior, i in zip(priors, retained):
        action, molecule = candidates[i]
        delta = deltas[i]
        stagnation = 0 if direction * delta > 0 else node.stagnation + 1
        child = SearchNode(
            molecule, node.depth + 1, node.g + delta, prior=prior,
            inbound_action=action, inbound_delta=delta, parent=node,
            stagnation=stagnation,
        )
        # dead at birth: stagnation limit or depth cap forbids further edits
        if stagnation >= cfg.pruning_patience or child.depth >= max_depth:
            child.status = PRUNED
        children.append(child)
    node.children = children
    node.status = EXPANDED
    stats.tree_nodes += len(children)
    return children


def select_child(node: SearchNode, c: float) -> SearchNode:
    """PUCT rule: argmax of Q + c * prior * sqrt(N_parent) / (1 + N_child),
    with Q = 0 for unvisited children; ties go to the lowest child index.

    Pruned and terminal children are not expandable, so they are excluded
    from traversal; when none remain the parent itself is a dead end.
    """
    sqrt_n = math.sqrt(node.visits)
    best = None
    best_score = -math.inf
    for child in node.children:
        if child.status in (PRUNED, TERMINAL):
            continue
        score = child.q + c * child.prior * sqrt_n / (1 + child.visits)
        if score > best_score:
            best_score = score
            best = child
    if best is None:
        raise NoViableChildError("all children pruned")
    return best


def backup(path: list[SearchNode], leaf_value: float) -> None:
    for node in path:
        node.visits += 1
        node.total_value += leaf_value


def _leaf_value(leaf: SearchNode, cfg: SearchConfig, direction: int) -> float:
    if cfg.use_leaf_value:
        return utility(leaf.g, direction)
    return direction * leaf.inbound_delta


def _resolve_scorer(task: OptimizationTask, scorer: EditScorer | None) -> EditScorer:
    if scorer is not None:
        return scorer
    if task.scorer_name == "exact":
        return exact_oracle_scorer(get_property(task.property_name))
    raise ValueError(
        f"scorer {task.scorer_name!r} needs an explicit EditScorer instance")


def _select_result(task: OptimizationTask, root: SearchNode,
                   nodes: list[SearchNode], stats: RunStats) -> Trajectory:
    """Best visited node by utility; falls back to the root (flagged) when no
    node predicts strictly positive improvement."""
    best = None
    best_u = 0.0
    for node in nodes:
        if node is root:
            continue
        u = utility(node.g, task.direction)
        if u > best_u:
            best_u = u
            best = node
    start_smiles = write_smiles(task.start)
    if best is None:
        stats.flagged = True
        return Trajectory(start_smiles, start_smiles, 0.0, [], flagged=True)
    path = []
    node = best
    while node.parent is not None:
        path.append(node)
        node = node.parent
    steps = [
        TrajectoryStep(n.inbound_action, write_smiles(n.molecule), n.inbound_delta)
        for n in reversed(path)
    ]
    return Trajectory(start_smiles, write_smiles(best.molecule), best.g, steps)


def run_search(task: OptimizationTask, cfg: SearchConfig,
               scorer: EditScorer | None = None) -> tuple[Trajectory, RunStats]:
    """PUCT-guided search: repeated select -> expand -> backup simulations.

    Nodes are pruned on stagnation (``pruning_patience`` consecutive edges
    with no signed predicted improvement), at the depth limit, or when no
    feasible edit remains. Fully deterministic given the config seed.
    """
    scorer = _resolve_scorer(task, scorer)
    rng = random.Random(cfg.seed)
    max_depth = task.max_depth if task.max_depth is not None else cfg.max_depth
    stats = RunStats()
    t0 = time.perf_counter()

    root = SearchNode(task.start, 0, 0.0)
    nodes = [root]
    for _ in range(cfg.num_simulations):
        if root.status in (TERMINAL, PRUNED):
            break
        node = root
        path = [root]
        while node.status == EXPANDED:
            try:
                node = select_child(node, cfg.exploration_weight)
            except NoViableChildError:
                node.status = PRUNED
                break
            path.append(node)
        if node.status == UNEXPANDED:
            nodes.extend(expand(node, scorer, cfg, task.direction, rng,
                                stats, max_depth))
        backup(path, _leaf_value(node, cfg, task.direction))
        stats.simulations += 1

    trajectory = _select_result(task, root, nodes, stats)
    stats.wall_seconds = time.perf_counter() - t0
    return trajectory, stats


def run_bfs(task: OptimizationTask, cfg: SearchConfig,
            scorer: EditScorer | None = None) -> tuple[Trajectory, RunStats]:
    """Level-by-level baseline: same scorer, action space and validity rules,
    keeping the top-K frontier by utility at each level; no priors, no
    backup. The node-expansion budget equals ``cfg.num_simulations``."""
    scorer = _resolve_scorer(task, scorer)
    max_depth = task.max_depth if task.max_depth is not None else cfg.max_depth
    budget = cfg.num_simulations
    stats = RunStats()
    t0 = time.perf_counter()

    root = SearchNode(task.start, 0, 0.0)
    nodes = [root]
    frontier = [root]
    visited_keys = {task.start.canonical_key}
    while frontier and frontier[0].depth < max_depth and stats.nodes_expanded < budget:
        level: list[SearchNode] = []
        for node in frontier:
            if stats.nodes_expanded >= budget:
                break
            candidates = feasible_actions(node.molecule)
            stats.nodes_expanded += 1
            if not candidates:
                node.status = TERMINAL
                continue
            deltas = scorer.score_batch(node.molecule, candidates)
            stats.scorer_batches += 1
            node.status = EXPANDED
            for (action, molecule), delta in zip(candidates, deltas):
                level.append(SearchNode(
                    molecule, node.depth + 1, node.g + delta,
                    inbound_action=action, inbound_delta=delta, parent=node,
                ))
        level.sort(key=lambda nd: -utility(nd.g, task.direction))
        retained = []
        for node in level:
            key = node.molecule.canonical_key
            if key in visited_keys:
                continue
            visited_keys.add(key)
            retained.append(node)
            if len(retained) >= cfg.max_branching:
                break
        frontier = retained
        nodes.extend(retained)
        stats.tree_nodes += len(retained)

    trajectory = _select_result(task, root, nodes, stats)
    stats.wall_seconds = time.perf_counter() - t0
    return trajectory, stats


def run(task: OptimizationTask, cfg: SearchConfig,
        scorer: EditScorer | None = None) -> tuple[Trajectory, RunStats]:
    """Dispatch on the configured strategy."""
    if cfg.strategy == "bfs":
        return run_bfs(task, cfg, scorer)
    return run_search(task, cfg, scorer)
