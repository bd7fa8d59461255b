"""Edit-response scoring: property oracles and batch candidate scorers.

An :class:`EditScorer` estimates, for each candidate edit, how much the
target property would change if the edit were applied. The built-in scorers
are deterministic stand-ins for a trained response model: an exact scorer
that queries the true property oracle, a table-driven group-contribution
approximation, and a seeded noisy wrapper for robustness experiments.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .edits import EditAction
from .molgraph import Molecule, canonicalize, ring_count

# CIAAW standard atomic weights (abridged)
ATOMIC_WEIGHTS = {
    "H": 1.008, "B": 10.811, "C": 12.011, "N": 14.007, "O": 15.999,
    "F": 18.998, "P": 30.974, "S": 32.06, "Cl": 35.45, "Br": 79.904,
    "I": 126.904,
}


class UnknownPropertyError(KeyError):
    """Lookup of a property oracle name that is not registered."""


@dataclass(frozen=True)
class PropertyOracle:
    """Named deterministic property function over valid molecules."""

    name: str
    fn: Callable[[Molecule], float]

    def __call__(self, m: Molecule) -> float:
        return self.fn(m)


@dataclass(frozen=True)
class EditScorer:
    """Named batch scorer: (m_from, candidates) -> predicted delta per candidate."""

    name: str
    score_batch: Callable[
        [Molecule, Sequence[tuple[EditAction, Molecule]]], list[float]
    ]


def heavy_atom_count(m: Molecule) -> float:
    return float(len(m.atoms))


def molecular_weight(m: Molecule) -> float:
    """Standard-atomic-weight sum including implicit hydrogens."""
    total = 0.0
    for i, atom in enumerate(m.atoms):
        total += ATOMIC_WEIGHTS[atom.element]
        total += ATOMIC_WEIGHTS["H"] * m.implicit_hydrogens(i)
    return total


def wiener_index(m: Molecule) -> float:
    """Sum of shortest-path distances over all heavy-atom pairs."""
    n = len(m.atoms)
    nbrs = m.neighbors
    total = 0
    for start in range(n):
        dist = [-1] * n
        dist[start] = 0
        frontier = [start]
        while frontier:
            nxt = []
            for i in frontier:
                d = dist[i] + 1
                for j in nbrs[i]:
                    if dist[j] < 0:
                        dist[j] = d
                        nxt.append(j)
            frontier = nxt
        total += sum(d for d in dist[start + 1:] if d > 0)
    return float(total)


def polarity_proxy(m: Molecule) -> float:
    """Count of N/O/F atoms minus half the count of C atoms."""
    counts = m.element_counts
    hetero = counts.get("N", 0) + counts.get("O", 0) + counts.get("F", 0)
    return hetero - 0.5 * counts.get("C", 0)


_PROPERTY_REGISTRY = {
    "heavy_atom_count": PropertyOracle("heavy_atom_count", heavy_atom_count),
    "molecular_weight": PropertyOracle("molecular_weight", molecular_weight),
    "ring_count": PropertyOracle("ring_count", lambda m: float(ring_count(m))),
    "wiener_index": PropertyOracle("wiener_index", wiener_index),
    "polarity_proxy": PropertyOracle("polarity_proxy", polarity_proxy),
}


def builtin_properties() -> list[PropertyOracle]:
    return list(_PROPERTY_REGISTRY.values())


def get_property(name: str) -> PropertyOracle:
    try:
        return _PROPERTY_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_PROPERTY_REGISTRY))
        raise UnknownPropertyError(
            f"unknown property {name!r}; known: {known}") from None


def exact_oracle_scorer(p: PropertyOracle) -> EditScorer:
    """Scorer whose predictions equal the true per-edit property response."""
    cache: dict[str, float] = {}

    def evaluate(m: Molecule) -> float:
        key = canonicalize(m)
        value = cache.get(key)
        if value is None:
            value = p(m)
            cache[key] = value
        return value

    def score_batch(m_from, candidates):
        base = evaluate(m_from)
        return [evaluate(m_to) - base for _, m_to in candidates]

    return EditScorer(f"exact[{p.name}]", score_batch)


def _context_key(op: str, m_from: Molecule, action: EditAction) -> str:
    return f"{op}:{m_from.atoms[action.sites[0]].element}"


def group_contribution_scorer(table: dict[str, float]) -> EditScorer:
    """Table-driven scorer keyed by op kind with optional ``op:element``
    refinements, where the element is the pre-edit element of the first site
    atom. Missing entries default to 0. By construction the prediction
    ignores global structure, so it is an approximation with controllable
    error against the exact scorer."""
    table = dict(table)

    def score_batch(m_from, candidates):
        out = []
        for action, _ in candidates:
            refined = table.get(_context_key(action.op, m_from, action))
            if refined is not None:
                out.append(refined)
            else:
                out.append(table.get(action.op, 0.0))
        return out

    return EditScorer("group_contribution", score_batch)


def fit_group_contribution(
    samples, holdout_fraction: float = 0.2, seed: int = 0
) -> tuple[dict[str, float], dict[str, float]]:
    """Least-squares fit of a group-contribution table from edit-response
    samples (per-key means, which solve the disjoint-indicator regression),
    reporting MAE on a held-out split.

    Returns (table, stats) with stats keys train_n, test_n, mae.
    """
    indexed = list(samples)
    rng = random.Random(seed)
    rng.shuffle(indexed)
    n_test = int(len(indexed) * holdout_fraction)
    test, train = indexed[:n_test], indexed[n_test:]
    if not train:
        raise ValueError("no training samples")

    by_refined: dict[str, list[float]] = {}
    by_base: dict[str, list[float]] = {}
    for s in train:
        refined = _context_key(s.edit.op, s.m_from, s.edit)
        by_refined.setdefault(refined, []).append(s.delta)
        by_base.setdefault(s.edit.op, []).append(s.delta)
    table = {key: float(np.mean(vals)) for key, vals in by_base.items()}
    table.update({key: float(np.mean(vals)) for key, vals in by_refined.items()})

    scorer = group_contribution_scorer(table)
    errors = []
    for s in test:
        pred = scorer.score_batch(s.m_from, [(s.edit, s.m_to)])[0]
        errors.append(abs(pred - s.delta))
    mae = float(np.mean(errors)) if errors else float("nan")
    return table, {"train_n": len(train), "test_n": len(test), "mae": mae}


def load_group_table(path: str) -> dict[str, float]:
    """Read a {op_kind: value} JSON table with optional ``op:element`` keys."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("group table must be a JSON object")
    return {str(k): float(v) for k, v in raw.items()}


def noisy_scorer(base: EditScorer, sigma: float, seed: int) -> EditScorer:
    """Adds zero-mean Gaussian noise (std ``sigma``) to each base score.

    Noise is keyed by (seed, canonical key of m_from, candidate index), so
    results do not depend on call order or batching.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")

    def score_batch(m_from, candidates):
        values = base.score_batch(m_from, candidates)
        if sigma == 0.0:
            return values
        key = canonicalize(m_from)
        out = []
        for index, value in enumerate(values):
            digest = hashlib.blake2b(
                f"{seed}|{key}|{index}".encode(), digest_size=8
            ).digest()
            draw = random.Random(int.from_bytes(digest, "big")).gauss(0.0, 1.0)
            out.append(value + sigma * draw)
        return out

    return EditScorer(f"noisy[{base.name},sigma={sigma}]", score_batch)
