"""Evaluation metrics over batches of optimization runs.

Signed per-run improvement, batch summaries (average improvement, success
rate, timing), rank-sum comparison across configurations, and the circular
substructure fingerprint similarity used as a structural-retention reference
metric.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .molgraph import Molecule

_PARITY_FP = {None: 0, "counterclockwise": 1, "clockwise": 2}
_STEREO_FP = {None: 0, "cis": 1, "trans": 2}


class EmptyBatchError(ValueError):
    """Summary requested over zero run records."""


@dataclass(frozen=True)
class RunRecord:
    """One optimization run evaluated with true property values."""

    start: Molecule
    result: Molecule
    y_start: float
    y_result: float
    wall_seconds: float = 0.0


@dataclass(frozen=True)
class RunSummary:
    avg_imp: float
    suc_rate: float
    avg_time_minutes: float
    n: int


def delta(record: RunRecord, direction: int) -> float:
    """Signed improvement: y_result - y_start for increase tasks,
    y_start - y_result for decrease tasks."""
    return direction * (record.y_result - record.y_start)


def summarize(records: list[RunRecord], direction: int) -> RunSummary:
    """Average improvement, strict success rate (delta > 0), mean minutes."""
    if not records:
        raise EmptyBatchError("no run records")
    deltas = [delta(r, direction) for r in records]
    successes = sum(1 for d in deltas if d > 0)
    return RunSummary(
        avg_imp=float(np.mean(deltas)),
        suc_rate=successes / len(records),
        avg_time_minutes=float(np.mean([r.wall_seconds for r in records])) / 60.0,
        n=len(records),
    )


def _competition_ranks(values: list[float], higher_better: bool) -> list[int]:
    # ties share the minimum rank ("1224" ranking)
    ranks = []
    for v in values:
        if higher_better:
            better = sum(1 for w in values if w > v)
        else:
            better = sum(1 for w in values if w < v)
        ranks.append(1 + better)
    return ranks


def rank_sum(configs: dict[str, RunSummary]) -> dict[str, int]:
    """Overall rank per configuration: rank each metric (avg_imp and suc_rate
    higher-better, avg_time lower-better, ties share the minimum rank), sum
    the three ranks, then rank the sums ascending."""
    if len(configs) < 2:
        raise ValueError("rank_sum needs at least two configurations")
    names = list(configs)
    imp = _competition_ranks([configs[n].avg_imp for n in names], True)
    suc = _competition_ranks([configs[n].suc_rate for n in names], True)
    tim = _competition_ranks([configs[n].avg_time_minutes for n in names], False)
    sums = [i + s + t for i, s, t in zip(imp, suc, tim)]
    overall = _competition_ranks([float(s) for s in sums], False)
    return dict(zip(names, overall))


def _stable_hash(payload: tuple) -> int:
    digest = hashlib.blake2b(repr(payload).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def fingerprint(m: Molecule, radius: int = 2) -> frozenset[int]:
    """Circular substructure identifiers up to ``radius`` iterations of
    neighborhood hashing, starting from local atom invariants."""
    n = len(m.atoms)
    adj = m.adjacency
    ids = [
        _stable_hash((
            "atom",
            m.atoms[i].element,
            _PARITY_FP[m.atoms[i].parity],
            len(adj[i]),
            m.order_sums[i],
        ))
        for i in range(n)
    ]
    collected = set(ids)
    for _ in range(radius):
        ids = [
            _stable_hash((ids[i], tuple(sorted(
                (order, stereo, ids[j]) for j, order, stereo in adj[i]
            ))))
            for i in range(n)
        ]
        collected.update(ids)
    return frozenset(collected)


def morgan_tanimoto(a: Molecule, b: Molecule, radius: int = 2) -> float:
    """Tanimoto similarity of the circular fingerprints of both molecules.

    Comparable within this artifact only; bit-level parity with external
    fingerprint implementations is not a goal.
    """
    fa, fb = fingerprint(a, radius), fingerprint(b, radius)
    return len(fa & fb) / len(fa | fb)
