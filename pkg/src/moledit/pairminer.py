"""Process-level supervision from endpoint labels.

Mines related molecule pairs out of a labeled set, decomposes each pair's
structural difference into a shortest feasible edit sequence, and emits one
edit-response sample per step, with intermediate molecules labeled by the
supplied property oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .edits import EditAction, apply, describe, feasible_actions
from .molgraph import Molecule, canonicalize, parse_smiles, write_smiles
from .scorer import PropertyOracle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledMolecule:
    molecule: Molecule
    property_value: float


@dataclass(frozen=True)
class EditResponseSample:
    """One supervision tuple: a single feasible edit and its property response."""

    m_from: Molecule
    m_to: Molecule
    edit: EditAction
    descriptor: tuple[float, ...]
    delta: float

    def to_json(self) -> dict:
        return {
            "from": write_smiles(self.m_from),
            "to": write_smiles(self.m_to),
            "edit": self.edit.to_json(),
            "descriptor": list(self.descriptor),
            "delta": self.delta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EditResponseSample":
        m_from = parse_smiles(obj["from"])
        edit = EditAction.from_json(obj["edit"])
        return cls(
            m_from=m_from,
            m_to=parse_smiles(obj["to"]),
            edit=edit,
            descriptor=tuple(obj["descriptor"]),
            delta=float(obj["delta"]),
        )


def _growth_lower_bound(source: Molecule, target: Molecule) -> int:
    """Admissible edit-count bound: atoms can be added or relabeled, never
    deleted, so the atom deficit plus the count of excess elements bounds the
    sequence length from below. Returns a large value when unreachable."""
    deficit = len(target.atoms) - len(source.atoms)
    if deficit < 0:
        return 1 << 30
    src, tgt = source.element_counts, target.element_counts
    excess = sum(max(0, c - tgt.get(el, 0)) for el, c in src.items())
    return deficit + excess


def decompose(
    m_from: Molecule, m_to: Molecule, max_len: int
) -> list[EditAction] | None:
    """Shortest feasible edit sequence turning ``m_from`` into a molecule
    isomorphic to ``m_to``, every intermediate chemically valid.

    Exact level-by-level search with a canonical-key visited set; ties among
    equal-length sequences follow the deterministic enumeration order.
    Returns None when no sequence of length <= max_len exists (a legal
    outcome, not an error).
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    target_key = canonicalize(m_to)
    if canonicalize(m_from) == target_key:
        return []
    frontier: list[tuple[Molecule, list[EditAction]]] = [(m_from, [])]
    visited = {canonicalize(m_from)}
    for depth in range(1, max_len + 1):
        remaining = max_len - depth
        nxt: list[tuple[Molecule, list[EditAction]]] = []
        for mol, path in frontier:
            if _growth_lower_bound(mol, m_to) > remaining + 1:
                continue
            for action, m2 in feasible_actions(mol):
                key = canonicalize(m2)
                if key in visited:
                    continue
                visited.add(key)
                if key == target_key:
                    return path + [action]
                if depth < max_len:
                    nxt.append((m2, path + [action]))
        frontier = nxt
        if not frontier:
            break
    return None


def _candidate_pairs(entries, max_edit_distance: int):
    keys = [canonicalize(e.molecule) for e in entries]
    for i in range(len(entries)):
        for j in range(len(entries)):
            if i == j or keys[i] == keys[j]:
                continue
            bound = _growth_lower_bound(entries[i].molecule, entries[j].molecule)
            if bound <= max_edit_distance:
                yield i, j


def mine_pairs(
    entries: list[LabeledMolecule], max_edit_distance: int, limit: int
) -> list[tuple[int, int]]:
    """Ordered index pairs whose molecules are connected by a feasible edit
    sequence of length <= max_edit_distance (verified by decomposition).

    Both directions are attempted: molecules can only grow under the action
    space, so decomposability is asymmetric.
    """
    if max_edit_distance < 1:
        raise ValueError("max_edit_distance must be >= 1")
    pairs: list[tuple[int, int]] = []
    for i, j in _candidate_pairs(entries, max_edit_distance):
        seq = decompose(entries[i].molecule, entries[j].molecule, max_edit_distance)
        if seq:
            pairs.append((i, j))
            if len(pairs) >= limit:
                break
    return pairs


def build_dataset(
    entries: list[LabeledMolecule],
    oracle: PropertyOracle,
    max_edit_distance: int,
    limit: int,
) -> list[EditResponseSample]:
    """One sample per decomposition step over every mined pair.

    Intermediate molecules have no labels in the input set, so every delta is
    computed from the oracle: delta = oracle(step end) - oracle(step start).
    Oracle failures skip the pair with a logged warning.
    """
    samples: list[EditResponseSample] = []
    for i, j in mine_pairs(entries, max_edit_distance, limit):
        seq = decompose(entries[i].molecule, entries[j].molecule, max_edit_distance)
        current = entries[i].molecule
        try:
            y_current = oracle(current)
            chain: list[EditResponseSample] = []
            for action in seq:
                nxt = apply(current, action)
                y_next = oracle(nxt)
                chain.append(EditResponseSample(
                    m_from=current,
                    m_to=nxt,
                    edit=action,
                    descriptor=describe(current, action),
                    delta=y_next - y_current,
                ))
                current, y_current = nxt, y_next
        except Exception as exc:  # oracle failure: skip the whole pair
            logger.warning("skipping pair (%d, %d): oracle failed: %s", i, j, exc)
            continue
        samples.extend(chain)
    return samples


def read_labeled_file(path: str) -> list[LabeledMolecule]:
    """Parse a labeled molecule file: one ``SMILES<tab>value`` per line."""
    entries: list[LabeledMolecule] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                smiles, value = line.split("\t")
                entries.append(LabeledMolecule(parse_smiles(smiles), float(value)))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return entries
