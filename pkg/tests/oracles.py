"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written from the definitions, not from the
library's code paths: straightforward loops, plain BFS, union-find cycle
counting, and a tuple-based fingerprint without integer hashing.
"""

from __future__ import annotations

import random

from moledit.edits import EditAction, apply
from moledit.molgraph import (
    SUPPORTED_ELEMENTS,
    Bond,
    Molecule,
    canonicalize,
    check_validity,
)
from moledit.scorer import get_property

ATOM_PARITIES = ("counterclockwise", "clockwise")
BOND_FLAGS = ("cis", "trans")


def removal_keeps_connected(m: Molecule, u: int, v: int) -> bool:
    """Cycle test by deletion: independent of the library's bridge finding."""
    n = len(m.atoms)
    adj = {i: set() for i in range(n)}
    for b in m.bonds:
        if (b.u, b.v) != (min(u, v), max(u, v)):
            adj[b.u].add(b.v)
            adj[b.v].add(b.u)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


def generate_syntactic_actions(m: Molecule) -> list[EditAction]:
    """Second implementation of the syntactic action space."""
    n = len(m.atoms)
    bonded = {(b.u, b.v) for b in m.bonds}
    order_of = {(b.u, b.v): b.order for b in m.bonds}
    actions: list[EditAction] = []

    for i in range(n):
        for el in SUPPORTED_ELEMENTS:
            if el != m.atoms[i].element:
                actions.append(EditAction("AtomReplace", (i,), {"element": el}))
    for i in range(n):
        for el in SUPPORTED_ELEMENTS:
            actions.append(EditAction("AtomAdd", (i,), {"element": el}))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in bonded:
                actions.append(EditAction("RingForm", (u, v)))
    for (u, v) in sorted(bonded):
        if removal_keeps_connected(m, u, v):
            actions.append(EditAction("RingOpen", (u, v)))
    for (u, v), order in sorted(order_of.items()):
        if order == 1:
            actions.append(EditAction("DoubleBondForm", (u, v)))
            actions.append(EditAction("TripleBondForm", (u, v)))
        if order == 2:
            actions.append(EditAction("DoubleToSingle", (u, v)))
        if order == 3:
            actions.append(EditAction("TripleToSingle", (u, v)))
    for i in range(n):
        if m.atoms[i].parity is None and m.degree(i) >= 3:
            for value in ATOM_PARITIES:
                actions.append(EditAction("AddStereo", (i,), {"value": value}))
        if m.atoms[i].parity is not None:
            actions.append(EditAction("RemoveStereo", (i,)))
    for b in m.bonds:
        if b.order == 2 and b.stereo is None:
            ok = True
            for endpoint in (b.u, b.v):
                partner = b.other(endpoint)
                singles = [j for j, o, _ in m.adjacency[endpoint]
                           if o == 1 and j != partner]
                ok = ok and bool(singles)
            if ok:
                for value in BOND_FLAGS:
                    actions.append(EditAction("AddStereo", (b.u, b.v),
                                              {"value": value}))
        if b.stereo is not None:
            actions.append(EditAction("RemoveStereo", (b.u, b.v)))
    for center in range(n):
        outside = [x for x in range(n)
                   if x != center and (min(center, x), max(center, x)) not in bonded]
        for a_idx in range(len(outside)):
            for b_idx in range(a_idx + 1, len(outside)):
                x, y = outside[a_idx], outside[b_idx]
                first = (min(center, x), max(center, x))
                second = (min(center, y), max(center, y))
                if second < first:
                    first, second = second, first
                actions.append(EditAction("DoubleRingForm", first + second))
    ring_bonds = [(b.u, b.v) for b in m.bonds
                  if removal_keeps_connected(m, b.u, b.v)]
    for center in range(n):
        incident = sorted(k for k in ring_bonds if center in k)
        for a_idx in range(len(incident)):
            for b_idx in range(a_idx + 1, len(incident)):
                first, second = incident[a_idx], incident[b_idx]
                if second < first:
                    first, second = second, first
                actions.append(EditAction("DoubleRingOpen", first + second))
    return actions


def brute_force_feasible_keys(m: Molecule) -> set[str]:
    """Every syntactic action applied, validity-filtered, key-deduplicated."""
    keys = set()
    for action in generate_syntactic_actions(m):
        candidate = apply(m, action)
        if check_validity(candidate):
            keys.add(canonicalize(candidate))
    return keys


def spanning_tree_cycle_count(m: Molecule) -> int:
    """Independent cycles counted by union-find spanning-tree construction."""
    parent = list(range(len(m.atoms)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cycles = 0
    for b in m.bonds:
        ru, rv = find(b.u), find(b.v)
        if ru == rv:
            cycles += 1
        else:
            parent[ru] = rv
    return cycles


def bfs_shortest_length(m_from: Molecule, m_to: Molecule,
                        max_len: int) -> int | None:
    """Plain level-by-level shortest edit distance, no pruning heuristics."""
    from moledit.edits import feasible_actions

    target = canonicalize(m_to)
    if canonicalize(m_from) == target:
        return 0
    frontier = [m_from]
    visited = {canonicalize(m_from)}
    for depth in range(1, max_len + 1):
        nxt = []
        for mol in frontier:
            for _, m2 in feasible_actions(mol):
                key = canonicalize(m2)
                if key in visited:
                    continue
                visited.add(key)
                if key == target:
                    return depth
                nxt.append(m2)
        frontier = nxt
    return None


def exhaustive_search_optimum(start: Molecule, property_name: str,
                              direction: int, depth: int):
    """Best signed true-property improvement over every reachable state
    within ``depth`` edits, plus the internal tree-path count (the expansion
    work an un-pruned search needs for full coverage)."""
    from moledit.edits import feasible_actions

    oracle = get_property(property_name)
    y0 = oracle(start)
    best = 0.0
    frontier = {canonicalize(start): (start, 1)}  # state -> (mol, path count)
    seen = set(frontier)
    internal_paths = 0
    for _ in range(depth):
        nxt: dict[str, tuple[Molecule, int]] = {}
        for mol, paths in frontier.values():
            internal_paths += paths
            for _, m2 in feasible_actions(mol):
                key = canonicalize(m2)
                best = max(best, direction * (oracle(m2) - y0))
                if key in nxt:
                    old_mol, old_paths = nxt[key]
                    nxt[key] = (old_mol, old_paths + paths)
                elif key not in seen:
                    nxt[key] = (m2, paths)
        seen.update(nxt)
        frontier = nxt
    return best, internal_paths


def summarize_recompute(records, direction: int):
    """Second summary implementation: plain accumulators."""
    total = 0.0
    wins = 0
    seconds = 0.0
    for r in records:
        if direction == 1:
            d = r.y_result - r.y_start
        else:
            d = r.y_start - r.y_result
        total += d
        if d > 0:
            wins += 1
        seconds += r.wall_seconds
    n = len(records)
    return total / n, wins / n, seconds / n / 60.0


def fingerprint_tuples(m: Molecule, radius: int = 2) -> frozenset:
    """Second circular fingerprint: raw nested tuples instead of int hashes."""
    n = len(m.atoms)
    adj = m.adjacency
    parity = {None: 0, "counterclockwise": 1, "clockwise": 2}
    ids = [
        ("atom", m.atoms[i].element, parity[m.atoms[i].parity],
         len(adj[i]), m.order_sums[i])
        for i in range(n)
    ]
    collected = set(ids)
    for _ in range(radius):
        ids = [
            (ids[i], tuple(sorted((o, s, ids[j]) for j, o, s in adj[i])))
            for i in range(n)
        ]
        collected.update(ids)
    return frozenset(collected)


def permuted(m: Molecule, perm: list[int]) -> Molecule:
    """Relabel atoms: position k of ``perm`` names the old index moved to k."""
    inverse = {old: new for new, old in enumerate(perm)}
    atoms = tuple(m.atoms[old] for old in perm)
    bonds = tuple(Bond(inverse[b.u], inverse[b.v], b.order, b.stereo)
                  for b in m.bonds)
    return Molecule(atoms, bonds)


def random_valid_molecule(rng: random.Random, max_steps: int = 6,
                          seeds: tuple[str, ...] = ("C", "N", "O", "CC", "CCO"),
                          elements: tuple[str, ...] | None = None) -> Molecule:
    """Random walk through the feasible edit space from a small seed."""
    from moledit.edits import feasible_actions
    from moledit.molgraph import parse_smiles

    mol = parse_smiles(rng.choice(seeds))
    for _ in range(rng.randrange(max_steps + 1)):
        options = feasible_actions(mol)
        if elements is not None:
            options = [
                (a, m2) for a, m2 in options
                if a.params.get("element") in (None, *elements)
            ]
        if not options:
            break
        mol = rng.choice(options)[1]
    return mol
