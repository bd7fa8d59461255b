"""Hydrogen-suppressed molecular graphs with a bounded SMILES dialect.

Molecules are immutable. Atoms carry an element symbol plus an optional
tetrahedral parity annotation; bonds carry an integer order (1-3) plus an
optional cis/trans annotation. Hydrogens are never stored: each atom's
implicit hydrogen count is derived from a fixed per-element valence table.

The SMILES dialect covers the neutral organic subset (B, C, N, O, F, P, S,
Cl, Br, I), bond symbols ``- = #``, branches, ring closures (``1``-``9`` and
``%nn``), directional single bonds ``/ \\`` and bracket-atom parity
``@ / @@``. Charges, isotopes, aromatic lowercase forms and wildcards are
rejected explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

SUPPORTED_ELEMENTS = ("B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I")

# Single fixed valence per element; neutral molecules only.
VALENCE_CAPS = {
    "B": 3, "C": 4, "N": 3, "O": 2, "F": 1,
    "P": 3, "S": 2, "Cl": 1, "Br": 1, "I": 1,
}

CLOCKWISE = "clockwise"
COUNTERCLOCKWISE = "counterclockwise"
CIS = "cis"
TRANS = "trans"

_ELEMENT_INDEX = {el: i for i, el in enumerate(SUPPORTED_ELEMENTS)}
_TWO_CHAR_ELEMENTS = ("Cl", "Br")
_PARITY_CODE = {None: 0, COUNTERCLOCKWISE: 1, CLOCKWISE: 2}
_BOND_STEREO_CODE = {None: 0, CIS: 1, TRANS: 2}


class SmilesSyntaxError(ValueError):
    """Malformed SMILES input; carries the 0-based offending position."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)


class UnsupportedFeatureError(SmilesSyntaxError):
    """Syntactically recognizable SMILES feature outside the dialect."""


@dataclass(frozen=True)
class Atom:
    """One heavy atom: element symbol plus optional parity annotation."""

    element: str
    parity: str | None = None

    def __post_init__(self):
        if self.element not in VALENCE_CAPS:
            raise ValueError(f"unsupported element {self.element!r}")
        if self.parity not in (None, CLOCKWISE, COUNTERCLOCKWISE):
            raise ValueError(f"bad parity {self.parity!r}")


@dataclass(frozen=True)
class Bond:
    """Undirected bond; endpoints are stored with u < v."""

    u: int
    v: int
    order: int = 1
    stereo: str | None = None

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError("bond endpoints must be distinct")
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        if self.order not in (1, 2, 3):
            raise ValueError(f"bad bond order {self.order!r}")
        if self.stereo not in (None, CIS, TRANS):
            raise ValueError(f"bad bond stereo {self.stereo!r}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v)

    def other(self, i: int) -> int:
        return self.v if i == self.u else self.u


@dataclass(frozen=True)
class Molecule:
    """Immutable heavy-atom graph.

    Construction enforces structural sanity only (index ranges, no duplicate
    bonds); chemical validity is checked separately by :func:`check_validity`
    so that candidate edits can be materialized before being filtered.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        if n == 0:
            raise ValueError("molecule needs at least one atom")
        seen = set()
        for b in self.bonds:
            if not (0 <= b.u < n and 0 <= b.v < n):
                raise ValueError(f"bond {b.key} out of range")
            if b.key in seen:
                raise ValueError(f"duplicate bond {b.key}")
            seen.add(b.key)

    @cached_property
    def bond_map(self) -> dict[tuple[int, int], Bond]:
        return {b.key: b for b in self.bonds}

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int, int], ...], ...]:
        """Per atom: sorted (neighbor, order, stereo_code) triples."""
        adj: list[list[tuple[int, int, int]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            code = _BOND_STEREO_CODE[b.stereo]
            adj[b.u].append((b.v, b.order, code))
            adj[b.v].append((b.u, b.order, code))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(t[0] for t in a) for a in self.adjacency)

    @cached_property
    def order_sums(self) -> tuple[int, ...]:
        return tuple(sum(t[1] for t in a) for a in self.adjacency)

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def implicit_hydrogens(self, i: int) -> int:
        """May be negative on over-bonded (invalid) atoms."""
        return VALENCE_CAPS[self.atoms[i].element] - self.order_sums[i]

    def bond_between(self, i: int, j: int) -> Bond | None:
        return self.bond_map.get((i, j) if i < j else (j, i))

    @cached_property
    def ring_bond_keys(self) -> frozenset[tuple[int, int]]:
        """Bonds lying on a cycle (non-bridges)."""
        return frozenset(b.key for b in self.bonds) - _bridges(self)

    def in_ring(self, i: int) -> bool:
        return any((min(i, j), max(i, j)) in self.ring_bond_keys
                   for j in self.neighbors[i])

    @cached_property
    def packed_adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom: sorted (neighbor, order*3 + stereo_code) pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            pack = b.order * 3 + _BOND_STEREO_CODE[b.stereo]
            adj[b.u].append((b.v, pack))
            adj[b.v].append((b.u, pack))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def element_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for a in self.atoms:
            counts[a.element] = counts.get(a.element, 0) + 1
        return counts

    @cached_property
    def canonical_key(self) -> str:
        return _canonical_key(self)


def _bridges(m: Molecule) -> set[tuple[int, int]]:
    """Bridge edges via iterative DFS low-link."""
    n = len(m.atoms)
    disc = [-1] * n
    low = [0] * n
    bridges: set[tuple[int, int]] = set()
    timer = 0
    nbrs = m.neighbors
    for start in range(n):
        if disc[start] != -1:
            continue
        stack: list[tuple[int, int, int]] = [(start, -1, 0)]
        while stack:
            node, parent, idx = stack.pop()
            if idx == 0:
                disc[node] = low[node] = timer
                timer += 1
            if idx < len(nbrs[node]):
                stack.append((node, parent, idx + 1))
                child = nbrs[node][idx]
                if child == parent:
                    continue
                if disc[child] != -1:
                    low[node] = min(low[node], disc[child])
                else:
                    stack.append((child, node, 0))
            elif parent != -1:
                low[parent] = min(low[parent], low[node])
                if low[node] > disc[parent]:
                    bridges.add((min(node, parent), max(node, parent)))
    return bridges


def _connected(m: Molecule) -> bool:
    n = len(m.atoms)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    nbrs = m.neighbors
    while stack:
        i = stack.pop()
        for j in nbrs[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                stack.append(j)
    return count == n


class _ParityDSU:
    """Union-find over +-1 variables with relative-parity constraints."""

    def __init__(self):
        self.parent: dict = {}
        self.parity: dict = {}

    def find(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.parity[x] = 0
            return x, 0
        root, p = x, 0
        while self.parent[root] != root:
            p ^= self.parity[root]
            root = self.parent[root]
        # path compression
        node = x
        while self.parent[node] != node:
            nxt = self.parent[node]
            np = self.parity[node]
            self.parent[node] = root
            self.parity[node] = p
            p ^= np
            node = nxt
        return root, self.parity[x]

    def union(self, x, y, parity: int) -> bool:
        """parity 0: x == y; parity 1: x != y. False on contradiction."""
        rx, px = self.find(x)
        ry, py = self.find(y)
        if rx == ry:
            return (px ^ py) == parity
        self.parent[rx] = ry
        self.parity[rx] = px ^ py ^ parity
        return True

    def value(self, x) -> int:
        """+1/-1 assignment, root pinned to +1."""
        _, p = self.find(x)
        return -1 if p else 1


def _single_bond_partners(m: Molecule, i: int, exclude: int) -> list[int]:
    return [j for j, order, _ in m.adjacency[i] if order == 1 and j != exclude]


def _orientation_sign(key: tuple[int, int], endpoint: int) -> int:
    """A bond variable stores o(v, u); looking from the other endpoint flips it."""
    return 1 if endpoint == key[0] else -1


def _stereo_constraints(m: Molecule, refs: dict[tuple[int, int], tuple[int, int]]):
    """Parity constraints making the cis/trans annotations marker-encodable.

    ``refs`` maps each annotated bond to the reference neighbor chosen on each
    side. Yields (var_a, var_b, parity) triples over bond-key variables.
    """
    for b in m.bonds:
        if b.stereo is None:
            continue
        ref_u, ref_v = refs[b.key]
        sides = []
        for endpoint, ref in ((b.u, ref_u), (b.v, ref_v)):
            partners = _single_bond_partners(m, endpoint, b.other(endpoint))
            keys = [(min(endpoint, j), max(endpoint, j)) for j in partners]
            # substituents on one sp2 end sit on opposite sides of the bond axis
            ref_key = (min(endpoint, ref), max(endpoint, ref))
            s_ref = _orientation_sign(ref_key, endpoint)
            for k in keys:
                if k == ref_key:
                    continue
                s_k = _orientation_sign(k, endpoint)
                yield ref_key, k, 0 if s_ref != s_k else 1
            sides.append((ref_key, s_ref))
        (ku, su), (kv, sv) = sides
        want_equal = b.stereo == CIS
        parity = 0 if want_equal else 1
        if su * sv == -1:
            parity ^= 1
        yield ku, kv, parity


def _default_stereo_refs(m: Molecule) -> dict[tuple[int, int], tuple[int, int]] | None:
    refs = {}
    for b in m.bonds:
        if b.stereo is None:
            continue
        pu = _single_bond_partners(m, b.u, b.v)
        pv = _single_bond_partners(m, b.v, b.u)
        if not pu or not pv:
            return None
        refs[b.key] = (min(pu), min(pv))
    return refs


def validity_issues(m: Molecule) -> list[str]:
    """Reasons the molecule fails the chemical validity check; empty if valid."""
    issues: list[str] = []
    for i, atom in enumerate(m.atoms):
        cap = VALENCE_CAPS[atom.element]
        if m.order_sums[i] > cap:
            issues.append(
                f"atom {i} ({atom.element}) bond-order sum "
                f"{m.order_sums[i]} exceeds valence cap {cap}"
            )
        if atom.parity is not None and m.degree(i) < 3:
            issues.append(f"atom {i} parity requires >=3 neighbors")
    if not _connected(m):
        issues.append("graph is disconnected")
    flagged = [b for b in m.bonds if b.stereo is not None]
    stereo_placement_ok = True
    for b in flagged:
        if b.order != 2:
            issues.append(f"bond {b.key} stereo flag on non-double bond")
            stereo_placement_ok = False
            continue
        for endpoint in (b.u, b.v):
            if not _single_bond_partners(m, endpoint, b.other(endpoint)):
                issues.append(
                    f"bond {b.key} stereo flag needs a single-bonded "
                    f"neighbor at atom {endpoint}"
                )
                stereo_placement_ok = False
    if flagged and stereo_placement_ok:
        refs = _default_stereo_refs(m)
        dsu = _ParityDSU()
        for a, bkey, parity in _stereo_constraints(m, refs):
            if not dsu.union(a, bkey, parity):
                issues.append("cis/trans annotations are mutually inconsistent")
                break
    return issues


def check_validity(m: Molecule) -> bool:
    """True iff valence caps, connectivity and stereo placement all hold."""
    return not validity_issues(m)


def ring_count(m: Molecule) -> int:
    """Circuit rank of a connected molecule: |bonds| - |atoms| + 1."""
    return len(m.bonds) - len(m.atoms) + 1


# ---------------------------------------------------------------------------
# SMILES parsing
# ---------------------------------------------------------------------------

def parse_smiles(text: str) -> Molecule:
    """Parse the supported SMILES dialect into a valid molecule.

    Raises :class:`SmilesSyntaxError` on malformed input (with position) and
    :class:`UnsupportedFeatureError` on charges, isotopes, aromatic lowercase
    forms, wildcards, or elements outside the supported set.
    """
    if not text:
        raise SmilesSyntaxError("empty SMILES", 0)

    elements: list[str] = []
    parities: list[str | None] = []
    declared_h: dict[int, tuple[int, int]] = {}  # atom -> (count, position)
    bond_order: dict[tuple[int, int], int] = {}
    bond_pos: dict[tuple[int, int], int] = {}
    orient: dict[tuple[int, int], int] = {}      # key -> o(v, u)
    marker_rank: dict[tuple[int, int], int] = {}
    n_markers = 0

    prev: int | None = None
    stack: list[int] = []
    pending_order: int | None = None
    pending_dir: str | None = None
    pending_pos = 0
    rings: dict[int, tuple[int, int | None, str | None, int]] = {}

    def record_bond(a: int, b: int, order: int, pos: int) -> tuple[int, int]:
        if a == b:
            raise SmilesSyntaxError("ring closure bonds an atom to itself", pos)
        key = (a, b) if a < b else (b, a)
        if key in bond_order:
            raise SmilesSyntaxError("duplicate bond between atoms", pos)
        bond_order[key] = order
        bond_pos[key] = pos
        return key

    def record_direction(key: tuple[int, int], first: int, char: str, pos: int):
        nonlocal n_markers
        # '/' raises the bond from the first-written atom to the second
        o_second_first = 1 if char == "/" else -1
        o_vu = o_second_first if first == key[0] else -o_second_first
        if key in orient:
            if orient[key] != o_vu:
                raise SmilesSyntaxError("conflicting directional bond", pos)
            return
        orient[key] = o_vu
        marker_rank[key] = n_markers
        n_markers += 1

    def attach(atom_idx: int, pos: int):
        nonlocal prev, pending_order, pending_dir
        if prev is not None:
            key = record_bond(prev, atom_idx, pending_order or 1, pos)
            if pending_dir is not None:
                if pending_order not in (None, 1):
                    raise SmilesSyntaxError(
                        "directional marker on a non-single bond", pending_pos)
                record_direction(key, prev, pending_dir, pending_pos)
        prev = atom_idx
        pending_order = None
        pending_dir = None

    def close_ring(num: int, pos: int):
        nonlocal prev, pending_order, pending_dir
        if prev is None:
            raise SmilesSyntaxError("ring closure before any atom", pos)
        if num in rings:
            other, o1, d1, p1 = rings.pop(num)
            if o1 is not None and pending_order is not None and o1 != pending_order:
                raise SmilesSyntaxError("ring closure bond order mismatch", pos)
            order = o1 if o1 is not None else (pending_order or 1)
            key = record_bond(other, prev, order, pos)
            if d1 is not None:
                if order != 1:
                    raise SmilesSyntaxError(
                        "directional marker on a non-single bond", p1)
                record_direction(key, other, d1, p1)
            if pending_dir is not None:
                if order != 1:
                    raise SmilesSyntaxError(
                        "directional marker on a non-single bond", pending_pos)
                record_direction(key, prev, pending_dir, pending_pos)
        else:
            rings[num] = (prev, pending_order, pending_dir, pending_pos)
        pending_order = None
        pending_dir = None

    i = 0
    L = len(text)
    while i < L:
        c = text[i]
        if c == "(":
            if prev is None:
                raise SmilesSyntaxError("branch before any atom", i)
            if pending_order is not None or pending_dir is not None:
                raise SmilesSyntaxError("dangling bond before branch", i)
            stack.append(prev)
            i += 1
        elif c == ")":
            if not stack:
                raise SmilesSyntaxError("unmatched ')'", i)
            if pending_order is not None or pending_dir is not None:
                raise SmilesSyntaxError("dangling bond before ')'", i)
            prev = stack.pop()
            i += 1
        elif c in "-=#":
            if pending_order is not None or pending_dir is not None:
                raise SmilesSyntaxError("two bond symbols in a row", i)
            pending_order = {"-": 1, "=": 2, "#": 3}[c]
            pending_pos = i
            i += 1
        elif c in "/\\":
            if pending_dir is not None:
                raise SmilesSyntaxError("two directional markers in a row", i)
            if pending_order not in (None, 1):
                raise SmilesSyntaxError("directional marker on a non-single bond", i)
            pending_order = 1
            pending_dir = c if c == "/" else "\\"
            pending_pos = i
            i += 1
        elif c.isdigit():
            close_ring(int(c), i)
            i += 1
        elif c == "%":
            if i + 2 >= L or not (text[i + 1].isdigit() and text[i + 2].isdigit()):
                raise SmilesSyntaxError("'%' needs two digits", i)
            close_ring(int(text[i + 1:i + 3]), i)
            i += 3
        elif c == "[":
            i, element, parity, hcount = _parse_bracket(text, i)
            elements.append(element)
            parities.append(parity)
            if hcount is not None:
                declared_h[len(elements) - 1] = (hcount, i)
            attach(len(elements) - 1, i)
        elif c.isupper():
            two = text[i:i + 2]
            if two in _TWO_CHAR_ELEMENTS:
                symbol, width = two, 2
            elif c in _ELEMENT_INDEX:
                symbol, width = c, 1
            else:
                raise UnsupportedFeatureError(f"element {c!r} not supported", i)
            elements.append(symbol)
            parities.append(None)
            attach(len(elements) - 1, i)
            i += width
        elif c in "bcnops":
            raise UnsupportedFeatureError("aromatic (lowercase) atoms not supported", i)
        elif c == "*":
            raise UnsupportedFeatureError("wildcard atoms not supported", i)
        elif c == ".":
            raise UnsupportedFeatureError("disconnected components not supported", i)
        else:
            raise SmilesSyntaxError(f"unexpected character {c!r}", i)

    if not elements:
        raise SmilesSyntaxError("no atoms", 0)
    if stack:
        raise SmilesSyntaxError("unclosed branch", L - 1)
    if rings:
        num = sorted(rings)[0]
        raise SmilesSyntaxError(f"unclosed ring bond {num}", rings[num][3])
    if pending_order is not None or pending_dir is not None:
        raise SmilesSyntaxError("dangling bond at end of input", pending_pos)

    atoms = tuple(Atom(el, par) for el, par in zip(elements, parities))
    stereo = _derive_bond_stereo(bond_order, orient, marker_rank)
    bonds = tuple(
        Bond(u, v, order, stereo.get((u, v)))
        for (u, v), order in bond_order.items()
    )
    mol = Molecule(atoms, bonds)

    for idx, (count, pos) in declared_h.items():
        actual = mol.implicit_hydrogens(idx)
        if actual != count:
            raise SmilesSyntaxError(
                f"declared H{count} conflicts with derived H count {actual}", pos)

    issues = validity_issues(mol)
    if issues:
        raise SmilesSyntaxError("invalid molecule: " + "; ".join(issues), 0)
    return mol


def _parse_bracket(text: str, start: int) -> tuple[int, str, str | None, int | None]:
    """Parse one bracket atom; returns (index past ']', element, parity, hcount)."""
    i = start + 1
    L = len(text)
    if i < L and text[i].isdigit():
        raise UnsupportedFeatureError("isotope labels not supported", i)
    if i >= L:
        raise SmilesSyntaxError("unterminated bracket atom", start)
    c = text[i]
    if c.islower():
        raise UnsupportedFeatureError("aromatic (lowercase) atoms not supported", i)
    if c == "*":
        raise UnsupportedFeatureError("wildcard atoms not supported", i)
    if not c.isupper():
        raise SmilesSyntaxError("expected element symbol", i)
    if i + 1 < L and text[i + 1].islower() and text[i + 1] != "h":
        symbol = text[i:i + 2]
        i += 2
    else:
        symbol = c
        i += 1
    if symbol not in _ELEMENT_INDEX:
        raise UnsupportedFeatureError(f"element {symbol!r} not supported", start + 1)

    parity: str | None = None
    if text.startswith("@@", i):
        parity = CLOCKWISE
        i += 2
    elif text.startswith("@", i):
        parity = COUNTERCLOCKWISE
        i += 1

    hcount: int | None = None
    if i < L and text[i] == "H":
        i += 1
        digits = ""
        while i < L and text[i].isdigit():
            digits += text[i]
            i += 1
        hcount = int(digits) if digits else 1

    if i < L and text[i] in "+-":
        raise UnsupportedFeatureError("charged atoms not supported", i)
    if i >= L or text[i] != "]":
        raise SmilesSyntaxError("expected ']'", min(i, L - 1))
    return i + 1, symbol, parity, hcount


def _derive_bond_stereo(
    bond_order: dict[tuple[int, int], int],
    orient: dict[tuple[int, int], int],
    marker_rank: dict[tuple[int, int], int],
) -> dict[tuple[int, int], str]:
    """Turn directional markers into per-double-bond cis/trans annotations."""
    if not orient:
        return {}
    incident: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for key in orient:
        rank = marker_rank[key]
        for endpoint in key:
            incident.setdefault(endpoint, []).append((rank, key))
    for marks in incident.values():
        marks.sort()

    stereo: dict[tuple[int, int], str] = {}
    for key, order in bond_order.items():
        if order != 2:
            continue
        sides = []
        for endpoint in key:
            other = key[1] if endpoint == key[0] else key[0]
            marks = [
                k for _, k in incident.get(endpoint, ())
                if k != key and bond_order[k] == 1
            ]
            if not marks:
                break
            orientations = [
                orient[k] * _orientation_sign(k, endpoint) for k in marks
            ]
            for extra in orientations[1:]:
                if extra == orientations[0]:
                    raise SmilesSyntaxError(
                        "conflicting directional bonds around a double bond",
                        None)
            sides.append(orientations[0])
        if len(sides) == 2:
            stereo[key] = CIS if sides[0] == sides[1] else TRANS
    return stereo


# ---------------------------------------------------------------------------
# SMILES writing
# ---------------------------------------------------------------------------

def write_smiles(m: Molecule) -> str:
    """Serialize a valid molecule; the output re-parses to an isomorphic graph."""
    n = len(m.atoms)
    parent = [-1] * n
    preorder = [-1] * n
    children: list[list[int]] = [[] for _ in range(n)]
    back_edges: list[tuple[int, int]] = []  # (opener, closer) in preorder
    seen_back: set[tuple[int, int]] = set()

    counter = 0
    stack: list[tuple[int, int]] = [(0, -1)]
    while stack:
        node, par = stack.pop()
        if preorder[node] != -1:
            continue
        preorder[node] = counter
        counter += 1
        parent[node] = par
        if par != -1:
            children[par].append(node)
        for j in reversed(m.neighbors[node]):
            if preorder[j] == -1:
                stack.append((j, node))
            elif j != par:
                key = (min(node, j), max(node, j))
                if key not in seen_back:
                    seen_back.add(key)
                    back_edges.append((j, node))  # j was visited first
    # restore ascending child order (stack reversal preserves it already)
    if counter != n:
        raise ValueError("cannot serialize a disconnected molecule")

    ring_at: dict[int, list[tuple[int, int]]] = {}
    for opener, closer in back_edges:
        ring_at.setdefault(opener, []).append((preorder[closer], closer))
        ring_at.setdefault(closer, []).append((preorder[opener], opener))
    for lst in ring_at.values():
        lst.sort()

    bond_char = _assign_direction_chars(m, children, ring_at, preorder)

    digit_of: dict[tuple[int, int], int] = {}
    free_digits = list(range(99, 0, -1))
    out: list[str] = []

    def bond_symbol(key: tuple[int, int], first: int) -> str:
        b = m.bond_map[key]
        if b.order == 2:
            return "="
        if b.order == 3:
            return "#"
        char = bond_char.get(key)
        if char is None:
            return ""
        up = char == "/"
        if first != key[0]:
            up = not up
        # stored orientation is o(v, u); emit relative to the written order
        return "/" if up else "\\"

    def emit(node: int):
        out.append(_atom_token(m, node))
        for _, other in ring_at.get(node, ()):  # ring digits before branches
            key = (min(node, other), max(node, other))
            if key not in digit_of:
                digit = free_digits.pop()
                digit_of[key] = digit
                out.append(bond_symbol(key, node))
            else:
                digit = digit_of.pop(key)
                free_digits.append(digit)
            out.append(str(digit) if digit < 10 else f"%{digit:02d}")
        kids = children[node]
        for idx, child in enumerate(kids):
            key = (min(node, child), max(node, child))
            sym = bond_symbol(key, node)
            if idx < len(kids) - 1:
                out.append("(" + sym)
                emit(child)
                out.append(")")
            else:
                out.append(sym)
                emit(child)

    emit(0)
    return "".join(out)


def _atom_token(m: Molecule, i: int) -> str:
    atom = m.atoms[i]
    if atom.parity is None:
        return atom.element
    tag = "@@" if atom.parity == CLOCKWISE else "@"
    h = m.implicit_hydrogens(i)
    if h <= 0:
        hpart = ""
    elif h == 1:
        hpart = "H"
    else:
        hpart = f"H{h}"
    return f"[{atom.element}{tag}{hpart}]"


def _assign_direction_chars(
    m: Molecule,
    children: list[list[int]],
    ring_at: dict[int, list[tuple[int, int]]],
    preorder: list[int],
) -> dict[tuple[int, int], str]:
    """Pick marked single bonds and / \\ characters encoding every cis/trans flag."""
    flagged = [b for b in m.bonds if b.stereo is not None]
    if not flagged:
        return {}

    marked: set[tuple[int, int]] = set()
    endpoints: list[tuple[Bond, int]] = []
    for b in flagged:
        for endpoint in (b.u, b.v):
            endpoints.append((b, endpoint))
    # two passes: reuse bonds already marked for another flag where possible
    for _ in range(2):
        for b, endpoint in endpoints:
            partners = _single_bond_partners(m, endpoint, b.other(endpoint))
            keys = [(min(endpoint, j), max(endpoint, j)) for j in partners]
            if not keys:
                raise ValueError("stereo bond lacks a serializable reference")
            if not any(k in marked for k in keys):
                marked.add(keys[0])

    # token order of a bond = preorder slot where its character appears
    slot: dict[tuple[int, int], tuple[int, int]] = {}
    for node in range(len(m.atoms)):
        rank = 0
        for _, other in ring_at.get(node, ()):
            key = (min(node, other), max(node, other))
            if key not in slot:
                slot[key] = (preorder[node], rank)
            rank += 1
        for child in children[node]:
            key = (min(node, child), max(node, child))
            slot[key] = (preorder[node], rank)
            rank += 1

    refs: dict[tuple[int, int], tuple[tuple[int, int], tuple[int, int]]] = {}
    dsu = _ParityDSU()
    ok = True
    for b in flagged:
        pair = []
        for endpoint in (b.u, b.v):
            partners = _single_bond_partners(m, endpoint, b.other(endpoint))
            keys = [(min(endpoint, j), max(endpoint, j)) for j in partners]
            marked_keys = sorted((k for k in keys if k in marked),
                                 key=lambda k: slot[k])
            first = marked_keys[0]
            # extra marked neighbors must land on the opposite side
            s_first = _orientation_sign(first, endpoint)
            for k in marked_keys[1:]:
                s_k = _orientation_sign(k, endpoint)
                ok &= dsu.union(first, k, 0 if s_first != s_k else 1)
            pair.append(first)
        refs[b.key] = (pair[0], pair[1])
    for key_a, key_b, parity in _stereo_constraints_from_refs(m, refs):
        ok &= dsu.union(key_a, key_b, parity)
    if not ok:
        raise ValueError("cis/trans annotations are mutually inconsistent")

    chars: dict[tuple[int, int], str] = {}
    for key in marked:
        chars[key] = "/" if dsu.value(key) == 1 else "\\"
    return chars


def _stereo_constraints_from_refs(m: Molecule, refs):
    for b in m.bonds:
        if b.stereo is None:
            continue
        ku, kv = refs[b.key]
        su = _orientation_sign(ku, b.u)
        sv = _orientation_sign(kv, b.v)
        parity = 0 if b.stereo == CIS else 1
        if su * sv == -1:
            parity ^= 1
        yield ku, kv, parity


# ---------------------------------------------------------------------------
# Canonicalization
# ---------------------------------------------------------------------------

def canonicalize(m: Molecule) -> str:
    """Relabeling-invariant key: equal keys iff graphs are isomorphic
    respecting elements, bond orders and stereo annotations."""
    return m.canonical_key


# re-created equal molecules are common during search; keys are pure values
_KEY_CACHE: dict[tuple, str] = {}
_KEY_CACHE_MAX = 200_000


def _canonical_key(m: Molecule) -> str:
    cache_key = (m.atoms, m.bonds)
    hit = _KEY_CACHE.get(cache_key)
    if hit is not None:
        return hit
    ranks = _refine(m, _initial_ranks(m))
    key = _break_ties(m, ranks)[0]
    if len(_KEY_CACHE) >= _KEY_CACHE_MAX:
        _KEY_CACHE.clear()
    _KEY_CACHE[cache_key] = key
    return key


def _label_for_order(m: Molecule, order: list[int]) -> str:
    pos = [0] * len(order)
    for new_idx, old_idx in enumerate(order):
        pos[old_idx] = new_idx
    atom_parts = []
    for old_idx in order:
        a = m.atoms[old_idx]
        code = _PARITY_CODE[a.parity]
        atom_parts.append(a.element if code == 0 else f"{a.element}~{code}")
    bond_parts = sorted(
        (min(pos[b.u], pos[b.v]), max(pos[b.u], pos[b.v]), b.order,
         _BOND_STEREO_CODE[b.stereo])
        for b in m.bonds
    )
    return (",".join(atom_parts) + "|"
            + ";".join(f"{u}-{v}:{o}:{s}" for u, v, o, s in bond_parts))


def _initial_ranks(m: Molecule) -> list[int]:
    adj = m.packed_adjacency
    sigs = []
    for i, a in enumerate(m.atoms):
        label = _ELEMENT_INDEX[a.element] * 3 + _PARITY_CODE[a.parity]
        sigs.append((label, *sorted(p for _, p in adj[i])))
    return _densify(sigs)


def _densify(signatures: list) -> list[int]:
    mapping = {sig: rank for rank, sig in enumerate(sorted(set(signatures)))}
    return [mapping[sig] for sig in signatures]


def _refine(m: Molecule, ranks: list[int]) -> list[int]:
    """Iterative neighborhood refinement until the partition stabilizes."""
    adj = m.packed_adjacency
    n = len(ranks)
    # pack signatures into single ints when widths allow (the common case)
    small = n <= 60 and all(len(a) <= 4 for a in adj)
    n_classes = len(set(ranks))
    while True:
        sigs: list = []
        if small:
            for i in range(n):
                nb = sorted([ranks[j] * 16 + p for j, p in adj[i]])
                while len(nb) < 4:
                    nb.append(0)
                s = ranks[i]
                sigs.append((((s << 10 | nb[0]) << 10 | nb[1]) << 10 | nb[2])
                            << 10 | nb[3])
        else:
            for i in range(n):
                sigs.append((ranks[i], *sorted(ranks[j] * 16 + p
                                               for j, p in adj[i])))
        new_ranks = _densify(sigs)
        new_classes = len(set(new_ranks))
        if new_classes == n_classes:
            return new_ranks
        ranks = new_ranks
        n_classes = new_classes


def _break_ties(m: Molecule, ranks: list[int]) -> tuple[str, list[int]]:
    n = len(ranks)
    if len(set(ranks)) == n:
        order = sorted(range(n), key=ranks.__getitem__)
        return _label_for_order(m, order), order
    # branch over every member of the lowest tied class, keep the least label
    tied_rank = min(r for r in ranks if ranks.count(r) > 1)
    members = [i for i in range(n) if ranks[i] == tied_rank]
    best: tuple[str, list[int]] | None = None
    for candidate in members:
        seeds = [(r, 0 if i == candidate else 1) for i, r in enumerate(ranks)]
        refined = _refine(m, _densify(seeds))
        result = _break_ties(m, refined)
        if best is None or result[0] < best[0]:
            best = result
    return best
