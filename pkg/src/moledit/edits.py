"""The discrete edit action space over molecular graphs.

Twelve primitive operations (atom replacement/addition, ring formation and
opening, bond-order changes, stereo annotation changes, and paired ring
formation/opening) plus the deterministic transition operator, syntactic
enumeration, feasibility filtering, and a 15-dimensional numeric descriptor
for each action.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .molgraph import (
    CIS,
    CLOCKWISE,
    COUNTERCLOCKWISE,
    SUPPORTED_ELEMENTS,
    TRANS,
    Atom,
    Bond,
    Molecule,
    canonicalize,
    check_validity,
)

OP_KINDS = (
    "AtomReplace",
    "AtomAdd",
    "RingForm",
    "RingOpen",
    "DoubleBondForm",
    "DoubleToSingle",
    "TripleBondForm",
    "TripleToSingle",
    "AddStereo",
    "RemoveStereo",
    "DoubleRingForm",
    "DoubleRingOpen",
)
_OP_INDEX = {op: i for i, op in enumerate(OP_KINDS)}

DESCRIPTOR_DIM = 15

# site-context features are normalized by the largest valence cap
_MAX_VALENCE = 4

_ATOM_PARITIES = (COUNTERCLOCKWISE, CLOCKWISE)
_BOND_FLAGS = (CIS, TRANS)

_SITE_COUNT = {
    "AtomReplace": 1, "AtomAdd": 1,
    "RingForm": 2, "RingOpen": 2,
    "DoubleBondForm": 2, "DoubleToSingle": 2,
    "TripleBondForm": 2, "TripleToSingle": 2,
    "DoubleRingForm": 4, "DoubleRingOpen": 4,
}


class InvalidSiteError(IndexError):
    """Action site indices do not exist in the molecule."""


class IncoherentActionError(ValueError):
    """The operation cannot be expressed at the given site at all."""


@dataclass(frozen=True)
class EditAction:
    """One discrete edit: operation kind, site indices, op-specific params.

    Sites reference the pre-edit molecule. Bond sites are two atom indices;
    the paired ring operations carry two bond specifications (four indices).
    """

    op: str
    sites: tuple[int, ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if self.op not in _OP_INDEX:
            raise ValueError(f"unknown op {self.op!r}")
        expected = _SITE_COUNT.get(self.op)
        if expected is not None and len(self.sites) != expected:
            raise ValueError(f"{self.op} takes {expected} site indices")
        if self.op in ("AddStereo", "RemoveStereo") and len(self.sites) not in (1, 2):
            raise ValueError(f"{self.op} targets one atom or one bond")
        if self.op in ("AtomReplace", "AtomAdd"):
            if self.params.get("element") not in SUPPORTED_ELEMENTS:
                raise ValueError(f"{self.op} needs a supported 'element' param")
        elif self.op == "AddStereo":
            allowed = _ATOM_PARITIES if len(self.sites) == 1 else _BOND_FLAGS
            if self.params.get("value") not in allowed:
                raise ValueError(f"AddStereo needs 'value' in {allowed}")
        elif self.params:
            raise ValueError(f"{self.op} takes no params")

    def to_json(self) -> dict:
        return {"op": self.op, "sites": list(self.sites), "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj: dict) -> "EditAction":
        return cls(obj["op"], tuple(obj["sites"]), dict(obj.get("params", {})))


def _check_sites(m: Molecule, a: EditAction):
    n = len(m.atoms)
    for s in a.sites:
        if not (0 <= s < n):
            raise InvalidSiteError(f"site {s} out of range for {n} atoms")


def _require_bond(m: Molecule, u: int, v: int) -> Bond:
    b = m.bond_between(u, v)
    if b is None:
        raise IncoherentActionError(f"no bond between atoms {u} and {v}")
    return b


def _replace_bond(m: Molecule, old: Bond, new: Bond | None) -> tuple[Bond, ...]:
    bonds = [b for b in m.bonds if b is not old]
    if new is not None:
        bonds.append(new)
    return tuple(bonds)


def apply(m: Molecule, a: EditAction) -> Molecule:
    """Deterministic transition operator; does not validate the result.

    New atoms are appended, so atom indices of the input molecule are stable
    in the output. Raises :class:`InvalidSiteError` for out-of-range indices
    and :class:`IncoherentActionError` when the op cannot be expressed at the
    site (e.g. DoubleToSingle on a single bond).
    """
    _check_sites(m, a)
    op = a.op
    if op == "AtomReplace":
        i = a.sites[0]
        element = a.params["element"]
        if m.atoms[i].element == element:
            raise IncoherentActionError(f"atom {i} is already {element}")
        atoms = list(m.atoms)
        atoms[i] = Atom(element, m.atoms[i].parity)
        return Molecule(tuple(atoms), m.bonds)
    if op == "AtomAdd":
        i = a.sites[0]
        atoms = m.atoms + (Atom(a.params["element"]),)
        bonds = m.bonds + (Bond(i, len(m.atoms)),)
        return Molecule(atoms, bonds)
    if op == "RingForm":
        u, v = a.sites
        if u == v:
            raise IncoherentActionError("ring bond needs two distinct atoms")
        if m.bond_between(u, v) is not None:
            raise IncoherentActionError(f"atoms {u} and {v} are already bonded")
        return Molecule(m.atoms, m.bonds + (Bond(u, v),))
    if op == "RingOpen":
        b = _require_bond(m, *a.sites)
        return Molecule(m.atoms, _replace_bond(m, b, None))
    if op in ("DoubleBondForm", "TripleBondForm"):
        b = _require_bond(m, *a.sites)
        if b.order != 1:
            raise IncoherentActionError(f"bond {b.key} is not single")
        target = 2 if op == "DoubleBondForm" else 3
        return Molecule(m.atoms, _replace_bond(m, b, Bond(b.u, b.v, target, b.stereo)))
    if op in ("DoubleToSingle", "TripleToSingle"):
        b = _require_bond(m, *a.sites)
        want = 2 if op == "DoubleToSingle" else 3
        if b.order != want:
            raise IncoherentActionError(f"bond {b.key} has order {b.order}, not {want}")
        return Molecule(m.atoms, _replace_bond(m, b, Bond(b.u, b.v, 1, b.stereo)))
    if op == "AddStereo":
        value = a.params["value"]
        if len(a.sites) == 1:
            i = a.sites[0]
            if m.atoms[i].parity is not None:
                raise IncoherentActionError(f"atom {i} already has a parity flag")
            atoms = list(m.atoms)
            atoms[i] = Atom(m.atoms[i].element, value)
            return Molecule(tuple(atoms), m.bonds)
        b = _require_bond(m, *a.sites)
        if b.order != 2:
            raise IncoherentActionError(f"bond {b.key} is not a double bond")
        if b.stereo is not None:
            raise IncoherentActionError(f"bond {b.key} already has a stereo flag")
        return Molecule(m.atoms, _replace_bond(m, b, Bond(b.u, b.v, 2, value)))
    if op == "RemoveStereo":
        if len(a.sites) == 1:
            i = a.sites[0]
            if m.atoms[i].parity is None:
                raise IncoherentActionError(f"atom {i} has no parity flag")
            atoms = list(m.atoms)
            atoms[i] = Atom(m.atoms[i].element, None)
            return Molecule(tuple(atoms), m.bonds)
        b = _require_bond(m, *a.sites)
        if b.stereo is None:
            raise IncoherentActionError(f"bond {b.key} has no stereo flag")
        return Molecule(m.atoms, _replace_bond(m, b, Bond(b.u, b.v, b.order, None)))
    if op == "DoubleRingForm":
        p, q, r, s = a.sites
        first, second = (min(p, q), max(p, q)), (min(r, s), max(r, s))
        if p == q or r == s or first == second:
            raise IncoherentActionError("needs two distinct new bonds")
        for u, v in (first, second):
            if m.bond_between(u, v) is not None:
                raise IncoherentActionError(f"atoms {u} and {v} are already bonded")
        return Molecule(m.atoms, m.bonds + (Bond(*first), Bond(*second)))
    if op == "DoubleRingOpen":
        p, q, r, s = a.sites
        b1 = _require_bond(m, p, q)
        b2 = _require_bond(m, r, s)
        if b1 is b2:
            raise IncoherentActionError("needs two distinct bonds")
        bonds = tuple(b for b in m.bonds if b is not b1 and b is not b2)
        return Molecule(m.atoms, bonds)
    raise AssertionError(op)


def enumerate_actions(m: Molecule) -> list[EditAction]:
    """Complete syntactic enumeration, in deterministic (op kind, sites) order."""
    n = len(m.atoms)
    out: list[EditAction] = []

    for i in range(n):
        current = m.atoms[i].element
        for el in SUPPORTED_ELEMENTS:
            if el != current:
                out.append(EditAction("AtomReplace", (i,), {"element": el}))

    for i in range(n):
        for el in SUPPORTED_ELEMENTS:
            out.append(EditAction("AtomAdd", (i,), {"element": el}))

    bonded = set(m.bond_map)
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in bonded:
                out.append(EditAction("RingForm", (u, v)))

    ring_keys = sorted(m.ring_bond_keys)
    for u, v in ring_keys:
        out.append(EditAction("RingOpen", (u, v)))

    singles = [b.key for b in m.bonds if b.order == 1]
    doubles = [b.key for b in m.bonds if b.order == 2]
    triples = [b.key for b in m.bonds if b.order == 3]
    singles.sort(), doubles.sort(), triples.sort()
    for u, v in singles:
        out.append(EditAction("DoubleBondForm", (u, v)))
    for u, v in doubles:
        out.append(EditAction("DoubleToSingle", (u, v)))
    for u, v in singles:
        out.append(EditAction("TripleBondForm", (u, v)))
    for u, v in triples:
        out.append(EditAction("TripleToSingle", (u, v)))

    for i in range(n):
        if m.atoms[i].parity is None and m.degree(i) >= 3:
            for value in _ATOM_PARITIES:
                out.append(EditAction("AddStereo", (i,), {"value": value}))
    for u, v in doubles:
        b = m.bond_map[(u, v)]
        if b.stereo is None and _bond_stereo_eligible(m, b):
            for value in _BOND_FLAGS:
                out.append(EditAction("AddStereo", (u, v), {"value": value}))

    for i in range(n):
        if m.atoms[i].parity is not None:
            out.append(EditAction("RemoveStereo", (i,)))
    for b in sorted(m.bonds, key=lambda b: b.key):
        if b.stereo is not None:
            out.append(EditAction("RemoveStereo", b.key))

    # paired ring ops are capped to bond pairs sharing an atom
    for c in range(n):
        non_adjacent = [x for x in range(n)
                        if x != c and (min(c, x), max(c, x)) not in bonded]
        for ai in range(len(non_adjacent)):
            for bi in range(ai + 1, len(non_adjacent)):
                x, y = non_adjacent[ai], non_adjacent[bi]
                first = (min(c, x), max(c, x))
                second = (min(c, y), max(c, y))
                if second < first:
                    first, second = second, first
                out.append(EditAction("DoubleRingForm", first + second))

    ring_set = m.ring_bond_keys
    for c in range(n):
        incident = sorted(k for k in ring_set if c in k)
        for ai in range(len(incident)):
            for bi in range(ai + 1, len(incident)):
                first, second = incident[ai], incident[bi]
                if second < first:
                    first, second = second, first
                out.append(EditAction("DoubleRingOpen", first + second))

    return out


def _bond_stereo_eligible(m: Molecule, b: Bond) -> bool:
    for endpoint in (b.u, b.v):
        other = b.other(endpoint)
        if not any(order == 1 and j != other
                   for j, order, _ in m.adjacency[endpoint]):
            return False
    return True


def feasible_actions(m: Molecule) -> list[tuple[EditAction, Molecule]]:
    """Syntactic actions whose application yields a chemically valid molecule.

    Each surviving action is paired with its post-edit molecule. Actions whose
    post-edit canonical keys coincide are deduplicated, keeping the first in
    the deterministic enumeration order. An empty list is a legal return
    (terminal state).
    """
    out: list[tuple[EditAction, Molecule]] = []
    seen: set[str] = set()
    for a in enumerate_actions(m):
        m2 = apply(m, a)
        if not check_validity(m2):
            continue
        key = canonicalize(m2)
        if key in seen:
            continue
        seen.add(key)
        out.append((a, m2))
    return out


def describe(m: Molecule, a: EditAction) -> tuple[float, ...]:
    """15-dim feature vector: 12-way one-hot of the op kind plus normalized
    site degree, normalized pre-edit bond-order sum at the site, and a
    ring-membership flag for the first site atom."""
    _check_sites(m, a)
    features = [0.0] * DESCRIPTOR_DIM
    features[_OP_INDEX[a.op]] = 1.0
    site = a.sites[0]
    features[12] = m.degree(site) / _MAX_VALENCE
    features[13] = m.order_sums[site] / _MAX_VALENCE
    features[14] = 1.0 if m.in_ring(site) else 0.0
    return tuple(features)
