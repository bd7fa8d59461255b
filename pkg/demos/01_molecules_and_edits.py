"""Walk through the molecular graph layer: parsing, validity, canonical keys,
and the twelve edit primitives.

Run:  python demos/01_molecules_and_edits.py
"""

from moledit import (
    EditAction,
    apply,
    canonicalize,
    check_validity,
    enumerate_actions,
    feasible_actions,
    parse_smiles,
    ring_count,
    validity_issues,
    write_smiles,
)

print("== parsing and writing ==")
mol = parse_smiles("CC#CCCCO")
print("input    : CC#CCCCO")
print("atoms    :", [a.element for a in mol.atoms])
print("rewritten:", write_smiles(mol))
print("ring count of C1CC2CCC12:", ring_count(parse_smiles("C1CC2CCC12")))

print("\n== canonical keys are relabeling-invariant ==")
print("CCO vs OCC :", canonicalize(parse_smiles("CCO")) == canonicalize(parse_smiles("OCC")))
print("CCO vs COC :", canonicalize(parse_smiles("CCO")) == canonicalize(parse_smiles("COC")))

print("\n== validity is a separate, total check ==")
broken = apply(parse_smiles("FC"), EditAction("AtomAdd", (0,), {"element": "C"}))
print("F with two bonds is constructible but invalid:", validity_issues(broken))

print("\n== the action space ==")
water = parse_smiles("O")
syntactic = enumerate_actions(water)
feasible = feasible_actions(water)
print(f"water: {len(syntactic)} syntactic actions, {len(feasible)} feasible")

square = parse_smiles("C1CCC1")
by_kind: dict[str, int] = {}
for action, _ in feasible_actions(square):
    by_kind[action.op] = by_kind.get(action.op, 0) + 1
print("cyclobutane feasible actions by kind:")
for kind, count in sorted(by_kind.items()):
    print(f"  {kind:<16} {count}")

print("\n== applying one edit ==")
ring = apply(parse_smiles("CCCC"), EditAction("RingForm", (0, 3)))
print("CCCC + RingForm(0,3) ->", write_smiles(ring), "| valid:", check_validity(ring))
