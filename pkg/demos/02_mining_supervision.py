"""Turn endpoint property labels into per-edit supervision: mine related
pairs, decompose their differences into shortest edit chains, and emit one
sample per step.

Run:  python demos/02_mining_supervision.py
"""

from moledit import (
    LabeledMolecule,
    build_dataset,
    decompose,
    get_property,
    mine_pairs,
    parse_smiles,
    write_smiles,
)

oracle = get_property("molecular_weight")
smiles = ["C", "N", "CC", "CCO", "CCN", "CC(N)O", "CCC"]
entries = [LabeledMolecule(parse_smiles(s), oracle(parse_smiles(s))) for s in smiles]

print("== labeled input set ==")
for s, e in zip(smiles, entries):
    print(f"  {s:<8} weight {e.property_value:7.3f}")

print("\n== mined pairs (edit distance <= 2, both directions attempted) ==")
pairs = mine_pairs(entries, max_edit_distance=2, limit=100)
for i, j in pairs:
    seq = decompose(entries[i].molecule, entries[j].molecule, 2)
    ops = " -> ".join(a.op for a in seq)
    print(f"  {smiles[i]:<8} => {smiles[j]:<8} via {ops}")

print("\n== per-step samples telescope to the endpoint difference ==")
dataset = build_dataset(entries, oracle, max_edit_distance=2, limit=100)
print(f"{len(dataset)} samples; first five:")
for sample in dataset[:5]:
    print(f"  {write_smiles(sample.m_from):<10} -> {write_smiles(sample.m_to):<10}"
          f" {sample.edit.op:<14} delta {sample.delta:+8.3f}")

total = sum(s.delta for s in dataset)
print(f"\nsum of all deltas: {total:+.3f} (chains cancel internally)")
