"""Set partitions and the explicit cumulant formula.

Prints the surviving (j, partition) terms for small k and rewrites them in
terms of quenched cumulants of s_0^+, recovering the short closed forms.

Run: python3 demos/04_cumulant_formula.py
"""
from stationary_polymer import cumulants as ca

for k in range(1, 6):
    parts = list(ca.enumerate_partitions(k))
    print(f"k={k}: {len(parts)} partitions (Bell number {ca.bell_number(k)}):", " ".join(str(p) for p in parts[:8]),
          "..." if len(parts) > 8 else "")

for k in (2, 3, 4):
    terms = ca.build_theorem_rhs(k)
    print(f"\nk={k}: {len(terms)} surviving terms")
    print(ca.format_terms(terms))
    poly = ca.quenched_polynomial(terms)
    pretty = []
    for mono, c in poly.items():
        factors = " ".join("E[" + "*".join("A" if l == 0 else f"k{l}" for l in ell) + "]" for ell in mono)
        pretty.append(f"{c:+d} {factors}")
    print("quenched form:", " ".join(pretty))
    print("matches the written-out closed form:", poly == ca.CLOSED_FORMS[k])

print("\nterm counts k=2..6:", [len(ca.build_theorem_rhs(k)) for k in range(2, 7)])
print("E[A^2 H_1] expands as", ca.hermite_to_quenched(2, 1))
