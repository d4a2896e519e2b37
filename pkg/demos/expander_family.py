"""Grow an expander family by tensoring, replacement and powering.

The bases are found by seeded search and certified exactly; larger levels
only get a power-iteration estimate.
"""
from fractions import Fraction

from pcpkit import specgraph as sg

H = sg.find_base_expander(64, 4, Fraction(9, 10), seed=0)
G2 = sg.find_base_expander(16, 8, Fraction(3, 5), seed=0)
spec = sg.FamilySpec(H=H, G1=sg.complete(9), G2=G2, b=1, target_lambda=Fraction(3, 5))

print("H:", sg.lambda_upper(H, "exact"))
for k in range(1, 5):
    G = sg.build_family(k, spec)
    est = sg.lambda_upper(G)
    flag = "certified" if est.certified else "estimate"
    print(f"level {k}: n={G.n:5d} d={G.d} lambda ~ {float(est.lambda_upper):.4f} ({est.method}, {flag})")

# Edge expansion on a small graph, every set up to half the vertices
G = sg.find_base_expander(12, 4, Fraction(4, 5), seed=2)
lam = float(sg.lambda_upper(G, "exact").lambda_upper)
worst = min((sg.edge_cut(G, S) / (G.d * len(S)), S) for S in sg.all_subsets(G.n, G.n // 2) if S)
print(f"n=12 d=4 lambda={lam:.4f}: min cut ratio {worst[0]:.4f} at {worst[1]}, bound {(1 - lam) / 2:.4f}")
