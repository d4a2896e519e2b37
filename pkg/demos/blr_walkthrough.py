"""Linearity testing and local decoding on 4-bit functions.

Run with ``python demos/blr_walkthrough.py``.
"""
import numpy as np

from pcpkit import hadamard as hd
from pcpkit.harness.stats import make_rng

rng = make_rng(7)
k = 4

# A codeword passes every BLR check; flipping bits lowers the pass rate
u = 0b1011
f = hd.wh_encode(hd.int_to_bits(u, k))
print("codeword pass rate:", hd.blr_pass_rate(f))
for flips in (1, 2, 3, 5):
    g = f.flip(*rng.choice(1 << k, size=flips, replace=False).tolist())
    best, agree = hd.nearest_linear(g)
    print(f"{flips} flips: pass rate {hd.blr_pass_rate(g)}, nearest linear {best} agrees on {agree}")

# Self-correction recovers <u, x> from a corrupted table
g = f.flip(3, 9)
for x in (0, 5, 12):
    target = bin(u & x).count("1") & 1
    print(f"x={x:2d}: Pr_r[g(x+r)+g(r) = <u,x>] = {hd.decode_rate(g, target, x)}")

# Pass rates of every 3-bit function against their best agreement
tables = ((np.arange(256)[:, None] >> np.arange(8)) & 1).astype(np.uint8)
rates = hd.blr_pass_counts_batch(tables) / 64
agree = np.array([hd.linear_agreements(hd.BoolFn(3, t)).max() for t in tables]) / 8
for a in sorted(set(agree.tolist())):
    sel = agree == a
    print(f"agreement {a:.3f}: {sel.sum():3d} functions, pass rate up to {rates[sel].max():.4f}")
