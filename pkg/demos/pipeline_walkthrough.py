"""Push tiny formulas through the gap pipeline and inspect the verifier.

Artifacts land in ``demo_out/`` next to the working directory.
"""
from itertools import product
from pathlib import Path

import numpy as np

from pcpkit.dinur import PartialRun, accept_prob, honest_proof, pcp_verify, run_pipeline
from pcpkit.harness.suite import FIXTURES

for name, cnf in FIXTURES.items():
    res = run_pipeline(cnf, 1, out_dir=Path("demo_out") / name)
    gap = res.manifest["gap"]
    desc = res.descriptor
    print(f"{name}: {len(cnf.clauses)} clauses, stopped: {res.stopped}")
    print(f"  gap {gap['gap']} (realized epsilon0 {gap['realized_epsilon0']}), "
          f"{desc.k} repetitions, {desc.proof_bits} proof bits")
    worst = max(accept_prob(desc, np.array(p)) for p in product((0, 1), repeat=desc.proof_bits))
    print(f"  best proof is accepted with probability {worst}")

cnf = FIXTURES["sat3"]
res = run_pipeline(cnf, 0)
x = next(x for x in product((0, 1), repeat=cnf.nvars) if cnf.evaluate(x))
proof = honest_proof(res, x)
print("sat3 honest proof", proof.tolist(), "accepted on every seed:",
      all(pcp_verify(res.descriptor, proof, w) for w in range(res.descriptor.space)))

# Insisting on a full round surfaces where the desk-scale budget runs out
try:
    run_pipeline(cnf, 1, strict=True)
except PartialRun as exc:
    print("strict round stopped at", exc.failed_stage)
