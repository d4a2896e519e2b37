"""The deterministic end-to-end suite behind ``pcpkit suite run``.

Everything written to the output directory is a function of the config and
seed alone; timings go to stderr only.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from math import isqrt
from pathlib import Path

import numpy as np

from .. import exactmath, hadamard, specgraph
from ..cnf import Cnf
from ..dinur import PipelineConfig, dumps_config, run_pipeline
from .stats import binom_statdist, make_rng, second_moment_bound

SUITE_VERSION = 1

FIXTURES = {
    "contradiction": Cnf(1, ((1,), (-1,))),
    "chain": Cnf(2, ((1,), (-1, 2), (-2,))),
    "xor2": Cnf(2, ((1, 2), (-1, -2), (1, -2), (-1, 2))),
    "sat3": Cnf(3, ((1, 2, 3), (-1, 2), (-2, 3))),
}


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _stats_section(seed: int) -> tuple[dict, bool]:
    worst = Fraction(0)
    ok = True
    for t in (4, 16, 64, 256):
        r = isqrt(t)
        for k in range(1, 100):
            delta = Fraction(k, 100)
            shift = int(delta * r)
            for sign in (1, -1):
                v = binom_statdist(t, shift, sign)
                ok &= v <= 20 * delta
                worst = max(worst, v / (20 * delta))
    rng = make_rng(seed, 1)
    moment_ok = True
    for _ in range(200):
        vals = [Fraction(int(x)) for x in rng.integers(0, 5, size=int(rng.integers(1, 12)))]
        if not any(vals):
            continue
        lhs, rhs = second_moment_bound(vals)
        moment_ok &= lhs >= rhs
    return {"binom_worst_ratio": str(worst), "binom_ok": bool(ok), "moment_ok": bool(moment_ok)}, bool(ok and moment_ok)


def _sqrt_section(seed: int) -> tuple[dict, bool]:
    rng = make_rng(seed, 2)
    h = hashlib.sha256()
    ok = True
    for _ in range(200):
        r = Fraction(int(rng.integers(0, 10 ** 6)), int(rng.integers(1, 1000)))
        L = 2 ** int(rng.integers(4, 21))
        c = exactmath.cert_sqrt(r, L)
        ok &= 0 <= c.error() <= Fraction(1, L)
        h.update(exactmath.rat_str(c.value).encode())
    return {"sqrt_digest": h.hexdigest(), "sqrt_ok": bool(ok)}, bool(ok)


def _expander_section(cfg: PipelineConfig, out: Path) -> tuple[dict, bool]:
    G = specgraph.find_base_expander(16, 4, Fraction(3, 4), seed=cfg.seed, budget=cfg.expander_budget)
    text = specgraph.dumps_graph(G)
    (out / "expander_16_4.graph").write_text(text)
    est = specgraph.lambda_upper(G, "exact")
    return ({"n": 16, "d": 4, "lambda_upper": exactmath.rat_str(est.lambda_upper), "certified": est.certified,
             "graph_sha256": _sha(text)}, bool(est.certified and est.lambda_upper <= Fraction(3, 4)))


def _hadamard_section(cfg: PipelineConfig) -> tuple[dict, bool]:
    tables = np.array([[(f >> x) & 1 for x in range(8)] for f in range(256)], dtype=np.uint8)
    counts = hadamard.blr_pass_counts_batch(tables)
    hist = {str(int(c)): int(n) for c, n in zip(*np.unique(counts, return_counts=True))}
    sys, lay = hadamard.cnf_to_quadsys(FIXTURES["sat3"])
    u = hadamard.extend_assignment(FIXTURES["sat3"], lay, [0, 0, 1])
    honest = hadamard.exp_pcp_accept_prob(sys, hadamard.exp_pcp_prove(sys, u), m0=cfg.m0)
    sys2, _ = hadamard.cnf_to_quadsys(FIXTURES["contradiction"])
    worst = max(hadamard.round_accept_prob(sys2, p)
                for _, p in hadamard.structured_adversaries(sys2, make_rng(cfg.seed, 4)))
    ok = honest.value == 1 and worst ** cfg.m0 <= Fraction(1, 2)
    return ({"blr_histogram_k3": hist, "honest_acceptance": str(honest.value),
             "contradiction_worst_round": str(worst)}, bool(ok))


def _pipeline_section(cfg: PipelineConfig, out: Path) -> tuple[dict, bool]:
    res, ok = {}, True
    for name, cnf in FIXTURES.items():
        r = run_pipeline(cnf, 1, cfg, out_dir=out / "pipeline" / name)
        res[name] = {"stopped": r.stopped, "gap": r.manifest["gap"], "artifacts": r.manifest.get("artifacts")}
        gap = r.manifest["gap"]
        if gap.get("method") == "val_exact" and gap["val"] != "1/1":
            ok &= Fraction(gap["gap"]) >= Fraction(gap["realized_epsilon0"])
    return res, bool(ok)


def run_suite(cfg: PipelineConfig, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dumps_config(cfg))
    sections, checks = {}, {}
    for name, fn in (("stats", lambda: _stats_section(cfg.seed)),
                     ("sqrt", lambda: _sqrt_section(cfg.seed)),
                     ("expander", lambda: _expander_section(cfg, out)),
                     ("hadamard", lambda: _hadamard_section(cfg)),
                     ("pipeline", lambda: _pipeline_section(cfg, out))):
        sections[name], checks[name] = fn()
    manifest = {"suite_version": SUITE_VERSION, "seed": cfg.seed, "config": cfg.to_json(),
                "sections": sections, "checks": checks, "passed": all(checks.values())}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
