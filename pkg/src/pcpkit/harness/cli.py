"""Command-line entry point.

Exit codes: 0 when every check passed, 1 when a check failed, 2 for usage,
input or budget errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .. import csp, hadamard, specgraph
from ..cnf import parse_dimacs
from ..errors import ParameterError, PcpError
from ..exactmath import parse_rat
from .report import ExperimentReport
from .stats import Probability, binom_statdist, make_rng, second_moment_bound


def _config(args):
    from ..dinur.config import PipelineConfig, loads_config
    cfg = loads_config(Path(args.config).read_text()) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def _emit(report: ExperimentReport, args) -> int:
    text = report.dumps(args.format)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{report.name}.{args.format}").write_text(text)
    sys.stdout.write(text)
    return 0 if report.passed else 1


def cmd_expander_build(args, cfg):
    G = specgraph.find_base_expander(args.n, args.d, parse_rat(args.target), seed=cfg.seed,
                                     budget=args.budget or cfg.expander_budget, loopless=args.loopless)
    est = specgraph.lambda_upper(G, "exact")
    rep = ExperimentReport("expander_build", cfg.to_json(), cfg.seed,
                           metrics={"n": G.n, "d": G.d, "lambda_upper": est.lambda_upper, "method": est.method},
                           checks={"certified": est.certified})
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"expander_{G.n}_{G.d}.graph").write_text(specgraph.dumps_graph(G))
    return rep


def cmd_expander_check(args, cfg):
    G = specgraph.loads_graph(Path(args.file).read_text())
    est = specgraph.lambda_upper(G, args.mode, seed=cfg.seed)
    target = parse_rat(args.target)
    return ExperimentReport("expander_check", cfg.to_json(), cfg.seed,
                            metrics={"n": G.n, "d": G.d, "lambda_upper": est.lambda_upper, "method": est.method,
                                     "certified": est.certified},
                            checks={"below_target": est.lambda_upper <= target})


def cmd_csp_val(args, cfg):
    phi = csp.loads_csp(Path(args.file).read_text())
    budget = args.budget or cfg.val_budget
    try:
        v = csp.val_exact(phi, budget=budget)
        prob = Probability(v, "exact")
    except PcpError:
        v = csp.val_lower(phi, seeds=(cfg.seed,))
        prob = Probability(float(v), "lower-bound", (float(v), 1.0))
    return ExperimentReport("csp_val", cfg.to_json(), cfg.seed, probabilities={"val": prob}, checks={})


def cmd_csp_info(args, cfg):
    phi = csp.loads_csp(Path(args.file).read_text())
    metrics = {"n": phi.n, "m": phi.m, "q": phi.q, "W": phi.W}
    if phi.q == 2 and phi.m:
        nice = csp.is_nice(phi)
        metrics.update(nice=nice.nice, failures=list(nice.failures), degree=nice.degree)
        if nice.lambda_estimate is not None:
            metrics.update(lambda_upper=nice.lambda_estimate.lambda_upper,
                           lambda_certified=nice.lambda_estimate.certified)
    return ExperimentReport("csp_info", cfg.to_json(), cfg.seed, metrics=metrics)


def cmd_hadamard_blr(args, cfg):
    bits = args.table.strip()
    k = len(bits).bit_length() - 1
    if not bits or set(bits) - {"0", "1"} or 1 << k != len(bits):
        raise ParameterError("table must be a bit string of length 2^k")
    f = hadamard.BoolFn(k, [int(b) for b in bits])
    u, agree = hadamard.nearest_linear(f)
    rate = hadamard.blr_pass_rate(f)
    bound = max(Fraction(29, 32), Fraction(1, 2) + agree / 2)
    return ExperimentReport("hadamard_blr", cfg.to_json(), cfg.seed,
                            metrics={"k": k, "nearest_linear": list(u), "agreement": agree},
                            probabilities={"pass": Probability(rate, "exact")},
                            checks={"within_bound": rate <= bound or agree >= 1})


def cmd_hadamard_verify(args, cfg):
    from ..cnf import brute_force
    cnf = parse_dimacs(Path(args.cnf).read_text())
    sys_, lay = hadamard.cnf_to_quadsys(cnf)
    if args.proof:
        proof = hadamard.loads_proof(Path(args.proof).read_bytes())
    else:
        x = brute_force(cnf)
        if x is None:
            raise ParameterError("formula is unsatisfiable; pass --proof to test a candidate")
        proof = hadamard.exp_pcp_prove(sys_, hadamard.extend_assignment(cnf, lay, x))
    acc = hadamard.exp_pcp_accept_prob(sys_, proof, m0=cfg.m0)
    return ExperimentReport("hadamard_verify", cfg.to_json(), cfg.seed,
                            metrics={"n1": sys_.n1, "equations": sys_.m, "single_round": acc.single_round},
                            probabilities={"accept": Probability(acc.value, "exact")},
                            checks={"accepted": acc.value == 1} if not args.proof else {})


def cmd_pipeline_run(args, cfg):
    from ..dinur.pipeline import run_pipeline
    cnf = parse_dimacs(Path(args.cnf).read_text())
    if args.budget:
        cfg = cfg.with_(val_budget=args.budget)
    res = run_pipeline(cnf, args.rounds, cfg, out_dir=args.out)
    checks = {}
    gap = res.manifest["gap"]
    if gap.get("method") == "val_exact" and gap["val"] != "1/1":
        checks["gap_reaches_realized_epsilon0"] = Fraction(gap["gap"]) >= Fraction(gap["realized_epsilon0"])
    return ExperimentReport("pipeline_run", cfg.to_json(), cfg.seed, metrics=res.manifest, checks=checks)


def cmd_pipeline_verify(args, cfg):
    from ..dinur.pipeline import accept_prob, loads_descriptor
    desc = loads_descriptor(Path(args.desc).read_text())
    text = Path(args.proof).read_text().split()
    proof = np.array([int(b) for b in "".join(text)], dtype=np.int64)
    p = accept_prob(desc, proof)
    return ExperimentReport("pipeline_verify", cfg.to_json(), cfg.seed,
                            metrics={"repetitions": desc.k, "constraints": desc.m},
                            probabilities={"accept": Probability(p, "exact")},
                            checks={"accepted_everywhere": p == 1})


def cmd_stats_binom(args, cfg):
    v = binom_statdist(args.t, args.shift, args.sign)
    metrics = {"t": args.t, "shift": args.shift, "sign": args.sign, "statdist": v}
    checks = {}
    if args.delta:
        delta = parse_rat(args.delta)
        checks["within_20_delta"] = v <= 20 * delta
    return ExperimentReport("stats_binom", cfg.to_json(), cfg.seed, metrics=metrics, checks=checks)


def cmd_stats_moment(args, cfg):
    lhs, rhs = second_moment_bound([parse_rat(v) for v in args.values])
    return ExperimentReport("stats_moment", cfg.to_json(), cfg.seed, metrics={"lhs": lhs, "rhs": rhs},
                            checks={"lhs_at_least_rhs": lhs >= rhs})


def cmd_suite_run(args, cfg):
    from .suite import run_suite
    out = args.out or "suite_out"
    manifest = run_suite(cfg, out)
    return ExperimentReport("suite", cfg.to_json(), cfg.seed, metrics={"sections": sorted(manifest["sections"])},
                            checks=dict(manifest["checks"]))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcpkit", description="Expanders, Hadamard PCPs and the gap pipeline.")
    p.add_argument("--config", help="text config file ('pcpconfig v1')")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--budget", type=int, help="enumeration / search budget")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="group", required=True)

    ex = sub.add_parser("expander").add_subparsers(dest="cmd", required=True)
    b = ex.add_parser("build")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--target", default="1/2")
    b.add_argument("--loopless", action="store_true")
    b.set_defaults(fn=cmd_expander_build)
    c = ex.add_parser("check")
    c.add_argument("file")
    c.add_argument("--target", default="9/10")
    c.add_argument("--mode", default="auto", choices=("auto", "exact", "power", "rayleigh"))
    c.set_defaults(fn=cmd_expander_check)

    cs = sub.add_parser("csp").add_subparsers(dest="cmd", required=True)
    v = cs.add_parser("val")
    v.add_argument("file")
    v.set_defaults(fn=cmd_csp_val)
    i = cs.add_parser("info")
    i.add_argument("file")
    i.set_defaults(fn=cmd_csp_info)

    hd = sub.add_parser("hadamard").add_subparsers(dest="cmd", required=True)
    bl = hd.add_parser("blr")
    bl.add_argument("table", help="truth table as a bit string, entry z at position z")
    bl.set_defaults(fn=cmd_hadamard_blr)
    hv = hd.add_parser("verify")
    hv.add_argument("cnf")
    hv.add_argument("--proof", help="proof file; default is the honest proof")
    hv.set_defaults(fn=cmd_hadamard_verify)

    pl = sub.add_parser("pipeline").add_subparsers(dest="cmd", required=True)
    pr = pl.add_parser("run")
    pr.add_argument("cnf")
    pr.add_argument("--rounds", type=int, default=0)
    pr.set_defaults(fn=cmd_pipeline_run)
    pv = pl.add_parser("verify")
    pv.add_argument("desc")
    pv.add_argument("proof", help="text file of proof bits")
    pv.set_defaults(fn=cmd_pipeline_verify)

    st = sub.add_parser("stats").add_subparsers(dest="cmd", required=True)
    sb = st.add_parser("binom")
    sb.add_argument("--t", type=int, required=True)
    sb.add_argument("--shift", type=int, required=True)
    sb.add_argument("--sign", type=int, default=1, choices=(1, -1))
    sb.add_argument("--delta", help="check the value against 20*delta")
    sb.set_defaults(fn=cmd_stats_binom)
    sm = st.add_parser("moment")
    sm.add_argument("values", nargs="+")
    sm.set_defaults(fn=cmd_stats_moment)

    su = sub.add_parser("suite").add_subparsers(dest="cmd", required=True)
    sr = su.add_parser("run")
    sr.set_defaults(fn=cmd_suite_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        start = time.perf_counter()
        report = args.fn(args, cfg)
        if args.group != "suite":
            report.wall_clock = time.perf_counter() - start
        else:
            print(f"suite finished in {time.perf_counter() - start:.1f} s", file=sys.stderr)
        return _emit(report, args)
    except (PcpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
