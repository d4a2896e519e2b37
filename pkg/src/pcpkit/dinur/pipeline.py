"""Amplification rounds, the pipeline runner, and the final verifier."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..cnf import Cnf, dumps_dimacs
from ..csp import Constraint, CspInstance, dumps_csp, satisfied_matrix, val_exact
from ..errors import FormatError, ParameterError, ResourceError, ShapeError
from ..exactmath import rat_str
from ..specgraph import SpectralEstimate
from .alphabet import alphabet_reduce
from .config import PipelineConfig
from .powering import power_t
from .stages import Stage, make_nice, qcsp_to_2cspW, regularize, to_qcsp

MANIFEST_VERSION = 1


class PartialRun(ResourceError):
    """A budget stopped a round; ``stages`` holds what was finished."""

    def __init__(self, message, stages, failed_stage):
        super().__init__(message)
        self.stages = stages
        self.failed_stage = failed_stage


def amplify_once(phi: CspInstance, cfg: PipelineConfig = PipelineConfig()) -> tuple[CspInstance, list[Stage]]:
    """binary form -> regular -> nice -> powered -> alphabet-reduced."""
    stages = []
    steps = [
        ("qcsp_to_2cspW", lambda x: qcsp_to_2cspW(x)),
        ("regularize", lambda x: regularize(x, cfg)),
        ("make_nice", lambda x: make_nice(x, cfg)),
        ("power_t", lambda x: power_t(x, cfg.t, cfg.power_budget)),
        ("alphabet_reduce", lambda x: alphabet_reduce(x, cfg)),
    ]
    cur = phi
    for name, fn in steps:
        try:
            st = fn(cur)
        except ResourceError as exc:
            raise PartialRun(f"{name}: {exc}", stages, name) from exc
        stages.append(st)
        cur = st.out
    return cur.csp, stages


# ---------------------------------------------------------------- verifier

def repetitions_for(eps: Fraction) -> int:
    """Least k with (1 - eps)^k <= 1/2."""
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise ParameterError("gap must lie in (0, 1]")
    k, acc = 1, 1 - eps
    while acc > Fraction(1, 2):
        k += 1
        acc *= 1 - eps
    return k


@dataclass(frozen=True, eq=False)
class VerifierDescriptor:
    """Randomness w indexes a k-tuple of constraints (base m, first most significant)."""

    proof_bits: int
    k: int
    scopes: tuple
    tables: tuple

    @property
    def m(self) -> int:
        return len(self.scopes)

    @property
    def space(self) -> int:
        return self.m ** self.k

    @property
    def max_queries(self) -> int:
        return self.k * max((len(s) for s in self.scopes), default=0)

    def constraints_of(self, w: int) -> tuple:
        if not 0 <= w < self.space:
            raise ShapeError(f"w={w} outside [0, {self.space})")
        out = []
        for _ in range(self.k):
            out.append(w % self.m)
            w //= self.m
        return tuple(reversed(out))

    def queries(self, w: int) -> tuple:
        return tuple(p for c in self.constraints_of(w) for p in self.scopes[c])


def descriptor_for(phi: CspInstance, eps: Fraction) -> VerifierDescriptor:
    if phi.W != 2:
        raise ShapeError("the final instance must be Boolean to serve as a proof layout")
    if any(c.table is None for c in phi.constraints):
        raise ShapeError("descriptor constraints need tables")
    return VerifierDescriptor(phi.n, repetitions_for(eps), tuple(c.scope for c in phi.constraints),
                              tuple(c.table for c in phi.constraints))


def _check_proof(desc: VerifierDescriptor, proof) -> np.ndarray:
    proof = np.asarray(proof, dtype=np.int64)
    if proof.shape != (desc.proof_bits,):
        raise ShapeError(f"proof must have {desc.proof_bits} bits, got shape {proof.shape}")
    if proof.size and (proof.min() < 0 or proof.max() > 1):
        raise ShapeError("proof entries must be bits")
    return proof


def _holds(desc: VerifierDescriptor, c: int, proof: np.ndarray) -> bool:
    idx = 0
    for p in desc.scopes[c]:
        idx = 2 * idx + int(proof[p])
    return bool(desc.tables[c][idx])


def pcp_verify(desc: VerifierDescriptor, proof, w: int) -> bool:
    proof = _check_proof(desc, proof)
    return all(_holds(desc, c, proof) for c in desc.constraints_of(w))


def accept_prob(desc: VerifierDescriptor, proof) -> Fraction:
    """Exact Pr_w[accept]: the k coordinates of w are independent and uniform."""
    proof = _check_proof(desc, proof)
    if desc.m == 0:
        return Fraction(1)
    good = sum(_holds(desc, c, proof) for c in range(desc.m))
    return Fraction(good, desc.m) ** desc.k


def accept_prob_enumerated(desc: VerifierDescriptor, proof, budget: int = 1 << 20) -> Fraction:
    if desc.space > budget:
        raise ResourceError(f"{desc.space} random strings exceed the budget")
    proof = _check_proof(desc, proof)
    return Fraction(sum(pcp_verify(desc, proof, w) for w in range(desc.space)), desc.space)


def np_witness_check(desc: VerifierDescriptor, proof, budget: int = 1 << 20) -> bool:
    """The easy direction: a proof accepted on every random string is an NP witness."""
    proof = _check_proof(desc, proof)
    if desc.space <= budget:
        return all(pcp_verify(desc, proof, w) for w in range(desc.space))
    # acceptance on every tuple is acceptance on every single constraint
    return all(_holds(desc, c, proof) for c in range(desc.m))


def dumps_descriptor(desc: VerifierDescriptor) -> str:
    lines = [f"pcpdesc v1 {desc.proof_bits} {desc.m} {desc.k}"]
    for s, t in zip(desc.scopes, desc.tables):
        lines.append("queries: " + " ".join(map(str, s)) + " ; table: " + "".join(str(int(b)) for b in t))
    return "\n".join(lines) + "\n"


def loads_descriptor(text: str) -> VerifierDescriptor:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    head = rows[0].split() if rows else []
    if head[:2] != ["pcpdesc", "v1"] or len(head) != 5:
        raise FormatError("missing 'pcpdesc v1 bits m k' header")
    bits, m, k = map(int, head[2:])
    if len(rows) - 1 != m:
        raise FormatError(f"expected {m} constraint lines")
    scopes, tables = [], []
    for row in rows[1:]:
        try:
            left, right = row.split(";")
            q = left.split(":", 1)[1].split()
            t = right.split(":", 1)[1].strip()
            scopes.append(tuple(int(x) for x in q))
            tables.append(np.array([int(b) for b in t], dtype=np.uint8))
        except (ValueError, IndexError) as exc:
            raise FormatError(f"bad constraint line: {row}") from exc
        if len(tables[-1]) != 2 ** len(scopes[-1]) or any(not 0 <= p < bits for p in scopes[-1]):
            raise FormatError(f"inconsistent constraint line: {row}")
    return VerifierDescriptor(bits, k, tuple(scopes), tuple(tables))


# ---------------------------------------------------------------- runner

@dataclass
class PipelineResult:
    final: CspInstance
    descriptor: VerifierDescriptor
    manifest: dict
    rounds: list = field(default_factory=list)   # list of stage lists
    base: Stage | None = None
    stopped: str | None = None


def _jsonable(v):
    if isinstance(v, Fraction):
        return rat_str(v)
    if isinstance(v, SpectralEstimate):
        return {"lambda_upper": rat_str(v.lambda_upper), "method": v.method, "certified": v.certified,
                "residual": None if v.residual is None else rat_str(Fraction(v.residual))}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def _stage_record(st: Stage) -> dict:
    out = st.out
    rec = {"stage": st.name, "in_constraints": st.src.m, "out_constraints": out.m, "out_variables": out.n,
           "out_alphabet": str(out.W) if hasattr(out, "W") else None,
           "blowup": None if st.blowup is None else rat_str(st.blowup)}
    rec["info"] = _jsonable({k: v for k, v in st.info.items() if k != "cloud_sizes"})
    return rec


def _gap_evidence(phi: CspInstance, budget: int) -> dict:
    try:
        v = val_exact(phi, budget=budget)
    except ResourceError:
        return {"method": "none", "reason": "val_exact over budget"}
    return {"method": "val_exact", "val": rat_str(v), "gap": rat_str(1 - v)}


def run_pipeline(cnf: Cnf, rounds: int, cfg: PipelineConfig = PipelineConfig(),
                 out_dir: str | Path | None = None, strict: bool = False) -> PipelineResult:
    """to_qcsp, then up to ``rounds`` amplification rounds.

    A round that hits a budget stops the run; finished artifacts are kept
    and the stop is recorded.  With ``strict`` the stop is re-raised as
    ``PartialRun`` after the artifacts are written.
    """
    if rounds < 0 or rounds > cfg.rounds_cap:
        raise ParameterError(f"rounds must lie in [0, {cfg.rounds_cap}]")
    base = to_qcsp(cnf, cfg.q0)
    cur = base.out
    records = [_stage_record(base)]
    done, stopped, err = [], None, None
    evidence = _gap_evidence(cur, cfg.val_budget)
    for r in range(rounds):
        if evidence.get("method") == "val_exact" and Fraction(evidence["gap"]) >= cfg.epsilon0:
            stopped = f"gap {evidence['gap']} already reaches epsilon0 before round {r + 1}"
            break
        try:
            cur2, stages = amplify_once(cur, cfg)
        except PartialRun as exc:
            records += [dict(_stage_record(s), round=r + 1) for s in exc.stages]
            stopped = f"round {r + 1} stopped at {exc.failed_stage}: {exc.__cause__}"
            done.append(exc.stages)
            err = exc
            break
        records += [dict(_stage_record(s), round=r + 1) for s in stages]
        done.append(stages)
        cur = cur2
        evidence = _gap_evidence(cur, cfg.val_budget)
    completed = sum(1 for s in done if len(s) == 5)
    # rounds=0 (or no finished round): the instance is the clause instance, whose gap is at least 1/m
    realized = Fraction(1, cur.m) if cur.m else Fraction(1)
    if completed and evidence.get("method") == "val_exact":
        realized = Fraction(evidence["gap"]) or realized
    desc = descriptor_for(cur, realized)
    manifest = {
        "version": MANIFEST_VERSION,
        "config": cfg.to_json(),
        "seed": cfg.seed,
        "input": {"variables": cnf.nvars, "clauses": len(cnf.clauses)},
        "rounds_requested": rounds,
        "rounds_completed": completed,
        "stopped": stopped,
        "stages": records,
        "final": {"variables": cur.n, "constraints": cur.m, "arity": cur.q, "alphabet": cur.W},
        "gap": dict(evidence, realized_epsilon0=rat_str(realized)),
        "verifier": {"proof_bits": desc.proof_bits, "repetitions": desc.k, "randomness_space": str(desc.space),
                     "max_queries": desc.max_queries},
    }
    result = PipelineResult(cur, desc, manifest, done, base, stopped)
    if out_dir is not None:
        write_artifacts(result, cnf, Path(out_dir))
    if strict and err is not None:
        raise err
    return result


def write_artifacts(result: PipelineResult, cnf: Cnf, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = {"input.cnf": dumps_dimacs(cnf), "final.csp": dumps_csp(result.final),
             "final.pcpdesc": dumps_descriptor(result.descriptor)}
    for r, stages in enumerate(result.rounds, start=1):
        for st in stages:
            if isinstance(st.out, CspInstance) and all(c.table is not None for c in st.out.constraints):
                files[f"round{r}_{st.name}.csp"] = dumps_csp(st.out)
    digests = {}
    for name, text in sorted(files.items()):
        (out / name).write_text(text)
        digests[name] = hashlib.sha256(text.encode()).hexdigest()
    result.manifest["artifacts"] = digests
    (out / "manifest.json").write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    return digests


def honest_proof(result: PipelineResult, x) -> np.ndarray:
    """Proof bits for a satisfying assignment x of the input formula."""
    u = result.base.lift(x)
    for stages in result.rounds:
        if len(stages) < 5:
            break
        for st in stages:
            u = st.lift(u)
    return np.asarray(u, dtype=np.int64)
