"""CNF formulas with DIMACS-style integer literals (variable v is v or -v, 1-based)."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product

import numpy as np

from .errors import FormatError, ResourceError


@dataclass(frozen=True)
class Cnf:
    nvars: int
    clauses: tuple

    def __post_init__(self):
        cl = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in cl:
            for lit in c:
                if lit == 0 or abs(lit) > self.nvars:
                    raise FormatError(f"literal {lit} outside 1..{self.nvars}")
        object.__setattr__(self, "clauses", cl)

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def evaluate(self, x) -> bool:
        """x[i] is the value of variable i+1."""
        return all(any((x[abs(l) - 1] == 1) == (l > 0) for l in c) for c in self.clauses)

    def count_satisfied(self, x) -> int:
        return sum(any((x[abs(l) - 1] == 1) == (l > 0) for l in c) for c in self.clauses)


def brute_force(cnf: Cnf, budget: int = 1 << 22):
    """First satisfying assignment in lexicographic order, or None."""
    if 2 ** cnf.nvars > budget:
        raise ResourceError(f"2^{cnf.nvars} assignments exceed the budget {budget}")
    for x in product((0, 1), repeat=cnf.nvars):
        if cnf.evaluate(x):
            return list(x)
    return None


def max_satisfied(cnf: Cnf, budget: int = 1 << 22) -> int:
    if 2 ** cnf.nvars > budget:
        raise ResourceError(f"2^{cnf.nvars} assignments exceed the budget {budget}")
    return max(cnf.count_satisfied(x) for x in product((0, 1), repeat=cnf.nvars))


def split_to_width3(cnf: Cnf) -> tuple[Cnf, int]:
    """Chain long clauses with fresh variables: (a v b v c v d) -> (a v b v z)(-z v c v d).

    Returns the new formula and the number of original variables (a prefix).
    """
    nv = cnf.nvars
    out = []
    for c in cnf.clauses:
        c = list(c)
        while len(c) > 3:
            nv += 1
            out.append((c[0], c[1], nv))
            c = [-nv] + c[2:]
        out.append(tuple(c))
    return Cnf(nv, tuple(out)), cnf.nvars


def parse_dimacs(text: str) -> Cnf:
    nvars = None
    clauses, cur = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"bad problem line: {line}")
            nvars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(tuple(cur))
    if nvars is None:
        raise FormatError("missing 'p cnf' line")
    return Cnf(nvars, tuple(clauses))


def dumps_dimacs(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.nvars} {len(cnf.clauses)}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in cnf.clauses]
    return "\n".join(lines) + "\n"


def random_cnf(rng: np.random.Generator, nvars: int, nclauses: int, width: int = 3) -> Cnf:
    clauses = []
    for _ in range(nclauses):
        k = min(width, nvars)
        vs = rng.choice(nvars, size=k, replace=False) + 1
        signs = rng.choice([-1, 1], size=k)
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return Cnf(nvars, tuple(clauses))


def _canonical(clauses, nvars: int):
    best = None
    for perm in permutations(range(1, nvars + 1)):
        ren = tuple(sorted(tuple(sorted((perm[abs(l) - 1] * (1 if l > 0 else -1) for l in c), key=abs))
                           for c in clauses))
        if best is None or ren < best:
            best = ren
    used = sorted({abs(l) for c in best for l in c})
    relabel = {v: i + 1 for i, v in enumerate(used)}
    return tuple(tuple(relabel[abs(l)] * (1 if l > 0 else -1) for l in c) for c in best), len(used)


def small_cnf_universe(nvars: int = 3, max_clauses: int = 3, max_wide: int = 1) -> list[Cnf]:
    """Every CNF over at most ``nvars`` variables with clause width <= 3, up to renaming.

    Only formulas with at most ``max_clauses`` distinct clauses, at most
    ``max_wide`` of them with three literals, are listed.  Variables are
    relabelled 1..k so unused variables do not inflate downstream encodings.
    """
    lits = []
    for k in (1, 2, 3):
        for vs in combinations(range(1, nvars + 1), k):
            for signs in product((1, -1), repeat=k):
                lits.append(tuple(v * s for v, s in zip(vs, signs)))
    seen = {}
    for k in range(max_clauses + 1):
        for combo in combinations(lits, k):
            if sum(len(c) == 3 for c in combo) > max_wide:
                continue
            canon, used = _canonical(combo, nvars)
            seen.setdefault(canon, used)
    return [Cnf(used, canon) for canon, used in sorted(seen.items(), key=lambda kv: (len(kv[0]), kv[0]))]
