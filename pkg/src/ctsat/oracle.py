"""Trusted ground truth: exhaustive scan and a DPLL decision procedure.

Both engines are self-contained so the trust base stays small; they
cross-validate each other in the test suite and back the differential
harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import Bits, TabularFormula

BRUTE_FORCE_MAX_N = 24
_CHUNK = 1 << 18


@dataclass(frozen=True)
class OracleResult:
    satisfiable: bool
    witness: Bits | None
    model_count: int | None = None

    def __post_init__(self):
        if self.satisfiable and self.witness is None:
            raise ValueError("satisfiable result must carry a witness")
        if not self.satisfiable and self.witness is not None:
            raise ValueError("unsatisfiable result cannot carry a witness")


def _index_to_bits(index: int, n: int) -> Bits:
    return tuple((index >> (n - 1 - k)) & 1 for k in range(n))


def brute_force(formula: TabularFormula, max_n: int = BRUTE_FORCE_MAX_N) -> OracleResult:
    """Exhaustive scan of all 2^n assignments with an exact model count.

    Assignment i maps x1 to the most significant of n bits, matching
    `TabularFormula.assignments`. Vectorized in chunks.
    """
    n = formula.n
    if n > max_n:
        raise ValueError("brute force bound exceeded: n=%d > %d" % (n, max_n))
    total = 1 << n
    count = 0
    witness = None
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.uint32)
        sat = np.ones(idx.shape, dtype=bool)
        for clause in formula.clauses:
            falsified = np.ones(idx.shape, dtype=bool)
            for v, mark in clause.entries:
                bit = (idx >> np.uint32(n - v)) & np.uint32(1)
                falsified &= bit == mark
            sat &= ~falsified
        count += int(sat.sum())
        if witness is None and sat.any():
            witness = _index_to_bits(int(idx[sat.argmax()]), n)
    if witness is None:
        return OracleResult(False, None, 0)
    return OracleResult(True, witness, count)


def dpll(formula: TabularFormula) -> OracleResult:
    """Unit propagation plus branching; sound and complete.

    Branches on the first variable of a shortest unresolved clause,
    trying value 0 first. The witness is re-verified before returning.
    """
    n = formula.n
    clauses = [c.to_literals() for c in formula.clauses]
    assign: list[int | None] = [None] * (n + 1)

    def lit_value(lit: int) -> int | None:
        v = assign[abs(lit)]
        if v is None:
            return None
        return int((lit > 0) == (v == 1))

    def propagate(trail: list[int]) -> bool:
        """Assign all unit literals; False on conflict."""
        while True:
            unit = None
            for cl in clauses:
                unassigned = None
                satisfied = False
                open_count = 0
                for lit in cl:
                    lv = lit_value(lit)
                    if lv == 1:
                        satisfied = True
                        break
                    if lv is None:
                        open_count += 1
                        unassigned = lit
                if satisfied:
                    continue
                if open_count == 0:
                    return False
                if open_count == 1:
                    unit = unassigned
                    break
            if unit is None:
                return True
            assign[abs(unit)] = int(unit > 0)
            trail.append(abs(unit))

    def pick_branch() -> int | None:
        best = None
        best_open = 4
        for cl in clauses:
            open_lits = []
            satisfied = False
            for lit in cl:
                lv = lit_value(lit)
                if lv == 1:
                    satisfied = True
                    break
                if lv is None:
                    open_lits.append(lit)
            if satisfied:
                continue
            if open_lits and len(open_lits) < best_open:
                best_open = len(open_lits)
                best = abs(open_lits[0])
        if best is not None:
            return best
        for v in range(1, n + 1):
            if assign[v] is None:
                return v
        return None

    def search() -> bool:
        trail: list[int] = []
        if not propagate(trail):
            for v in trail:
                assign[v] = None
            return False
        var = pick_branch()
        if var is None:
            return True
        for value in (0, 1):
            assign[var] = value
            if search():
                return True
            assign[var] = None
        for v in trail:
            assign[v] = None
        return False

    if search():
        bits = tuple(1 if assign[v] == 1 else 0 for v in range(1, n + 1))
        if formula.evaluate(bits) != 1:
            raise AssertionError("internal witness failed verification")
        return OracleResult(True, bits)
    return OracleResult(False, None)
