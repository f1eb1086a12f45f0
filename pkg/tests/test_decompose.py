from __future__ import annotations

import math
import random
import time

import pytest

from ctsat.cts import Perm
from ctsat.decompose import (Ctf, ctf_to_cts, decompose, decompose_with_plan,
                             group_terms)
from ctsat.formula import Clause, GenParams, TabularFormula, generate

import tabledata
from naive import sat_set


def ideal5_ctf() -> Ctf:
    perm = Perm.identity(5)
    rows = [(0, "000"), (0, "001"), (0, "101"), (0, "111"),
            (1, "000"), (1, "100"), (1, "101"), (1, "111"),
            (2, "010"), (2, "100"), (2, "111")]
    masks = [0, 0, 0]
    for j, bits in rows:
        masks[j] |= 1 << int(bits, 2)
    return Ctf(perm, tuple(masks))


def ideal5_formula() -> TabularFormula:
    return TabularFormula(5, tuple(ideal5_ctf().to_clauses()))


# -- grouping -----------------------------------------------------------------

def test_group_terms_worked8(worked8):
    groups = dict(group_terms(worked8))
    assert len(groups[(1, 2, 3)]) == 5
    assert len(groups[(1, 2, 5)]) == 1
    assert len(groups) == 15
    assert sum(len(g) for g in groups.values()) == worked8.m


def test_group_terms_single_triple():
    f = TabularFormula(5, tuple(
        Clause(((1, m & 1), (3, (m >> 1) & 1), (4, (m >> 2) & 1)))
        for m in range(6)))
    assert len(group_terms(f)) == 1


def test_group_terms_all_distinct():
    f = TabularFormula(9, (Clause(((1, 0), (2, 0), (3, 0))),
                           Clause(((4, 0), (5, 0), (6, 0))),
                           Clause(((7, 0), (8, 0), (9, 0)))))
    assert len(group_terms(f)) == 3


# -- decomposition ------------------------------------------------------------

def clause_multiset(ctfs):
    out = []
    for ctf in ctfs:
        out.extend(ctf.to_clauses())
    return sorted(out)


@pytest.mark.parametrize("strategy", ["simple", "assemble"])
def test_decompose_partitions_clauses(worked8, strategy):
    ctfs, report = decompose(worked8.canonicalize(), strategy)
    assert clause_multiset(ctfs) == sorted(worked8.canonicalize().clauses)
    assert math.ceil(report.w / (worked8.n - 2)) <= report.k <= worked8.m
    assert report.w == 15


@pytest.mark.parametrize("strategy", ["simple", "assemble"])
def test_decompose_conjunction_equivalence(worked8, strategy):
    ctfs, _ = decompose(worked8, strategy)
    for bits in worked8.assignments():
        expected = worked8.evaluate(bits)
        assert all(c.evaluate(bits) == 1 for c in ctfs) == bool(expected)


def test_decompose_ideal_formula_single_ctf():
    f = ideal5_formula()
    ctfs, report = decompose(f, "assemble")
    assert report.k == 1
    assert ctfs[0].perm == Perm.identity(5)
    assert ctfs[0].tiers == ideal5_ctf().tiers


def test_decompose_disjoint_triples_hits_upper_extreme():
    f = TabularFormula(9, (Clause(((1, 0), (2, 0), (3, 0))),
                           Clause(((4, 0), (5, 0), (6, 0))),
                           Clause(((7, 0), (8, 0), (9, 0)))))
    for strategy in ("simple", "assemble"):
        _, report = decompose(f, strategy)
        assert report.k == report.w == f.m == 3


def test_decompose_assemble_chains_overlapping_groups():
    # triples {1,2,3}, {2,3,4}, {3,4,5} chain into one permutation
    f = TabularFormula(5, (Clause(((1, 0), (2, 0), (3, 0))),
                           Clause(((2, 1), (3, 0), (4, 1))),
                           Clause(((3, 0), (4, 0), (5, 0)))))
    ctfs, report = decompose(f, "assemble")
    assert report.k == 1 and report.w == 3
    _, simple_report = decompose(f, "simple")
    assert simple_report.k == 3


def test_decompose_soundness_random_instances():
    rng = random.Random(23)
    for trial in range(25):
        f = generate(GenParams(n=rng.randint(4, 8), m=rng.randint(3, 20),
                               mode="free", seed=trial))
        ctfs, report = decompose(f, "assemble")
        assert math.ceil(report.w / (f.n - 2)) <= report.k <= f.m
        for bits in f.assignments():
            assert all(c.evaluate(bits) == 1 for c in ctfs) == bool(f.evaluate(bits))


def test_decompose_runtime_trend():
    # cost should scale roughly with m*n*k, far below quadratically in it
    def run(n, m):
        f = generate(GenParams(n=n, m=m, mode="free", seed=5))
        t0 = time.perf_counter()
        _, report = decompose(f, "assemble")
        return time.perf_counter() - t0, report.k

    t_small = min(run(12, 40)[0] for _ in range(3))
    big = [run(24, 160) for _ in range(3)]
    t_big = min(t for t, _ in big)
    k_small = run(12, 40)[1]
    k_big = big[0][1]
    product_ratio = (160 * 24 * k_big) / (40 * 12 * k_small)
    assert t_big <= max(0.05, 10 * product_ratio * t_small)


# -- pinned plans ---------------------------------------------------------------

def test_decompose_with_plan_reproduces_pinned_ctfs(worked8, worked8_plan):
    ctfs, report = decompose_with_plan(worked8, worked8_plan)
    assert report.k == 3
    for ctf, (perm_order, rows) in zip(
            ctfs, ((tabledata.PERM1, tabledata.CTF1_ROWS),
                   (tabledata.PERM2, tabledata.CTF2_ROWS),
                   (tabledata.PERM3, tabledata.CTF3_ROWS))):
        assert ctf.perm == Perm(perm_order)
        masks = [0] * 6
        for j, bits in rows:
            masks[j] |= 1 << int(bits, 2)
        assert ctf.tiers == tuple(masks)


def test_decompose_with_plan_rejects_uncovered_clauses(worked8, worked8_plan):
    short = [(p, idx[:-1]) for p, idx in worked8_plan]
    short[0] = (worked8_plan[0][0], worked8_plan[0][1])
    with pytest.raises(ValueError, match="unassigned"):
        decompose_with_plan(worked8, [(tabledata.PERM1,
                                       tabledata.CTF1_CLAUSE_INDICES)])


def test_ctf_from_clauses_rejects_non_compact():
    perm = Perm.identity(5)
    with pytest.raises(ValueError, match="not compact"):
        Ctf.from_clauses(perm, [Clause(((1, 0), (2, 0), (5, 0)))])


# -- CTF -> CTS -----------------------------------------------------------------

def test_ctf_to_cts_worked5(algebra_s2):
    z = ctf_to_cts(ideal5_ctf())
    assert z.equivalent(algebra_s2) == 1
    assert z.enumerate_assignments() == {(0, 1, 1, 0, 1), (1, 0, 0, 1, 1)}


def test_ctf_to_cts_reproduces_pinned_structures(worked8, worked8_plan,
                                                 table_structures):
    ctfs, _ = decompose_with_plan(worked8, worked8_plan)
    for ctf, expected in zip(ctfs, table_structures):
        got = ctf_to_cts(ctf)
        assert got.perm == expected.perm
        assert got.equivalent(expected) == 1


def test_ctf_full_tier_is_contradictory():
    perm = Perm.identity(4)
    ctf = Ctf(perm, (0xFF, 0))
    assert ctf_to_cts(ctf).is_empty


def test_ctf_to_cts_exact_satisfying_sets():
    rng = random.Random(77)
    for trial in range(30):
        n = rng.randint(4, 9)
        f = generate(GenParams(n=n, m=rng.randint(2, 4 * n), mode="free",
                               seed=1000 + trial))
        ctfs, _ = decompose(f, "assemble")
        for ctf in ctfs:
            as_formula = TabularFormula(n, tuple(ctf.to_clauses()))
            expected = sat_set(as_formula)
            got = ctf_to_cts(ctf)
            if got.is_empty:
                assert not expected
            else:
                assert got.enumerate_assignments() == expected
