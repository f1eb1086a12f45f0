"""Joint transformation of discordant CT structures to a fixpoint.

Structures over different permutations interact only here, through two
removal rules iterated with clearing until stable:

  1. a variable constant in any structure is concretized in all of them
     (conflicting constants empty the whole system);
  2. for every variable pair co-tiered in two or more structures, the
     observed value combinations are intersected across structures and
     lines outside the intersection are removed.

The unified system is empty or non-empty only as a whole, and the set
of assignments encoded in *all* structures is preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .cts import _KEEP as _KEEP_BIT
from .cts import Cts

CAUSE_EMPTY_INPUT = "empty-input"
CAUSE_CONSTANT_CONFLICT = "constant-conflict"
CAUSE_EMPTY_TIER = "empty-tier"


@dataclass(frozen=True)
class PairRelation:
    """Allowed value combinations for an ordered variable pair."""

    vars: tuple[int, int]
    allowed: frozenset[tuple[int, int]]


@dataclass
class UnifyResult:
    structures: tuple[Cts, ...] | None
    waves: int
    cause: str | None = None
    structure_index: int | None = None
    empty_tier: int | None = None  # 1-based, when cause is an empty tier

    @property
    def empty(self) -> bool:
        return self.structures is None


def constant_of(structure: Cts, var: int) -> int | None:
    """0 or 1 when every line in every tier covering var carries that
    value; None when both values occur. Requires a non-empty structure."""
    if structure.is_empty:
        raise ValueError("constant is undefined on an empty structure")
    p = structure.perm.position(var)
    last = len(structure.tiers) - 1
    seen = 0
    for j in range(max(0, p - 2), min(last, p) + 1):
        bit = 4 >> (p - j)
        m = structure.tiers[j]
        for c in range(8):
            if m >> c & 1:
                seen |= 2 if c & bit else 1
        if seen == 3:
            return None
    return None if seen == 3 else (1 if seen == 2 else 0)


def pair_relation(structure: Cts, a: int, b: int) -> PairRelation | None:
    """Value combinations for (a, b) intersected over all tiers holding
    both variables; None when the pair is never co-tiered."""
    if structure.is_empty:
        raise ValueError("pair relation is undefined on an empty structure")
    pa = structure.perm.position(a)
    pb = structure.perm.position(b)
    if abs(pa - pb) > 2:
        return None
    last = len(structure.tiers) - 1
    allowed: set[tuple[int, int]] | None = None
    for j in range(max(0, max(pa, pb) - 2), min(last, min(pa, pb)) + 1):
        m = structure.tiers[j]
        sa, sb = 2 - (pa - j), 2 - (pb - j)
        combos = {((c >> sa) & 1, (c >> sb) & 1) for c in range(8) if m >> c & 1}
        allowed = combos if allowed is None else allowed & combos
    return PairRelation((a, b), frozenset(allowed or ()))


@lru_cache(maxsize=4096)
def _co_tiered_pairs(perm) -> frozenset[tuple[int, int]]:
    """All variable pairs at permutation distance <= 2, as sorted tuples."""
    order = perm.order
    pairs = set()
    for i in range(len(order)):
        for d in (1, 2):
            if i + d < len(order):
                x, y = order[i], order[i + d]
                pairs.add((x, y) if x < y else (y, x))
    return frozenset(pairs)


# Lookup tables for the hot loop. Window offsets are 0..2 (0 = first
# variable of the tier); the bit of code c at offset o is (c >> (2-o)) & 1.
# _COMBOS[oa][ob][mask]: 4-bit set of (va, vb) pairs present in the mask,
#   combo index va*2 + vb.
# _PAIR_KEEP[oa][ob][allowed]: codes whose (va, vb) combo is in `allowed`.
# _SEEN[o][mask]: bit 0 when value 0 occurs at offset o, bit 1 for value 1.

def _build_pair_tables():
    combos = [[[0] * 256 for _ in range(3)] for _ in range(3)]
    keep = [[[0] * 16 for _ in range(3)] for _ in range(3)]
    seen = [[0] * 256 for _ in range(3)]
    for oa in range(3):
        for ob in range(3):
            for mask in range(256):
                bits = 0
                for c in range(8):
                    if mask >> c & 1:
                        va = (c >> (2 - oa)) & 1
                        vb = (c >> (2 - ob)) & 1
                        bits |= 1 << (va * 2 + vb)
                combos[oa][ob][mask] = bits
            for allowed in range(16):
                m = 0
                for c in range(8):
                    va = (c >> (2 - oa)) & 1
                    vb = (c >> (2 - ob)) & 1
                    if allowed >> (va * 2 + vb) & 1:
                        m |= 1 << c
                keep[oa][ob][allowed] = m
    for o in range(3):
        for mask in range(256):
            s = 0
            for c in range(8):
                if mask >> c & 1:
                    s |= 2 if (c >> (2 - o)) & 1 else 1
            seen[o][mask] = s
    return combos, keep, seen


_COMBOS, _PAIR_KEEP, _SEEN = _build_pair_tables()


class _SystemContext:
    """Precomputed window geometry for a fixed tuple of permutations."""

    __slots__ = ("n", "const_windows", "pair_entries", "pairs_touching")

    def __init__(self, perms):
        n = len(perms[0])
        self.n = n
        last = n - 3
        # const_windows[i][var-1] = ((tier, offset), ...)
        self.const_windows = []
        for perm in perms:
            per_var = []
            for var in range(1, n + 1):
                p = perm.pos[var - 1]
                lo = p - 2 if p > 2 else 0
                hi = p if p < last else last
                per_var.append(tuple((j, p - j) for j in range(lo, hi + 1)))
            self.const_windows.append(per_var)
        # pair -> ((structure, ((tier, oa, ob), ...)), ...)
        by_pair: dict[tuple[int, int], list] = {}
        for i, perm in enumerate(perms):
            for a, b in _co_tiered_pairs(perm):
                pa, pb = perm.pos[a - 1], perm.pos[b - 1]
                lo = max(0, max(pa, pb) - 2)
                hi = min(last, min(pa, pb))
                windows = tuple((j, pa - j, pb - j) for j in range(lo, hi + 1))
                by_pair.setdefault((a, b), []).append((i, windows))
        self.pair_entries = [
            (pair, tuple(homes)) for pair, homes in sorted(by_pair.items())
            if len(homes) >= 2]
        self.pairs_touching = [[] for _ in perms]
        for idx, (_, homes) in enumerate(self.pair_entries):
            for i, _ in homes:
                self.pairs_touching[i].append(idx)


@lru_cache(maxsize=2048)
def _system_context(perms) -> _SystemContext:
    return _SystemContext(perms)


def unify(structures: Sequence[Cts], sink=None) -> UnifyResult:
    """Fixpoint of the joint transformation rules over the system.

    A single-structure system degenerates to clearing. Emptiness is a
    result, not an error: the outcome records the cause and, for an
    emptied tier, which structure and tier (1-based) collapsed first.

    Only structures changed in the previous wave are re-examined; the
    fixpoint of this monotone removal process is order-independent.
    A sink, when given, receives the system state before the first wave
    and after every wave.
    """
    from .cts import clear_masks

    if not structures:
        raise ValueError("need at least one structure")
    n = structures[0].n
    if any(s.n != n for s in structures):
        raise ValueError("structures must share the variable count")

    current = [s.clear() for s in structures]
    for i, s in enumerate(current):
        if s.is_empty:
            return UnifyResult(None, waves=0, cause=CAUSE_EMPTY_INPUT,
                               structure_index=i)
    if len(current) == 1:
        return UnifyResult((current[0],), waves=1)

    ctx = _system_context(tuple(s.perm for s in structures))
    masks = [list(s.tiers) for s in current]
    if sink is not None:
        _emit_wave(sink, current, masks, 0)
    fixed: dict[int, int] = {}
    waves = 0
    dirty = set(range(len(current)))
    while dirty:
        waves += 1
        touched: set[int] = set()

        # rule 1: constants of dirty structures, concretized everywhere
        for var in range(1, n + 1):
            value = fixed.get(var)
            new = False
            for i in sorted(dirty):
                seen = 0
                for j, off in ctx.const_windows[i][var - 1]:
                    seen |= _SEEN[off][masks[i][j]]
                    if seen == 3:
                        break
                if seen == 3:
                    continue
                c = 1 if seen == 2 else 0
                if value is None:
                    value = c
                    new = True
                elif value != c:
                    return UnifyResult(None, waves=waves,
                                       cause=CAUSE_CONSTANT_CONFLICT,
                                       structure_index=i)
            if value is None or (var in fixed and not new):
                continue
            fixed[var] = value
            for i in range(len(masks)):
                changed_here = False
                for j, off in ctx.const_windows[i][var - 1]:
                    m = masks[i][j] & _KEEP_BIT[off][value]
                    if m != masks[i][j]:
                        masks[i][j] = m
                        changed_here = True
                if changed_here:
                    _, zero = clear_masks(masks[i])
                    if zero is not None:
                        return UnifyResult(None, waves=waves,
                                           cause=CAUSE_EMPTY_TIER,
                                           structure_index=i,
                                           empty_tier=zero + 1)
                    touched.add(i)

        # rule 2: pair agreement for pairs touching a dirty structure
        pair_idx = sorted({p for i in dirty | touched
                           for p in ctx.pairs_touching[i]})
        for idx in pair_idx:
            (a, b), homes = ctx.pair_entries[idx]
            allowed = 15
            rels = []
            for i, windows in homes:
                rel = 15
                for j, oa, ob in windows:
                    rel &= _COMBOS[oa][ob][masks[i][j]]
                rels.append(rel)
                allowed &= rel
            for (i, windows), rel in zip(homes, rels):
                if rel == allowed:
                    continue
                for j, oa, ob in windows:
                    masks[i][j] &= _PAIR_KEEP[oa][ob][allowed]
                _, zero = clear_masks(masks[i])
                if zero is not None:
                    return UnifyResult(None, waves=waves,
                                       cause=CAUSE_EMPTY_TIER,
                                       structure_index=i,
                                       empty_tier=zero + 1)
                touched.add(i)
        if sink is not None:
            _emit_wave(sink, current, masks, waves)
        dirty = touched

    result = tuple(Cts._make(s.perm, tuple(m))
                   for s, m in zip(current, masks))
    return UnifyResult(result, waves=waves)


def _emit_wave(sink, current, masks, wave: int) -> None:
    parts = []
    for i, (s, m) in enumerate(zip(current, masks), start=1):
        parts.append("S%d:" % i)
        parts.append(Cts._make(s.perm, tuple(m)).render())
    sink.write("unify_wave_%02d" % wave, "\n".join(parts))
