"""Aggregation strategies: what each helper forwards to the master.

Every planner returns an :class:`AggregationPlan` listing transmissions as
(helper, rows) pairs; the coefficient vector of a transmission over the
n_e * k unknown partial gradients follows from the client code, so plans
can be checked for recoverability with :func:`verify_recovery`.

Planners build the full plan. The ``*_cost`` functions compute only the
plan size and are what the Monte Carlo engine calls; tests pin them to
``plan_cost`` of the corresponding planner.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .codes import Code, PyramidCode, RepetitionCode, build_arc, build_mds, build_pyramid
from .erasures import (
    ClassIndex,
    ErasureMatrix,
    aggregation_columns,
    class_key,
    type_of,
)
from .exceptions import ParameterError, RecoveryError
from .field import FieldSpec, IncrementalBasis, gf, in_row_span

RAW = "raw"
AGGREGATED = "aggregated"


@dataclass(frozen=True)
class Transmission:
    """One symbol sent by ``helper``: the sum over ``rows`` of column ``column``."""

    helper: int
    kind: str
    rows: tuple[int, ...]
    column: int

    def __post_init__(self):
        if not self.rows:
            raise ParameterError("a transmission needs at least one row")
        if self.kind == RAW and len(self.rows) != 1:
            raise ParameterError("raw transmissions carry exactly one row")

    def coefficients(self, generator: np.ndarray, n_e: int) -> np.ndarray:
        """Coefficient vector over the unknowns g[i, r], flattened as i * k + r."""
        k = generator.shape[0]
        vec = np.zeros(n_e * k, dtype=np.int64)
        col = generator[:, self.column]
        for i in self.rows:
            vec[i * k : (i + 1) * k] = col
        return vec

    def components(self, generator: np.ndarray) -> list[int]:
        return np.flatnonzero(generator[:, self.column]).tolist()


@dataclass(frozen=True)
class AggregationPlan:
    n_h: int
    transmissions: tuple[Transmission, ...]
    matrix: ErasureMatrix | None = field(default=None, compare=False)

    @property
    def per_helper(self) -> tuple[int, ...]:
        """m_j: number of symbols sent by each helper."""
        m = [0] * self.n_h
        for tr in self.transmissions:
            m[tr.helper] += 1
        return tuple(m)

    @property
    def size(self) -> int:
        """|D_ag|, the total number of transmitted symbols."""
        return len(self.transmissions)

    def helper_order(self) -> list[int]:
        """Helpers in order of first transmission."""
        seen: dict[int, None] = {}
        for tr in self.transmissions:
            seen.setdefault(tr.helper, None)
        return list(seen)

    def sent_by_row(self) -> dict[int, list[int]]:
        """Columns contributed to by each row (aggregated or raw)."""
        out: dict[int, list[int]] = defaultdict(list)
        for tr in self.transmissions:
            for i in tr.rows:
                out[i].append(tr.column)
        return {i: sorted(cols) for i, cols in sorted(out.items())}

    def to_dict(self, generator: np.ndarray | None = None) -> dict:
        trs = []
        for tr in self.transmissions:
            d = {"helper": tr.helper, "kind": tr.kind, "rows": list(tr.rows), "column": tr.column}
            if generator is not None:
                d["components"] = tr.components(generator)
            trs.append(d)
        return {"transmissions": trs, "m": list(self.per_helper), "D_ag": self.size}

    def to_json(self, generator: np.ndarray | None = None) -> str:
        return json.dumps(self.to_dict(generator))


def plan_cost(plan: AggregationPlan, k: int) -> Fraction:
    return Fraction(plan.size, k)


def _kind(rows: Sequence[int]) -> str:
    return AGGREGATED if len(rows) > 1 else RAW


# --------------------------------------------------------------------------
# pyramid scheme


def _greedy_information_set(code: Code, candidates: Iterable[int], start: Iterable[int] = ()):
    """Greedy rank completion: scan ``candidates`` in order, keep independent columns."""
    G = code.generator.array
    basis = IncrementalBasis(code.spec, code.generator.rows)
    for j in start:
        if not basis.try_add(G[:, j]):
            raise RecoveryError(f"seed column {j} is dependent")
    chosen = []
    for j in candidates:
        if basis.full:
            break
        if basis.try_add(G[:, j]):
            chosen.append(j)
    return chosen, basis.full


def aggregate_over(
    code: PyramidCode, M: ErasureMatrix, rows: Iterable[int], cols: Iterable[int]
) -> list[Transmission]:
    """Aggregated symbol set for equivalent rows ``rows`` over columns ``cols``.

    Rows whose type overwhelms some local code first send, raw, the
    lowest-indexed lambda_i - 1 unerased symbols of every unaffected local
    L_i; the rest of an information set is then completed inside ``cols``
    (global parities first) and sent as sums over the rows.
    """
    rows = sorted(rows)
    if not rows:
        raise ParameterError("cannot aggregate over an empty row set")
    cols = frozenset(cols)
    typ = type_of(code, M.row(rows[0]))
    first = M.row(rows[0]).support & cols
    for i in rows[1:]:
        if type_of(code, M.row(i)) != typ or (M.row(i).support & cols) != first:
            raise ParameterError(f"row {i} is not equivalent to row {rows[0]} on the given columns")

    out: list[Transmission] = []
    seed: list[int] = []
    if any(typ.u):
        for i in rows:
            erased = M.row(i).support
            for li in typ.unaffected:
                L = code.locals_[li]
                avail = [j for j in L if j not in erased][: len(L) - 1]
                out.extend(Transmission(j, RAW, (i,), j) for j in avail)
        for li in typ.unaffected:
            seed.extend(code.local_info(li))
        q = set(code.global_)
        order = sorted(cols & q) + sorted(cols - q)
    else:
        order = sorted(cols)
    usable = [j for j in order if not M.array[rows, j].any()]
    chosen, ok = _greedy_information_set(code, usable, seed)
    if not ok:
        raise RecoveryError(f"no information set completable for rows {rows} over {sorted(cols)}")
    kind = _kind(rows)
    out.extend(Transmission(j, kind, tuple(rows), j) for j in chosen)
    return out


def _raw_information_set(code: Code, M: ErasureMatrix, i: int) -> list[Transmission]:
    chosen, ok = _greedy_information_set(code, M.unerased(i))
    if not ok:
        raise RecoveryError(f"row {i} has no unerased information set")
    return [Transmission(j, RAW, (i,), j) for j in chosen]


def _select_pyramid_classes(code: PyramidCode, M: ErasureMatrix):
    groups: dict[tuple, list[int]] = defaultdict(list)
    for i in range(M.n_e):
        groups[class_key(code, M.row(i))].append(i)
    best: dict[tuple, tuple] = {}
    for key, members in groups.items():
        typ = key[:2]
        cur = best.get(typ)
        if cur is None or (-len(members), key) < (-len(groups[cur]), cur):
            best[typ] = key
    return [(key, groups[key]) for key in sorted(best.values())]


def plan_pyramid(code: PyramidCode, M: ErasureMatrix) -> AggregationPlan:
    """Aggregate the largest equivalence class of every observed type.

    Ties between classes of equal size go to the smallest class key. Rows
    outside the chosen classes send a greedy raw information set.
    """
    if M.n_h != code.n_h:
        raise ParameterError(f"matrix has {M.n_h} columns, code has length {code.n_h}")
    M.check_weight(code.s)
    trs: list[Transmission] = []
    covered: set[int] = set()
    for key, members in _select_pyramid_classes(code, M):
        trs.extend(aggregate_over(code, M, members, aggregation_columns(code, key[0])))
        covered.update(members)
    for i in range(M.n_e):
        if i not in covered:
            trs.extend(_raw_information_set(code, M, i))
    return AggregationPlan(code.n_h, tuple(trs), M)


def pyramid_cost(index: ClassIndex, M: ErasureMatrix) -> Fraction:
    """Plan size of :func:`plan_pyramid` divided by k_t, from class counts only."""
    k = index.code.k
    cls = index.classes_of(M.masks())
    Mx, _ = index.max_per_type(cls)
    present = Mx > 0
    agg = np.where(
        index.is_u0,
        k,
        index.unaffected_dim * Mx + index.overwhelmed_dim,
    )
    total = int(agg[present].sum()) + (M.n_e - int(Mx.sum())) * k
    return Fraction(total, k)


# --------------------------------------------------------------------------
# AMC and the naive baseline


def _amc_groups(M: ErasureMatrix) -> list[tuple[tuple[int, ...], list[int]]]:
    groups: dict[tuple[int, ...], list[int]] = defaultdict(list)
    for i in range(M.n_e):
        groups[tuple(np.flatnonzero(M.array[i]).tolist())].append(i)
    return sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))


def plan_amc(M: ErasureMatrix, k: int, m: int = 1) -> AggregationPlan:
    """AMC with m maxima: the m largest groups of identical rows are aggregated.

    ``m=1`` is the original AMC strategy. Ties between equal-sized groups go
    to the lexicographically smallest erased-position tuple.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    M.check_weight(M.n_h - k)
    groups = _amc_groups(M)
    trs: list[Transmission] = []
    for idx, (_, rows) in enumerate(groups):
        cols = M.unerased(rows[0])
        if idx < m:
            kind = _kind(rows)
            trs.extend(Transmission(j, kind, tuple(rows), j) for j in cols)
        else:
            for i in rows:
                trs.extend(Transmission(j, RAW, (i,), j) for j in cols)
    trs.sort(key=lambda tr: (min(tr.rows), tr.column))
    return AggregationPlan(M.n_h, tuple(trs), M)


def amc_cost(M: ErasureMatrix, m: int = 1) -> Fraction:
    """n_e - (M_1 + ... + M_m') + m' with m' = min(m, number of distinct rows)."""
    if m == 0:
        return Fraction(M.n_e)
    _, counts = np.unique(M.masks(), return_counts=True)
    counts = np.sort(counts)[::-1]
    top = counts[:m]
    return Fraction(M.n_e - int(top.sum()) + len(top))


def plan_naive(M: ErasureMatrix, k: int) -> AggregationPlan:
    M.check_weight(M.n_h - k)
    trs = [
        Transmission(j, RAW, (i,), j) for i in range(M.n_e) for j in M.unerased(i)
    ]
    return AggregationPlan(M.n_h, tuple(trs), M)


def naive_cost(M: ErasureMatrix) -> Fraction:
    return Fraction(M.n_e)


# --------------------------------------------------------------------------
# ARC and the greedy set-cover variant


def _check_arc(code: RepetitionCode, M: ErasureMatrix) -> None:
    if M.n_h != code.n_h:
        raise ParameterError(f"matrix has {M.n_h} columns, code has length {code.n_h}")
    M.check_weight(code.s, exact=False)


def plan_arc(code: RepetitionCode, M: ErasureMatrix) -> AggregationPlan:
    """Every partial g[i, r] goes through the first helper holding an unerased copy."""
    _check_arc(code, M)
    assigned: dict[int, list[int]] = defaultdict(list)
    for r in range(code.k):
        for i in range(M.n_e):
            j = next((h for h in code.holders(r) if not M.array[i, h]), None)
            if j is None:
                raise RecoveryError(f"component {r} of row {i} reached no helper")
            assigned[j].append(i)
    trs = [Transmission(j, _kind(rows), tuple(sorted(rows)), j) for j, rows in sorted(assigned.items())]
    return AggregationPlan(code.n_h, tuple(trs), M)


def arc_cost(code: RepetitionCode, M: ErasureMatrix) -> Fraction:
    _check_arc(code, M)
    ok = ~M.array
    used = 0
    for r in range(code.k):
        sub = ok[:, list(code.holders(r))]
        if not sub.any(axis=1).all():
            raise RecoveryError(f"component {r} reached no helper for some row")
        used += len(np.unique(sub.argmax(axis=1)))
    return Fraction(used, code.k)


TIE_BREAKS = ("rarest", "lowest")


def plan_arc_greedy(code: RepetitionCode, M: ErasureMatrix, tie_break: str = "rarest") -> AggregationPlan:
    """Greedy set cover of the partials {g[i, r]} by the helpers' received sets.

    Each round picks a helper covering the most still-uncovered partials.
    Among equally good helpers, ``tie_break="rarest"`` prefers the one that
    covers a partial with the fewest holders overall (then the lowest
    index); ``"lowest"`` takes the lowest index directly. A chosen helper
    sends one aggregated symbol per component it covers.
    """
    _check_arc(code, M)
    if tie_break not in TIE_BREAKS:
        raise ParameterError(f"tie_break must be one of {TIE_BREAKS}")
    ok = ~M.array
    sets = [
        frozenset((i, code.component(j)) for i in np.flatnonzero(ok[:, j]).tolist())
        for j in range(code.n_h)
    ]
    multiplicity: dict[tuple[int, int], int] = defaultdict(int)
    for S in sets:
        for e in S:
            multiplicity[e] += 1
    U = {(i, r) for i in range(M.n_e) for r in range(code.k)}
    trs: list[Transmission] = []
    while U:
        gains = [len(S & U) for S in sets]
        best = max(gains)
        if best == 0:
            raise RecoveryError(f"partials {sorted(U)[:3]}... are held by no helper")
        cands = [j for j, g in enumerate(gains) if g == best]
        if tie_break == "rarest":
            j = min(cands, key=lambda h: (min(multiplicity[e] for e in sets[h] & U), h))
        else:
            j = cands[0]
        A = sets[j] & U
        by_comp: dict[int, list[int]] = defaultdict(list)
        for i, r in A:
            by_comp[r].append(i)
        for r in sorted(by_comp):
            rows = tuple(sorted(by_comp[r]))
            trs.append(Transmission(j, _kind(rows), rows, j))
        U -= sets[j]
    return AggregationPlan(code.n_h, tuple(trs), M)


def _greedy_cover_size(avail: list[int], universe: int, tie_break: str) -> int:
    """Greedy cover of ``universe`` by bitmask sets ``avail``; returns #sets used."""
    U = universe
    used = 0
    while U:
        gains = [(a & U).bit_count() for a in avail]
        best = max(gains)
        if best == 0:
            raise RecoveryError("uncoverable partial")
        cands = [h for h, g in enumerate(gains) if g == best]
        if len(cands) > 1 and tie_break == "rarest":
            def rarity(h):
                x = avail[h] & U
                low = len(avail)
                while x:
                    bit = x & -x
                    low = min(low, sum(1 for a in avail if a & bit))
                    x ^= bit
                return low
            h = min(cands, key=lambda c: (rarity(c), c))
        else:
            h = cands[0]
        U &= ~avail[h]
        used += 1
    return used


def arc_greedy_cost(code: RepetitionCode, M: ErasureMatrix, tie_break: str = "rarest") -> Fraction:
    """Cost of :func:`plan_arc_greedy`.

    Helpers holding different components cover disjoint partials, so the
    global greedy run splits into independent runs per component.
    """
    _check_arc(code, M)
    ok = ~M.array
    weights = 1 << np.arange(M.n_e, dtype=object)
    universe = (1 << M.n_e) - 1
    used = 0
    for r in range(code.k):
        avail = [int(weights[ok[:, h]].sum()) for h in code.holders(r)]
        used += _greedy_cover_size(avail, universe, tie_break)
    return Fraction(used, code.k)


# --------------------------------------------------------------------------
# recovery check


def verify_recovery(plan: AggregationPlan, code: Code, n_e: int) -> bool:
    """Can the master compute sum_i g[i, r] for every r from the plan?

    Also rejects plans that use a symbol erased in the recorded matrix.
    """
    G = code.generator.array
    k = G.shape[0]
    if plan.matrix is not None:
        E = plan.matrix.array
        for tr in plan.transmissions:
            if E[list(tr.rows), tr.column].any():
                return False
    if plan.size:
        A = np.array([tr.coefficients(G, n_e) for tr in plan.transmissions], dtype=np.int64)
    else:
        A = np.zeros((0, n_e * k), dtype=np.int64)
    targets = np.zeros((k, n_e * k), dtype=np.int64)
    for r in range(k):
        targets[r, r::k] = 1
    if A.shape[0] == 0:
        return False
    return in_row_span(code.spec, A, targets)


# --------------------------------------------------------------------------
# strategy facade used by the simulator and the CLI

SCHEMES = ("naive", "amc", "pyramid", "arc", "arc-greedy")


class Strategy:
    """A scheme bound to (n_h, s) and its client code.

    ``plan`` builds the full transmission plan, ``cost`` the per-matrix
    normalized helper-to-master load.
    """

    def __init__(
        self,
        scheme: str,
        n_h: int,
        s: int,
        t: int | None = None,
        m: int = 1,
        spec: FieldSpec | None = None,
        tie_break: str = "rarest",
    ):
        if scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
        if not 1 <= s <= n_h - 1:
            raise ParameterError(f"need 1 <= s <= n_h - 1, got s={s}, n_h={n_h}")
        spec = gf() if spec is None else spec
        self.scheme, self.n_h, self.s, self.t, self.m = scheme, n_h, s, t, m
        self.tie_break = tie_break
        self.index: ClassIndex | None = None
        if scheme in ("naive", "amc"):
            if m < 0:
                raise ParameterError(f"m must be >= 0, got {m}")
            self.code: Code = build_mds(spec, n_h - s, s)
        elif scheme == "pyramid":
            if t is None:
                raise ParameterError("the pyramid scheme needs t")
            self.code = build_pyramid(spec, n_h, s, t)
            self.index = ClassIndex(self.code)
        else:
            self.code = build_arc(n_h, s, spec)

    @property
    def k(self) -> int:
        return self.code.generator.rows

    @property
    def exact_weight(self) -> bool:
        """Whether rows must carry exactly s erasures (ARC accepts fewer)."""
        return self.scheme not in ("arc", "arc-greedy")

    @property
    def label(self) -> str:
        if self.scheme == "pyramid":
            return f"pyramid(t={self.t})"
        if self.scheme == "amc":
            return f"amc(m={self.m})"
        return self.scheme

    def plan(self, M: ErasureMatrix) -> AggregationPlan:
        if self.scheme == "naive" or (self.scheme == "amc" and self.m == 0):
            return plan_naive(M, self.k)
        if self.scheme == "amc":
            return plan_amc(M, self.k, self.m)
        if self.scheme == "pyramid":
            return plan_pyramid(self.code, M)
        if self.scheme == "arc":
            return plan_arc(self.code, M)
        return plan_arc_greedy(self.code, M, self.tie_break)

    def cost(self, M: ErasureMatrix) -> Fraction:
        if self.scheme == "naive":
            M.check_weight(self.s)
            return naive_cost(M)
        if self.scheme == "amc":
            M.check_weight(self.s)
            return amc_cost(M, self.m)
        if self.scheme == "pyramid":
            return pyramid_cost(self.index, M)
        if self.scheme == "arc":
            return arc_cost(self.code, M)
        return arc_greedy_cost(self.code, M, self.tie_break)

    def verify(self, M: ErasureMatrix) -> bool:
        return verify_recovery(self.plan(M), self.code, M.n_e)
