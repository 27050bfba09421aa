"""Maximum occupancy of bunched bins.

r balls are thrown uniformly into n bins; the first b*m bins are grouped
into m artificial bins of b real bins each. Z is the largest count among
the artificial bins. ``rho`` gives E[Z] and ``phi`` gives Pr[Z >= 1], both
by inclusion-exclusion over which artificial bins reach a level i.

The constrained multinomial sum inside each inclusion-exclusion term is
evaluated by a dynamic program over (bins processed, balls used), which is
polynomial in r instead of r^l.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb, factorial

import numpy as np

from .exceptions import BudgetExceeded, ParameterError

DEFAULT_WORK_BUDGET = 10**9
BRUTEFORCE_GUARD = 10**6


def work_budget() -> int:
    """Exact-mode budget; the CAGG_WORK_BUDGET environment variable overrides it."""
    env = os.environ.get("CAGG_WORK_BUDGET")
    return int(float(env)) if env else DEFAULT_WORK_BUDGET


@dataclass(frozen=True)
class OccupancyParams:
    n: int
    r: int
    m: int
    b: int

    def __post_init__(self):
        for name in ("n", "r", "m", "b"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be a positive integer")
        if self.b * self.m > self.n:
            raise ParameterError(f"b*m = {self.b * self.m} exceeds n = {self.n}")

    @property
    def nu(self) -> int:
        """Number of bins after bunching."""
        return self.n - self.b * self.m + self.m

    @property
    def work(self) -> int:
        """Inner-loop steps of the exact dynamic program summed over all (i, l) terms."""
        total = 0
        for i in range(1, self.r + 1):
            for l in range(1, min(self.m, self.r // i) + 1):
                x = self.r - l * i
                total += (x + 1) * (x + 2) // 2
        return total


def _check_budget(p: OccupancyParams, budget: int | None, work: int | None = None) -> None:
    budget = work_budget() if budget is None else budget
    work = p.work if work is None else work
    if work > budget:
        raise BudgetExceeded(
            f"exact occupancy for {p} needs ~{work:.3g} steps (budget {budget:.3g}); "
            "estimate by Monte Carlo instead"
        )


def _binomials(r: int) -> list[list[int]]:
    return [[comb(K, j) for j in range(K + 1)] for K in range(r + 1)]


def _level_counts(r: int, i: int, lmax: int, binom: list[list[int]] | None = None) -> list[list[int]]:
    """c[l][K] = sum of K!/(k_1!...k_l!) over k_j >= i with k_1+...+k_l = K.

    c[0] is the empty product (1 at K=0). Entries are exact integers and
    vanish for K < l*i.
    """
    binom = _binomials(r) if binom is None else binom
    c = [[1] + [0] * r]
    for l in range(1, lmax + 1):
        prev = c[-1]
        cur = [0] * (r + 1)
        lo = (l - 1) * i
        for K in range(l * i, r + 1):
            row = binom[K]
            acc = 0
            for j in range(i, K - lo + 1):
                acc += prev[K - j] * row[j]
            cur[K] = acc
        c.append(cur)
    return c


def _a_exact(p: OccupancyParams, i: int, l: int, cl: list[int]) -> Fraction:
    n, r, m, b = p.n, p.r, p.m, p.b
    rest = n - l * b
    total = 0
    for K in range(l * i, r + 1):
        if cl[K]:
            total += comb(r, K) * cl[K] * b**K * rest ** (r - K)
    sign = 1 if l % 2 == 1 else -1
    return Fraction(sign * comb(m, l) * total, n**r)


def _check_term(p: OccupancyParams, i: int, l: int) -> None:
    if not 1 <= l <= p.m:
        raise ParameterError(f"l={l} outside 1..{p.m}")
    if not 1 <= i <= p.r // l:
        raise ParameterError(f"i={i} outside 1..{p.r // l}")
    if l * p.b > p.n:
        raise ParameterError(f"l*b = {l * p.b} exceeds n = {p.n}: degenerate probability")


def a_term(p: OccupancyParams, i: int, l: int) -> Fraction:
    """Inclusion-exclusion term A_{i,l}: signed C(m,l) Pr[l given artificial bins all hold >= i]."""
    _check_term(p, i, l)
    return _a_exact(p, i, l, _level_counts(p.r, i, l)[l])


def _a_float_row(p: OccupancyParams, i: int, lmax: int) -> list[float]:
    """A_{i,1..lmax} in floating point.

    Processes the l constrained artificial bins one at a time with
    conditional binomials, so intermediate values stay in [0, 1].
    """
    n, r, m, b = p.n, p.r, p.m, p.b
    q = b / n
    lgam = [math.lgamma(x + 1) for x in range(r + 1)]
    probs = np.zeros(r + 1)
    probs[0] = 1.0
    out = []
    for l in range(1, lmax + 1):
        # remaining mass for this bin given l-1 bins already processed
        qc = q / (1.0 - (l - 1) * q) if (l - 1) * q < 1 else 1.0
        new = np.zeros(r + 1)
        for used in np.flatnonzero(probs):
            left = r - used
            ks = np.arange(i, left + 1)
            if ks.size == 0:
                continue
            with np.errstate(divide="ignore"):
                logp = (
                    lgam[left]
                    - np.array([lgam[k] for k in ks])
                    - np.array([lgam[left - k] for k in ks])
                    + ks * math.log(qc)
                    + ((left - ks) * math.log1p(-qc) if qc < 1 else np.where(ks == left, 0.0, -np.inf))
                )
            new[used + ks] += probs[used] * np.exp(logp)
        probs = new
        sign = 1.0 if l % 2 == 1 else -1.0
        out.append(sign * comb(m, l) * math.fsum(probs))
    return out


def a_term_float(p: OccupancyParams, i: int, l: int) -> float:
    _check_term(p, i, l)
    return _a_float_row(p, i, l)[l - 1]


def rho(p: OccupancyParams, mode: str = "exact", budget: int | None = None):
    """E[Z]: sum over l = 1..m and i = 1..floor(r/l) of A_{i,l}."""
    if mode == "exact":
        _check_budget(p, budget)
        total = Fraction(0)
        binom = _binomials(p.r)
        for i in range(1, p.r + 1):
            lmax = min(p.m, p.r // i)
            counts = _level_counts(p.r, i, lmax, binom)
            for l in range(1, lmax + 1):
                total += _a_exact(p, i, l, counts[l])
        return total
    if mode == "float":
        terms = []
        for i in range(1, p.r + 1):
            lmax = min(p.m, p.r // i)
            terms.extend(_a_float_row(p, i, lmax))
        return math.fsum(terms)
    raise ParameterError(f"mode must be 'exact' or 'float', got {mode!r}")


def phi(p: OccupancyParams, mode: str = "exact", budget: int | None = None):
    """Pr[Z >= 1]: sum over l of A_{1,l}."""
    lmax = min(p.m, p.r)
    if mode == "exact":
        _check_budget(p, budget, sum((p.r - l + 1) * (p.r - l + 2) // 2 for l in range(1, lmax + 1)))
        counts = _level_counts(p.r, 1, lmax)
        return sum((_a_exact(p, 1, l, counts[l]) for l in range(1, lmax + 1)), Fraction(0))
    if mode == "float":
        return math.fsum(_a_float_row(p, 1, lmax))
    raise ParameterError(f"mode must be 'exact' or 'float', got {mode!r}")


def phi_closed_form(p: OccupancyParams) -> Fraction:
    """1 - (1 - bm/n)^r: complement of every ball missing the bunched bins."""
    return 1 - (1 - Fraction(p.b * p.m, p.n)) ** p.r


def _compositions(r: int, parts: int):
    if parts == 1:
        yield (r,)
        return
    for first in range(r + 1):
        for rest in _compositions(r - first, parts - 1):
            yield (first,) + rest


def occupancy_bruteforce(p: OccupancyParams) -> tuple[Fraction, Fraction]:
    """Exact (E[Z], Pr[Z >= 1]) by enumerating every bin-count vector."""
    nu = p.nu
    count = comb(p.r + nu - 1, nu - 1)
    if count > BRUTEFORCE_GUARD:
        raise ParameterError(f"{count} compositions exceed the brute-force guard {BRUTEFORCE_GUARD}")
    fr = factorial(p.r)
    e = Fraction(0)
    hit = Fraction(0)
    big = Fraction(p.b, p.n)
    small = Fraction(1, p.n)
    for ks in _compositions(p.r, nu):
        mult = fr
        for k in ks:
            mult //= factorial(k)
        head = sum(ks[: p.m])
        prob = mult * big**head * small ** (p.r - head)
        z = max(ks[: p.m])
        e += z * prob
        if z >= 1:
            hit += prob
    return e, hit


def max_occupancy_bruteforce(n: int, r: int) -> Fraction:
    """E[max bin count] for r balls in n unbunched bins, over all n^r sequences."""
    total = 0
    for seq in product(range(n), repeat=r):
        total += max(np.bincount(seq, minlength=n))
    return Fraction(int(total), n**r)
