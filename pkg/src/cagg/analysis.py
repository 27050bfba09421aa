"""Closed-form and semi-analytic communication costs.

C_EH follows from the code dimension alone. C_HM for AMC is exact through
the occupancy function; for the pyramid scheme it is assembled from
per-type moments E[M] and Pr[M >= 1] of the largest class size, which come
either from the occupancy functions (exact) or from simulation.

Two accountings of types with no overwhelmed local exist for the pyramid
formula. ``"as-printed"`` charges such a type k_t * E[M] symbols;
``"operational"`` charges k_t * Pr[M >= 1], i.e. one information set per
aggregated class, which is what :func:`cagg.strategies.plan_pyramid` sends.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .codes import PyramidCode, build_pyramid, max_locals
from .erasures import PatternType, class_table
from .exceptions import BudgetExceeded, ParameterError
from .occupancy import OccupancyParams, phi, rho

VARIANTS = ("as-printed", "operational")


@dataclass(frozen=True)
class SystemParams:
    n_e: int
    n_h: int
    s: int
    scheme: str = "amc"
    t: int | None = None
    m: int | None = None

    def __post_init__(self):
        if self.n_e < 1 or self.n_h < 2:
            raise ParameterError("need n_e >= 1 and n_h >= 2")
        if not 1 <= self.s <= self.n_h - 1:
            raise ParameterError(f"need 1 <= s <= n_h - 1, got s={self.s}")

    @property
    def patterns(self) -> int:
        """|E| = C(n_h, s), the number of weight-s erasure patterns."""
        return comb(self.n_h, self.s)


@dataclass(frozen=True)
class CostEstimate:
    scheme: str
    t_or_m: int | None
    ceh: Fraction
    chm: Fraction | float
    method: str
    stderr: float | None = None
    trials: int | None = None
    seed: int | None = None

    def csv_row(self) -> list[str]:
        def num(x):
            if x is None:
                return ""
            if isinstance(x, Fraction):
                return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
            return repr(float(x))

        return [
            self.scheme,
            "" if self.t_or_m is None else str(self.t_or_m),
            num(self.ceh),
            num(self.chm),
            self.method,
            num(self.stderr),
            "" if self.trials is None else str(self.trials),
            "" if self.seed is None else str(self.seed),
        ]


CSV_HEADER = ("scheme", "t_or_m", "C_EH", "C_HM", "method", "stderr", "trials", "seed")


def estimates_csv(rows: Sequence[CostEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def ceh(params: SystemParams) -> Fraction:
    n_h, s = params.n_h, params.s
    if params.scheme in ("amc", "naive"):
        return Fraction(n_h, n_h - s)
    if params.scheme in ("arc", "arc-greedy"):
        return Fraction(s + 1)
    if params.scheme.startswith("pyramid"):
        t = params.t
        if t is None or not (t == 1 or 2 <= t <= max_locals(n_h, s)):
            raise ParameterError(
                f"t={t} outside the admissible interval [2, {max_locals(n_h, s)}] (or t=1 for AMC)"
            )
        return Fraction(n_h, n_h - s - t + 1)
    raise ParameterError(f"unknown scheme {params.scheme!r}")


def chm_amc_exact(params: SystemParams, budget: int | None = None) -> Fraction:
    """n_e + 1 - rho(C(n_h,s), n_e, C(n_h,s), 1)."""
    N = params.patterns
    return params.n_e + 1 - rho(OccupancyParams(N, params.n_e, N, 1), "exact", budget)


def chm_amc_bound(params: SystemParams) -> Fraction:
    """The earlier upper bound n_e - n_e/(n_h - s) + 1, reported for comparison only."""
    return params.n_e - Fraction(params.n_e, params.n_h - params.s) + 1


@dataclass
class TypeMoments:
    """E[M] and Pr[M >= 1] of the largest class size, one entry per type.

    ``samples`` holds per-trial M values (trials x types) when the moments
    were estimated by simulation; it is None for exact moments.
    """

    types: list[PatternType]
    mean_max: np.ndarray
    prob_hit: np.ndarray
    samples: np.ndarray | None = None
    seed: int | None = None

    @property
    def exact(self) -> bool:
        return self.samples is None

    @property
    def trials(self) -> int | None:
        return None if self.samples is None else self.samples.shape[0]


def exact_type_moments(code: PyramidCode, n_e: int, budget: int | None = None) -> TypeMoments:
    """Moments via occupancy with (n, r, m, b) = (C(n_h,s), n_e, |S|/beta, beta)."""
    n = comb(code.n_h, code.s)
    table = class_table(code)
    ps = [OccupancyParams(n, n_e, pc.mu, pc.beta) for pc in table]
    for p in ps:
        if p.work > (budget if budget is not None else _budget()):
            raise BudgetExceeded(f"exact moments need occupancy {p}; estimate by Monte Carlo")
    mean = [rho(p, "exact", budget) for p in ps]
    hit = [phi(p, "exact", budget) for p in ps]
    return TypeMoments([pc.type for pc in table], np.array(mean, dtype=object), np.array(hit, dtype=object))


def _budget() -> int:
    from .occupancy import work_budget

    return work_budget()


def _type_weights(code: PyramidCode, types: Sequence[PatternType], variant: str):
    """Per-type coefficients (on E[M], on Pr[M>=1]) in E|D_ag| before the leftover term."""
    dims = code.local_dims
    on_mean, on_hit = [], []
    for typ in types:
        un = sum(dims[i] for i in typ.unaffected)
        ov = code.k - un
        if not any(typ.u) and variant == "operational":
            on_mean.append(0)
            on_hit.append(code.k)
        else:
            on_mean.append(un)
            on_hit.append(ov)
    return on_mean, on_hit


def chm_pyramid_formula(
    params: SystemParams,
    t: int,
    variant: str,
    moments: TypeMoments | None,
    code: PyramidCode | None = None,
):
    """E[|D_ag|] / k_t with E[|D_ag|] assembled from per-type moments.

    Returns ``(value, stderr)``. With exact moments the value is a Fraction
    and stderr is None; with simulated moments the formula is evaluated per
    trial (it is linear in M and 1[M >= 1]) to obtain a standard error.
    """
    if variant not in VARIANTS:
        raise ParameterError(f"variant must be one of {VARIANTS}")
    if moments is None:
        raise ParameterError("per-type moments are required (exact or simulated)")
    code = build_pyramid(None, params.n_h, params.s, t) if code is None else code
    k = code.k
    on_mean, on_hit = _type_weights(code, moments.types, variant)
    if moments.exact:
        total = sum(
            (Fraction(a) * e + Fraction(b) * h for a, b, e, h in zip(on_mean, on_hit, moments.mean_max, moments.prob_hit)),
            Fraction(0),
        )
        total += (params.n_e - sum(moments.mean_max, Fraction(0))) * k
        return total / k, None
    S = moments.samples.astype(float)
    w_mean = np.array(on_mean, dtype=float) - k
    w_hit = np.array(on_hit, dtype=float)
    per_trial = (S @ w_mean + (S > 0) @ w_hit + params.n_e * k) / k
    n = per_trial.size
    se = float(per_trial.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(per_trial.mean()), se


def pyramid_moments(
    params: SystemParams,
    t: int,
    trials: int = 2000,
    seed: int = 0,
    budget: int | None = None,
    code: PyramidCode | None = None,
) -> TypeMoments:
    """Exact moments when the budget allows, simulated otherwise."""
    from .sim import SimConfig, estimate_type_moments

    code = build_pyramid(None, params.n_h, params.s, t) if code is None else code
    try:
        return exact_type_moments(code, params.n_e, budget)
    except BudgetExceeded:
        cfg = SimConfig(params, trials=trials, seed=seed)
        return estimate_type_moments(cfg, code)


def tradeoff(
    params: SystemParams,
    trials: int = 2000,
    seed: int = 0,
    budget: int | None = None,
) -> list[CostEstimate]:
    """ARC, AMC (t = 1) and every admissible pyramid t, sorted by C_EH.

    Each pyramid t yields two rows, one per formula variant.
    """
    from .sim import SimConfig, estimate_chm
    from .strategies import Strategy

    n_e, n_h, s = params.n_e, params.n_h, params.s
    rows: list[CostEstimate] = []

    amc = SystemParams(n_e, n_h, s, "amc", m=1)
    try:
        rows.append(CostEstimate("amc", 1, ceh(amc), chm_amc_exact(amc, budget), "exact"))
    except BudgetExceeded:
        res = estimate_chm(SimConfig(amc, trials, seed), Strategy("amc", n_h, s, m=1))
        rows.append(CostEstimate("amc", 1, ceh(amc), res.mean, "monte-carlo", res.stderr, trials, seed))

    for t in range(2, max_locals(n_h, s) + 1):
        code = build_pyramid(None, n_h, s, t)
        mom = pyramid_moments(params, t, trials, seed, budget, code)
        pp = SystemParams(n_e, n_h, s, "pyramid", t=t)
        for variant in VARIANTS:
            val, se = chm_pyramid_formula(pp, t, variant, mom, code)
            rows.append(
                CostEstimate(
                    f"pyramid-{variant}", t, ceh(pp), val, "formula-variant", se, mom.trials, mom.seed
                )
            )

    arc = SystemParams(n_e, n_h, s, "arc")
    if n_h % (s + 1) == 0:
        res = estimate_chm(SimConfig(arc, trials, seed, weight="exact"), Strategy("arc", n_h, s))
        rows.append(CostEstimate("arc", None, ceh(arc), res.mean, "monte-carlo", res.stderr, trials, seed))
    else:
        # no ARC code exists for these parameters; report the known upper bound s+1
        rows.append(CostEstimate("arc", None, ceh(arc), Fraction(s + 1), "upper-bound"))

    rows.sort(key=lambda r: r.ceh)
    return rows
