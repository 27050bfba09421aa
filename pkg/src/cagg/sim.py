"""Seeded Monte Carlo engine.

Trial i draws its erasure matrix from its own stream
``default_rng(SeedSequence(seed, spawn_key=(i,)))``, so results do not
depend on the order in which trials run or on how they are split across
workers. Several strategies passed together are evaluated on the same
matrices (common random numbers).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .analysis import SystemParams, TypeMoments
from .codes import PyramidCode
from .erasures import ClassIndex, ErasureMatrix
from .exceptions import CaggError, ParameterError

WEIGHT_MODES = ("exact", "upto")


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    trials: int = 2000
    seed: int = 0
    weight: str = "exact"

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.weight not in WEIGHT_MODES:
            raise ParameterError(f"weight mode must be one of {WEIGHT_MODES}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must fit in 64 unsigned bits")


@dataclass
class McResult:
    label: str
    mean: float
    stderr: float
    trials: int
    seed: int
    costs: np.ndarray | None = field(default=None, repr=False)

    def histogram(self) -> dict[float, int]:
        vals, counts = np.unique(self.costs, return_counts=True)
        return {float(v): int(c) for v, c in zip(vals, counts)}


def trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def sample_matrix(n_e: int, n_h: int, s: int, mode: str, rng: np.random.Generator) -> ErasureMatrix:
    """Rows i.i.d. uniform over weight-s vectors (``exact``) or weight <= s vectors (``upto``)."""
    order = np.argsort(rng.random((n_e, n_h)), axis=1)
    if mode == "exact":
        w = np.full(n_e, s)
    elif mode == "upto":
        p = np.array([comb(n_h, x) for x in range(s + 1)], dtype=float)
        w = rng.choice(s + 1, size=n_e, p=p / p.sum())
    else:
        raise ParameterError(f"weight mode must be one of {WEIGHT_MODES}")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(n_h)[None, :].repeat(n_e, axis=0), axis=1)
    return ErasureMatrix(rank < w[:, None])


def trial_matrix(cfg: SimConfig, i: int) -> ErasureMatrix:
    """The erasure matrix of trial i."""
    p = cfg.params
    return sample_matrix(p.n_e, p.n_h, p.s, cfg.weight, trial_rng(cfg.seed, i))


def _run_chunk(cfg: SimConfig, strategies, lo: int, hi: int) -> np.ndarray:
    out = np.empty((hi - lo, len(strategies)))
    for i in range(lo, hi):
        M = trial_matrix(cfg, i)
        for j, st in enumerate(strategies):
            try:
                out[i - lo, j] = float(st.cost(M))
            except CaggError as exc:
                raise type(exc)(f"trial {i}: {exc}") from exc
    return out


def _chunks(trials: int, n_jobs: int):
    n = max(1, min(n_jobs, trials))
    edges = np.linspace(0, trials, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _summarize(label: str, costs: np.ndarray, cfg: SimConfig) -> McResult:
    n = costs.size
    se = float(costs.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return McResult(label, float(costs.mean()), se, n, cfg.seed, costs)


def estimate_chm(cfg: SimConfig, strategy, n_jobs: int = 1):
    """Average normalized helper-to-master load over cfg.trials sampled matrices.

    ``strategy`` is a :class:`cagg.strategies.Strategy` or a sequence of
    them; a sequence returns a list of results on common matrices.
    """
    single = not isinstance(strategy, (list, tuple))
    strategies = [strategy] if single else list(strategy)
    for st in strategies:
        if (st.n_h, st.s) != (cfg.params.n_h, cfg.params.s):
            raise ParameterError(f"{st.label} built for (n_h, s)=({st.n_h}, {st.s}), config differs")
        if cfg.weight == "upto" and st.exact_weight:
            raise ParameterError(f"{st.label} needs exactly s erasures per row; use weight='exact'")
    chunks = _chunks(cfg.trials, n_jobs)
    if len(chunks) == 1:
        parts = [_run_chunk(cfg, strategies, *chunks[0])]
    else:
        with ThreadPoolExecutor(len(chunks)) as ex:
            parts = list(ex.map(lambda c: _run_chunk(cfg, strategies, *c), chunks))
    costs = np.vstack(parts)
    res = [_summarize(st.label, costs[:, j], cfg) for j, st in enumerate(strategies)]
    return res[0] if single else res


def estimate_type_moments(cfg: SimConfig, code: PyramidCode, index: ClassIndex | None = None) -> TypeMoments:
    """Per-type E[M] and Pr[M >= 1], with the per-trial M values kept."""
    if cfg.weight != "exact":
        raise ParameterError("type moments are defined for exactly s erasures per row")
    p = cfg.params
    if (p.n_h, p.s) != (code.n_h, code.s):
        raise ParameterError("code parameters differ from the configuration")
    index = ClassIndex(code) if index is None else index
    samples = np.empty((cfg.trials, len(index.types)), dtype=np.int64)
    for i in range(cfg.trials):
        M = trial_matrix(cfg, i)
        samples[i], _ = index.max_per_type(index.classes_of(M.masks()))
    return TypeMoments(
        list(index.types),
        samples.mean(axis=0),
        (samples > 0).mean(axis=0),
        samples,
        cfg.seed,
    )


__all__ = [
    "McResult",
    "SimConfig",
    "WEIGHT_MODES",
    "estimate_chm",
    "estimate_type_moments",
    "sample_matrix",
    "trial_matrix",
    "trial_rng",
]
