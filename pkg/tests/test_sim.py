from itertools import combinations, product
from math import comb

import numpy as np
import pytest

from cagg.analysis import SystemParams, chm_amc_exact
from cagg.erasures import ClassIndex, ErasureMatrix, PatternType, class_table
from cagg.exceptions import ParameterError, RecoveryError
from cagg.occupancy import OccupancyParams, rho
from cagg.sim import SimConfig, estimate_chm, estimate_type_moments, sample_matrix, trial_rng
from cagg.strategies import Strategy, pyramid_cost


def chi2_uniform(counts):
    expected = counts.sum() / counts.size
    return float(((counts - expected) ** 2 / expected).sum())


def test_sample_exact_weight_uniform():
    rng = np.random.default_rng(11)
    M = sample_matrix(200_000, 4, 1, "exact", rng)
    assert (M.weights == 1).all()
    counts = np.bincount(M.masks(), minlength=16)[[1, 2, 4, 8]]
    # 3 degrees of freedom; 0.999 quantile is 16.27
    assert chi2_uniform(counts) < 16.27
    assert abs(counts / counts.sum() - 0.25).max() < 4 * np.sqrt(0.25 * 0.75 / counts.sum())


def test_sample_uniform_over_patterns_3_of_6():
    M = sample_matrix(100_000, 6, 3, "exact", np.random.default_rng(2))
    counts = np.unique(M.masks(), return_counts=True)[1]
    assert counts.size == comb(6, 3)
    assert chi2_uniform(counts) < 45.3  # 19 dof, 0.999


def test_sample_s_equals_nh_minus_one():
    M = sample_matrix(5000, 5, 4, "exact", np.random.default_rng(0))
    assert set(np.unique(M.masks()).tolist()) == {31 ^ (1 << j) for j in range(5)}


def test_sample_upto_weight():
    M = sample_matrix(100_000, 4, 1, "upto", np.random.default_rng(3))
    counts = np.unique(M.masks(), return_counts=True)
    assert counts[0].tolist() == [0, 1, 2, 4, 8]
    assert chi2_uniform(counts[1]) < 18.47  # 4 dof


def test_sample_deterministic():
    a = sample_matrix(10, 8, 3, "exact", trial_rng(5, 7))
    b = sample_matrix(10, 8, 3, "exact", trial_rng(5, 7))
    assert a == b
    assert a != sample_matrix(10, 8, 3, "exact", trial_rng(5, 8))


def test_config_validation():
    p = SystemParams(4, 4, 1)
    with pytest.raises(ParameterError):
        SimConfig(p, trials=0)
    with pytest.raises(ParameterError):
        SimConfig(p, weight="some")


def test_naive_mean_exact():
    res = estimate_chm(SimConfig(SystemParams(5, 4, 1), 10, 1), Strategy("naive", 4, 1))
    assert res.mean == 5 and res.stderr == 0


def test_parallel_matches_serial():
    cfg = SimConfig(SystemParams(20, 6, 2), 101, 9)
    sts = [Strategy("amc", 6, 2), Strategy("amc", 6, 2, m=3), Strategy("arc-greedy", 6, 2)]
    a = estimate_chm(cfg, sts, n_jobs=1)
    b = estimate_chm(cfg, sts, n_jobs=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.costs, y.costs) and x.mean == y.mean and x.stderr == y.stderr


def test_stderr_definition():
    res = estimate_chm(SimConfig(SystemParams(12, 6, 1), 300, 4), Strategy("amc", 6, 1))
    assert res.stderr == pytest.approx(res.costs.std(ddof=1) / np.sqrt(300))
    assert sum(res.histogram().values()) == 300


def test_amc_mc_within_3_sigma_of_exact():
    p = SystemParams(64, 6, 1)
    res = estimate_chm(SimConfig(p, 10_000, 7), Strategy("amc", 6, 1))
    assert abs(res.mean - float(chm_amc_exact(p))) <= 3 * res.stderr


def test_pyramid_mc_against_two_row_enumeration(fix_a):
    code, _ = fix_a
    idx = ClassIndex(code)
    pats = list(combinations(range(8), 3))
    exact = sum(float(pyramid_cost(idx, ErasureMatrix.from_supports(8, r))) for r in product(pats, repeat=2)) / 56**2
    res = estimate_chm(SimConfig(SystemParams(2, 8, 3), 100_000, 13), Strategy("pyramid", 8, 3, t=2))
    assert abs(res.mean - exact) <= 3 * res.stderr


def test_max_occupancy_matches_balls_in_bins():
    # the largest group of identical rows is the maximum bin occupancy
    res = estimate_chm(SimConfig(SystemParams(8, 4, 1), 20_000, 21), Strategy("amc", 4, 1))
    max_occ = 8 + 1 - res.costs
    se = max_occ.std(ddof=1) / np.sqrt(max_occ.size)
    assert abs(max_occ.mean() - float(rho(OccupancyParams(4, 8, 4, 1)))) <= 3 * se


def test_type_moments_single_row(fix_a):
    code, _ = fix_a
    mom = estimate_type_moments(SimConfig(SystemParams(1, 8, 3), 20_000, 1), code)
    assert (mom.samples.sum(axis=1) == 1).all()
    sizes = {pc.type: pc.size for pc in class_table(code)}
    for j, typ in enumerate(mom.types):
        p = sizes[typ] / 56
        assert abs(mom.mean_max[j] - p) <= 4 * np.sqrt(p * (1 - p) / 20_000)


def test_type_moments_bounds(fix_b):
    mom = estimate_type_moments(SimConfig(SystemParams(40, 16, 5), 200, 3), fix_b)
    assert (mom.samples.sum(axis=1) <= 40).all()
    assert PatternType((0, 0), (0, 0)) not in mom.types
    assert mom.trials == 200 and not mom.exact


def test_upto_rejected_for_exact_weight_schemes():
    cfg = SimConfig(SystemParams(4, 6, 2), 5, 0, weight="upto")
    with pytest.raises(ParameterError):
        estimate_chm(cfg, Strategy("amc", 6, 2))
    res = estimate_chm(cfg, Strategy("arc", 6, 2))
    assert 1 <= res.mean <= 3


class FailingStrategy:
    """Stand-in planner that breaks on the third trial."""

    n_h, s, label, exact_weight = 6, 2, "failing", True

    def __init__(self):
        self.calls = 0

    def cost(self, M):
        self.calls += 1
        if self.calls == 3:
            raise RecoveryError("boom")
        return 1


def test_errors_carry_trial_index():
    cfg = SimConfig(SystemParams(4, 6, 2), 5, 0)
    with pytest.raises(RecoveryError, match="trial 2: boom"):
        estimate_chm(cfg, FailingStrategy())
