from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cagg.exceptions import BudgetExceeded, ParameterError
from cagg.occupancy import (
    OccupancyParams,
    a_term,
    a_term_float,
    max_occupancy_bruteforce,
    occupancy_bruteforce,
    phi,
    phi_closed_form,
    rho,
)

P = OccupancyParams


def by_sequences(p):
    """E[Z], Pr[Z >= 1] by enumerating all n^r ball placements."""
    e = hit = 0
    for seq in product(range(p.n), repeat=p.r):
        counts = [sum(1 for x in seq if x // p.b == j) for j in range(p.m)]
        z = max(counts)
        e += z
        hit += z >= 1
    return Fraction(e, p.n**p.r), Fraction(hit, p.n**p.r)


def test_a_terms():
    assert a_term(P(4, 3, 2, 1), 1, 1) == Fraction(37, 32)
    p = P(2, 2, 2, 1)
    assert a_term(p, 1, 1) == Fraction(3, 2)
    assert a_term(p, 1, 2) == Fraction(-1, 2)
    assert a_term(p, 2, 1) == Fraction(1, 2)
    assert a_term(P(6, 4, 3, 2), 1, 2) < 0 < a_term(P(6, 4, 3, 2), 1, 3)
    with pytest.raises(ParameterError):
        a_term(p, 2, 2)


def test_rho_examples():
    assert rho(P(2, 2, 2, 1)) == Fraction(3, 2)
    assert rho(P(5, 7, 1, 5)) == 7
    assert rho(P(4, 1, 2, 1)) == Fraction(1, 2)


def test_phi_examples():
    assert phi(P(4, 3, 2, 1)) == Fraction(7, 8)
    assert phi(P(6, 3, 3, 2)) == 1


def test_bruteforce_examples():
    # both bins are counted, so some counted bin is always hit
    assert occupancy_bruteforce(P(2, 2, 2, 1)) == (Fraction(3, 2), 1)
    assert occupancy_bruteforce(P(2, 2, 1, 2)) == (2, 1)
    assert occupancy_bruteforce(P(4, 3, 2, 1))[1] == Fraction(7, 8)


def test_unbunched_max_occupancy():
    assert max_occupancy_bruteforce(2, 2) == Fraction(3, 2)
    assert rho(P(3, 3, 3, 1)) == max_occupancy_bruteforce(3, 3)


def grid(nmax=5, rmax=5):
    for n in range(1, nmax + 1):
        for r in range(1, rmax + 1):
            for b in range(1, n + 1):
                for m in range(1, n // b + 1):
                    yield P(n, r, m, b)


@pytest.mark.parametrize("p", [p for p in grid(4, 4) if p.n**p.r <= 300])
def test_rho_phi_against_sequence_enumeration(p):
    assert (rho(p), phi(p)) == by_sequences(p)


valid = st.integers(1, 40).flatmap(
    lambda n: st.integers(1, n).flatmap(
        lambda b: st.tuples(st.just(n), st.integers(1, 25), st.integers(1, n // b), st.just(b))
    )
)


@settings(max_examples=80, deadline=None)
@given(valid)
def test_phi_closed_form_and_bounds(t):
    p = P(*t)
    f, r_ = phi(p), rho(p)
    assert f == phi_closed_form(p)
    assert 0 <= f <= 1
    assert f <= r_ <= p.r


@settings(max_examples=60, deadline=None)
@given(valid)
def test_float_matches_exact(t):
    p = P(*t)
    for fn in (rho, phi):
        exact = fn(p)
        approx = fn(p, mode="float")
        assert abs(approx - float(exact)) <= 1e-9 * max(1.0, abs(float(exact)))


def test_a_term_float():
    p = P(10, 6, 3, 2)
    assert abs(a_term_float(p, 2, 2) - float(a_term(p, 2, 2))) < 1e-12


def test_monotone_in_r_and_bm():
    for n in (6, 10):
        for b in (1, 2):
            vals = [rho(P(n, r, n // (2 * b), b)) for r in range(1, 10)]
            assert all(x <= y for x, y in zip(vals, vals[1:]))
    vals = [rho(P(12, 6, m, 2)) for m in range(1, 7)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


def test_budget(monkeypatch):
    p = P(4368, 2048, 4368, 1)
    with pytest.raises(BudgetExceeded):
        rho(p)
    with pytest.raises(BudgetExceeded):
        phi(P(100, 50, 10, 1), budget=10)
    monkeypatch.setenv("CAGG_WORK_BUDGET", "10")
    with pytest.raises(BudgetExceeded):
        rho(P(100, 50, 10, 1))


def test_invalid_params():
    with pytest.raises(ParameterError):
        P(4, 2, 3, 2)
    with pytest.raises(ParameterError):
        P(0, 1, 1, 1)
    with pytest.raises(ParameterError):
        rho(P(2, 2, 2, 1), mode="approx")
