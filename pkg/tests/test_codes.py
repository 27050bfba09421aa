from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cagg.codes import (
    build_arc,
    build_mds,
    build_pyramid,
    encode,
    erasure_decodable,
    from_json,
    is_information_set,
    local_parity_relations,
    max_locals,
    to_json,
)
from cagg.exceptions import ParameterError
from cagg.field import FieldMatrix, gf, rank


def test_mds_7_4_every_4_columns_full_rank():
    code = build_mds(None, 4, 3)
    assert code.n == 7
    for cols in combinations(range(7), 4):
        assert is_information_set(code, cols)


def test_mds_trivial():
    code = build_mds(None, 1, 1)
    assert code.generator.array.tolist()[0][0] == 1
    assert code.generator.array[0, 1] != 0


def test_mds_16_11_random_column_sets():
    code = build_mds(None, 11, 5)
    rng = np.random.default_rng(1)
    for _ in range(500):
        cols = rng.choice(16, 11, replace=False)
        assert is_information_set(code, cols)


def test_pyramid_fix_a_shape(fix_a):
    code, _ = fix_a
    assert (code.k, code.a, code.b) == (4, 2, 0)
    # 1-based L1={1,2,5}, L2={3,4,6}, Q={7,8}
    assert code.locals_ == ((0, 1, 4), (2, 3, 5))
    assert code.global_ == (6, 7)
    assert code.sizes == (3, 3, 2)
    assert rank(code.generator) == 4


def test_pyramid_fix_b_shape(fix_b):
    assert fix_b.k == 10
    assert fix_b.sizes == (6, 6, 4)


def test_pyramid_t4():
    code = build_pyramid(None, 16, 5, 4)
    assert code.k == 8
    assert code.local_dims == (2, 2, 2, 2)
    assert code.sizes == (3, 3, 3, 3, 4)


@pytest.mark.parametrize("n_h,s,t", [(16, 5, 5), (8, 3, 9), (8, 3, 1), (8, 8, 2)])
def test_pyramid_bad_params(n_h, s, t):
    with pytest.raises(ParameterError):
        build_pyramid(None, n_h, s, t)


def test_pyramid_field_too_small():
    with pytest.raises(ParameterError, match="GF"):
        build_pyramid(gf(3), 16, 5, 2)


params = st.integers(6, 24).flatmap(
    lambda n_h: st.integers(1, n_h - 5).flatmap(
        lambda s: st.tuples(st.just(n_h), st.just(s), st.integers(2, max(2, max_locals(n_h, s))))
    )
).filter(lambda p: 2 <= p[2] <= max_locals(p[0], p[1]))


@settings(max_examples=40, deadline=None)
@given(params)
def test_pyramid_structure(p):
    n_h, s, t = p
    code = build_pyramid(None, n_h, s, t)
    k, a, b = code.k, code.a, code.b
    assert k == n_h - s - t + 1 == t * a + b and a >= 2 and 0 <= b < t
    lam = [a + 2 if i < b else a + 1 for i in range(t)]
    assert list(code.sizes[:-1]) == lam and code.sizes[-1] == s - 1
    cover = sorted(j for L in code.locals_ for j in L) + list(code.global_)
    assert sorted(cover) == list(range(n_h))
    assert sum(code.local_dims) == k
    kappa = code.locality_profile
    assert sum(kappa) == k
    assert kappa[a - 1] == (t - b) * a
    if b:
        assert kappa[a] == b * (a + 1)
    for i in range(t):
        assert local_parity_relations(code, i) == 1


@settings(max_examples=15, deadline=None)
@given(params)
def test_pyramid_tolerates_any_s_erasures(p):
    n_h, s, t = p
    code = build_pyramid(None, n_h, s, t)
    rng = np.random.default_rng(n_h * 100 + s)
    for _ in range(30):
        assert erasure_decodable(code, rng.choice(n_h, s, replace=False).tolist())


def test_pyramid_8_3_2_all_weight3_decodable_some_weight4_not(fix_a):
    code, _ = fix_a
    assert all(erasure_decodable(code, e) for e in combinations(range(8), 3))
    assert erasure_decodable(code, [])
    assert not erasure_decodable(code, [0, 1, 4, 6])


def test_arc():
    code = build_arc(6, 2)
    assert code.k == 2
    assert code.generator.array.tolist() == [[1, 0, 1, 0, 1, 0], [0, 1, 0, 1, 0, 1]]
    assert code.holders(1) == (1, 3, 5)
    assert build_arc(4, 1).k == 2
    with pytest.raises(ParameterError):
        build_arc(5, 1)


def test_encode(fix_a):
    code, _ = fix_a
    G = code.generator
    assert encode(G, [0, 0, 0, 0]) == [0] * 8
    assert encode(G, [1, 0, 0, 0]) == G.array[0].tolist()
    msg = [7, 200, 13, 99]
    cw = encode(G, msg)
    assert cw[:4] == msg
    with pytest.raises(ParameterError):
        encode(G, [1, 2])


def test_each_local_code_has_one_parity(fix_a):
    code, _ = fix_a
    for i, L in enumerate(code.locals_):
        sub = FieldMatrix(code.spec, code.generator.columns(L).array)
        assert rank(sub) == len(L) - 1


def test_json_roundtrip(fix_a):
    code, _ = fix_a
    for c in (code, build_mds(None, 4, 3), build_arc(6, 2)):
        back = from_json(to_json(c))
        assert back == c
