from itertools import permutations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import commutator_bracket
from psklie.deviance import (
    UnsupportedDimensionError,
    bracket_blocks,
    bracket_blocks_n2,
    cubic_to_eta,
    eta_bracket,
    eta_norm,
    model_blocks,
    model_curvature,
    phase_rotate,
    real_deviance,
    realify_blocks,
    v_vectors,
    zero_deviance,
)

seeds = st.integers(0, 2**32 - 1)


def random_cubic(rng, n=2):
    m = comb(n + 2, 3)
    return rng.normal(size=m) + 1j * rng.normal(size=m)


def test_cubic_examples():
    e = cubic_to_eta([0, 1.5, 0, 0]).eta
    expect = np.zeros((2, 2, 2))
    for idx in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
        expect[idx] = 1
    assert np.allclose(e, expect)
    assert cubic_to_eta([0, 0, 0, 0]).is_zero()
    e = cubic_to_eta([1, 0, 0, 0]).eta
    assert e[0, 0, 0] == 2 and np.count_nonzero(e) == 1


def test_cubic_input_forms_agree():
    ref = cubic_to_eta([0.5, 1.5j, -1, 2])
    by_map = cubic_to_eta({(1, 1, 1): 0.5, (2, 1, 1): 1.5j, (1, 2, 2): -1, (2, 2, 2): 2}, n=2)
    by_tensor = cubic_to_eta(ref.sigma)
    assert np.allclose(by_map.sigma, ref.sigma) and np.allclose(by_tensor.sigma, ref.sigma)
    with pytest.raises(ValueError):
        cubic_to_eta({(1, 1, 1): 1})
    with pytest.raises(ValueError):
        cubic_to_eta([1, 2, 3])
    with pytest.raises(ValueError):
        cubic_to_eta([np.inf, 0, 0, 0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_flatten_back_reproduces_cubic(n):
    rng = np.random.default_rng(n)
    c = random_cubic(rng, n)
    assert np.allclose(cubic_to_eta(c, n).cubic, c)


def test_total_symmetry_random():
    rng = np.random.default_rng(0)
    for trial in range(1000):
        n = 1 + trial % 3
        e = cubic_to_eta(random_cubic(rng, n), n).eta
        for p in permutations(range(3)):
            assert np.array_equal(e, e.transpose(p))


def test_v_vectors():
    v1, v2, v3 = v_vectors(cubic_to_eta([0, 1.5, 0, 0]))
    assert np.allclose(v1, [0, 1]) and np.allclose(v2, [1, 0]) and np.allclose(v3, [0, 0])
    v1, v2, v3 = v_vectors(cubic_to_eta([0, 0, 0, np.sqrt(3) / 2]))
    assert np.allclose(v1, 0) and np.allclose(v2, 0) and np.allclose(v3, [0, np.sqrt(3)])
    assert all(np.all(v == 0) for v in v_vectors(zero_deviance(2)))
    with pytest.raises(UnsupportedDimensionError):
        v_vectors(zero_deviance(3))


def test_bracket_blocks_example():
    B = bracket_blocks(cubic_to_eta([0, 1.5, 0, 0]))
    assert np.allclose(B[(0, 0)], np.eye(2))
    assert np.allclose(B[(1, 1)], np.diag([1, 0]))
    assert np.allclose(B[(0, 1)], [[0, 0], [1, 0]])
    assert eta_bracket(zero_deviance(2)).max_abs() == 0


def test_bracket_paths_agree_with_commutator_oracle():
    rng = np.random.default_rng(5)
    for _ in range(100):
        d = cubic_to_eta(random_cubic(rng))
        gen, fast = bracket_blocks(d), bracket_blocks_n2(d)
        assert max(np.max(np.abs(gen[k] - fast[k])) for k in gen) < 1e-12
        ref = commutator_bracket(real_deviance(d))
        assert np.max(np.abs(eta_bracket(d).components() - ref)) < 1e-12


@pytest.mark.parametrize("n", [1, 3])
def test_general_bracket_matches_commutator_other_dims(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        d = cubic_to_eta(random_cubic(rng, n), n)
        R = realify_blocks(bracket_blocks(d), n)
        assert np.max(np.abs(R.components() - commutator_bracket(real_deviance(d)))) < 1e-12


@settings(max_examples=100)
@given(seeds)
def test_bracket_phase_invariance(seed):
    rng = np.random.default_rng(seed)
    d = cubic_to_eta(random_cubic(rng))
    alpha = rng.uniform(0, 2 * np.pi)
    a, b = bracket_blocks(phase_rotate(d, alpha)), bracket_blocks(d)
    assert max(np.max(np.abs(a[k] - b[k])) for k in a) < 1e-12
    assert np.max(np.abs(eta_bracket(phase_rotate(d, alpha)).real.data - eta_bracket(d).real.data)) < 1e-12


@settings(max_examples=50)
@given(seeds, st.integers(1, 3))
def test_bracket_hermitian_consistency(seed, n):
    d = cubic_to_eta(random_cubic(np.random.default_rng(seed), n), n)
    B = bracket_blocks(d)
    for k in range(n):
        for h in range(n):
            assert np.allclose(B[(k, h)], B[(h, k)].conj().T, atol=1e-13)


def test_eta_norm_examples():
    assert eta_norm(cubic_to_eta([0, 1.5, 0, 0])) == pytest.approx(3)
    assert eta_norm(zero_deviance(2)) == 0
    assert eta_norm(cubic_to_eta([0, 0, 0, np.sqrt(3) / 2])) == pytest.approx(3)


@settings(max_examples=50)
@given(seeds, st.integers(1, 3))
def test_eta_norm_is_sum_of_squares(seed, n):
    d = cubic_to_eta(random_cubic(np.random.default_rng(seed), n), n)
    # the mixed index pairing agrees with the plain sum for symmetric eta
    assert eta_norm(d) == pytest.approx(float(np.sum(np.abs(d.eta) ** 2)), rel=1e-12)
    assert eta_norm(d) > 0


def test_phase_rotate_examples():
    d = cubic_to_eta([0.3, 1j, 0, 2])
    assert np.allclose(phase_rotate(d, 0).cubic, d.cubic)
    assert np.allclose(phase_rotate(cubic_to_eta([0, 1.5, 0, 0]), np.pi).cubic, [0, -1.5, 0, 0])


def test_model_curvatures():
    P = model_blocks("proj", 2)
    assert np.allclose(P[(0, 0)], np.diag([-2, -1])) and np.allclose(P[(1, 1)], np.diag([-1, -2]))
    h2 = model_curvature("h2").real
    assert np.allclose(h2[2, 3].coeffs.real, [0, 0, 0, 0, 0, -1])
    assert np.allclose(h2[3, 2].coeffs.real, [0, 0, 0, 0, 0, 1])
    with pytest.raises(UnsupportedDimensionError):
        model_curvature("h1", 3)
    with pytest.raises(ValueError):
        model_curvature("sphere")
