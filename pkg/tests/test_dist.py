import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polydyn import (
    AffineMap,
    Categorical,
    Dirac,
    DistError,
    SpaceError,
    Gaussian,
    GaussianKernel,
    Rng,
    bind,
    categorical,
    dirac,
    dist_distance,
    dist_equal,
    dist_from_json,
    dist_to_json,
    dst,
    euclid,
    finite,
    finite_items,
    gaussian,
    gaussian1,
    kleisli_compose,
    prob,
    prod,
    pushforward,
    sample,
    sample_many,
    uniform,
)

SPACE = finite(0, 1, 2, 3)


def _dyadic(picks):
    counts = {}
    for a in picks:
        counts[a] = counts.get(a, 0) + 1
    items = sorted((a, c / 8.0) for a, c in counts.items())
    if len(items) == 1:
        return dirac(SPACE, items[0][0])
    return categorical(SPACE, items)


# weights are multiples of 1/8, so products and sums below are exact
dyadic_dists = st.lists(st.integers(0, 3), min_size=8, max_size=8).map(_dyadic)
dyadic_kernels = st.tuples(*([dyadic_dists] * 4)).map(lambda ds: lambda x: ds[x])


def test_categorical_validation():
    with pytest.raises(DistError):
        categorical(SPACE, [(0, 0.5), (1, 0.4)])
    with pytest.raises(DistError):
        categorical(SPACE, [(0, 1.5), (1, -0.5)])
    with pytest.raises(SpaceError):
        categorical(SPACE, [(7, 1.0)])


def test_prob_and_items():
    d = categorical(SPACE, [(0, 0.25), (2, 0.75)])
    assert prob(d, 0) == 0.25
    assert prob(d, 1) == 0.0
    assert dict(finite_items(d)) == {0: 0.25, 2: 0.75}
    assert prob(dirac(SPACE, 3), 3) == 1.0


def test_uniform():
    d = uniform(finite("a", "b", "c", "d"))
    assert prob(d, "a") == 0.25


@given(x=st.integers(0, 3), k=dyadic_kernels)
def test_bind_left_identity(x, k):
    assert dist_distance(bind(dirac(SPACE, x), k), k(x)) == 0.0


@given(d=dyadic_dists)
def test_bind_right_identity(d):
    assert dist_distance(bind(d, lambda x: dirac(SPACE, x)), d) == 0.0


@settings(max_examples=60)
@given(d=dyadic_dists, k=dyadic_kernels, l=dyadic_kernels)
def test_bind_associativity_exact(d, k, l):
    lhs = bind(bind(d, k), l)
    rhs = bind(d, lambda x: bind(k(x), l))
    assert dist_distance(lhs, rhs) == 0.0


def test_bind_constant_kernel_returns_the_common_law():
    law = categorical(SPACE, [(0, 0.5), (1, 0.5)])
    out = bind(uniform(SPACE), lambda _x: law)
    assert out is law


def test_dst_finite_products():
    A = finite("a", "b")
    d1 = categorical(A, [("a", 0.25), ("b", 0.75)])
    d2 = categorical(SPACE, [(0, 0.5), (1, 0.5)])
    j = dst(d1, d2)
    assert j.space == prod(A, SPACE)
    assert prob(j, ("a", 0)) == 0.125
    assert prob(j, ("b", 1)) == 0.375


def test_dst_gaussian_blocks():
    g1 = gaussian1(1.0, 2.0)
    g2 = gaussian(euclid(2), [0.0, 3.0], [[1.0, 0.5], [0.5, 1.0]])
    j = dst(g1, g2)
    assert isinstance(j, Gaussian)
    assert tuple(j.mean) == (1.0, 0.0, 3.0)
    c = np.asarray(j.cov)
    assert c[0, 0] == 2.0 and c[1, 2] == 0.5 and c[0, 1] == 0.0


def test_dst_dirac_euclid_coerces_to_zero_cov_block():
    g = gaussian1(0.0, 1.0)
    d = dirac(euclid(1), (4.0,))
    j = dst(d, g)
    assert isinstance(j, Gaussian)
    assert tuple(j.mean) == (4.0, 0.0)
    c = np.asarray(j.cov)
    assert c[0, 0] == 0.0 and c[1, 1] == 1.0


def test_pushforward_finite():
    d = categorical(SPACE, [(0, 0.5), (1, 0.25), (2, 0.25)])
    out = pushforward(lambda x: x % 2, d, target=finite(0, 1))
    assert prob(out, 0) == 0.75
    assert prob(out, 1) == 0.25


def test_pushforward_gaussian_affine_oracle():
    mu = np.array([1.0, -2.0])
    sig = np.array([[2.0, 0.3], [0.3, 1.0]])
    g = gaussian(euclid(2), mu, sig)
    f = AffineMap.of([[1.0, 2.0], [0.0, 1.0]], [5.0, 0.0])
    out = pushforward(f, g)
    a, b = f.arrays()
    assert np.allclose(np.asarray(out.mean), a @ mu + b, atol=1e-15)
    assert np.allclose(np.asarray(out.cov), a @ sig @ a.T, atol=1e-15)
    with pytest.raises(DistError):
        pushforward(lambda x: x, g)


def test_gaussian_kernel_bind_and_compose():
    g = gaussian1(0.5, 0.25)
    k1 = GaussianKernel.of([[2.0]], [1.0], [[0.1]])
    out = bind(g, k1)
    assert abs(out.mean[0] - 2.0) <= 1e-15
    assert abs(out.cov[0][0] - (4.0 * 0.25 + 0.1)) <= 1e-15
    k2 = GaussianKernel.of([[-1.0]], [0.0], [[0.2]])
    k21 = kleisli_compose(k2, k1)
    assert isinstance(k21, GaussianKernel)
    direct = bind(out, k2)
    chained = bind(g, k21)
    assert dist_distance(direct, chained) <= 1e-15


def test_finite_kleisli_compose_matches_two_binds():
    A = finite(0, 1)
    k1 = lambda x: categorical(A, [(0, 0.25), (1, 0.75)]) if x else dirac(A, 0)
    k2 = lambda x: categorical(A, [(0, 0.5), (1, 0.5)]) if x else dirac(A, 1)
    comp = kleisli_compose(k2, k1)
    d = uniform(A)
    assert dist_distance(bind(bind(d, k1), k2), bind(d, comp)) == 0.0


def test_sampling_is_reproducible():
    rng = Rng(7)
    d = categorical(SPACE, [(0, 0.3), (2, 0.3), (3, 0.4)])
    assert sample(d, rng) == sample(d, Rng(7))
    assert sample_many(d, rng, 5) == sample_many(d, Rng(7), 5)
    g = gaussian1(0.0, 1.0)
    assert sample(g, rng.child(1)) == sample(g, Rng(7).child(1))


def test_sampling_hits_the_law():
    d = categorical(SPACE, [(0, 0.25), (1, 0.75)])
    draws = sample_many(d, Rng(123), 4000)
    freq = draws.count(1) / 4000
    assert abs(freq - 0.75) < 0.05
    g = gaussian1(2.0, 4.0)
    xs = [sample(g, Rng(5).child(i))[0] for i in range(4000)]
    assert abs(np.mean(xs) - 2.0) < 0.2
    assert abs(np.var(xs) - 4.0) < 0.5


def test_dist_distance_cases():
    d1 = categorical(SPACE, [(0, 0.5), (1, 0.5)])
    d2 = categorical(SPACE, [(0, 0.5), (2, 0.5)])
    assert dist_distance(d1, d1) == 0.0
    assert dist_distance(d1, d2) == 0.5
    assert dist_distance(d1, gaussian1(0.0, 1.0)) == float("inf")
    assert dist_equal(gaussian1(0.0, 1.0), gaussian1(0.0, 1.0 + 1e-12))
    assert dist_distance(dirac(SPACE, 1), categorical(SPACE, [(1, 1.0)])) == 0.0


def test_gaussian_psd_validation():
    with pytest.raises(DistError):
        gaussian(euclid(2), [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


def test_dist_json_roundtrip():
    d1 = dirac(SPACE, 2)
    d2 = categorical(finite("a", "b"), [("a", 0.25), ("b", 0.75)])
    d3 = gaussian(euclid(2), [1.0, 2.0], [[1.0, 0.0], [0.0, 2.0]])
    for d, sp in ((d1, SPACE), (d2, finite("a", "b")), (d3, euclid(2))):
        back = dist_from_json(sp, dist_to_json(d))
        assert dist_distance(back, d) == 0.0


def test_dirac_and_categorical_kinds():
    assert isinstance(dirac(SPACE, 0), Dirac)
    assert isinstance(categorical(SPACE, [(0, 0.5), (1, 0.5)]), Categorical)
    assert math.isclose(sum(w for _, w in finite_items(uniform(SPACE))), 1.0)
