import math

import numpy as np
import pytest

from polydyn import (
    MPMorphism,
    RandomSystemError,
    check_bundle,
    check_measure_preserving,
    check_mp_morphism,
    check_random_system,
    closed_from_kernel,
    det_polymap,
    dirac,
    dist_distance,
    euclid,
    finite,
    kleisli_compose,
    mk_measure_preserving,
    mk_probability_space,
    mk_system,
    monomial,
    ou_demo,
    ou_exact_closed,
    ou_transition_kernel,
    rebase_rds,
    reindex_bundle,
    reindex_rds,
    time_nat,
    uniform,
    unit,
)
from polydyn import MeasurePreservingSystem, rebase_bundle
from polydyn.specio import (
    biased_swap_example,
    bundle_example,
    rotation_example,
    skew_random_example,
)


def test_rotation_preserves_the_uniform_measure_exactly():
    mp = rotation_example(6)
    report = check_measure_preserving(mp, (1, 2, 3, 5))
    assert report["pass"]
    assert report.get("violations") == []


def test_biased_swap_is_rejected():
    base, flow = biased_swap_example()
    report = check_measure_preserving(MeasurePreservingSystem(base, flow), (1,))
    assert not report["pass"]
    with pytest.raises(RandomSystemError):
        mk_measure_preserving(base, flow, (1,))


def test_skew_product_square_commutes_exactly():
    rds = skew_random_example(4, 2)
    report = check_random_system(rds)
    assert report["pass"]
    assert report["violations"] == []


def test_skew_product_reindex_keeps_the_square():
    rds = skew_random_example(4, 2)
    src = rds.interface
    tgt = monomial(finite("even", "odd"), unit())
    relabel = det_polymap(
        src, tgt, lambda i: "even" if i == 0 else "odd", lambda i, d: ()
    )
    moved = reindex_rds(relabel, rds)
    assert check_random_system(moved)["pass"]
    assert moved.interface == tgt


def test_skew_product_rebase_along_doubling():
    rds = skew_random_example(4, 2)
    z2 = finite(*range(2))
    half_base = mk_probability_space(z2, uniform(z2))
    half_flow = closed_from_kernel(
        z2, time_nat(), lambda t, w: dirac(z2, (w + t) % 2)
    )
    half = mk_measure_preserving(half_base, half_flow)
    psi = MPMorphism(rds.base, half, lambda w: w % 2)
    assert check_mp_morphism(psi)["pass"]
    moved = rebase_rds(psi, rds)
    assert check_random_system(moved)["pass"]
    assert moved.proj((3, 1)) == 1


def test_broken_mp_morphism_is_reported():
    mp6 = rotation_example(6)
    mp3 = rotation_example(3)
    bad = MPMorphism(mp6, mp3, lambda w: 0)  # collapses, breaks the measure
    report = check_mp_morphism(bad)
    assert not report["pass"]
    kinds = {v["kind"] for v in report["violations"]}
    assert "measure" in kinds


def test_bundle_double_section_square():
    bs = bundle_example(3, 2)
    report = check_bundle(bs)
    assert report["pass"]
    assert report["violations"] == []


def test_bundle_reindex_keeps_all_squares():
    bs = bundle_example(3, 2)
    src = bs.total_sys.interface
    relabeled = monomial(finite("m0", "m1"), src.dirs_at(0))
    phi = det_polymap(src, relabeled, lambda i: f"m{i}", lambda i, d: d)
    moved = reindex_bundle(phi, bs)
    assert check_bundle(moved)["pass"]


def test_bundle_rebase_along_state_relabel():
    bs = bundle_example(3, 2)
    base = bs.base_sys
    new_states = finite("w0", "w1", "w2")
    new_base = mk_system(
        base.interface,
        new_states,
        lambda t, s: int(s[1]),
        lambda t, s, d: dirac(new_states, f"w{(int(s[1]) + 1) % 3}"),
        time_nat(),
    )
    moved = rebase_bundle(lambda w: f"w{w}", new_base, bs)
    assert check_bundle(moved)["pass"]
    assert moved.proj((0, 1)) == "w0"


def test_bundle_broken_projection_fails():
    bs = bundle_example(3, 2)
    broken = type(bs)(bs.base_sys, bs.total_sys, lambda s: 0)  # not equivariant
    report = check_bundle(broken)
    assert not report["pass"]
    assert report["violations"][0]["kind"] == "square"


def test_ou_demo_is_deterministic_per_seed():
    a = ou_demo(1.0, 0.5, 0.05, 40, seed=9)
    b = ou_demo(1.0, 0.5, 0.05, 40, seed=9)
    c = ou_demo(1.0, 0.5, 0.05, 40, seed=10)
    assert a == b
    assert a != c
    header = a.splitlines()[0]
    assert header.split(",")[0] == "t"
    assert len(a.splitlines()) == 42  # header + x0 row + 40 steps


def test_ou_demo_zero_noise_decays_geometrically():
    txt = ou_demo(2.0, 0.0, 0.01, 100, seed=0, x0=1.0)
    rows = [line.split(",") for line in txt.splitlines()[1:]]
    a = 1.0 - 2.0 * 0.01  # one Euler-Maruyama step with no noise
    for t, (_, xs) in enumerate(rows):
        assert abs(float(xs) - a**t) <= 1e-12


def test_ou_demo_stationary_variance():
    theta, sigma, h = 1.0, 0.5, 0.05
    txt = ou_demo(theta, sigma, h, 4000, seed=3, x0=0.0)
    xs = np.array([float(line.split(",")[1]) for line in txt.splitlines()[1:]])
    tail = xs[400:]
    target = sigma**2 / (2 * theta)
    assert abs(tail.var() - target) / target < 0.3


def test_ou_exact_kernel_satisfies_the_flow_law():
    theta, sigma, h = 1.0, 0.5, 0.05
    cs = ou_exact_closed(theta, sigma, h)
    for s, t in [(1, 1), (2, 3), (5, 5), (1, 7)]:
        combined = ou_transition_kernel(theta, sigma, h, s + t)
        chained = kleisli_compose(
            ou_transition_kernel(theta, sigma, h, s),
            ou_transition_kernel(theta, sigma, h, t),
        )
        for x in ((0.0,), (1.5,), (-2.0,)):
            assert dist_distance(combined(x), chained(x)) <= 1e-12
            assert dist_distance(cs.step(s + t, x), combined(x)) == 0.0
    # zero time is the point mass
    assert dist_distance(cs.step(0, (1.5,)), dirac(euclid(1), (1.5,))) == 0.0


def test_probability_space_needs_matching_measure():
    z2 = finite(0, 1)
    with pytest.raises(RandomSystemError):
        mk_probability_space(z2, uniform(finite(0, 1, 2)))
