import numpy as np
import pytest

from polydyn import (
    DETERMINISTIC,
    STOCHASTIC,
    OpenSystemError,
    Rng,
    all_sections,
    categorical,
    check_closed_flow,
    check_flow,
    closed_from_kernel,
    closure,
    compose_map,
    det_polymap,
    dirac,
    dist_distance,
    finite,
    id_map,
    is_system_morphism,
    linear,
    mk_system,
    monomial,
    points,
    prob,
    pull_section,
    reindex,
    roundtrip_ncoalg,
    systems_agree,
    tabulated,
    time_nat,
    to_ncoalg,
    trivial_section,
    uniform,
    unit,
    y,
)

from helpers import enumerate_deterministic_systems, random_finite_system


def counter_system(n: int):
    states = finite(*range(n))
    return mk_system(
        linear(states),
        states,
        lambda t, s: s,
        lambda t, s, d: dirac(states, (s + 1) % n),
        time_nat(),
    )


def markov_cell(k_rows):
    """Closed stochastic 2-state cell presented on the trivial interface."""
    states = finite("s0", "s1")
    labels = list(points(states))
    table = {
        a: categorical(states, list(zip(labels, row)))
        for a, row in zip(labels, k_rows)
    }
    return mk_system(
        y(),
        states,
        lambda t, s: (),
        lambda t, s, d: table[s],
        time_nat(),
        STOCHASTIC,
    )


def test_counter_closure():
    sys_ = counter_system(4)
    cs = closure(sys_, trivial_section(sys_.interface))
    law = cs.step(6, 0)
    assert prob(law, 2) == 1.0
    assert prob(cs.step(0, 3), 3) == 1.0


def test_markov_two_step_matches_matrix_power():
    K = [[0.9, 0.1], [0.2, 0.8]]
    cell = markov_cell(K)
    cs = closure(cell, trivial_section(y()))
    K2 = np.linalg.matrix_power(np.array(K), 2)
    for i, a in enumerate(["s0", "s1"]):
        law = cs.step(2, a)
        for j, b in enumerate(["s0", "s1"]):
            assert abs(prob(law, b) - K2[i, j]) <= 1e-12
    # the two-step rows in full
    assert abs(prob(cs.step(2, "s0"), "s0") - 0.83) <= 1e-12
    assert abs(prob(cs.step(2, "s0"), "s1") - 0.17) <= 1e-12
    assert abs(prob(cs.step(2, "s1"), "s0") - 0.34) <= 1e-12
    assert abs(prob(cs.step(2, "s1"), "s1") - 0.66) <= 1e-12


def test_markov_flow_law():
    cell = markov_cell([[0.9, 0.1], [0.2, 0.8]])
    report = check_flow(cell, tol=1e-12)
    assert report["pass"], report["violations"][:3]


def test_check_closed_flow_zero_law():
    cs = closure(counter_system(3), trivial_section(linear(finite(0, 1, 2))))
    report = check_closed_flow(cs, [(1, 1), (2, 3)], [0, 1, 2])
    assert report["pass"]


def test_random_systems_satisfy_flow_exactly():
    for seed in range(6):
        sys_ = random_finite_system(Rng(500).child(seed), stochastic=seed % 2 == 0)
        report = check_flow(sys_, tol=0.0)
        assert report["pass"], (seed, report["violations"][:3])
        assert report["max_deviation"] == 0.0


def test_time_dependent_update_fails_check_flow():
    states = finite(0, 1)
    sys_ = mk_system(
        linear(states),
        states,
        lambda t, s: s,
        lambda t, s, d: dirac(states, (s + t) % 2),
        time_nat(),
    )
    report = check_flow(sys_)
    assert not report["pass"]
    kinds = {v["kind"] for v in report["violations"]}
    assert "stationary-update" in kinds or "compose" in kinds


def test_time_dependent_output_fails_check_flow():
    states = finite(0, 1)
    sys_ = mk_system(
        linear(states),
        states,
        lambda t, s: (s + t) % 2,
        lambda t, s, d: dirac(states, s),
        time_nat(),
    )
    report = check_flow(sys_)
    assert not report["pass"]
    assert any(v["kind"] == "stationary-output" for v in report["violations"])


def test_mk_system_validates_finite_shapes():
    states = finite(0, 1)
    with pytest.raises(OpenSystemError):
        mk_system(
            linear(states),
            states,
            lambda t, s: "nowhere",
            lambda t, s, d: dirac(states, s),
        )
    with pytest.raises(OpenSystemError):
        mk_system(
            linear(states),
            states,
            lambda t, s: s,
            lambda t, s, d: uniform(states),  # stochastic law, deterministic claim
        )


# -- reindexing ------------------------------------------------------------

P = tabulated(finite("i", "j"), {"i": finite(0), "j": finite(0, 1)})
Q = monomial(finite("u", "v"), finite(0, 1))
R = monomial(finite("w"), finite(0, 1))
PHI = det_polymap(P, Q, {"i": "u", "j": "v"}.__getitem__,
                  lambda i, d: 0 if i == "i" else d)
PSI = det_polymap(Q, R, lambda i: "w", lambda i, d: d if i == "u" else 1 - d)


def _shape_family():
    return enumerate_deterministic_systems(P, finite(0, 1))


def test_reindex_preserves_identity_exhaustively():
    ident = id_map(P)
    for sys_ in _shape_family():
        assert systems_agree(reindex(ident, sys_), sys_)


def test_reindex_preserves_composition_exhaustively():
    comp = compose_map(PSI, PHI)
    for sys_ in _shape_family():
        once = reindex(comp, sys_)
        twice = reindex(PSI, reindex(PHI, sys_))
        assert systems_agree(once, twice)


def test_closure_commutes_with_pull_section_exhaustively():
    """Closing a transported system with tau equals closing the original with
    the pulled-back section -- exactly, state by state and time by time."""
    for sys_ in _shape_family():
        moved = reindex(PHI, sys_)
        for tau in all_sections(Q):
            ca = closure(moved, tau)
            cb = closure(sys_, pull_section(PHI, tau))
            for t in (1, 2, 3):
                for x in points(sys_.states):
                    assert dist_distance(ca.step(t, x), cb.step(t, x)) == 0.0


def test_reindex_shape_mismatch_raises():
    sys_ = counter_system(2)
    with pytest.raises(OpenSystemError):
        reindex(PHI, sys_)


def test_reindex_stochastic_lens_needs_stochastic_system():
    from polydyn import mk_polymap

    sys_ = _shape_family()[0]
    noisy = mk_polymap(P, Q, {"i": "u", "j": "v"}.__getitem__,
                       lambda i, d: uniform(P.dirs_at(i)), STOCHASTIC)
    with pytest.raises(OpenSystemError):
        reindex(noisy, sys_)


# -- tabular round-trip ----------------------------------------------------


def test_ncoalg_roundtrip_is_identity():
    for seed in range(4):
        sys_ = random_finite_system(Rng(41).child(seed), stochastic=False)
        nc, back = roundtrip_ncoalg(sys_)
        assert systems_agree(sys_, back)
        assert to_ncoalg(back) == nc


def test_ncoalg_rejects_stochastic():
    cell = markov_cell([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(OpenSystemError):
        to_ncoalg(cell)


# -- morphisms ---------------------------------------------------------------


def _mod_counter(n: int):
    """Counter that shows only parity, so quotients can preserve outputs."""
    states = finite(*range(n))
    return mk_system(
        linear(finite(0, 1)),
        states,
        lambda t, s: s % 2,
        lambda t, s, d: dirac(states, (s + 1) % n),
        time_nat(),
    )


def test_parity_quotient_is_a_morphism():
    a = _mod_counter(4)
    b = _mod_counter(2)
    sections = all_sections(a.interface)
    verdict = is_system_morphism(lambda s: s % 2, a, b, sections, [1, 2, 3])
    assert verdict["pass"]


def test_broken_quotient_is_not_a_morphism():
    a = _mod_counter(4)
    b = _mod_counter(2)
    sections = all_sections(a.interface)
    verdict = is_system_morphism(lambda s: (s + 1) % 2, a, b, sections, [1, 2])
    assert not verdict["pass"]


def test_systems_agree_negative():
    assert not systems_agree(counter_system(3), counter_system(4))
    a = counter_system(3)
    states = finite(0, 1, 2)
    b = mk_system(
        linear(states),
        states,
        lambda t, s: s,
        lambda t, s, d: dirac(states, (s + 2) % 3),
        time_nat(),
    )
    assert not systems_agree(a, b)


def test_closed_from_kernel_zero_time():
    states = finite("a", "b")
    cs = closed_from_kernel(states, time_nat(), lambda t, s: uniform(states))
    assert prob(cs.step(0, "a"), "a") == 1.0
    assert prob(cs.step(3, "a"), "b") == 0.5
