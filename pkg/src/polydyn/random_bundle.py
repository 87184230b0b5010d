"""Measure-preserving flows, random dynamical systems, and bundle systems.

A random dynamical system separates the noise from the dynamics: a
deterministic system on a total space sits over a measure-preserving base
flow, and the projection must intertwine the two for every section and time.
Base sample spaces are finite here so every law is checked by exhaustive
enumeration; the Ornstein-Uhlenbeck demo is the one deliberate exception
(an Euler-Maruyama path with no law claim, plus an exact transition kernel
for the closed flow law).

Constructors in this module re-validate their defining commuting square and
refuse to return an unverified object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .dist import (
    Dist,
    GaussianKernel,
    Rng,
    bind,
    dist_distance,
    gaussian1,
    pushforward,
)
from .poly import DETERMINISTIC, Polynomial, all_sections, time_real
from .spaces import Space, euclid, is_finite, points
from .systems import (
    ClosedSystem,
    System,
    closed_from_kernel,
    closure,
    is_system_morphism,
    mk_system,
)


class RandomSystemError(ValueError):
    """A defining square failed to commute, or shapes don't line up."""


@dataclass(frozen=True)
class ProbabilitySpace:
    space: Space  # finite
    measure: Dist  # over space


def mk_probability_space(space: Space, measure: Dist) -> ProbabilitySpace:
    if not is_finite(space):
        raise RandomSystemError("probability spaces here have finite carriers")
    if measure.space != space:
        raise RandomSystemError("measure is not a distribution over the carrier")
    return ProbabilitySpace(space, measure)


@dataclass(frozen=True)
class MeasurePreservingSystem:
    base: ProbabilitySpace
    flow: ClosedSystem  # deterministic closed system on base.space


def check_measure_preserving(mp: MeasurePreservingSystem, generators) -> dict:
    """Exact pushforward-invariance of the measure at each generator time."""
    violations = []
    max_dev = 0.0
    for t in generators:
        pushed = bind(mp.base.measure, lambda w: mp.flow.step(t, w))
        dev = dist_distance(pushed, mp.base.measure)
        max_dev = max(max_dev, dev)
        if dev > 0.0:
            violations.append({"kind": "measure", "t": t, "deviation": dev})
    return {
        "law": "measure-preserving",
        "pass": not violations,
        "max_deviation": max_dev,
        "violations": violations,
    }


def mk_measure_preserving(
    base: ProbabilitySpace, flow: ClosedSystem, generators=(1, 2, 3)
) -> MeasurePreservingSystem:
    mp = MeasurePreservingSystem(base, flow)
    report = check_measure_preserving(mp, generators)
    if not report["pass"]:
        raise RandomSystemError(f"flow does not preserve the measure: {report}")
    return mp


@dataclass(frozen=True)
class MPMorphism:
    """A map of measure-preserving systems: preserves both flow and measure.
    Verify with ``check_mp_morphism`` before using it to rebase anything."""

    source: MeasurePreservingSystem
    target: MeasurePreservingSystem
    map: Callable


def check_mp_morphism(psi: MPMorphism, generators=(1, 2, 3)) -> dict:
    violations = []
    pushed = pushforward(psi.map, psi.source.base.measure, target=psi.target.base.space)
    dev = dist_distance(pushed, psi.target.base.measure)
    if dev > 0.0:
        violations.append({"kind": "measure", "deviation": dev})
    for t in generators:
        for w in points(psi.source.base.space):
            lhs = pushforward(
                psi.map, psi.source.flow.step(t, w), target=psi.target.base.space
            )
            rhs = psi.target.flow.step(t, psi.map(w))
            dev = dist_distance(lhs, rhs)
            if dev > 0.0:
                violations.append(
                    {"kind": "flow", "t": t, "state": w, "deviation": dev}
                )
    return {"law": "mp-morphism", "pass": not violations, "violations": violations}


# ---------------------------------------------------------------------------
# open random dynamical systems


@dataclass(frozen=True)
class RandomSystem:
    """Deterministic open system on a total space over a measure-preserving
    base: the projection intertwines every closure with the base flow."""

    base: MeasurePreservingSystem
    total_states: Space
    proj: Callable  # total state -> base state
    interface: Polynomial
    output: Callable  # (t, s) -> position
    update: Callable  # (t, s, d) -> Dist (Dirac) over total states


def as_system(rds: RandomSystem) -> System:
    return mk_system(
        rds.interface,
        rds.total_states,
        rds.output,
        rds.update,
        rds.base.flow.time,
        DETERMINISTIC,
    )


def check_random_system(rds: RandomSystem, sections=None, times=(1, 2, 3)) -> dict:
    """Exact commutation of projection with every sectioned closure."""
    if sections is None:
        sections = all_sections(rds.interface)
    sys_ = as_system(rds)
    violations = []
    for k, sigma in enumerate(sections):
        cs = closure(sys_, sigma)
        for t in times:
            for s in points(rds.total_states):
                lhs = pushforward(rds.proj, cs.step(t, s), target=rds.base.base.space)
                rhs = rds.base.flow.step(t, rds.proj(s))
                dev = dist_distance(lhs, rhs)
                if dev > 0.0:
                    violations.append(
                        {"kind": "square", "section": k, "t": t, "state": s,
                         "deviation": dev}
                    )
    return {"law": "random-system", "pass": not violations, "violations": violations}


def mk_random_system(
    base: MeasurePreservingSystem,
    total_states: Space,
    proj: Callable,
    interface: Polynomial,
    output: Callable,
    update: Callable,
    sections=None,
    times=(1, 2, 3),
) -> RandomSystem:
    rds = RandomSystem(base, total_states, proj, interface, output, update)
    report = check_random_system(rds, sections, times)
    if not report["pass"]:
        raise RandomSystemError(f"projection square does not commute: {report}")
    return rds


def reindex_rds(phi, rds: RandomSystem, sections=None, times=(1, 2, 3)) -> RandomSystem:
    """Transport the total system along a lens; the base is untouched and the
    square is re-verified on the new interface."""
    from .systems import reindex

    moved = reindex(phi, as_system(rds))
    return mk_random_system(
        rds.base,
        rds.total_states,
        rds.proj,
        moved.interface,
        moved.output,
        moved.update,
        sections,
        times,
    )


def rebase_rds(
    psi: MPMorphism, rds: RandomSystem, sections=None, times=(1, 2, 3)
) -> RandomSystem:
    """Change the base by post-composing the projection with a verified map of
    measure-preserving systems."""
    if psi.source != rds.base:
        raise RandomSystemError("morphism does not start at the system's base")
    verdict = check_mp_morphism(psi, times)
    if not verdict["pass"]:
        raise RandomSystemError(f"base morphism fails its laws: {verdict}")

    def proj(s):
        return psi.map(rds.proj(s))

    return mk_random_system(
        psi.target,
        rds.total_states,
        proj,
        rds.interface,
        rds.output,
        rds.update,
        sections,
        times,
    )


# ---------------------------------------------------------------------------
# open bundle systems


@dataclass(frozen=True)
class BundleSystem:
    """An open system on a total space lying over an open system on a base
    space, with the projection commuting for every pair of sections."""

    base_sys: System
    total_sys: System
    proj: Callable  # total state -> base state


def check_bundle(
    bs: BundleSystem, sections_p=None, sections_b=None, times=(1, 2, 3)
) -> dict:
    if sections_p is None:
        sections_p = all_sections(bs.total_sys.interface)
    if sections_b is None:
        sections_b = all_sections(bs.base_sys.interface)
    violations = []
    for kp, sigma in enumerate(sections_p):
        ct = closure(bs.total_sys, sigma)
        for kb, varsigma in enumerate(sections_b):
            cb = closure(bs.base_sys, varsigma)
            for t in times:
                for s in points(bs.total_sys.states):
                    lhs = pushforward(
                        bs.proj, ct.step(t, s), target=bs.base_sys.states
                    )
                    rhs = cb.step(t, bs.proj(s))
                    dev = dist_distance(lhs, rhs)
                    if dev > 0.0:
                        violations.append(
                            {"kind": "square", "section_p": kp, "section_b": kb,
                             "t": t, "state": s, "deviation": dev}
                        )
    return {"law": "bundle", "pass": not violations, "violations": violations}


def mk_bundle(
    base_sys: System,
    total_sys: System,
    proj: Callable,
    sections_p=None,
    sections_b=None,
    times=(1, 2, 3),
) -> BundleSystem:
    bs = BundleSystem(base_sys, total_sys, proj)
    report = check_bundle(bs, sections_p, sections_b, times)
    if not report["pass"]:
        raise RandomSystemError(f"bundle square does not commute: {report}")
    return bs


def reindex_bundle(
    phi, bs: BundleSystem, sections_p=None, sections_b=None, times=(1, 2, 3)
) -> BundleSystem:
    """Move the total interface along a lens, keeping base and projection."""
    from .systems import reindex

    return mk_bundle(
        bs.base_sys, reindex(phi, bs.total_sys), bs.proj, sections_p, sections_b, times
    )


def rebase_bundle(
    f: Callable,
    new_base: System,
    bs: BundleSystem,
    sections_b=None,
    times=(1, 2, 3),
    sections_p=None,
) -> BundleSystem:
    """Change the base system by post-composition with a verified morphism of
    open systems on the base interface."""
    if sections_b is None:
        sections_b = all_sections(bs.base_sys.interface)
    verdict = is_system_morphism(f, bs.base_sys, new_base, sections_b, list(times))
    if not verdict["pass"]:
        raise RandomSystemError(f"base-system morphism fails its squares: {verdict}")

    def proj(s):
        return f(bs.proj(s))

    return mk_bundle(new_base, bs.total_sys, proj, sections_p, sections_b, times)


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck


def ou_demo(
    theta_rate: float,
    sigma: float,
    h: float,
    horizon: int,
    seed: int,
    x0: float = 0.0,
) -> str:
    """Euler-Maruyama path of dX = -theta X dt + sigma dW as CSV text.

    Demo only: a discretized path over an implicit Wiener base; no flow law is
    claimed for it (the exact closed kernel below is the checkable object).
    """
    gen = Rng(seed).generator()
    noise = gen.standard_normal(horizon)
    rows = ["t,x"]
    x = float(x0)
    rows.append(f"0,{x!r}")
    root_h = math.sqrt(h)
    for n in range(horizon):
        x = x - theta_rate * x * h + sigma * root_h * float(noise[n])
        rows.append(f"{n + 1},{x!r}")
    return "\n".join(rows) + "\n"


def ou_transition_kernel(
    theta_rate: float, sigma: float, h: float, t: int
) -> GaussianKernel:
    """The t-tick Ornstein-Uhlenbeck transition as an affine-Gaussian kernel,
    so the flow law can be checked through Kleisli composition of kernels
    (Gaussian laws cannot be averaged through an opaque state function)."""
    dt = t * h
    decay = math.exp(-theta_rate * dt)
    var = sigma**2 * (1.0 - math.exp(-2.0 * theta_rate * dt)) / (2.0 * theta_rate)
    return GaussianKernel.of([[decay]], [0.0], [[var]])


def ou_exact_closed(theta_rate: float, sigma: float, h: float) -> ClosedSystem:
    """The exact Ornstein-Uhlenbeck transition kernel as a closed system:
    one tick of size h sends x to N(e^{-theta h} x, sigma^2 (1 - e^{-2 theta h})
    / (2 theta)).  Because the kernel is exact, the flow law holds on the nose
    (up to float rounding), which no SDE discretization achieves.  Verify it
    against ``ou_transition_kernel`` composition rather than
    ``check_closed_flow``: the latter needs finite-support laws to average."""
    states = euclid(1)

    def kernel(t: int, x):
        dt = t * h
        decay = math.exp(-theta_rate * dt)
        var = sigma**2 * (1.0 - math.exp(-2.0 * theta_rate * dt)) / (2.0 * theta_rate)
        return gaussian1(decay * x[0], var)

    return closed_from_kernel(states, time_real(h), kernel)
