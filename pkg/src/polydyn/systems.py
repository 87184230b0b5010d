"""Open dynamical systems over a polynomial interface, and their closures.

A ``System`` couples a state space to an interface: each state presents a
position (its output) and consumes a direction there, which drives the state
update -- possibly stochastically.  Feeding the directions from a section of
the interface closes the loop and yields a ``ClosedSystem``, a time-indexed
family of Markov kernels on the states.

Time is a monoid of integer ticks (optionally scaled by a real step h).  For
discrete-map systems the stored output/update maps are the one-tick
components; the t-tick kernel is the t-fold Kleisli iterate, which makes the
flow law hold by construction, so ``check_flow`` also probes that the stored
maps really are tick-stationary.  Continuous-time systems integrate a vector
field with a fixed-step classic Runge-Kutta scheme under zero-order hold of
the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .dist import Dirac, Dist, bind, dirac, dist_distance, pushforward
from .poly import (
    DETERMINISTIC,
    STOCHASTIC,
    PolyMap,
    Polynomial,
    Section,
    TimeMonoid,
    time_nat,
    time_real,
)
from .spaces import (
    Space,
    contains,
    flatten_floats,
    is_finite,
    points,
    unflatten_floats,
)


class OpenSystemError(ValueError):
    """Ill-shaped system data or incompatible composition."""


@dataclass(frozen=True)
class DiscreteMap:
    pass


@dataclass(frozen=True)
class VectorField:
    """Continuous-time flavor: ``field(x, d)`` is the tangent vector at state
    x under held input d; ``h`` is the integrator step (one tick); ``scheme``
    names the integrator (only the classic fixed-step rk4 is provided)."""

    field: Callable
    h: float
    scheme: str = "rk4"


Flavor = Union[DiscreteMap, VectorField]


@dataclass(frozen=True)
class System:
    interface: Polynomial
    states: Space
    time: TimeMonoid
    output: Callable  # (t, state) -> position of interface
    update: Callable  # (t, state, direction) -> Dist over states
    effect: str = DETERMINISTIC
    flavor: Flavor = DiscreteMap()


@dataclass(frozen=True)
class ClosedSystem:
    states: Space
    time: TimeMonoid
    step: Callable  # (t, state) -> Dist over states


def mk_system(
    interface: Polynomial,
    states: Space,
    output: Callable,
    update: Callable,
    time: TimeMonoid = None,
    effect: str = DETERMINISTIC,
    flavor: Flavor = None,
) -> System:
    """Assemble and shape-check a System.

    Finite systems are validated exhaustively at one tick: every output must
    be a position, and every update must return a distribution over the
    states (Dirac-only when the effect is declared deterministic).  The flow
    law is deliberately not verified here -- it quantifies over sections and
    times, which is ``check_flow``'s job.
    """
    if time is None:
        time = time_nat()
    if flavor is None:
        flavor = DiscreteMap()
    if effect not in (DETERMINISTIC, STOCHASTIC):
        raise OpenSystemError(f"unknown effect {effect!r}")
    sys_ = System(interface, states, time, output, update, effect, flavor)
    if is_finite(states) and isinstance(flavor, DiscreteMap):
        _validate_finite(sys_)
    return sys_


def _validate_finite(sys_: System) -> None:
    for s in points(sys_.states):
        pos = sys_.output(1, s)
        if not contains(sys_.interface.positions, pos):
            raise OpenSystemError(
                f"output({s!r}) = {pos!r} is not a position of {sys_.interface!r}"
            )
        fibre = sys_.interface.dirs_at(pos)
        if not is_finite(fibre):
            continue
        for d in points(fibre):
            try:
                out = sys_.update(1, s, d)
            except Exception as exc:  # noqa: BLE001 - reshaped into a shape error
                raise OpenSystemError(
                    f"update failed at state {s!r} with direction {d!r} "
                    f"of {fibre!r}: {exc}"
                ) from exc
            if not isinstance(out, Dist) or out.space != sys_.states:
                raise OpenSystemError(
                    f"update({s!r}, {d!r}) must return a Dist over the state "
                    f"space, got {out!r}"
                )
            if sys_.effect == DETERMINISTIC and not isinstance(out, Dirac):
                raise OpenSystemError(
                    f"deterministic system returned a non-Dirac update at "
                    f"({s!r}, {d!r}): {out!r}"
                )


# ---------------------------------------------------------------------------
# closure


def closure(sys_: System, sigma: Section) -> ClosedSystem:
    """Close an open system with a section: at each state, feed the direction
    the section assigns to the current output position."""
    if sigma.of != sys_.interface:
        raise OpenSystemError("section does not match the system interface")

    if isinstance(sys_.flavor, VectorField):

        def step(t: int, s):
            t = sys_.time.check(t)
            if t == 0:
                return dirac(sys_.states, s)
            return sys_.update(t, s, sigma.assign(sys_.output(t, s)))

        return ClosedSystem(sys_.states, sys_.time, step)

    def one_tick(s):
        return sys_.update(1, s, sigma.assign(sys_.output(1, s)))

    def step(t: int, s):
        t = sys_.time.check(t)
        law: Dist = dirac(sys_.states, s)
        for _ in range(t):
            law = bind(law, one_tick)
        return law

    return ClosedSystem(sys_.states, sys_.time, step)


def closed_from_kernel(states: Space, time: TimeMonoid, kernel: Callable) -> ClosedSystem:
    """Closed system from a user-supplied exact t-step kernel.

    This is how closed-form flows enter the package.  ``check_closed_flow``
    verifies the action law on state samples when the kernel has finite
    support; Gaussian kernels cannot be averaged through an opaque state
    function, so verify those at the kernel level (Kleisli composition of
    affine-Gaussian kernels) instead.
    """

    def step(t: int, s):
        t = time.check(t)
        if t == 0:
            return dirac(states, s)
        return kernel(t, s)

    return ClosedSystem(states, time, step)


def check_closed_flow(
    cs: ClosedSystem, times, states_sample, tol: float = 0.0
) -> dict:
    """Verify step(0) = point mass and step(s+t) = step(s) after step(t)."""
    violations = []
    max_dev = 0.0
    for x in states_sample:
        dev = dist_distance(cs.step(0, x), dirac(cs.states, x))
        max_dev = max(max_dev, dev)
        if dev > tol:
            violations.append({"kind": "zero", "state": x, "deviation": dev})
    for s, t in times:
        for x in states_sample:
            lhs = cs.step(s + t, x)
            rhs = bind(cs.step(t, x), lambda z: cs.step(s, z))
            dev = dist_distance(lhs, rhs)
            max_dev = max(max_dev, dev)
            if dev > tol:
                violations.append(
                    {"kind": "compose", "s": s, "t": t, "state": x, "deviation": dev}
                )
    return {
        "law": "flow",
        "pass": not violations,
        "max_deviation": max_dev,
        "violations": violations,
    }


def check_flow(
    sys_: System,
    sections=None,
    times=None,
    states=None,
    tol: float = 0.0,
) -> dict:
    """Flow-law suite for an open system.

    For every section in the family: step(0) is a point mass and
    step(s+t) = step(s) after step(t) on the state sample.  Discrete-map
    systems additionally get a tick-stationarity probe of the stored maps,
    since their general-t kernel is derived from the one-tick components --
    a t-dependent stored map is a law violation even though the derived
    kernels compose by construction.
    """
    from .poly import all_sections

    if sections is None:
        sections = all_sections(sys_.interface)
    sections = list(sections)
    if times is None:
        times = [(s, t) for s in range(5) for t in range(5) if s + t <= 8 and s + t > 0]
    if states is None:
        if not is_finite(sys_.states):
            raise OpenSystemError("check_flow needs an explicit state sample here")
        states = list(points(sys_.states))

    violations = []
    max_dev = 0.0

    if isinstance(sys_.flavor, DiscreteMap):
        probe_ts = sorted({v for pair in times for v in pair if v >= 1} | {1})
        for t in probe_ts:
            for x in states:
                if sys_.output(t, x) != sys_.output(1, x):
                    violations.append(
                        {"kind": "stationary-output", "t": t, "state": x,
                         "deviation": float("inf")}
                    )
                    continue
                fibre = sys_.interface.dirs_at(sys_.output(1, x))
                if not is_finite(fibre):
                    continue
                for d in points(fibre):
                    dev = dist_distance(sys_.update(t, x, d), sys_.update(1, x, d))
                    if dev > tol:
                        max_dev = max(max_dev, dev)
                        violations.append(
                            {"kind": "stationary-update", "t": t, "state": x,
                             "direction": d, "deviation": dev}
                        )

    for k, sigma in enumerate(sections):
        cs = closure(sys_, sigma)
        cache: dict = {}

        def step(t, x, _cs=cs, _cache=cache):
            key = (t, x)
            if key not in _cache:
                _cache[key] = _cs.step(t, x)
            return _cache[key]

        for x in states:
            dev = dist_distance(step(0, x), dirac(sys_.states, x))
            max_dev = max(max_dev, dev)
            if dev > tol:
                violations.append(
                    {"kind": "zero", "section": k, "state": x, "deviation": dev}
                )
        for s, t in times:
            for x in states:
                lhs = step(s + t, x)
                rhs = bind(step(t, x), lambda z: step(s, z))
                dev = dist_distance(lhs, rhs)
                max_dev = max(max_dev, dev)
                if dev > tol:
                    violations.append(
                        {"kind": "compose", "section": k, "s": s, "t": t,
                         "state": x, "deviation": dev}
                    )

    return {
        "law": "flow",
        "pass": not violations,
        "sections": len(sections),
        "max_deviation": max_dev,
        "violations": violations,
    }


# ---------------------------------------------------------------------------
# reindexing


def reindex(phi: PolyMap, sys_: System) -> System:
    """Transport a system along a lens out of its interface.

    The new system shows the world ``phi``-translated outputs and answers
    incoming directions by translating them back through ``phi``'s backward
    family before updating."""
    if phi.source != sys_.interface:
        raise OpenSystemError(
            f"lens starts at {phi.source!r} but the system runs on "
            f"{sys_.interface!r}"
        )
    if sys_.effect == DETERMINISTIC and phi.effect != DETERMINISTIC:
        raise OpenSystemError(
            "stochastic lens cannot reindex a deterministic system; "
            "declare the system stochastic first"
        )

    def output(t, s):
        return phi.forward(sys_.output(t, s))

    def update(t, s, d_new):
        translated = phi.backward(sys_.output(t, s), d_new)
        return bind(translated, lambda d: sys_.update(t, s, d))

    return System(
        phi.target, sys_.states, sys_.time, output, update, sys_.effect, sys_.flavor
    )


def systems_agree(a: System, b: System, tol: float = 0.0) -> bool:
    """Extensional one-tick equality of two finite systems on shared shape."""
    if (a.interface, a.states, a.time) != (b.interface, b.states, b.time):
        return False
    for s in points(a.states):
        if a.output(1, s) != b.output(1, s):
            return False
        fibre = a.interface.dirs_at(a.output(1, s))
        for d in points(fibre):
            if dist_distance(a.update(1, s, d), b.update(1, s, d)) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# continuous time


def rk4_step(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def from_vector_field(
    f: Callable,
    g: Callable,
    p: Polynomial,
    h: float,
    scheme: str = "rk4",
    states: Space = None,
) -> System:
    """Open continuous-time system from a vector field.

    ``f(x, d)`` gives the tangent at state x under input direction d;
    ``g(x)`` is the exposed position.  One tick integrates h time units with
    the classic fixed-step scheme, holding the direction fixed for the whole
    call (zero-order hold)."""
    if scheme != "rk4":
        raise OpenSystemError(f"unknown integration scheme {scheme!r}")
    if states is None:
        raise OpenSystemError("from_vector_field needs the Euclid state space")
    clock = time_real(h)

    def output(t, x):
        return g(x)

    def update(t, x, d):
        t = clock.check(t)
        vec = np.asarray(flatten_floats(states, x), dtype=float)

        def field(v):
            pt = unflatten_floats(states, v.tolist())
            return np.asarray(f(pt, d), dtype=float)

        for _ in range(t):
            vec = rk4_step(field, vec, h)
        return dirac(states, unflatten_floats(states, vec.tolist()))

    return System(
        p, states, clock, output, update, DETERMINISTIC, VectorField(f, h, scheme)
    )


# ---------------------------------------------------------------------------
# coalgebra round-trip


@dataclass(frozen=True)
class NCoalg:
    """Tabular presentation of a finite deterministic discrete system: the
    output table S -> positions and the transition table on (state,
    direction) pairs over each state's own fibre."""

    interface: Polynomial
    states: Space
    output_table: tuple  # ((state, position), ...)
    transition_table: tuple  # (((state, direction), state'), ...)

    def to_system(self) -> System:
        out = dict(self.output_table)
        trans = dict(self.transition_table)

        def output(t, s):
            return out[s]

        def update(t, s, d):
            return dirac(self.states, trans[(s, d)])

        return mk_system(self.interface, self.states, output, update, time_nat())


def to_ncoalg(sys_: System) -> NCoalg:
    if sys_.time.kind != "nat" or sys_.effect != DETERMINISTIC:
        raise OpenSystemError("tabular form needs discrete time and deterministic effect")
    if not (is_finite(sys_.states) and is_finite(sys_.interface.positions)):
        raise OpenSystemError("tabular form needs finite states and positions")
    out_rows = []
    trans_rows = []
    for s in points(sys_.states):
        pos = sys_.output(1, s)
        out_rows.append((s, pos))
        fibre = sys_.interface.dirs_at(pos)
        if not is_finite(fibre):
            raise OpenSystemError("tabular form needs finite direction fibres")
        for d in points(fibre):
            from .poly import dirac_point

            trans_rows.append(((s, d), dirac_point(sys_.update(1, s, d))))
    return NCoalg(sys_.interface, sys_.states, tuple(out_rows), tuple(trans_rows))


def roundtrip_ncoalg(sys_: System):
    """Convert to the tabular coalgebra presentation and back; the round-trip
    reproduces the original tables exactly."""
    nc = to_ncoalg(sys_)
    back = nc.to_system()
    return nc, back


# ---------------------------------------------------------------------------
# system morphisms


def is_system_morphism(
    f: Callable,
    a: System,
    b: System,
    sections,
    times,
    tol: float = 0.0,
    states=None,
) -> dict:
    """Check the naturality squares that make ``f`` a map of systems.

    Outputs must agree through f, and for every section and time the closed
    step of ``a`` pushed forward along f must equal the closed step of ``b``
    at the image state."""
    if a.interface != b.interface or a.time != b.time:
        raise OpenSystemError("systems must share interface and time monoid")
    if states is None:
        states = list(points(a.states))
    violations = []
    max_dev = 0.0
    for x in states:
        if b.output(1, f(x)) != a.output(1, x):
            violations.append({"kind": "output", "state": x, "deviation": float("inf")})
    for k, sigma in enumerate(sections):
        ca = closure(a, sigma)
        cb = closure(b, sigma)
        for t in times:
            for x in states:
                lhs = pushforward(f, ca.step(t, x), target=b.states)
                rhs = cb.step(t, f(x))
                dev = dist_distance(lhs, rhs)
                max_dev = max(max_dev, dev)
                if dev > tol:
                    violations.append(
                        {"kind": "square", "section": k, "t": t, "state": x,
                         "deviation": dev}
                    )
    return {
        "law": "system-morphism",
        "pass": not violations,
        "max_deviation": max_dev,
        "violations": violations,
    }
