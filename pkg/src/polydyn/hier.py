"""Hierarchical systems: dynamical systems whose outputs are themselves lenses.

A ``HierSystem`` from interface p to interface q is a stateful process that at
each tick emits a whole lens p -> q (``emit``) and absorbs the response -- a
source position together with the direction the target returned there -- into
a state update (``absorb``).  Composing two of them runs the emitted lenses
nose-to-tail while routing the backward traffic through both states; tensoring
runs them side by side.  Copy and discard systems make this a copy-discard
setting, which is what lets an abstract Bayes' rule be stated dynamically.

Equality of hierarchical systems is extensional: two systems are compared by
the distributions of their emitted lenses over time (``trace``) under every
environment choice (``HomSection``), via ``quasi_bisim``.  Emitted lenses are
encoded by normalized forward/backward tables, so systems whose interfaces
differ only by unit factors or product re-association compare equal.

The bidirectional refinement (``hibi_compose``) composes systems whose source
positions are distribution-valued: the middle wire is lifted with the monad
unit unless the left factor supplies a richer ``forward_lift``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

from .dist import (
    Dirac,
    Dist,
    Rng,
    bind,
    categorical,
    dirac,
    dist_distance,
    dst,
    finite_items,
    prob,
    pushforward,
    uniform,
)
from .poly import (
    DETERMINISTIC,
    STOCHASTIC,
    PolyMap,
    Polynomial,
    TimeMonoid,
    compose_map,
    id_map,
    linear,
    monomial,
    polymap_key,
    tensor,
    tensor_map,
    time_nat,
    y,
)
from .spaces import (
    DistSpace,
    FiniteSpace,
    Space,
    dist_space,
    expand_point,
    is_finite,
    normalize_point,
    points,
    prod,
    unit,
)
from .systems import System


class HierError(ValueError):
    """Mismatched interfaces or times in a hierarchical construction."""


@dataclass(frozen=True)
class HierSystem:
    source: Polynomial
    target: Polynomial
    states: Space
    time: TimeMonoid
    emit: Callable  # (t, x) -> PolyMap source -> target
    absorb: Callable  # (t, x, i, d') -> Dist over states
    effect: str = DETERMINISTIC
    forward_lift: Optional[Callable] = None  # (t, x, b) -> Dist over target positions
    init: Optional[Dist] = None  # canonical initial state law, when one exists


def mk_hier(
    source: Polynomial,
    target: Polynomial,
    states: Space,
    emit: Callable,
    absorb: Callable,
    time: TimeMonoid = None,
    effect: str = DETERMINISTIC,
    forward_lift: Callable = None,
    init: Dist = None,
) -> HierSystem:
    if time is None:
        time = time_nat()
    hs = HierSystem(source, target, states, time, emit, absorb, effect, forward_lift, init)
    if is_finite(states):
        for x in points(states):
            phi = emit(1, x)
            if phi.source != source or phi.target != target:
                raise HierError(
                    f"emitted lens at state {x!r} has shape {phi.source!r} -> "
                    f"{phi.target!r}, declared {source!r} -> {target!r}"
                )
    return hs


# ---------------------------------------------------------------------------
# tabular presentation for monomial interfaces


def hier_from_tables(
    A: Space, S: Space, B: Space, T: Space,
    states: Space,
    o1: Callable,  # (t, x, a) -> b
    o2: Callable,  # (t, x, a, t') -> s
    u: Callable,  # (t, x, a, t') -> Dist over states
    time: TimeMonoid = None,
    effect: str = DETERMINISTIC,
    init: Dist = None,
) -> HierSystem:
    """Hierarchical system between monomial interfaces Ay^S -> By^T from its
    three component maps: forward output, backward output, update."""
    source = monomial(A, S)
    target = monomial(B, T)

    def emit(t, x):
        def backward(a, t_prime):
            return dirac(S, o2(t, x, a, t_prime))

        return PolyMap(source, target, lambda a: o1(t, x, a), backward, DETERMINISTIC)

    def absorb(t, x, a, t_prime):
        return u(t, x, a, t_prime)

    return mk_hier(source, target, states, emit, absorb, time, effect, init=init)


def hier_to_tables(hs: HierSystem):
    """Recover the (forward output, backward output, update) component maps of
    a monomial-shaped hierarchical system.  Inverse to ``hier_from_tables``."""
    from .poly import dirac_point

    def o1(t, x, a):
        return hs.emit(t, x).forward(a)

    def o2(t, x, a, t_prime):
        return dirac_point(hs.emit(t, x).backward(a, t_prime))

    def u(t, x, a, t_prime):
        return hs.absorb(t, x, a, t_prime)

    return o1, o2, u


# ---------------------------------------------------------------------------
# category structure


def id_hier(p: Polynomial) -> HierSystem:
    """The identity process on p: trivial state, constantly emits the identity
    lens, absorbs everything silently."""
    ident = id_map(p)
    ustates = unit()
    silent = dirac(ustates, ())

    def emit(t, x):
        return ident

    def absorb(t, x, i, d):
        return silent

    return HierSystem(p, p, ustates, time_nat(), emit, absorb, DETERMINISTIC, None, silent)


def _memo_pair(fn: Callable) -> Callable:
    """Cache a binary distribution combinator by operand identity.  Absorb
    maps routinely return long-lived shared Dist objects; caching keeps the
    per-atom cost of composite updates constant instead of quadratic."""
    store: dict = {}

    def combined(a, b):
        key = (id(a), id(b))
        hit = store.get(key)
        if hit is not None and hit[0] is a and hit[1] is b:
            return hit[2]
        out = fn(a, b)
        if len(store) > 4096:
            store.clear()
        store[key] = (a, b, out)
        return out

    return combined


def compose_hier(beta: HierSystem, gamma: HierSystem, middle: Callable = None) -> HierSystem:
    """Sequential composition: run gamma's emitted lens after beta's.

    Backward traffic at a source position i first crosses gamma's backward
    family (producing middle directions), which then feed beta's absorb; both
    states update, independently given the routed directions.  ``middle``
    optionally inserts a state-dependent adapter lens between the two emitted
    lenses (used by the bidirectional refinement below)."""
    if middle is None and beta.target != gamma.source:
        raise HierError(
            f"cannot compose: left system targets {beta.target!r}, "
            f"right system expects {gamma.source!r}"
        )
    if beta.time != gamma.time:
        raise HierError("composed systems must share the time monoid")
    states = prod(beta.states, gamma.states)
    pair = _memo_pair(dst)

    def emitted(t, xy):
        x, z = xy
        left = beta.emit(t, x)
        if middle is not None:
            left = compose_map(middle(t, x), left)
        return compose_map(gamma.emit(t, z), left)

    def emit(t, xy):
        return emitted(t, xy)

    def absorb(t, xy, i, d_out):
        x, z = xy
        phi = beta.emit(t, x)
        j = phi.forward(i)
        if middle is not None:
            j = middle(t, x).forward(j)
        mid_dirs = gamma.emit(t, z).backward(j, d_out)
        left_new = bind(mid_dirs, lambda d_mid: beta.absorb(t, x, i, d_mid))
        right_new = gamma.absorb(t, z, j, d_out)
        return pair(left_new, right_new)

    effect = (
        DETERMINISTIC
        if (beta.effect, gamma.effect) == (DETERMINISTIC,) * 2
        else STOCHASTIC
    )
    lift = None
    if gamma.forward_lift is not None:
        def lift(t, xy, b):  # noqa: E731 - closure over gamma
            return gamma.forward_lift(t, xy[1], b)

    init = dst(beta.init, gamma.init) if beta.init and gamma.init else None
    return HierSystem(
        beta.source, gamma.target, states, beta.time, emit, absorb, effect, lift, init
    )


def tensor_hier(beta: HierSystem, gamma: HierSystem) -> HierSystem:
    """Parallel product: emitted lenses tensor, absorbs run independently."""
    if beta.time != gamma.time:
        raise HierError("tensored systems must share the time monoid")
    source = tensor(beta.source, gamma.source)
    target = tensor(beta.target, gamma.target)
    states = prod(beta.states, gamma.states)
    pair = _memo_pair(dst)

    def emit(t, xz):
        x, z = xz
        return tensor_map(beta.emit(t, x), gamma.emit(t, z))

    def absorb(t, xz, ij, dd):
        x, z = xz
        i, j = ij
        d1, d2 = dd
        return pair(beta.absorb(t, x, i, d1), gamma.absorb(t, z, j, d2))

    effect = (
        DETERMINISTIC
        if (beta.effect, gamma.effect) == (DETERMINISTIC,) * 2
        else STOCHASTIC
    )
    init = dst(beta.init, gamma.init) if beta.init and gamma.init else None
    return HierSystem(source, target, states, beta.time, emit, absorb, effect, None, init)


def _stateless(source: Polynomial, target: Polynomial, lens: PolyMap) -> HierSystem:
    ustates = unit()
    silent = dirac(ustates, ())

    def emit(t, x):
        return lens

    def absorb(t, x, i, d):
        return silent

    return HierSystem(
        source, target, ustates, time_nat(), emit, absorb, DETERMINISTIC, None, silent
    )


def copy_system(A: Space) -> HierSystem:
    """Duplicate an A-valued output: Ay -> Ay (x) Ay, emitting a |-> (a, a)."""
    source = linear(A)
    target = tensor(source, source)
    lens = PolyMap(
        source,
        target,
        lambda a: (a, a),
        lambda a, d: dirac(unit(), ()),
        DETERMINISTIC,
    )
    return _stateless(source, target, lens)


def discard_system(A: Space) -> HierSystem:
    """Forget an A-valued output: Ay -> y."""
    source = linear(A)
    target = y()
    lens = PolyMap(source, target, lambda a: (), lambda a, d: dirac(unit(), ()), DETERMINISTIC)
    return _stateless(source, target, lens)


def swap_system(A: Space, B: Space) -> HierSystem:
    """Exchange the two halves of a pair output: Ay (x) By -> By (x) Ay."""
    source = tensor(linear(A), linear(B))
    target = tensor(linear(B), linear(A))

    def backward(ab, d):
        return dirac(source.dirs_at(ab), ((), ()))

    lens = PolyMap(source, target, lambda ab: (ab[1], ab[0]), backward, DETERMINISTIC)
    return _stateless(source, target, lens)


def function_system(f: Callable, A: Space, B: Space) -> HierSystem:
    """Stateless process emitting the fixed function a |-> f(a): Ay -> By."""
    source = linear(A)
    target = linear(B)
    lens = PolyMap(source, target, f, lambda a, d: dirac(unit(), ()), DETERMINISTIC)
    return _stateless(source, target, lens)


# ---------------------------------------------------------------------------
# traces and quasi-bisimilarity


@dataclass(frozen=True)
class Trace:
    times: tuple
    values: tuple  # one Dist per time over emitted positions (or their keys)


@dataclass(frozen=True)
class HomSection:
    """An environment strategy for a hierarchical system: for each emitted
    lens (by normalized table key) it fixes the source position offered and
    the direction the target feeds back, both in normalized form."""

    table: tuple  # ((lens key, (position, direction)), ...)

    def choose(self, key):
        for k, v in self.table:
            if k == key:
                return v
        raise HierError("section has no entry for an emitted lens")


def _emitted_keys(hs: HierSystem, horizon: int) -> list:
    if not is_finite(hs.states):
        raise HierError("enumerating emitted lenses needs a finite state space")
    seen: dict = {}
    for t in range(horizon + 1):
        for x in points(hs.states):
            key = polymap_key(hs.emit(t, x))
            seen.setdefault(key, None)
    return list(seen)


def _key_choices(hs: HierSystem, horizon: int) -> dict:
    """Normalized (position, direction) response options per emitted-lens key."""
    choices: dict = {}
    for t in range(horizon + 1):
        for x in points(hs.states):
            phi = hs.emit(t, x)
            key = polymap_key(phi)
            if key in choices:
                continue
            opts = []
            for i in points(hs.source.positions):
                fibre = hs.target.dirs_at(phi.forward(i))
                i_n = _normal(hs.source.positions, i)
                for d in points(fibre):
                    opts.append((i_n, _normal(fibre, d)))
            choices[key] = opts
    return choices


def _normal(space: Space, v):
    return normalize_point(space, v)


def hom_sections(
    systems, horizon: int, max_sections: int = 512, seed: int = 0
) -> list:
    """All environment strategies over the lenses the given systems can emit,
    capped by seeded sampling when the exhaustive product is too large."""
    choices: dict = {}
    for hs in systems:
        for key, opts in _key_choices(hs, horizon).items():
            prior = choices.setdefault(key, opts)
            if [o for o in prior] != [o for o in opts]:
                merged = list(dict.fromkeys(tuple(prior) + tuple(opts)))
                choices[key] = merged
    keys = list(choices)
    counts = [len(choices[k]) for k in keys]
    total = 1
    for c in counts:
        total *= c
    if total <= max_sections:
        assignments = itertools.product(*(choices[k] for k in keys))
        return [HomSection(tuple(zip(keys, combo))) for combo in assignments]
    gen = Rng(seed).generator()
    out = []
    for _ in range(max_sections):
        combo = tuple(choices[k][int(gen.integers(len(choices[k])))] for k in keys)
        out.append(HomSection(tuple(zip(keys, combo))))
    return out


def _apply_hom_section(hs: HierSystem, sigma: HomSection, t: int, x):
    phi = hs.emit(t, x)
    i_n, d_n = sigma.choose(polymap_key(phi))
    i = expand_point(hs.source.positions, i_n)
    fibre = hs.target.dirs_at(phi.forward(i))
    return hs.absorb(t, x, i, expand_point(fibre, d_n))


def _key_dist(pairs) -> Dist:
    space = FiniteSpace(tuple(dict.fromkeys(k for k, _ in pairs)))
    merged: dict = {}
    for k, w in pairs:
        merged[k] = merged.get(k, 0.0) + w
    if len(merged) == 1 and abs(next(iter(merged.values())) - 1.0) <= 1e-12:
        return Dirac(space, next(iter(merged)))
    return categorical(space, merged)


def trace(sys_, sigma, init: Dist, horizon: int) -> Trace:
    """Time-indexed distribution of what the system shows the world.

    For an ordinary open system this is the law of the output position under
    the section-closed state evolution; for a hierarchical system it is the
    law of the emitted lens (by normalized key) under an environment strategy.
    Exact by enumeration on finite supports."""
    if isinstance(sys_, HierSystem):
        values = []
        law = init
        for t in range(horizon + 1):
            pairs = [
                (polymap_key(sys_.emit(t, x)), w) for x, w in finite_items(law)
            ]
            values.append(_key_dist(pairs))
            if t < horizon:
                law = bind(law, lambda x, _t=t: _apply_hom_section(sys_, sigma, _t, x))
        return Trace(tuple(range(horizon + 1)), tuple(values))

    if not isinstance(sys_, System):
        raise HierError(f"cannot trace {sys_!r}")
    values = []
    law = init
    for t in range(horizon + 1):
        values.append(
            pushforward(
                lambda s, _t=t: sys_.output(_t, s), law, target=sys_.interface.positions
            )
        )
        if t < horizon:

            def one(s):
                return sys_.update(1, s, sigma.assign(sys_.output(1, s)))

            law = bind(law, one)
    return Trace(tuple(range(horizon + 1)), tuple(values))


def _candidates(sys_, provided, mode: str, cap: int = 256) -> list:
    out = list(provided or [])
    if isinstance(sys_, HierSystem) and sys_.init is not None:
        out.append(sys_.init)
    states = sys_.states
    if is_finite(states):
        atoms = list(points(states))
        if len(atoms) <= cap:
            out.extend(dirac(states, a) for a in atoms)
            out.append(uniform(states))
    if not out:
        raise HierError(
            f"no initial-state candidates available for quantifier {mode!r}"
        )
    seen = []
    for d in out:
        if not any(existing is d or existing == d for existing in seen):
            seen.append(d)
    return seen


def quasi_bisim(
    theta,
    psi,
    alpha_mode: str = "exists",
    beta_mode: str = "exists",
    sections=None,
    horizon: int = 8,
    tol: float = 0.0,
    alphas=None,
    betas=None,
    max_sections: int = 512,
    seed: int = 0,
) -> dict:
    """Compare two systems by their traces under shared environments.

    The quantifier modes pick initial state laws: ``exists`` searches the
    candidate set for a witness, ``forall`` demands every candidate work.
    Candidates are the provided lists plus each system's canonical initial
    law, every point mass, and the uniform law (finite state spaces).
    The verdict records the witnessing pair or the first mismatch."""
    if alpha_mode not in ("exists", "forall") or beta_mode not in ("exists", "forall"):
        raise HierError("quantifier modes are 'exists' or 'forall'")
    hier_mode = isinstance(theta, HierSystem)
    if hier_mode != isinstance(psi, HierSystem):
        raise HierError("cannot compare a hierarchical with a flat system")
    if sections is None:
        if hier_mode:
            sections = hom_sections([theta, psi], horizon, max_sections, seed)
        else:
            if theta.interface != psi.interface:
                raise HierError("flat systems must share their interface")
            from .poly import all_sections

            sections = all_sections(theta.interface)
    sections = list(sections)
    cand_a = _candidates(theta, alphas, alpha_mode)
    cand_b = _candidates(psi, betas, beta_mode)

    memo_a: dict = {}
    memo_b: dict = {}

    def tr(side, sys_2, cands, memo, ci, si):
        key = (ci, si)
        if key not in memo:
            memo[key] = trace(sys_2, sections[si], cands[ci], horizon).values
        return memo[key]

    def match(ci_a, ci_b):
        for si in range(len(sections)):
            va = tr("a", theta, cand_a, memo_a, ci_a, si)
            vb = tr("b", psi, cand_b, memo_b, ci_b, si)
            for t in range(horizon + 1):
                dev = dist_distance(va[t], vb[t])
                if dev > tol:
                    return {"section": si, "t": t, "deviation": dev}
        return None

    def note(ci_a, ci_b, mismatch):
        return {"alpha": ci_a, "beta": ci_b, **(mismatch or {})}

    pass_fail: dict = {"mode": (alpha_mode, beta_mode), "sections": len(sections)}

    def beta_side(ci_a):
        first = None
        for ci_b in range(len(cand_b)):
            mis = match(ci_a, ci_b)
            if beta_mode == "exists" and mis is None:
                return True, note(ci_a, ci_b, None)
            if beta_mode == "forall" and mis is not None:
                return False, note(ci_a, ci_b, mis)
            if first is None and mis is not None:
                first = note(ci_a, ci_b, mis)
        if beta_mode == "exists":
            return False, first
        return True, None

    first_fail = None
    first_ok = None
    for ci_a in range(len(cand_a)):
        ok, info = beta_side(ci_a)
        if alpha_mode == "exists" and ok:
            return {**pass_fail, "related": True, "witness": info}
        if alpha_mode == "forall" and not ok:
            return {**pass_fail, "related": False, "witness": info}
        if not ok and first_fail is None:
            first_fail = info
        if ok and first_ok is None:
            first_ok = info
    if alpha_mode == "exists":
        return {**pass_fail, "related": False, "witness": first_fail}
    return {**pass_fail, "related": True, "witness": first_ok}


# ---------------------------------------------------------------------------
# exact Bayesian inversion of finite channels


@dataclass(frozen=True)
class BayesInverse:
    """Finite Bayes inversion c-dagger of a channel against a prior; callable
    on outcomes.  Outcomes with zero evidence get the uniform convention and
    are listed in ``zero_evidence``."""

    table: tuple  # ((y, Dist over X), ...)
    zero_evidence: tuple

    def __call__(self, yv):
        for key, d in self.table:
            if key == yv:
                return d
        raise HierError(f"outcome {yv!r} is outside the channel's target space")


def exact_bayes(c: Callable, pi: Dist, target: Space = None) -> BayesInverse:
    """Posterior kernel y |-> P(x | y) for a finite channel and prior, by
    direct application of Bayes' rule on the joint weights."""
    X = pi.space
    images = {x: c(x) for x, _ in finite_items(pi)}
    if target is None:
        target = next(iter(images.values())).space
    joint: dict = {}
    for x, wx in finite_items(pi):
        for yv, wy in finite_items(images[x]):
            joint[(x, yv)] = joint.get((x, yv), 0.0) + wx * wy
    rows = []
    zero = []
    for yv in points(target):
        evidence = sum(w for (x, y2), w in joint.items() if y2 == yv)
        if evidence == 0.0:
            zero.append(yv)
            rows.append((yv, uniform(X)))
            continue
        post = {
            x: joint.get((x, yv), 0.0) / evidence for x, _ in finite_items(pi)
        }
        rows.append((yv, categorical(X, post)))
    return BayesInverse(tuple(rows), tuple(zero))


# channels as hierarchical systems ------------------------------------------


def prior_system(pi: Dist) -> HierSystem:
    """A state on X as a process y -> Xy: holds a sample, shows it, redraws."""
    X = pi.space
    source = y()

    def emit(t, x):
        return PolyMap(source, linear(X), lambda _: x, lambda _, d: dirac(unit(), ()), DETERMINISTIC)

    def absorb(t, x, i, d):
        return pi

    return HierSystem(
        source, linear(X), X, time_nat(), emit, absorb, STOCHASTIC, None, pi
    )


def stochastic_channel_system(c: Callable, X: Space, Y: Space) -> HierSystem:
    """A stochastic channel as a process Xy -> Yy via randomness pushback.

    The state is a whole function table X -> Y drawn coordinatewise from the
    channel; each tick emits the table as a deterministic lens and then
    redraws it fresh.  Pointwise, the emitted function's law at x is exactly
    c(x), so upstream samples are pushed through the channel's law while the
    emitted lens stays an honest deterministic table."""
    xs = list(points(X))
    table_space = FiniteSpace(
        tuple(itertools.product(*[tuple(points(Y)) for _ in xs]))
    )
    weights = {}
    for combo in points(table_space):
        w = 1.0
        for xv, yv in zip(xs, combo):
            w *= prob(c(xv), yv)
        if w > 0.0:
            weights[combo] = w
    law = categorical(table_space, weights)
    index = {xv: k for k, xv in enumerate(xs)}

    def emit(t, table):
        return PolyMap(
            linear(X),
            linear(Y),
            lambda a: table[index[a]],
            lambda a, d: dirac(unit(), ()),
            DETERMINISTIC,
        )

    def absorb(t, table, i, d):
        return law

    return HierSystem(
        linear(X), linear(Y), table_space, time_nat(), emit, absorb, STOCHASTIC,
        None, law,
    )


def bayes_check(
    c: HierSystem,
    pi: HierSystem,
    cdag: HierSystem,
    sections=None,
    horizon: int = 4,
    tol: float = 1e-9,
) -> dict:
    """Dynamical Bayes' rule: the two joint processes built from the prior,
    the channel, and the candidate inversion must be trace-equivalent.

    Left joint: show the prior's sample alongside the channel's response to
    it.  Right joint: push the sample through the channel, then reconstruct
    it from the shown outcome with the inversion.  Both are processes
    y -> Xy (x) Yy and are compared by quasi_bisim with existential initial
    laws (the canonical initial laws are the intended witnesses)."""
    X = c.source.positions
    Y = c.target.positions
    if pi.target.positions != X or cdag.source.positions != Y or cdag.target.positions != X:
        raise HierError("channel, prior and inversion interfaces do not line up")
    lhs = compose_hier(
        compose_hier(pi, copy_system(X)),
        tensor_hier(id_hier(linear(X)), c),
    )
    rhs = compose_hier(
        compose_hier(compose_hier(pi, c), copy_system(Y)),
        tensor_hier(cdag, id_hier(linear(Y))),
    )
    verdict = quasi_bisim(
        lhs, rhs, "exists", "exists", sections=sections, horizon=horizon, tol=tol
    )
    return {"law": "dynamical-bayes", **verdict}


# ---------------------------------------------------------------------------
# bidirectional (distribution-fed) composition


def hibi_pair_hom(A: Space, S: Space, B: Space, T: Space) -> tuple:
    """Source/target interfaces of a bidirectional hom (A,S) -> (B,T): the
    forward input is a distribution over A, the forward output a point of B,
    with S and T the respective backward directions."""
    return monomial(dist_space(A), S), monomial(B, T)


def hibi_compose(f: HierSystem, g: HierSystem) -> HierSystem:
    """Compose bidirectional systems (A,S)->(B,T) and (B,T)->(C,U).

    The middle wire carries points of B but g expects distributions over B,
    so the composite inserts a lift: the monad unit by default (a point mass
    at f's forward output), or f's ``forward_lift`` when it carries one --
    which is how predictive hierarchies pass calibrated uncertainty instead
    of false certainty.  There is no identity for this composition; the API
    is composition-only."""
    if not isinstance(g.source.positions, DistSpace):
        raise HierError("right factor does not take distribution-valued inputs")
    B = g.source.positions.base
    if f.target.positions != B:
        raise HierError(
            f"middle spaces disagree: left outputs {f.target.positions!r}, "
            f"right consumes distributions over {B!r}"
        )
    if f.target.directions != g.source.directions:
        raise HierError("middle backward directions disagree")

    def lift_lens(t, x):
        if f.forward_lift is not None:
            def fwd(b):
                return f.forward_lift(t, x, b)
        else:
            def fwd(b):
                return dirac(B, b)

        def backward(b, t_prime):
            return dirac(f.target.dirs_at(b), t_prime)

        return PolyMap(f.target, g.source, fwd, backward, DETERMINISTIC)

    return compose_hier(f, g, middle=lift_lens)
