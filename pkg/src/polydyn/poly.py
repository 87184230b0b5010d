"""Polynomial interfaces and the lenses between them.

A ``Polynomial`` is a coproduct of representables presented concretely: a
space of positions together with a direction space for each position.  Two
presentations cover everything this package instantiates:

* ``ConstantDirections`` -- every position shares one direction space.  With
  direction space ``S`` and positions ``A`` this is the monomial ``A y^S``;
  direction space unit gives the linear interface ``A y``; positions unit and
  directions unit give the identity interface ``y``.
* ``TabulatedDirections`` -- an explicit finite table position -> space.

A ``PolyMap`` from ``p`` to ``q`` is a forward map on positions together with
a backward family sending a source position and a direction of the target
there to a distribution over source directions.  Deterministic maps are those
whose backward family is Dirac-valued.

Tensor products keep their structural ``Prod`` shape; nothing is flattened
unless you ask (see ``spaces.normalize_space``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Union

from .dist import Categorical, Dirac, Dist, DistError, bind, dirac, dst
from .spaces import (
    Space,
    check_point,
    is_finite,
    normalize_point,
    points,
    prod,
    unit,
)

DETERMINISTIC = "deterministic"
STOCHASTIC = "stochastic"


class PolyError(ValueError):
    """Ill-shaped polynomial data or a lens operation on mismatched interfaces."""


@dataclass(frozen=True)
class ConstantDirections:
    space: Space


@dataclass(frozen=True)
class TabulatedDirections:
    table: tuple  # ((position, Space), ...), total over a finite position space


@dataclass(frozen=True)
class Polynomial:
    positions: Space
    directions: Union[ConstantDirections, TabulatedDirections]

    def dirs_at(self, i) -> Space:
        if isinstance(self.directions, ConstantDirections):
            return self.directions.space
        for pos, space in self.directions.table:
            if pos == i:
                return space
        raise PolyError(f"position {i!r} has no entry in the direction table")

    def __repr__(self) -> str:
        if isinstance(self.directions, ConstantDirections):
            return f"monomial({self.positions!r}, {self.directions.space!r})"
        return f"poly({self.positions!r}, tabulated)"


def monomial(positions: Space, dirs: Space) -> Polynomial:
    """The interface ``A y^S`` with positions A and constant directions S."""
    return Polynomial(positions, ConstantDirections(dirs))


def linear(positions: Space) -> Polynomial:
    """``A y``: positions A, trivial directions."""
    return monomial(positions, unit())


def y() -> Polynomial:
    """The identity interface."""
    return monomial(unit(), unit())


def tabulated(positions: Space, table: dict) -> Polynomial:
    if not is_finite(positions):
        raise PolyError("a direction table needs a finite position space")
    missing = [i for i in points(positions) if i not in table]
    if missing:
        raise PolyError(f"direction table is missing positions {missing!r}")
    entries = tuple((i, table[i]) for i in points(positions))
    return Polynomial(positions, TabulatedDirections(entries))


def tensor(p: Polynomial, q: Polynomial) -> Polynomial:
    """Parallel product: positions Prod(p(1), q(1)), directions Prod(p[i], q[j])."""
    positions = prod(p.positions, q.positions)
    if isinstance(p.directions, ConstantDirections) and isinstance(
        q.directions, ConstantDirections
    ):
        return Polynomial(
            positions, ConstantDirections(prod(p.directions.space, q.directions.space))
        )
    if not is_finite(positions):
        raise PolyError(
            "tensor with tabulated directions needs finite positions on both sides"
        )
    table = {
        (i, j): prod(p.dirs_at(i), q.dirs_at(j))
        for i in points(p.positions)
        for j in points(q.positions)
    }
    return tabulated(positions, table)


# ---------------------------------------------------------------------------
# lenses


@dataclass(frozen=True)
class PolyMap:
    source: Polynomial
    target: Polynomial
    forward: Callable  # positions(source) -> positions(target)
    backward: Callable  # (i, direction of target at forward(i)) -> Dist
    effect: str = DETERMINISTIC

    def __post_init__(self):
        if self.effect not in (DETERMINISTIC, STOCHASTIC):
            raise PolyError(f"unknown effect {self.effect!r}")


def mk_polymap(source, target, forward, backward, effect=DETERMINISTIC) -> PolyMap:
    return PolyMap(source, target, forward, backward, effect)


def det_polymap(source, target, forward, backward_point) -> PolyMap:
    """Deterministic lens from a point-valued backward function."""

    def backward(i, d):
        return dirac(source.dirs_at(i), backward_point(i, d))

    return PolyMap(source, target, forward, backward, DETERMINISTIC)


def id_map(p: Polynomial) -> PolyMap:
    return PolyMap(p, p, lambda i: i, lambda i, d: dirac(p.dirs_at(i), d), DETERMINISTIC)


def compose_map(g: PolyMap, f: PolyMap) -> PolyMap:
    """The composite g after f.  Forward parts compose covariantly, backward
    families compose contravariantly through the Kleisli category."""
    if f.target != g.source:
        raise PolyError(
            f"cannot compose: inner map lands in {f.target!r} "
            f"but outer map starts at {g.source!r}"
        )

    def forward(i):
        return g.forward(f.forward(i))

    def backward(i, d2):
        mid = g.backward(f.forward(i), d2)
        return bind(mid, lambda d1: f.backward(i, d1))

    effect = DETERMINISTIC if (f.effect, g.effect) == (DETERMINISTIC,) * 2 else STOCHASTIC
    return PolyMap(f.source, g.target, forward, backward, effect)


def tensor_map(f: PolyMap, g: PolyMap) -> PolyMap:
    """Side-by-side product of lenses; backward laws combine independently."""
    source = tensor(f.source, g.source)
    target = tensor(f.target, g.target)

    def forward(ij):
        i, j = ij
        return (f.forward(i), g.forward(j))

    def backward(ij, dd):
        i, j = ij
        d1, d2 = dd
        return dst(f.backward(i, d1), g.backward(j, d2))

    effect = DETERMINISTIC if (f.effect, g.effect) == (DETERMINISTIC,) * 2 else STOCHASTIC
    return PolyMap(source, target, forward, backward, effect)


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class Section:
    of: Polynomial
    assign: Callable  # position -> direction at that position


def section(p: Polynomial, assign: Callable) -> Section:
    return Section(p, assign)


def constant_section(p: Polynomial, d) -> Section:
    return Section(p, lambda i: d)


def trivial_section(p: Polynomial) -> Section:
    """The unique section when every direction space is the unit (e.g. Ay, y)."""
    return Section(p, lambda i: check_point(p.dirs_at(i), ()))


def all_sections(p: Polynomial) -> list:
    """Every section of a finite interface, enumerated deterministically.

    A section picks one direction per position, so this is the product of the
    direction fibres -- only possible when positions and fibres are finite."""
    if not is_finite(p.positions):
        raise PolyError("cannot enumerate sections over infinite positions")
    pos = list(points(p.positions))
    fibres = []
    for i in pos:
        f = p.dirs_at(i)
        if not is_finite(f):
            raise PolyError(f"direction space at {i!r} is not finite")
        fibres.append(list(points(f)))
    out = []
    for combo in itertools.product(*fibres):
        table = dict(zip(pos, combo))
        out.append(Section(p, table.__getitem__))
    return out


def check_section(p: Polynomial, sigma: Section) -> None:
    """Typecheck a section at every position (finite positions only)."""
    if sigma.of != p:
        raise PolyError("section belongs to a different interface")
    for i in points(p.positions):
        check_point(p.dirs_at(i), sigma.assign(i))


def dirac_point(d: Dist):
    """Extract the payload of a deterministic distribution."""
    if isinstance(d, Dirac):
        return d.point
    if isinstance(d, Categorical) and len(d.items) == 1:
        return d.items[0][0]
    raise DistError(f"expected a point mass, got {d!r}")


def pull_section(phi: PolyMap, tau: Section) -> Section:
    """Transport a section of the target back along a deterministic lens:
    the source position i receives phi's backward answer to tau's choice at
    forward(i)."""
    if tau.of != phi.target:
        raise PolyError("section is not a section of the lens target")
    if phi.effect != DETERMINISTIC:
        raise PolyError("pull_section needs a deterministic lens")

    def assign(i):
        return dirac_point(phi.backward(i, tau.assign(phi.forward(i))))

    return Section(phi.source, assign)


# ---------------------------------------------------------------------------
# comparison and canonical encodings (finite interfaces)


def maps_agree(f: PolyMap, g: PolyMap, tol: float = 0.0) -> bool:
    """Extensional equality of two lenses with the same finite shape."""
    if f.source != g.source or f.target != g.target:
        return False
    from .dist import dist_distance

    for i in points(f.source.positions):
        if f.forward(i) != g.forward(i):
            return False
        fibre = f.target.dirs_at(f.forward(i))
        for d in points(fibre):
            if dist_distance(f.backward(i, d), g.backward(i, d)) > tol:
                return False
    return True


def dist_key(d: Dist):
    if isinstance(d, Dirac):
        return ("dirac", d.point)
    if isinstance(d, Categorical):
        return ("cat", tuple(sorted(d.items, key=lambda it: repr(it[0]))))
    return ("gauss", d.mean, d.cov)


def polymap_key(f: PolyMap, normalized: bool = True):
    """Canonical hashable encoding of a finite lens: its full forward and
    backward tables.  With ``normalized`` the position and direction values
    are normalized first, so lenses that differ only by unit factors or by
    product re-association get the same key."""
    if not is_finite(f.source.positions):
        raise PolyError("polymap_key needs a finite position space")
    rows = []
    for i in points(f.source.positions):
        fwd = f.forward(i)
        fibre_out = f.target.dirs_at(fwd)
        fibre_in = f.source.dirs_at(i)
        if not (is_finite(fibre_out) and is_finite(fibre_in)):
            raise PolyError("polymap_key needs finite direction spaces")
        back = []
        for d in points(fibre_out):
            res = f.backward(i, d)
            if normalized:
                key_d = normalize_point(fibre_out, d)
                res_items = tuple(
                    sorted(
                        (
                            (normalize_point(fibre_in, a), w)
                            for a, w in _items_of(res)
                        ),
                        key=lambda it: repr(it[0]),
                    )
                )
                back.append((key_d, res_items))
            else:
                back.append((d, dist_key(res)))
        fwd_key = normalize_point(f.target.positions, fwd) if normalized else fwd
        i_key = normalize_point(f.source.positions, i) if normalized else i
        rows.append((i_key, fwd_key, tuple(back)))
    return tuple(rows)


def _items_of(d: Dist):
    from .dist import finite_items

    return finite_items(d)


# ---------------------------------------------------------------------------
# time


@dataclass(frozen=True)
class TimeMonoid:
    """Time values are non-negative integers: either bare ticks (``nat``) or
    exact multiples of a fixed real step h (``real``).  Keeping arithmetic on
    integers makes the monoid laws hold on the nose."""

    kind: str  # "nat" | "real"
    h: float = 1.0

    def __post_init__(self):
        if self.kind not in ("nat", "real"):
            raise PolyError(f"unknown time kind {self.kind!r}")
        if self.kind == "real" and not self.h > 0:
            raise PolyError("real time needs a positive step")

    def duration(self, t: int) -> float:
        return t * self.h if self.kind == "real" else float(t)

    def check(self, t) -> int:
        if not isinstance(t, int) or t < 0:
            raise PolyError(f"time must be a non-negative integer tick, got {t!r}")
        return t


def time_nat() -> TimeMonoid:
    return TimeMonoid("nat")


def time_real(h: float) -> TimeMonoid:
    return TimeMonoid("real", float(h))
