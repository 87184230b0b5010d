"""Computable spaces and their points.

A space is one of:

* ``UnitSpace``      -- the one-point space, written ``unit()``; its point is ``()``.
* ``FiniteSpace``    -- a finite enumeration of distinct hashable labels.
* ``EuclidSpace``    -- R^n with float64 coordinates; points are n-tuples of floats.
* ``ProdSpace``      -- an ordered product; points are tuples, one slot per factor.
* ``DistSpace``      -- the space of distributions over a base space (positions of
  hierarchical interfaces whose inputs are themselves distributions). In-memory
  only; it has no JSON form and no enumeration.

Products are never flattened silently.  ``normalize_space`` / ``normalize_point``
are the explicit normalization points: they splice nested products, drop unit
factors, and collapse empty products to the unit space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterator, Union


class SpaceError(ValueError):
    """A value failed membership in a space, or an operation needed structure
    (finiteness, enumerability) the space doesn't have."""


@dataclass(frozen=True)
class UnitSpace:
    def __repr__(self) -> str:
        return "unit()"


@dataclass(frozen=True)
class FiniteSpace:
    labels: tuple

    def __post_init__(self):
        as_set = frozenset(self.labels)
        if len(as_set) != len(self.labels):
            raise SpaceError(f"finite space labels must be distinct: {self.labels!r}")
        # cached for O(1) membership; not a field, so eq/hash see labels only
        object.__setattr__(self, "_label_set", as_set)

    def __repr__(self) -> str:
        return f"finite{list(self.labels)!r}"


@dataclass(frozen=True)
class EuclidSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 0:
            raise SpaceError("euclid dimension must be non-negative")

    def __repr__(self) -> str:
        return f"euclid({self.dim})"


@dataclass(frozen=True)
class ProdSpace:
    factors: tuple

    def __repr__(self) -> str:
        return f"prod{list(self.factors)!r}"


@dataclass(frozen=True)
class DistSpace:
    base: "Space"

    def __repr__(self) -> str:
        return f"dist_space({self.base!r})"


Space = Union[UnitSpace, FiniteSpace, EuclidSpace, ProdSpace, DistSpace]

_UNIT = UnitSpace()


def unit() -> UnitSpace:
    return _UNIT


def finite(*labels) -> FiniteSpace:
    """Finite space from labels; ``finite('a', 'b')`` or ``finite(*range(6))``."""
    if len(labels) == 1 and isinstance(labels[0], (list, tuple)):
        labels = tuple(labels[0])
    return FiniteSpace(tuple(labels))


def euclid(dim: int) -> EuclidSpace:
    return EuclidSpace(dim)


def prod(*factors) -> Space:
    """Ordered product space.  An empty product is the unit space."""
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        return _UNIT
    return ProdSpace(tuple(factors))


def dist_space(base: Space) -> DistSpace:
    return DistSpace(base)


# ---------------------------------------------------------------------------
# membership / enumeration


def contains(space: Space, value: Any) -> bool:
    """Membership test for a point value in a space."""
    if isinstance(space, UnitSpace):
        return value == ()
    if isinstance(space, FiniteSpace):
        try:
            return value in space._label_set
        except TypeError:
            return False
    if isinstance(space, EuclidSpace):
        return (
            isinstance(value, tuple)
            and len(value) == space.dim
            and all(isinstance(c, (int, float)) for c in value)
        )
    if isinstance(space, ProdSpace):
        return (
            isinstance(value, tuple)
            and len(value) == len(space.factors)
            and all(contains(f, v) for f, v in zip(space.factors, value))
        )
    if isinstance(space, DistSpace):
        # Dist values are duck-checked here to avoid a circular import; the
        # dist module re-validates on use.
        return hasattr(value, "space") and value.space == space.base
    raise SpaceError(f"not a space: {space!r}")


def check_point(space: Space, value: Any) -> Any:
    if not contains(space, value):
        raise SpaceError(f"{value!r} is not a point of {space!r}")
    return value


def is_finite(space: Space) -> bool:
    """True when the space can be exhaustively enumerated."""
    if isinstance(space, (UnitSpace, FiniteSpace)):
        return True
    if isinstance(space, ProdSpace):
        return all(is_finite(f) for f in space.factors)
    return False


def cardinality(space: Space) -> int:
    if isinstance(space, UnitSpace):
        return 1
    if isinstance(space, FiniteSpace):
        return len(space.labels)
    if isinstance(space, ProdSpace):
        n = 1
        for f in space.factors:
            n *= cardinality(f)
        return n
    raise SpaceError(f"cardinality undefined for {space!r}")


def points(space: Space) -> Iterator:
    """Deterministic enumeration of a finite space's points."""
    if isinstance(space, UnitSpace):
        yield ()
    elif isinstance(space, FiniteSpace):
        yield from space.labels
    elif isinstance(space, ProdSpace):
        yield from itertools.product(*(points(f) for f in space.factors))
    else:
        raise SpaceError(f"cannot enumerate {space!r}")


# ---------------------------------------------------------------------------
# normalization

def normalize_space(space: Space) -> Space:
    """Flatten nested products, drop unit factors, unwrap singleton products."""
    parts = _norm_factors(space)
    if not parts:
        return _UNIT
    if len(parts) == 1:
        return parts[0]
    return ProdSpace(tuple(parts))


def _norm_factors(space: Space) -> list:
    if isinstance(space, UnitSpace):
        return []
    if isinstance(space, ProdSpace):
        out: list = []
        for f in space.factors:
            out.extend(_norm_factors(f))
        return out
    return [space]


def _norm_arity(space: Space) -> int:
    """How many slots the space contributes to its normalized form."""
    return len(_norm_factors(space))


def normalize_point(space: Space, value: Any) -> Any:
    """Rewrite a point of ``space`` as a point of ``normalize_space(space)``."""
    parts = _norm_parts(space, value)
    if not parts:
        return ()
    if len(parts) == 1:
        return parts[0]
    return tuple(parts)


def _norm_parts(space: Space, value: Any) -> list:
    if isinstance(space, UnitSpace):
        return []
    if isinstance(space, ProdSpace):
        out: list = []
        for f, v in zip(space.factors, value):
            out.extend(_norm_parts(f, v))
        return out
    return [value]


def expand_point(space: Space, norm_value: Any) -> Any:
    """Inverse of normalize_point: rebuild the structured point of ``space``."""
    n = _norm_arity(space)
    if n == 0:
        slots: tuple = ()
    elif n == 1:
        slots = (norm_value,)
    else:
        slots = tuple(norm_value)
    built, used = _expand(space, slots, 0)
    if used != len(slots):
        raise SpaceError(f"normalized value has wrong arity for {space!r}")
    return built


def _expand(space: Space, slots: tuple, k: int):
    if isinstance(space, UnitSpace):
        return (), k
    if isinstance(space, ProdSpace):
        vals = []
        for f in space.factors:
            v, k = _expand(f, slots, k)
            vals.append(v)
        return tuple(vals), k
    return slots[k], k + 1


def point_distance(space: Space, a: Any, b: Any) -> float:
    """Sup-norm distance between two points.  Mismatched labels give +inf."""
    if isinstance(space, EuclidSpace):
        return max((abs(x - y) for x, y in zip(a, b)), default=0.0)
    if isinstance(space, ProdSpace):
        return max(
            (point_distance(f, x, y) for f, x, y in zip(space.factors, a, b)),
            default=0.0,
        )
    return 0.0 if a == b else float("inf")


def euclid_dims(space: Space) -> int:
    """Total real dimension of a space built from Euclid/Prod/Unit parts."""
    if isinstance(space, EuclidSpace):
        return space.dim
    if isinstance(space, UnitSpace):
        return 0
    if isinstance(space, ProdSpace):
        return sum(euclid_dims(f) for f in space.factors)
    raise SpaceError(f"{space!r} is not a Euclidean-shaped space")


def flatten_floats(space: Space, value: Any) -> list:
    """Flatten a point of a Euclidean-shaped space into a list of floats."""
    if isinstance(space, EuclidSpace):
        return [float(c) for c in value]
    if isinstance(space, UnitSpace):
        return []
    if isinstance(space, ProdSpace):
        out: list = []
        for f, v in zip(space.factors, value):
            out.extend(flatten_floats(f, v))
        return out
    raise SpaceError(f"{space!r} is not a Euclidean-shaped space")


def unflatten_floats(space: Space, flat) -> Any:
    built, used = _unflatten(space, list(flat), 0)
    if used != len(flat):
        raise SpaceError(f"wrong dimension for {space!r}")
    return built


def _unflatten(space: Space, flat: list, k: int):
    if isinstance(space, EuclidSpace):
        return tuple(float(c) for c in flat[k : k + space.dim]), k + space.dim
    if isinstance(space, UnitSpace):
        return (), k
    if isinstance(space, ProdSpace):
        vals = []
        for f in space.factors:
            v, k = _unflatten(f, flat, k)
            vals.append(v)
        return tuple(vals), k
    raise SpaceError(f"{space!r} is not a Euclidean-shaped space")


# ---------------------------------------------------------------------------
# JSON schema: {"kind":"unit"} | {"kind":"finite","labels":[...]}
#            | {"kind":"euclid","dim":n} | {"kind":"prod","factors":[...]}

def space_to_json(space: Space) -> dict:
    if isinstance(space, UnitSpace):
        return {"kind": "unit"}
    if isinstance(space, FiniteSpace):
        for lab in space.labels:
            if not isinstance(lab, (str, int)):
                raise SpaceError(f"label {lab!r} is not JSON-serializable")
        return {"kind": "finite", "labels": list(space.labels)}
    if isinstance(space, EuclidSpace):
        return {"kind": "euclid", "dim": space.dim}
    if isinstance(space, ProdSpace):
        return {"kind": "prod", "factors": [space_to_json(f) for f in space.factors]}
    raise SpaceError(f"{space!r} has no JSON form")


def space_from_json(obj: dict) -> Space:
    kind = obj.get("kind")
    if kind == "unit":
        return _UNIT
    if kind == "finite":
        return FiniteSpace(tuple(obj["labels"]))
    if kind == "euclid":
        return EuclidSpace(int(obj["dim"]))
    if kind == "prod":
        return prod(*[space_from_json(f) for f in obj["factors"]])
    raise SpaceError(f"unknown space kind: {kind!r}")


def point_to_json(space: Space, value: Any):
    if isinstance(space, (UnitSpace, ProdSpace)):
        if isinstance(space, UnitSpace):
            return []
        return [point_to_json(f, v) for f, v in zip(space.factors, value)]
    if isinstance(space, EuclidSpace):
        return [float(c) for c in value]
    return value  # finite label


def point_from_json(space: Space, obj: Any) -> Any:
    if isinstance(space, UnitSpace):
        return ()
    if isinstance(space, ProdSpace):
        return tuple(point_from_json(f, v) for f, v in zip(space.factors, obj))
    if isinstance(space, EuclidSpace):
        return tuple(float(c) for c in obj)
    return check_point(space, obj)
