"""Probability distributions with two exact regimes and a sampling fallback.

``Dist`` is one of three kinds:

* ``Dirac``       -- a point mass on any space (the monad unit).
* ``Categorical`` -- finite support with explicit weights; exact arithmetic.
* ``Gaussian``    -- a normal law over a Euclidean-shaped space (``euclid`` or a
  product of them); exact under affine maps and affine-Gaussian kernels.

Everything outside those regimes (a nonlinear map of a Gaussian, a continuous
mixture) is rejected with an error pointing at ``sample``, the Monte-Carlo
escape hatch.  Randomness is explicit: ``Rng`` is an immutable splittable seed,
never a hidden global.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Union

import numpy as np

from .spaces import (
    Space,
    check_point,
    contains,
    euclid,
    euclid_dims,
    flatten_floats,
    is_finite,
    points,
    prod,
    unflatten_floats,
)

WEIGHT_TOL = 1e-12
PSD_TOL = 1e-10


class DistError(ValueError):
    """Invalid distribution, or an operation outside the exact regimes."""


# ---------------------------------------------------------------------------
# Rng


@dataclass(frozen=True)
class Rng:
    """Splittable counter-based random source (Philox under the hood).

    An ``Rng`` is a pure value: the same seed and path always produce the same
    stream.  ``child(i)`` derives an independent stream, so concurrent
    trajectories can split seeds deterministically instead of sharing state.
    """

    seed: int
    path: tuple = ()

    def child(self, i: int) -> "Rng":
        return Rng(self.seed, self.path + (int(i),))

    def split(self, n: int) -> tuple:
        return tuple(self.child(i) for i in range(n))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# Dist kinds


@dataclass(frozen=True)
class Dirac:
    space: Space
    point: Any

    def __repr__(self) -> str:
        return f"dirac({self.point!r})"


@dataclass(frozen=True)
class Categorical:
    space: Space
    items: tuple  # ((atom, weight), ...) zero weights pruned, atoms distinct

    def __repr__(self) -> str:
        inner = ", ".join(f"{a!r}: {w:.6g}" for a, w in self.items)
        return f"categorical({{{inner}}})"


@dataclass(frozen=True)
class Gaussian:
    space: Space  # Euclidean-shaped: euclid(n) or a product of such
    mean: tuple  # flat, length = euclid_dims(space)
    cov: tuple  # flat row-major tuple of tuples, same order as mean

    def __repr__(self) -> str:
        return f"gaussian(mean={list(self.mean)}, cov={[list(r) for r in self.cov]})"


Dist = Union[Dirac, Categorical, Gaussian]


def dirac(space: Space, point: Any) -> Dirac:
    return Dirac(space, check_point(space, point))


def categorical(space: Space, weights) -> Dist:
    """Finite-support distribution from a dict or (atom, weight) pairs.

    Zero-weight atoms are pruned, duplicate atoms merged; weights must be
    non-negative and sum to 1 within 1e-12.  Euclid-valued atoms compare by
    exact bit equality -- merging nearby continuous atoms is the caller's job.
    """
    pairs = weights.items() if isinstance(weights, dict) else weights
    merged: dict = {}
    for atom, w in pairs:
        w = float(w)
        if w < -WEIGHT_TOL:
            raise DistError(f"negative weight {w} on atom {atom!r}")
        check_point(space, atom)
        merged[atom] = merged.get(atom, 0.0) + w
    total = math.fsum(merged.values())
    if abs(total - 1.0) > WEIGHT_TOL:
        raise DistError(f"weights sum to {total!r}, expected 1 within {WEIGHT_TOL}")
    items = tuple((a, w) for a, w in merged.items() if w != 0.0)
    if len(items) == 1 and items[0][1] == 1.0:
        return Dirac(space, items[0][0])
    return Categorical(space, items)


def uniform(space: Space) -> Dist:
    atoms = list(points(space))
    return categorical(space, [(a, 1.0 / len(atoms)) for a in atoms])


def gaussian(space: Space, mean, cov) -> Gaussian:
    n = euclid_dims(space)
    mu = np.asarray(mean, dtype=float).reshape(n)
    sig = np.asarray(cov, dtype=float).reshape(n, n)
    if n > 0:
        if not np.allclose(sig, sig.T, atol=1e-9, rtol=0.0):
            raise DistError("covariance is not symmetric")
        sig = 0.5 * (sig + sig.T)
        if np.linalg.eigvalsh(sig).min() < -PSD_TOL:
            raise DistError("covariance is not positive semi-definite")
    return Gaussian(space, tuple(mu.tolist()), tuple(map(tuple, sig.tolist())))


def gaussian1(mean: float, var: float) -> Gaussian:
    """Scalar normal over euclid(1); a convenience for tests and demos."""
    return gaussian(euclid(1), [mean], [[var]])


def mean_array(d: Gaussian) -> np.ndarray:
    return np.asarray(d.mean, dtype=float)


def cov_array(d: Gaussian) -> np.ndarray:
    n = len(d.mean)
    return np.asarray(d.cov, dtype=float).reshape(n, n)


def finite_items(d: Dist) -> tuple:
    """Support/weight pairs of a finite-support distribution."""
    if isinstance(d, Dirac):
        return ((d.point, 1.0),)
    if isinstance(d, Categorical):
        return d.items
    raise DistError(f"{d!r} does not have finite support")


def prob(d: Dist, atom: Any) -> float:
    for a, w in finite_items(d):
        if a == atom:
            return w
    return 0.0


# ---------------------------------------------------------------------------
# Affine machinery for the Gaussian regime


@dataclass(frozen=True)
class AffineMap:
    """x |-> Ax + b on flat float vectors; the deterministic affine functions
    under which Gaussian pushforwards stay exact."""

    matrix: tuple  # rows, shape (out_dim, in_dim)
    offset: tuple  # length out_dim

    @staticmethod
    def of(matrix, offset=None) -> "AffineMap":
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        b = np.zeros(a.shape[0]) if offset is None else np.asarray(offset, dtype=float)
        return AffineMap(tuple(map(tuple, a.tolist())), tuple(b.tolist()))

    @staticmethod
    def identity(dim: int) -> "AffineMap":
        return AffineMap.of(np.eye(dim))

    @property
    def in_dim(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    @property
    def out_dim(self) -> int:
        return len(self.offset)

    def arrays(self):
        a = np.asarray(self.matrix, dtype=float).reshape(self.out_dim, self.in_dim)
        return a, np.asarray(self.offset, dtype=float)

    def __call__(self, x) -> tuple:
        a, b = self.arrays()
        return tuple((a @ np.asarray(x, dtype=float) + b).tolist())

    def then(self, other: "AffineMap") -> "AffineMap":
        a1, b1 = self.arrays()
        a2, b2 = other.arrays()
        return AffineMap.of(a2 @ a1, a2 @ b1 + b2)


@dataclass(frozen=True)
class GaussianKernel:
    """Stochastic affine kernel x |-> N(Ax + b, Sigma); closed under Kleisli
    composition, which is what keeps Gaussian chains exact."""

    matrix: tuple
    offset: tuple
    cov: tuple
    target: Space = None  # defaults to euclid(out_dim)
    source: Space = None  # set when inputs are structured points, not vectors

    @staticmethod
    def of(
        matrix, offset=None, cov=None, target: Space = None, source: Space = None
    ) -> "GaussianKernel":
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        m = a.shape[0]
        b = np.zeros(m) if offset is None else np.asarray(offset, dtype=float)
        s = np.zeros((m, m)) if cov is None else np.asarray(cov, dtype=float).reshape(m, m)
        return GaussianKernel(
            tuple(map(tuple, a.tolist())),
            tuple(b.tolist()),
            tuple(map(tuple, s.tolist())),
            target,
            source,
        )

    @property
    def in_dim(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    @property
    def out_dim(self) -> int:
        return len(self.offset)

    def arrays(self):
        m, n = self.out_dim, self.in_dim
        return (
            np.asarray(self.matrix, dtype=float).reshape(m, n),
            np.asarray(self.offset, dtype=float),
            np.asarray(self.cov, dtype=float).reshape(m, m),
        )

    def target_space(self) -> Space:
        return self.target if self.target is not None else euclid(self.out_dim)

    def __call__(self, x) -> Dist:
        a, b, s = self.arrays()
        if self.source is not None:
            flat = np.asarray(flatten_floats(self.source, x), dtype=float)
        else:
            flat = np.asarray(x, dtype=float).reshape(-1)
        return gaussian(self.target_space(), a @ flat + b, s)


# ---------------------------------------------------------------------------
# Monad operations


def pushforward(f, d: Dist, target: Space = None) -> Dist:
    """Image distribution of ``d`` under ``f``.

    ``f`` is a plain function for finite-support inputs, or an ``AffineMap``
    for Gaussians (mean -> A mu + b, cov -> A Sigma A^T).  A nonlinear function
    of a Gaussian has no exact image here; use ``sample`` instead.
    """
    if isinstance(d, (Dirac, Categorical)):
        pairs = [(f(a), w) for a, w in finite_items(d)]
        space = target if target is not None else _infer_space(d.space, pairs)
        if len(pairs) == 1:
            return dirac(space, pairs[0][0])
        return categorical(space, pairs)
    if isinstance(d, Gaussian):
        if not isinstance(f, AffineMap):
            raise DistError(
                "pushforward of a Gaussian needs an AffineMap; for nonlinear "
                "maps draw with sample() and transform the draws"
            )
        a, b = f.arrays()
        mu = a @ mean_array(d) + b
        sig = a @ cov_array(d) @ a.T
        space = target if target is not None else euclid(f.out_dim)
        return gaussian(space, mu, sig)
    raise DistError(f"not a distribution: {d!r}")


def _infer_space(source: Space, pairs) -> Space:
    if all(contains(source, a) for a, _ in pairs):
        return source
    raise DistError(
        "cannot infer the target space of this pushforward; pass target="
    )


def bind(d: Dist, k) -> Dist:
    """Monad bind: average the kernel ``k`` over ``d`` (exact regimes only)."""
    if isinstance(d, Dirac):
        out = k(d.point)
        if not isinstance(out, (Dirac, Categorical, Gaussian)):
            raise DistError(f"kernel returned a non-distribution: {out!r}")
        return out
    if isinstance(d, Categorical):
        outs = [k(atom) for atom, _ in d.items]
        if all(out is outs[0] for out in outs):
            # constant kernel: the mixture is the common output itself
            if not isinstance(outs[0], (Dirac, Categorical, Gaussian)):
                raise DistError(f"kernel returned a non-distribution: {outs[0]!r}")
            return outs[0]
        mixed: dict = {}
        space = None
        for (atom, w), out in zip(d.items, outs):
            if isinstance(out, Gaussian):
                raise DistError(
                    "mixture of Gaussians is not representable exactly; "
                    "use sample() for this composite"
                )
            for a2, w2 in finite_items(out):
                mixed[a2] = mixed.get(a2, 0.0) + w * w2
            space = out.space
        return categorical(space, mixed)
    if isinstance(d, Gaussian):
        if isinstance(k, GaussianKernel):
            a, b, s = k.arrays()
            mu = a @ mean_array(d) + b
            sig = a @ cov_array(d) @ a.T + s
            return gaussian(k.target_space(), mu, sig)
        if isinstance(k, AffineMap):
            return pushforward(k, d)
        raise DistError(
            "binding a Gaussian needs an affine-Gaussian kernel "
            "(GaussianKernel/AffineMap); otherwise use sample()"
        )
    raise DistError(f"not a distribution: {d!r}")


def kleisli_compose(k2, k1):
    """Composite kernel ``x -> bind(k1(x), k2)``, i.e. k2 after k1.

    When both kernels are affine-Gaussian the result is again a
    ``GaussianKernel`` (Chapman-Kolmogorov in closed form); otherwise it is a
    closure that mixes finite supports exactly.
    """
    if isinstance(k1, (GaussianKernel, AffineMap)) and isinstance(
        k2, (GaussianKernel, AffineMap)
    ):
        g1 = _as_kernel(k1)
        g2 = _as_kernel(k2)
        a1, b1, s1 = g1.arrays()
        a2, b2, s2 = g2.arrays()
        return GaussianKernel.of(
            a2 @ a1,
            a2 @ b1 + b2,
            a2 @ s1 @ a2.T + s2,
            target=g2.target,
            source=g1.source,
        )

    def composite(x):
        mid = k1(x) if isinstance(k1, GaussianKernel) else _as_dist(k1(x))
        return bind(mid, k2)

    return composite


def _as_kernel(k) -> GaussianKernel:
    if isinstance(k, GaussianKernel):
        return k
    return GaussianKernel.of(k.matrix, k.offset, None)


def _as_dist(v) -> Dist:
    if isinstance(v, (Dirac, Categorical, Gaussian)):
        return v
    raise DistError(f"kernel returned a non-distribution: {v!r}")


def kleisli_extend(k) -> Callable[[Dist], Dist]:
    """Lift a kernel X -> Dist Y to distributions: Dist X -> Dist Y."""

    def extended(d: Dist) -> Dist:
        return bind(d, k)

    return extended


def dst(d1: Dist, d2: Dist) -> Dist:
    """Independent product distribution over Prod(X, Y).

    Finite x finite multiplies weights; Gaussian x Gaussian stacks means with
    block-diagonal covariance.  A Dirac over a Euclidean-shaped space pairs
    with a Gaussian as a zero-covariance block.
    """
    space = prod(d1.space, d2.space)
    if isinstance(d1, Dirac) and isinstance(d2, Dirac):
        return Dirac(space, (d1.point, d2.point))
    finite1 = isinstance(d1, (Dirac, Categorical))
    finite2 = isinstance(d2, (Dirac, Categorical))
    if finite1 and finite2:
        pairs = [
            ((a1, a2), w1 * w2)
            for a1, w1 in finite_items(d1)
            for a2, w2 in finite_items(d2)
        ]
        return categorical(space, pairs)
    g1 = _as_gaussian(d1)
    g2 = _as_gaussian(d2)
    if g1 is None or g2 is None:
        raise DistError(
            "dst of a finite-support and a continuous factor is outside the "
            "exact regimes; use sample() on each factor"
        )
    n1, n2 = len(g1.mean), len(g2.mean)
    mu = np.concatenate([mean_array(g1), mean_array(g2)])
    sig = np.zeros((n1 + n2, n1 + n2))
    sig[:n1, :n1] = cov_array(g1)
    sig[n1:, n1:] = cov_array(g2)
    return gaussian(space, mu, sig)


def _as_gaussian(d: Dist):
    """Gaussian view of a Dist when one exists (Dirac over Euclid-shaped)."""
    if isinstance(d, Gaussian):
        return d
    if isinstance(d, Dirac):
        try:
            flat = flatten_floats(d.space, d.point)
        except Exception:
            return None
        n = len(flat)
        return Gaussian(
            d.space,
            tuple(float(c) for c in flat),
            tuple(tuple(0.0 for _ in range(n)) for _ in range(n)),
        )
    return None


def sample(d: Dist, rng: Rng) -> Any:
    """One draw from ``d``; deterministic given the Rng value."""
    if isinstance(d, Dirac):
        return d.point
    gen = rng.generator()
    if isinstance(d, Categorical):
        atoms = [a for a, _ in d.items]
        weights = np.asarray([w for _, w in d.items], dtype=float)
        weights = weights / weights.sum()
        return atoms[int(gen.choice(len(atoms), p=weights))]
    if isinstance(d, Gaussian):
        n = len(d.mean)
        if n == 0:
            return unflatten_floats(d.space, [])
        vals, vecs = np.linalg.eigh(cov_array(d))
        root = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))
        draw = mean_array(d) + root @ gen.standard_normal(n)
        return unflatten_floats(d.space, draw.tolist())
    raise DistError(f"not a distribution: {d!r}")


def sample_many(d: Dist, rng: Rng, n: int) -> list:
    return [sample(d, rng.child(i)) for i in range(n)]


# ---------------------------------------------------------------------------
# comparison


def dist_distance(d1: Dist, d2: Dist) -> float:
    """Sup-distance between two distributions of comparable kind.

    Finite supports compare atom-by-atom weights; Gaussians (and Diracs over
    Euclidean-shaped spaces) compare means and covariances entrywise.  A pair
    with no common reading is infinitely far apart.
    """
    f1 = isinstance(d1, (Dirac, Categorical))
    f2 = isinstance(d2, (Dirac, Categorical))
    if f1 and f2:
        support = {a for a, _ in finite_items(d1)} | {a for a, _ in finite_items(d2)}
        return max(abs(prob(d1, a) - prob(d2, a)) for a in support)
    g1 = _as_gaussian(d1)
    g2 = _as_gaussian(d2)
    if g1 is not None and g2 is not None and len(g1.mean) == len(g2.mean):
        dm = float(np.max(np.abs(mean_array(g1) - mean_array(g2)), initial=0.0))
        dc = float(np.max(np.abs(cov_array(g1) - cov_array(g2)), initial=0.0))
        return max(dm, dc)
    return float("inf")


def dist_equal(d1: Dist, d2: Dist, tol: float = 1e-9) -> bool:
    return dist_distance(d1, d2) <= tol


# ---------------------------------------------------------------------------
# JSON: {"dirac": point} | {"categorical": {label: weight}} | {"gaussian": ...}


def dist_to_json(d: Dist) -> dict:
    if isinstance(d, Dirac):
        return {"dirac": _atom_to_json(d.point)}
    if isinstance(d, Categorical):
        return {"categorical": {_atom_key(a): w for a, w in d.items}}
    if isinstance(d, Gaussian):
        return {
            "gaussian": {
                "mean": list(d.mean),
                "cov": [list(r) for r in d.cov],
            }
        }
    raise DistError(f"not a distribution: {d!r}")


def dist_from_json(space: Space, obj: dict) -> Dist:
    if "dirac" in obj:
        return dirac(space, _atom_from_json(space, obj["dirac"]))
    if "categorical" in obj:
        table = obj["categorical"]
        if not is_finite(space):
            raise DistError("categorical JSON needs a finite space")
        return categorical(
            space, [(_atom_from_key(space, key), w) for key, w in table.items()]
        )
    if "gaussian" in obj:
        g = obj["gaussian"]
        return gaussian(space, g["mean"], g["cov"])
    raise DistError(f"unknown distribution JSON: {obj!r}")


def _atom_to_json(atom):
    if isinstance(atom, tuple):
        return [_atom_to_json(a) for a in atom]
    return atom


def _atom_from_json(space: Space, obj):
    from .spaces import point_from_json

    return point_from_json(space, obj) if isinstance(obj, list) else obj


def _atom_key(atom) -> str:
    return atom if isinstance(atom, str) else json.dumps(_atom_to_json(atom))


def _atom_from_key(space: Space, key: str):
    if contains(space, key):
        return key
    try:
        decoded = json.loads(key)
    except json.JSONDecodeError:
        raise DistError(f"label {key!r} is not a point of {space!r}") from None
    return _tuplify(decoded)


def _tuplify(v):
    return tuple(_tuplify(x) for x in v) if isinstance(v, list) else v
