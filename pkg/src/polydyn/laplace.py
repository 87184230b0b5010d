"""Gaussian predictive processing as hierarchical open systems.

A level is a Gaussian channel: a differentiable mean map with a state-dependent
PSD covariance.  Against a Gaussian prior, a channel and an observation induce
an energy (joint negative log-density); the level keeps a running point
estimate of its latent, descends the energy gradient, and sets its covariance
to the inverse Gauss-Newton Hessian at the new mean.  The free energy of the
resulting Gaussian belief is the energy at the mean minus the belief entropy;
a second-order correction term makes it agree with the exact expected energy
for quadratic models.

``build_laplace`` packages one level as a bidirectional hierarchical system:
the forward input is a Gaussian prior over the latent, the forward output a
point prediction of the observation, the backward input the observed datum,
and the backward output the current latent estimate (which the level below
treats as *its* datum).  ``stack`` chains levels with ``hibi_compose``; each
level hands the next one a calibrated predictive prior instead of a point
mass, via ``forward_lift``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dist import Dirac, Dist, Gaussian, dirac, dst, gaussian
from .hier import HierSystem, hibi_compose
from .poly import DETERMINISTIC, STOCHASTIC, PolyMap, monomial, time_nat
from .spaces import (
    dist_space,
    euclid,
    euclid_dims,
    flatten_floats,
    prod,
    unflatten_floats,
)


class LaplaceError(ValueError):
    """Dimension mismatch or numerically unusable covariance/Hessian."""


_COND_LIMIT = 1e12


def _solve_psd(name: str, sigma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise LaplaceError(
            f"{name} covariance is numerically singular (condition number {cond:.3e})"
        )
    return np.linalg.solve(sigma, rhs)


def _logdet_psd(name: str, sigma: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0 or not np.isfinite(logdet):
        raise LaplaceError(f"{name} covariance has non-positive determinant")
    return float(logdet)


@dataclass(frozen=True)
class GaussianChannel:
    """A channel x |-> N(mean(x), cov(x)) with an analytic Jacobian of the
    mean map.  ``jacobian=None`` switches the Hessian machinery to finite
    differences."""

    in_dim: int
    out_dim: int
    mean: Callable  # ndarray (in_dim,) -> ndarray (out_dim,)
    jacobian: Optional[Callable]  # ndarray (in_dim,) -> ndarray (out_dim, in_dim)
    cov: Callable  # ndarray (in_dim,) -> ndarray (out_dim, out_dim)


def linear_channel(matrix, offset=None, cov=None) -> GaussianChannel:
    """Channel with affine mean Ax + b and constant covariance."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    out_dim, in_dim = a.shape
    b = np.zeros(out_dim) if offset is None else np.asarray(offset, dtype=float).reshape(-1)
    s = np.eye(out_dim) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
    if b.shape != (out_dim,) or s.shape != (out_dim, out_dim):
        raise LaplaceError("offset/cov dimensions do not match the matrix")
    return GaussianChannel(
        in_dim,
        out_dim,
        mean=lambda x: a @ np.asarray(x, dtype=float) + b,
        jacobian=lambda x: a,
        cov=lambda x: s,
    )


@dataclass(frozen=True)
class GaussianState:
    """A Gaussian belief, stored as plain tuples so states stay hashable."""

    mean: tuple
    cov: tuple  # tuple of row tuples

    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)


def mk_state(mean, cov) -> GaussianState:
    m = np.asarray(mean, dtype=float).reshape(-1)
    c = np.atleast_2d(np.asarray(cov, dtype=float))
    if c.shape != (m.size, m.size):
        raise LaplaceError(f"covariance shape {c.shape} does not fit mean of size {m.size}")
    if np.max(np.abs(c - c.T), initial=0.0) > 1e-9:
        raise LaplaceError("covariance is not symmetric")
    if m.size and float(np.min(np.linalg.eigvalsh((c + c.T) / 2.0))) < -1e-10:
        raise LaplaceError("covariance is not PSD")
    return GaussianState(tuple(float(v) for v in m), tuple(tuple(float(v) for v in r) for r in c))


def state_dist(state: GaussianState) -> Gaussian:
    return gaussian(euclid(len(state.mean)), state.mean_array(), state.cov_array())


def as_state(d: Dist) -> GaussianState:
    """Read a distribution arriving on a forward wire as a Gaussian belief.
    Point masses become zero-covariance beliefs (and will be rejected later
    if a positive-definite prior is actually required)."""
    if isinstance(d, Gaussian):
        return GaussianState(d.mean, d.cov)
    if isinstance(d, Dirac):
        flat = np.asarray(
            flatten_floats(d.space, d.point) if not isinstance(d.point, float) else (d.point,),
            dtype=float,
        )
        return mk_state(flat, np.zeros((flat.size, flat.size)))
    if isinstance(d, GaussianState):
        return d
    raise LaplaceError(f"expected a Gaussian belief on the forward wire, got {d!r}")


@dataclass(frozen=True)
class EnergyTerms:
    eps_gamma: tuple  # observation residual y - mean(x)
    eps_pi: tuple  # prior residual x - prior mean
    eta_gamma: tuple  # precision-weighted observation residual
    eta_pi: tuple  # precision-weighted prior residual


@dataclass(frozen=True)
class LaplaceConfig:
    """Gradient-descent schedule: step size, iteration budget, stop tol."""

    rate: float = 0.05  # the learning rate (lambda); 0 freezes the mean
    iterations: int = 10000
    tolerance: float = 1e-8

    def __post_init__(self):
        if not self.rate >= 0:
            raise LaplaceError("learning rate must be non-negative")


def _check_dims(pi: GaussianState, gamma: GaussianChannel, x, y):
    xv = np.asarray(x, dtype=float).reshape(-1)
    yv = np.asarray(y, dtype=float).reshape(-1)
    if xv.size != gamma.in_dim or yv.size != gamma.out_dim:
        raise LaplaceError(
            f"point dims ({xv.size}, {yv.size}) do not match channel "
            f"({gamma.in_dim} -> {gamma.out_dim})"
        )
    if len(pi.mean) != gamma.in_dim:
        raise LaplaceError("prior dimension does not match the channel input")
    return xv, yv


def energy_terms(pi: GaussianState, gamma: GaussianChannel, x, y) -> EnergyTerms:
    xv, yv = _check_dims(pi, gamma, x, y)
    eps_g = yv - gamma.mean(xv)
    eps_p = xv - pi.mean_array()
    eta_g = _solve_psd("channel", np.atleast_2d(gamma.cov(xv)), eps_g)
    eta_p = _solve_psd("prior", pi.cov_array(), eps_p)
    return EnergyTerms(tuple(eps_g), tuple(eps_p), tuple(eta_g), tuple(eta_p))


def energy(pi: GaussianState, gamma: GaussianChannel, x, y) -> float:
    """Joint surprisal -log p(y|x) - log p(x) for Gaussian channel and prior."""
    xv, yv = _check_dims(pi, gamma, x, y)
    terms = energy_terms(pi, gamma, xv, yv)
    sig_g = np.atleast_2d(gamma.cov(xv))
    quad = 0.5 * float(np.dot(terms.eps_gamma, terms.eta_gamma)) + 0.5 * float(
        np.dot(terms.eps_pi, terms.eta_pi)
    )
    norm = 0.5 * (
        gamma.out_dim * math.log(2.0 * math.pi)
        + _logdet_psd("channel", sig_g)
        + gamma.in_dim * math.log(2.0 * math.pi)
        + _logdet_psd("prior", pi.cov_array())
    )
    return quad + norm


def grad_energy(pi: GaussianState, gamma: GaussianChannel, x, y) -> np.ndarray:
    """Energy gradient in the latent, with the channel covariance treated as
    locally constant: -J(x)^T eta_gamma + eta_pi."""
    xv, yv = _check_dims(pi, gamma, x, y)
    terms = energy_terms(pi, gamma, xv, yv)
    if gamma.jacobian is not None:
        jac = np.atleast_2d(gamma.jacobian(xv))
    else:
        jac = _fd_jacobian(gamma.mean, xv, gamma.out_dim)
    return -jac.T @ np.asarray(terms.eta_gamma) + np.asarray(terms.eta_pi)


def _fd_jacobian(f: Callable, x: np.ndarray, out_dim: int, h: float = 1e-6) -> np.ndarray:
    jac = np.zeros((out_dim, x.size))
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = h
        jac[:, k] = (np.asarray(f(x + dx)) - np.asarray(f(x - dx))) / (2.0 * h)
    return jac


def hessian_energy(pi: GaussianState, gamma: GaussianChannel, x, y) -> np.ndarray:
    """Gauss-Newton curvature J^T Sigma_gamma^{-1} J + Sigma_pi^{-1}; falls
    back to central differences of the gradient when no Jacobian is given."""
    xv, yv = _check_dims(pi, gamma, x, y)
    if gamma.jacobian is not None:
        jac = np.atleast_2d(gamma.jacobian(xv))
        sig_g = np.atleast_2d(gamma.cov(xv))
        return jac.T @ _solve_psd("channel", sig_g, jac) + np.linalg.inv(pi.cov_array())
    h = 1e-5
    hess = np.zeros((xv.size, xv.size))
    for k in range(xv.size):
        dx = np.zeros_like(xv)
        dx[k] = h
        hess[:, k] = (
            grad_energy(pi, gamma, xv + dx, yv) - grad_energy(pi, gamma, xv - dx, yv)
        ) / (2.0 * h)
    return (hess + hess.T) / 2.0


def sigma_star(pi: GaussianState, gamma: GaussianChannel, mu_rho, y) -> np.ndarray:
    """Optimal belief covariance: the inverse energy curvature at the mean."""
    hess = hessian_energy(pi, gamma, mu_rho, y)
    cond = np.linalg.cond(hess)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise LaplaceError(
            f"energy Hessian is numerically singular (condition number {cond:.3e})"
        )
    return np.linalg.inv(hess)


def gaussian_entropy(state: GaussianState) -> float:
    n = len(state.mean)
    return 0.5 * (
        n * math.log(2.0 * math.pi * math.e) + _logdet_psd("belief", state.cov_array())
    )


def free_energy_laplace(
    pi: GaussianState, gamma: GaussianChannel, rho_state: GaussianState, y
) -> float:
    """Free energy of a Gaussian belief, Laplace form: energy at the belief
    mean minus the belief entropy."""
    return energy(pi, gamma, rho_state.mean_array(), y) - gaussian_entropy(rho_state)


def free_energy_second_order(
    pi: GaussianState, gamma: GaussianChannel, rho_state: GaussianState, y
) -> float:
    """Free energy with the second-order expected-energy correction
    (1/2) tr(H Sigma_rho); exact for linear channels, where the energy is
    quadratic in the latent."""
    hess = hessian_energy(pi, gamma, rho_state.mean_array(), y)
    return free_energy_laplace(pi, gamma, rho_state, y) + 0.5 * float(
        np.trace(hess @ rho_state.cov_array())
    )


def rho_update(
    x, pi: GaussianState, y, gamma: GaussianChannel, cfg: LaplaceConfig
) -> GaussianState:
    """One belief update: step the mean down the energy gradient, then set the
    covariance to the optimal one at the new mean."""
    xv, yv = _check_dims(pi, gamma, x, y)
    new_mean = xv - cfg.rate * grad_energy(pi, gamma, xv, yv)
    return mk_state(new_mean, sigma_star(pi, gamma, new_mean, yv))


def descend(
    x0, pi: GaussianState, y, gamma: GaussianChannel, cfg: LaplaceConfig
) -> GaussianState:
    """Iterate rho_update until the mean moves less than the tolerance."""
    state = mk_state(np.asarray(x0, dtype=float), pi.cov_array())
    for _ in range(cfg.iterations):
        new = rho_update(state.mean_array(), pi, y, gamma, cfg)
        if float(np.max(np.abs(new.mean_array() - state.mean_array()), initial=0.0)) <= cfg.tolerance:
            return new
        state = new
    return state


# ---------------------------------------------------------------------------
# one level as a hierarchical system, and stacks of levels


def build_laplace(gamma: GaussianChannel, cfg: LaplaceConfig) -> HierSystem:
    """One predictive level as a bidirectional system.

    State: (latent estimate x, current prediction y).  The emitted lens shows
    the prediction forward and passes the latent estimate backward; the update
    runs one gradient/covariance step against the prior arriving on the
    forward wire and the datum arriving on the backward wire, then redraws the
    state pair from the new belief and its pushforward prediction (drawn
    independently)."""
    X = euclid(gamma.in_dim)
    Y = euclid(gamma.out_dim)
    source = monomial(dist_space(X), X)
    target = monomial(Y, Y)
    states = prod(X, Y)

    def emit(t, xy):
        x, ypred = xy

        def backward(pi_in, datum):
            return dirac(X, x)

        return PolyMap(source, target, lambda pi_in: ypred, backward, DETERMINISTIC)

    def predict(rho: GaussianState) -> Gaussian:
        mu = rho.mean_array()
        if gamma.jacobian is not None:
            jac = np.atleast_2d(gamma.jacobian(mu))
        else:
            jac = _fd_jacobian(gamma.mean, mu, gamma.out_dim)
        cov = jac @ rho.cov_array() @ jac.T + np.atleast_2d(gamma.cov(mu))
        return gaussian(Y, gamma.mean(mu), cov)

    def absorb(t, xy, pi_in, datum):
        x, _ = xy
        rho = rho_update(np.asarray(x, dtype=float), as_state(pi_in), datum, gamma, cfg)
        return dst(state_dist(rho), predict(rho))

    def forward_lift(t, xy, b):
        x = np.asarray(xy[0], dtype=float)
        return gaussian(Y, gamma.mean(x), np.atleast_2d(gamma.cov(x)))

    return HierSystem(
        source, target, states, time_nat(), emit, absorb, STOCHASTIC, forward_lift, None
    )


def stack(levels, cfg: LaplaceConfig) -> HierSystem:
    """Chain predictive levels bottom-to-top; each level's channel pushes a
    calibrated prior up to the next."""
    if not levels:
        raise LaplaceError("a stack needs at least one level")
    for low, high in zip(levels, levels[1:]):
        if low.out_dim != high.in_dim:
            raise LaplaceError(
                f"adjacent levels disagree: {low.out_dim} -> {high.in_dim}"
            )
    systems = [build_laplace(ch, cfg) for ch in levels]
    out = systems[0]
    for hs in systems[1:]:
        out = hibi_compose(out, hs)
    return out


def mean_path(hs: HierSystem, pi0: Dist, datum, steps: int):
    """Deterministic skeleton of a (stacked) level system: iterate the state
    update from the zero state, replacing each stochastic state draw by its
    mean.  Exact for the mean dynamics of linear channels.  Returns the list
    of flattened state vectors, one per step, starting with the initial."""
    datum = tuple(np.asarray(datum, dtype=float).reshape(-1))
    point = unflatten_floats(hs.states, (0.0,) * euclid_dims(hs.states))
    path = [tuple(flatten_floats(hs.states, point))]
    for t in range(steps):
        law = hs.absorb(t, point, pi0, datum)
        if not isinstance(law, Gaussian):
            raise LaplaceError("state update did not produce a Gaussian law")
        point = unflatten_floats(hs.states, law.mean)
        path.append(law.mean)
    return path


def run_stack(levels, cfg: LaplaceConfig, pi0: GaussianState, datum, steps: int):
    """Reference runner for a predictive hierarchy, level by level.

    Keeps one latent estimate per level; at each step every level updates
    simultaneously against the prior pushed up from below (the raw prior for
    the bottom level) and the datum passed down from above (the clamped datum
    for the top level).  Produces one record per (step, level) with the new
    mean and the level's free energy.  Agrees with the mean dynamics of
    ``stack`` under ``mean_path``."""
    datum_v = np.asarray(datum, dtype=float).reshape(-1)
    if datum_v.size != levels[-1].out_dim:
        raise LaplaceError("datum dimension does not match the top level")
    if len(pi0.mean) != levels[0].in_dim:
        raise LaplaceError("prior dimension does not match the bottom level")
    means = [np.zeros(ch.in_dim) for ch in levels]
    rows = []
    for step in range(1, steps + 1):
        priors = [pi0]
        for ch, mu in zip(levels[:-1], means[:-1]):
            priors.append(mk_state(ch.mean(mu), np.atleast_2d(ch.cov(mu))))
        data_down = [
            np.asarray(mu, dtype=float) for mu in means[1:]
        ] + [datum_v]
        new_means = []
        for k, ch in enumerate(levels):
            rho = rho_update(means[k], priors[k], data_down[k], ch, cfg)
            fl = free_energy_laplace(priors[k], ch, rho, data_down[k])
            rows.append((step, k, rho.mean, fl))
            new_means.append(rho.mean_array())
        means = new_means
    return rows
