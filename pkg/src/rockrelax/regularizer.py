"""Closed forms for the negative regularizer and the smoothed constraint map."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .extreal import check_simplex
from .simplex import project_to_simplex, projection_threshold


@dataclass(frozen=True)
class RegularizerContext:
    """Weights, penalty strength, tilt, and the scenario cost map F."""

    p_nu: np.ndarray
    theta_nu: float
    y_nu: np.ndarray
    F: Callable[[np.ndarray], np.ndarray]
    dF: Optional[Callable[[np.ndarray], np.ndarray]] = None  # Jacobian, (s, n)

    def __post_init__(self):
        object.__setattr__(self, "p_nu", check_simplex(self.p_nu))
        object.__setattr__(self, "y_nu", np.atleast_1d(np.asarray(self.y_nu, dtype=float)))
        if self.theta_nu <= 0:
            raise ValueError("theta_nu must be positive")


@dataclass(frozen=True)
class RegularizerResult:
    value: float
    u_star: np.ndarray
    w_hat: np.ndarray
    q_star: np.ndarray
    active_set_stable: bool


def _costs(ctx: RegularizerContext, x) -> np.ndarray:
    fx = np.atleast_1d(np.asarray(ctx.F(np.atleast_1d(np.asarray(x, dtype=float))), dtype=float))
    if not np.all(np.isfinite(fx)):
        raise ValueError("scenario costs are not finite at this point")
    return fx


def negative_regularizer(ctx: RegularizerContext, x) -> RegularizerResult:
    """The nonnegative correction subtracted from the reweighted objective.

    With c = y - F(x), the maximizing perturbation is the simplex projection
    of p + c/theta shifted back, and the value is <c, u*> - (theta/2)|u*|^2.
    """
    fx = _costs(ctx, x)
    theta = ctx.theta_nu
    c = ctx.y_nu - fx
    z = ctx.p_nu + c / theta
    q = project_to_simplex(z)
    u = q - ctx.p_nu
    value = float(c @ u - 0.5 * theta * (u @ u))
    if value < -1e-9:
        raise ArithmeticError(f"regularizer value {value} below zero")
    value = max(value, 0.0)
    w_hat = c - theta * u
    tau = projection_threshold(z, q)
    margin = float(np.min(np.abs(z - tau))) if z.size else np.inf
    return RegularizerResult(value=value, u_star=u, w_hat=w_hat, q_star=q,
                             active_set_stable=margin > 1e-5)


def negative_regularizer_gradient(ctx: RegularizerContext, x) -> np.ndarray:
    """-(1/theta) dF(x)^T (y - F(x) - w_hat(x)), equal to -dF(x)^T u*.

    At points where the projection's active set is degenerate this is one
    subgradient; callers can consult ``active_set_stable`` on the result.
    """
    if ctx.dF is None:
        raise ValueError("Jacobian dF is required for the gradient")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    res = negative_regularizer(ctx, x)
    J = np.atleast_2d(np.asarray(ctx.dF(x), dtype=float))
    fx = _costs(ctx, x)
    g = -(1.0 / ctx.theta_nu) * J.T @ (ctx.y_nu - fx - res.w_hat)
    alt = -J.T @ res.u_star
    if np.max(np.abs(g - alt)) > 1e-10 * max(1.0, float(np.max(np.abs(alt)))):
        raise ArithmeticError("envelope identity violated in gradient")
    return g


def min_over_w_value(p_nu, theta: float, c) -> Tuple[float, np.ndarray]:
    """Independent oracle: min_w max_i w_i - <p, w> + (1/2 theta)|c - w|^2.

    Enumerates every candidate tie set of the max; the objective evaluated at
    each candidate upper-bounds the optimum, and the true tie set attains it.
    Intended for s <= ~12.
    """
    p = check_simplex(p_nu)
    c = np.atleast_1d(np.asarray(c, dtype=float))
    s = p.size

    def objective(w: np.ndarray) -> float:
        return float(np.max(w) - p @ w + (w - c) @ (w - c) / (2.0 * theta))

    best_val = objective(c)
    best_w = c.copy()
    idx = range(s)
    for r in range(1, s + 1):
        for A in itertools.combinations(idx, r):
            A = list(A)
            # candidate: q supported on A with q_i = p_i + (c_i - t)/theta
            t = (c[A].sum() + theta * (p[A].sum() - 1.0)) / len(A)
            q = np.zeros(s)
            q[A] = p[A] + (c[A] - t) / theta
            if np.any(q[A] < -1e-12):
                continue
            w = c - theta * (q - p)
            val = objective(w)
            if val < best_val:
                best_val = val
                best_w = w
    return best_val, best_w


def smoothed_constraint(b, theta_nu: float, y_nu, v) -> Tuple[float, np.ndarray]:
    """Smoothed upper-bound indicator and its gradient.

    For h = indicator of {z <= b} componentwise, the smoothed value at v is
    max_{w >= 0} <v - b, w> - (1/2 theta)|y - w|^2, attained at
    w_k = max(0, y_k + theta (v_k - b_k)); w is the gradient in v.
    """
    if theta_nu <= 0:
        raise ValueError("theta_nu must be positive")
    b = np.atleast_1d(np.asarray(b, dtype=float))
    y = np.atleast_1d(np.asarray(y_nu, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    d = v - b
    w = np.maximum(0.0, y + theta_nu * d)
    value = float(d @ w - (y - w) @ (y - w) / (2.0 * theta_nu))
    return value, w


def smoothed_constraint_generic(conj_prox, theta_nu: float, y_nu, v) -> Tuple[float, np.ndarray]:
    """Smoothed value for a caller-supplied convex h via its conjugate prox.

    ``conj_prox(point, weight)`` must return ``(w_hat, conj_at_w_hat)`` where
    w_hat minimizes h*(w) + (1/(2 weight)) |w - point|^2 and conj_at_w_hat is
    h*(w_hat); the conjugate value is needed to assemble the smoothed value.
    """
    if theta_nu <= 0:
        raise ValueError("theta_nu must be positive")
    y = np.atleast_1d(np.asarray(y_nu, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    z = y + theta_nu * v
    w_hat, conj_val = conj_prox(z, theta_nu)
    w_hat = np.atleast_1d(np.asarray(w_hat, dtype=float))
    env = float(conj_val) + float((w_hat - z) @ (w_hat - z)) / (2.0 * theta_nu)
    value = float(y @ v) + 0.5 * theta_nu * float(v @ v) - env
    return value, w_hat


def upper_bound_conj_prox(b):
    """conj_prox oracle for h = indicator of {z <= b} (h* supported on w >= 0)."""
    b = np.atleast_1d(np.asarray(b, dtype=float))

    def oracle(point, weight):
        point = np.atleast_1d(np.asarray(point, dtype=float))
        w = np.maximum(point - weight * b, 0.0)
        return w, float(b @ w)

    return oracle
