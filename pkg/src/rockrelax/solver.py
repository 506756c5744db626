"""Joint minimization of the relaxed objective and brute-force grid oracles.

The outer loop alternates an exact reweighting step (closed form, dual
bisection, or a linear program depending on the variant) with a pluggable
decision step. Grid oracles provide ground truth on small instances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog, minimize

from .divergence import phi_divergence
from .extreal import INF, StochasticProgram, ext_add, ext_mul, weighted_objective
from .rockafellian import (CompositePenalty, ExactIndicator, L1Penalty,
                           PerturbationPoint, PhiDivergencePenalty,
                           QuadraticPenalty, RockafellianSpec,
                           SupportPerturbation, eval_approx, eval_exact)
from .simplex import clamp_to_simplex, project_to_simplex

MAX_GRID_EVALS = 10 ** 8


class InfeasibleAtResolution(RuntimeError):
    """Every grid point evaluated to +inf."""


@dataclass(frozen=True)
class GridMethod:
    """Exhaustive search over a box grid; ties go to the first point in
    lexicographic order."""

    box: Sequence[Tuple[float, float]]
    resolution: float

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")


@dataclass(frozen=True)
class ProjectedGradientMethod:
    """Projected gradient descent with Armijo backtracking on a box."""

    box: Sequence[Tuple[float, float]]
    iters: int = 2000
    tol: float = 1e-12


XMethod = Union[GridMethod, ProjectedGradientMethod]


@dataclass(frozen=True)
class SolveConfig:
    x_method: XMethod
    max_outer_iters: int = 50
    u_tolerance: float = 1e-10
    objective_tolerance: float = 1e-9
    seed: int = 0
    v_box: Optional[Tuple[float, float]] = None
    v_resolution: Optional[float] = None

    def __post_init__(self):
        if self.u_tolerance <= 0 or self.objective_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("need at least one outer iteration")


@dataclass
class SolveReport:
    u_final: np.ndarray
    x_final: np.ndarray
    value: float
    plain_objective: float
    trace: List[float]
    iterations: int
    v_final: Optional[np.ndarray] = None
    epsilon_certificate: Optional[float] = None
    unbounded: bool = False


def grid_axis(lo: float, hi: float, resolution: float) -> np.ndarray:
    count = int(round((hi - lo) / resolution))
    return np.linspace(lo, hi, count + 1)


def grid_points(box: Sequence[Tuple[float, float]], resolution: float):
    """Lexicographically ordered grid point iterator over a box."""
    axes = [grid_axis(lo, hi, resolution) for lo, hi in box]
    total = 1
    for a in axes:
        total *= a.size
    if total > MAX_GRID_EVALS:
        raise ValueError(f"grid of {total} points exceeds the evaluation cap")
    return (np.array(pt) for pt in itertools.product(*axes))


def simplex_grid(s: int, resolution: float, center: Optional[np.ndarray] = None,
                 radius: Optional[float] = None) -> List[np.ndarray]:
    """Probability vectors with components that are multiples of resolution.

    With a center and radius, only the points within the sup-norm ball are
    generated, which supports multi-stage refinement.
    """
    k = int(round(1.0 / resolution))
    out: List[np.ndarray] = []

    def bounds(i: int) -> Tuple[int, int]:
        if center is None or radius is None:
            return 0, k
        lo = max(0, int(math.ceil((center[i] - radius) * k - 1e-9)))
        hi = min(k, int(math.floor((center[i] + radius) * k + 1e-9)))
        return lo, hi

    counts = np.zeros(s, dtype=int)

    def rec(i: int, remaining: int):
        if i == s - 1:
            lo, hi = bounds(i)
            if lo <= remaining <= hi:
                counts[i] = remaining
                out.append(counts / k)
            return
        lo, hi = bounds(i)
        for c in range(lo, min(hi, remaining) + 1):
            counts[i] = c
            rec(i + 1, remaining - c)

    rec(0, k)
    return out


def _face_split(costs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    costs = np.atleast_1d(np.asarray(costs, dtype=float))
    if np.any(np.isneginf(costs)) or np.any(np.isnan(costs)):
        raise ValueError("costs must avoid -inf and nan")
    finite = np.isfinite(costs)
    return costs, finite


def u_subproblem_value(spec: RockafellianSpec, costs, y_nu, u) -> float:
    """The u-dependent part of the relaxed objective at fixed x.

    Sum of (p + u)_i costs_i plus the variant's penalty minus <y, u>;
    infinite costs on zero-weight coordinates contribute nothing.
    """
    costs, _ = _face_split(costs)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.zeros(u.size) if y_nu is None else np.atleast_1d(np.asarray(y_nu, float))
    q = spec.p_nu + u
    total = 0.0
    for qi, ci in zip(q, costs):
        total = ext_add(total, ext_mul(qi, ci))
    if isinstance(spec, QuadraticPenalty):
        pen = 0.5 * spec.theta_nu * float(u @ u)
    elif isinstance(spec, PhiDivergencePenalty):
        pen = ext_mul(spec.theta_nu, phi_divergence(spec.family, np.maximum(q, 0.0),
                                                    spec.p_nu))
    elif isinstance(spec, L1Penalty):
        pen = spec.theta * float(np.abs(u).sum())
    elif isinstance(spec, SupportPerturbation):
        pen = 0.5 * spec.theta_nu * float(u @ u)
    else:
        raise TypeError(f"no u-subproblem for spec type {type(spec)!r}")
    return ext_add(ext_add(total, pen), -float(y @ u))


def _sub_projection(p_sub: np.ndarray, shift: np.ndarray) -> np.ndarray:
    return project_to_simplex(p_sub + shift)


def _quadratic_u_step(spec, costs: np.ndarray, y: np.ndarray, finite: np.ndarray,
                      theta: float) -> np.ndarray:
    p = spec.p_nu
    q = np.zeros(p.size)
    c = costs[finite] - y[finite]
    if theta == 0.0:
        j = int(np.argmin(c))
        q[np.nonzero(finite)[0][j]] = 1.0
        return q
    q[finite] = _sub_projection(p[finite], -c / theta)
    return q


def _phi_u_step(spec: PhiDivergencePenalty, costs: np.ndarray, y: np.ndarray,
                finite: np.ndarray) -> np.ndarray:
    p = spec.p_nu
    theta = spec.theta_nu
    fam = spec.family
    idx = np.nonzero(finite)[0]
    c = costs[idx] - y[idx]
    psub = p[idx]
    if np.any(psub == 0.0):
        raise ValueError("divergence reweighting needs positive base weights "
                         "on the finite-cost face")
    q = np.zeros(p.size)
    if theta == 0.0:
        q[idx[int(np.argmin(c))]] = 1.0
        return q

    if fam.tag == "variational":
        # sum p_i |q_i/p_i - 1| = |u|_1 on the positive face, so this
        # subproblem is exactly the l1 linear program at strength theta
        return _l1_u_step(L1Penalty(p_nu=p, theta=theta), costs, y, finite)

    if fam.dphi_inv is not None:
        def mass(mu: float) -> float:
            total = 0.0
            for ci, pi in zip(c, psub):
                t = fam.dphi_inv((mu - ci) / theta)
                if t == INF:
                    return INF
                total += pi * t
            return total

        lo, hi = float(c.min()), float(c.max())
        if mass(hi) < 1.0:
            span = max(1.0, hi - lo)
            while mass(hi) < 1.0:
                hi += span
                span *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mass(mid) < 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, abs(hi)):
                break
        mu = 0.5 * (lo + hi)
        t = np.array([min(fam.dphi_inv((mu - ci) / theta), 1.0 / pi)
                      for ci, pi in zip(c, psub)])
        qsub = np.maximum(psub * t, 0.0)
        total = qsub.sum()
        if total <= 0:
            raise ArithmeticError("divergence dual bisection collapsed")
        q[idx] = qsub / total
        return q

    # families without an invertible derivative: direct NLP on the face,
    # polished against the base point and the vertices
    def obj(qsub: np.ndarray) -> float:
        qq = np.maximum(qsub, 0.0)
        d = phi_divergence(fam, qq, psub)
        if d == INF:
            return 1e30
        return float(c @ qsub) + theta * d

    res = minimize(obj, psub, method="SLSQP",
                   bounds=[(0.0, 1.0)] * psub.size,
                   constraints=[{"type": "eq", "fun": lambda z: z.sum() - 1.0}],
                   options={"maxiter": 500, "ftol": 1e-14})
    best_q, best_v = psub.copy(), obj(psub)
    if res.success:
        cand = np.maximum(res.x, 0.0)
        cand = cand / cand.sum()
        v = obj(cand)
        if v < best_v:
            best_q, best_v = cand, v
    for j in range(psub.size):
        vert = np.zeros(psub.size)
        vert[j] = 1.0
        v = obj(vert)
        if v < best_v:
            best_q, best_v = vert, v
    q[idx] = best_q
    return q


def _l1_u_step(spec: L1Penalty, costs: np.ndarray, y: np.ndarray,
               finite: np.ndarray) -> np.ndarray:
    p = spec.p_nu
    idx = np.nonzero(finite)[0]
    c = costs[idx] - y[idx]
    m = idx.size
    # variables [a; b] >= 0 with q = p + a - b on the finite face
    obj = np.concatenate([c + spec.theta, -c + spec.theta])
    a_eq = np.concatenate([np.ones(m), -np.ones(m)])[None, :]
    b_eq = np.array([1.0 - p[idx].sum()])
    a_ub = np.concatenate([-np.eye(m), np.eye(m)], axis=1)
    b_ub = p[idx]
    res = linprog(obj, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * (2 * m), method="highs")
    if not res.success:
        raise ArithmeticError(f"reweighting linear program failed: {res.message}")
    a, b = res.x[:m], res.x[m:]
    q = np.zeros(p.size)
    q[idx] = np.maximum(p[idx] + a - b, 0.0)
    q[idx] = q[idx] / q[idx].sum()
    return q


def u_step(spec: RockafellianSpec, costs, y_nu=None) -> Tuple[np.ndarray, float]:
    """Exact minimizer over {u | p + u in the simplex} at fixed costs.

    Scenarios with infinite cost are excluded from receiving weight (the
    minimization is restricted to the face where they carry none); if every
    cost is infinite the value is +inf at u = -p.
    """
    if isinstance(spec, (ExactIndicator, CompositePenalty)):
        raise TypeError("this variant has no simplex reweighting step")
    costs, finite = _face_split(np.asarray(costs, dtype=float))
    p = spec.p_nu
    if costs.size != p.size:
        raise ValueError("cost vector length mismatch")
    y = np.zeros(p.size) if y_nu is None else np.atleast_1d(np.asarray(y_nu, float))
    if not finite.any():
        return -p.copy(), INF
    if isinstance(spec, QuadraticPenalty):
        q = _quadratic_u_step(spec, costs, y, finite, spec.theta_nu)
    elif isinstance(spec, SupportPerturbation):
        q = _quadratic_u_step(spec, costs, y, finite, spec.theta_nu)
    elif isinstance(spec, PhiDivergencePenalty):
        q = _phi_u_step(spec, costs, y, finite)
    elif isinstance(spec, L1Penalty):
        q = _l1_u_step(spec, costs, y, finite)
    else:
        raise TypeError(f"unknown spec type {type(spec)!r}")
    u = q - p
    return u, u_subproblem_value(spec, costs, y, u)


def composite_u_step(spec: CompositePenalty, expectation, bound,
                     y_nu=None) -> Tuple[np.ndarray, float]:
    """Closed-form constraint-slack perturbation at a fixed decision.

    Minimizes (theta/2)|u|^2 - <y, u> over u <= bound - expectation; the
    unconstrained minimizer y/theta is clipped componentwise.
    """
    if spec.theta_nu <= 0:
        raise ValueError("composite variant needs theta_nu > 0")
    ev = np.atleast_1d(np.asarray(expectation, dtype=float))
    b = np.atleast_1d(np.asarray(bound, dtype=float))
    y = spec.tilt_m(ev.size) if y_nu is None \
        else np.atleast_1d(np.asarray(y_nu, float))
    u = np.minimum(y / spec.theta_nu, b - ev)
    return u, 0.5 * spec.theta_nu * float(u @ u) - float(y @ u)


def u_step_grid_oracle(spec: RockafellianSpec, costs, y_nu=None,
                       stages: Sequence[Tuple[float, Optional[float]]] = (
                           (1e-2, None), (1e-3, 2.5e-2), (1e-4, 2.5e-3)),
                       ) -> Tuple[np.ndarray, float]:
    """Multi-stage simplex-grid minimization of the u-subproblem.

    Independent of the closed-form steps: pure enumeration at each stage,
    refined around the incumbent. Intended for s <= 4.
    """
    costs = np.atleast_1d(np.asarray(costs, dtype=float))
    s = spec.p_nu.size
    best_u = np.zeros(s)
    best_v = u_subproblem_value(spec, costs, y_nu, best_u)
    center = spec.p_nu.copy()
    for resolution, radius in stages:
        pts = simplex_grid(s, resolution,
                           center=None if radius is None else center,
                           radius=radius)
        for q in pts:
            u = q - spec.p_nu
            v = u_subproblem_value(spec, costs, y_nu, u)
            if v < best_v - 1e-15 * max(1.0, abs(best_v)):
                best_v = v
                best_u = u
        center = spec.p_nu + best_u
    return best_u, best_v


def _project_box(x: np.ndarray, box) -> np.ndarray:
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return np.clip(x, lo, hi)


def x_step(objective: Callable[[np.ndarray], float], method: XMethod,
           gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
           x0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """Minimize the objective over the method's box.

    The grid method handles discontinuous and extended-real objectives;
    projected gradient needs a gradient callable and a start point.
    """
    if isinstance(method, GridMethod):
        best_x = None
        best_v = INF
        for pt in grid_points(method.box, method.resolution):
            v = objective(pt)
            if v < best_v:
                best_v = v
                best_x = pt
        if best_x is None or best_v == INF:
            raise InfeasibleAtResolution("no finite grid point in the box")
        return best_x, best_v

    if isinstance(method, ProjectedGradientMethod):
        if gradient is None:
            raise ValueError("projected gradient needs a gradient callable")
        x = np.array([0.5 * (lo + hi) for lo, hi in method.box]) if x0 is None \
            else np.asarray(x0, dtype=float).copy()
        x = _project_box(x, method.box)
        fx = objective(x)
        if fx == INF:
            raise InfeasibleAtResolution("infinite objective at the start point")
        step = 1.0
        for _ in range(method.iters):
            g = gradient(x)
            moved = False
            t = step
            for _ in range(60):
                cand = _project_box(x - t * g, method.box)
                fc = objective(cand)
                drop = float(g @ (x - cand))
                if fc <= fx - 1e-4 * drop and fc < fx:
                    x, fx = cand, fc
                    step = min(t * 2.0, 1e6)
                    moved = True
                    break
                t *= 0.5
            if not moved:
                break
            if float(np.linalg.norm(_project_box(x - g, method.box) - x)) < method.tol:
                break
        return x, fx

    raise TypeError(f"unknown x method {type(method)!r}")


def _box_center(box) -> np.ndarray:
    return np.array([0.5 * (lo + hi) for lo, hi in box])


def _shifted_costs(program: StochasticProgram, spec: SupportPerturbation,
                   v: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.array([float(program.generator(spec.xi_nu[i] + v[i], x))
                     for i in range(spec.xi_nu.shape[0])])


def _support_xv_step(program: StochasticProgram, spec: SupportPerturbation,
                     q: np.ndarray, method: GridMethod,
                     v_axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Joint decision/support-shift grid step at fixed weights q.

    The shift penalty is separable per scenario, so for each candidate
    decision the best shift is a 1-d grid minimization per scenario.
    """
    s, m = spec.xi_nu.shape
    if m != 1:
        raise ValueError("the grid shift step supports 1-d support points only")
    best = (None, None, INF)
    for x in grid_points(method.box, method.resolution):
        f0 = program.f0(x)
        if f0 == INF:
            continue
        total = f0
        v_opt = np.zeros((s, 1))
        for i in range(s):
            vals = np.array([
                ext_add(ext_mul(q[i], float(program.generator(
                    spec.xi_nu[i] + np.array([vv]), x))),
                    0.5 * spec.lambda_nu * vv * vv)
                for vv in v_axis])
            j = int(np.argmin(vals))
            v_opt[i, 0] = v_axis[j]
            total = ext_add(total, float(vals[j]))
        if total < best[2]:
            best = (x, v_opt, total)
    if best[0] is None:
        raise InfeasibleAtResolution("no finite point in the decision box")
    return best


def composite_reduced_objective(spec: CompositePenalty, program: StochasticProgram,
                                x: np.ndarray) -> float:
    """min over u of the composite relaxation at fixed x (closed form)."""
    block = program.composite
    y = spec.tilt_m(block.m)
    base = weighted_objective(program, spec.p_nu, x)
    if base == INF:
        return INF
    ev = block.expectation(spec.p_nu, np.atleast_1d(np.asarray(x, float)))
    u = np.minimum(y / spec.theta_nu, block.b - ev)
    return base + 0.5 * spec.theta_nu * float(u @ u) - float(y @ u)


def _composite_best_u(spec: CompositePenalty, program: StochasticProgram,
                      x: np.ndarray) -> np.ndarray:
    block = program.composite
    y = spec.tilt_m(block.m)
    ev = block.expectation(spec.p_nu, np.atleast_1d(np.asarray(x, float)))
    return np.minimum(y / spec.theta_nu, block.b - ev)


def _x_objective(spec, program, u, v=None):
    if isinstance(spec, ExactIndicator):
        return lambda x: eval_exact(program, np.zeros(
            program.composite.m if program.composite is not None else program.s), x)
    if isinstance(spec, SupportPerturbation):
        point = PerturbationPoint(u, v)
        return lambda x: eval_approx(spec, program, point, x)
    return lambda x: eval_approx(spec, program, u, x)


def _x_gradient(spec, program, u):
    q = spec.p_nu + u

    def grad(x: np.ndarray) -> np.ndarray:
        g = program.f0.grad(x)
        for qi, f in zip(q, program.scenarios):
            if qi != 0.0:
                g = g + qi * f.grad(x)
        return g

    return grad


def plain_objective(spec, program: StochasticProgram, u, x, v=None) -> float:
    """Reweighted expectation at the final point, without penalty or tilt."""
    if isinstance(spec, ExactIndicator):
        return weighted_objective(program, program.p, x)
    if isinstance(spec, CompositePenalty):
        return weighted_objective(program, spec.p_nu, x)
    q = np.maximum(spec.p_nu + np.atleast_1d(np.asarray(u, float)), 0.0)
    if isinstance(spec, SupportPerturbation) and v is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        total = program.f0(x)
        for i, qi in enumerate(q):
            if qi != 0.0:
                total = ext_add(total, ext_mul(qi, float(
                    program.generator(spec.xi_nu[i] + v[i], x))))
        return total
    return weighted_objective(program, q, x)


def solve_joint(program: StochasticProgram, spec: RockafellianSpec,
                config: SolveConfig,
                oracle_value: Optional[float] = None) -> SolveReport:
    """Alternating minimization from the anchor and the box center.

    Each outer iteration runs the exact reweighting step at the current
    decision and then the decision step at the new weights; for the support
    variant the decision step jointly picks the support shifts, and the
    composite variant folds its closed-form slack into the decision step.
    """
    method = config.x_method
    x = _box_center(method.box)

    if isinstance(spec, ExactIndicator) or (not isinstance(spec, CompositePenalty)
                                            and program.s == 1):
        dim = program.composite.m if (program.composite is not None and
                                      isinstance(spec, ExactIndicator)) else program.s
        u = np.zeros(dim if isinstance(spec, ExactIndicator) else program.s)
        obj = _x_objective(ExactIndicator(), program, u) \
            if isinstance(spec, ExactIndicator) else _x_objective(spec, program, u)
        grad = None
        if isinstance(method, ProjectedGradientMethod):
            grad = _x_gradient(spec if not isinstance(spec, ExactIndicator)
                               else QuadraticPenalty(program.p, 0.0), program, u * 0)
        x, val = x_step(obj, method, gradient=grad, x0=x)
        return SolveReport(u_final=u, x_final=x, value=val,
                           plain_objective=plain_objective(spec, program, u, x),
                           trace=[val], iterations=1,
                           epsilon_certificate=None if oracle_value is None
                           else val - oracle_value)

    if isinstance(spec, CompositePenalty):
        if not isinstance(method, GridMethod):
            raise ValueError("the composite variant requires the grid method")
        x, val = x_step(lambda z: composite_reduced_objective(spec, program, z),
                        method)
        u = _composite_best_u(spec, program, x)
        return SolveReport(u_final=u, x_final=x, value=val,
                           plain_objective=plain_objective(spec, program, u, x),
                           trace=[val], iterations=1,
                           epsilon_certificate=None if oracle_value is None
                           else val - oracle_value)

    if isinstance(spec, SupportPerturbation):
        if not isinstance(method, GridMethod):
            raise ValueError("the support variant requires the grid method")
        if config.v_box is None or config.v_resolution is None:
            raise ValueError("support variant needs v_box and v_resolution")
        v_axis = grid_axis(config.v_box[0], config.v_box[1], config.v_resolution)
        s = program.s
        u = np.zeros(s)
        v = np.zeros_like(spec.xi_nu)
        trace: List[float] = []
        val = INF
        for it in range(1, config.max_outer_iters + 1):
            costs = _shifted_costs(program, spec, v, x)
            u, _ = u_step(spec, costs, spec.tilt())
            q = spec.p_nu + u
            x, v, inner = _support_xv_step(program, spec, q, method, v_axis)
            new_val = inner + 0.5 * spec.theta_nu * float(u @ u) \
                - float(spec.tilt() @ u)
            trace.append(new_val)
            if new_val < -1e15:
                return SolveReport(u_final=u, x_final=x, value=new_val,
                                   plain_objective=-INF, trace=trace,
                                   iterations=it, v_final=v, unbounded=True)
            if val - new_val < config.objective_tolerance:
                val = min(val, new_val)
                break
            val = new_val
        return SolveReport(u_final=u, x_final=x, value=val,
                           plain_objective=plain_objective(spec, program, u, x, v),
                           trace=trace, iterations=len(trace), v_final=v,
                           epsilon_certificate=None if oracle_value is None
                           else val - oracle_value)

    # simplex-reweighting variants: quadratic, divergence, l1
    u = np.zeros(program.s)
    trace = []
    val = INF
    tilt = spec.tilt()
    for it in range(1, config.max_outer_iters + 1):
        costs = program.costs(x)
        new_u, _ = u_step(spec, costs, tilt)
        obj = _x_objective(spec, program, new_u)
        grad = None
        x0 = x
        if isinstance(method, ProjectedGradientMethod):
            grad = _x_gradient(spec, program, new_u)
        x, _ = x_step(obj, method, gradient=grad, x0=x0)
        new_val = eval_approx(spec, program, new_u, x)
        du = float(np.max(np.abs(new_u - u)))
        u = new_u
        trace.append(new_val)
        if new_val < -1e15:
            return SolveReport(u_final=u, x_final=x, value=new_val,
                               plain_objective=-INF, trace=trace,
                               iterations=it, unbounded=True)
        if val - new_val < config.objective_tolerance and du < config.u_tolerance:
            val = min(val, new_val)
            break
        val = min(val, new_val)
    return SolveReport(u_final=u, x_final=x, value=val,
                       plain_objective=plain_objective(spec, program, u, x),
                       trace=trace, iterations=len(trace),
                       epsilon_certificate=None if oracle_value is None
                       else val - oracle_value)


@dataclass
class OracleResult:
    u: np.ndarray
    x: np.ndarray
    value: float
    argmin_sets: Dict[float, np.ndarray]
    v: Optional[np.ndarray] = None


def brute_force_oracle(program: StochasticProgram, spec: RockafellianSpec,
                       u_resolution: float, x_box, x_resolution: float,
                       deltas: Sequence[float] = (),
                       v_box: Optional[Tuple[float, float]] = None,
                       v_resolution: Optional[float] = None) -> OracleResult:
    """Exhaustive ground truth over perturbation and decision grids.

    For each decision point the oracle takes the minimum over its
    perturbation grid, so the delta-argmin sets are sets of decisions.
    """
    s = program.s
    if isinstance(spec, ExactIndicator):
        u_grid: List[np.ndarray] = [np.zeros(
            program.composite.m if program.composite is not None else s)]
    elif isinstance(spec, CompositePenalty):
        u_grid = []
    elif isinstance(spec, SupportPerturbation):
        if s > 4:
            raise ValueError("simplex grids limited to s <= 4")
        u_grid = [q - spec.p_nu for q in simplex_grid(s, u_resolution)]
    else:
        if s > 4:
            raise ValueError("simplex grids limited to s <= 4")
        u_grid = [q - spec.p_nu for q in simplex_grid(s, u_resolution)]

    xs = list(grid_points(x_box, x_resolution))
    v_axis = None
    if isinstance(spec, SupportPerturbation):
        if v_box is None or v_resolution is None:
            raise ValueError("support oracle needs a v grid")
        if spec.xi_nu.shape[1] != 1:
            raise ValueError("support oracle handles 1-d support points only")
        v_axis = grid_axis(v_box[0], v_box[1], v_resolution)
    n_evals = len(xs) * max(1, len(u_grid)) * (
        s * v_axis.size if v_axis is not None else 1)
    if n_evals > MAX_GRID_EVALS:
        raise ValueError(f"{n_evals} oracle evaluations exceed the cap")

    best_u = None
    best_v = None
    best_x = None
    best_val = INF
    x_values = np.full(len(xs), INF)
    for ix, x in enumerate(xs):
        local = INF
        local_u = None
        local_v = None
        if isinstance(spec, ExactIndicator):
            val = eval_exact(program, u_grid[0], x)
            local, local_u = val, u_grid[0]
        elif isinstance(spec, CompositePenalty):
            val = composite_reduced_objective(spec, program, x)
            if val < local:
                local, local_u = val, _composite_best_u(spec, program, x)
        elif isinstance(spec, SupportPerturbation):
            f0 = program.f0(x)
            if f0 == INF:
                local = INF
            else:
                # the shift penalty separates per scenario at fixed (u, x),
                # so the v product grid collapses to one axis per scenario
                for u in u_grid:
                    q = spec.p_nu + u
                    total = f0 + 0.5 * spec.theta_nu * float(u @ u) \
                        - float(spec.tilt() @ u)
                    v = np.zeros((s, 1))
                    for i in range(s):
                        vals = [ext_add(
                            ext_mul(q[i], float(program.generator(
                                spec.xi_nu[i] + np.array([vv]), x))),
                            0.5 * spec.lambda_nu * vv * vv) for vv in v_axis]
                        j = int(np.argmin(vals))
                        v[i, 0] = v_axis[j]
                        total = ext_add(total, float(vals[j]))
                    if total < local:
                        local, local_u, local_v = total, u, v
        else:
            for u in u_grid:
                val = eval_approx(spec, program, u, x)
                if val < local:
                    local, local_u = val, u
        x_values[ix] = local
        if local < best_val:
            best_val = local
            best_x = x
            best_u = local_u
            best_v = local_v
    if best_x is None or best_val == INF:
        raise InfeasibleAtResolution("oracle found no finite point")
    sets: Dict[float, np.ndarray] = {}
    xs_arr = np.array(xs)
    for d in deltas:
        sets[float(d)] = xs_arr[x_values <= best_val + d + 1e-12]
    return OracleResult(u=best_u, x=best_x, value=float(best_val),
                        argmin_sets=sets, v=best_v)


def make_min_value_oracle(program: StochasticProgram, spec: RockafellianSpec,
                          x_box, x_resolution: float) -> Callable[[np.ndarray], float]:
    """u -> grid infimum over x of the selected relaxation at that u."""
    xs = list(grid_points(x_box, x_resolution))

    def oracle(u: np.ndarray) -> float:
        best = INF
        for x in xs:
            if isinstance(spec, ExactIndicator):
                val = eval_exact(program, u, x)
            else:
                val = eval_approx(spec, program, u, x)
            if val < best:
                best = val
        return best

    return oracle
