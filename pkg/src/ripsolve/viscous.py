"""Viscous regularization solved by minimizing movements.

Each implicit step minimizes

    q -> tau * psi_eps(R_1(q_prev, q - q_prev) / tau) + E(t_next, q),
    psi_eps(nu) = nu + (eps / 2) nu^2,

over the bounds box.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .curves import Trajectory
from .errors import DomainError, SolverError
from .systems import System


@dataclass(frozen=True)
class ViscosityParam:
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise DomainError("viscosity epsilon must be a positive finite number")


def _eps(visc) -> float:
    return visc.epsilon if isinstance(visc, ViscosityParam) else ViscosityParam(float(visc)).epsilon


@dataclass(frozen=True)
class SolverOptions:
    """Options of the minimizing-movement solver.

    Parameters
    ----------
    step : float, optional
        Time step tau; ``None`` means ``1e-4 * T``.
    multistart : int
        Number of local searches per nD step and of polished grid minima in 1D.
    inner_tol : float
        Tolerance of the inner minimization in the state variable.
    max_inner_iter : int
        Iteration cap of each inner search.
    grid_cells : int
        Cells of the 1D global scan.
    global_scan : {"auto", "always", "never"}
        "auto" skips the global scan when the step objective is certified
        strongly convex (energy curvature bound below ``eps / tau``).
    """

    step: float | None = None
    multistart: int = 8
    inner_tol: float = 1e-10
    max_inner_iter: int = 200
    grid_cells: int = 4096
    global_scan: str = "auto"

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise DomainError("step must be positive")
        if self.multistart < 1 or self.max_inner_iter < 1 or self.grid_cells < 2 or not self.inner_tol > 0:
            raise DomainError("solver options must be positive")
        if self.global_scan not in ("auto", "always", "never"):
            raise DomainError("global_scan must be auto, always or never")


def psi(visc, nu):
    """``psi_eps(nu) = nu + (eps/2) nu^2``."""
    eps = _eps(visc)
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise DomainError("psi takes nonnegative rates")
    out = nu + 0.5 * eps * nu * nu
    return float(out) if out.ndim == 0 else out


def psi_star(visc, xi):
    """Convex conjugate ``psi_eps^*(xi) = ((xi - 1)^+)^2 / (2 eps)``."""
    eps = _eps(visc)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0):
        raise DomainError("psi_star takes nonnegative slopes")
    excess = np.maximum(xi - 1.0, 0.0)
    out = excess * excess / (2.0 * eps)
    return float(out) if out.ndim == 0 else out


def fast_speed_threshold(eps: float) -> float:
    """Speed above which a viscous step counts as part of a transition layer.

    Slip speeds are O(1) and layer speeds O(1/eps); the geometric mean
    ``1/sqrt(eps)`` separates the two scales for every eps < 1.
    """
    return 1.0 / math.sqrt(eps)


# ---------------------------------------------------------------------------
# one step


def _step_1d(system: System, t: float, xp: float, tau: float, eps: float, opts: SolverOptions) -> float:
    energy = system.energy
    lo, hi = float(system.lo[0]), float(system.hi[0])
    c = float(system.norm.evaluate(np.array([xp]), np.array([1.0])))
    a = c
    b = eps * c * c / tau
    if getattr(energy, "has_scalar_path", False):
        def grad(x):
            return energy.scalar_derivative(t, x)

        def value(x):
            return energy.scalar_value(t, x)
    else:
        def grad(x):
            return float(energy.grad_q(t, np.array([x]))[0])

        def value(x):
            return float(energy.evaluate(t, np.array([x])))

    def objective(x):
        d = abs(x - xp)
        return a * d + 0.5 * b * d * d + value(x)

    kappa = energy.curvature_bound
    convex = opts.global_scan == "never" or (
        opts.global_scan == "auto" and kappa is not None and b > kappa * (1.0 + 1e-9) and
        not system.norm.state_dependent)

    best_x = xp
    candidates = [xp]
    g0 = grad(xp)
    if abs(g0) > a:
        side = 1.0 if g0 < 0 else -1.0

        def h(x):
            return side * a + b * (x - xp) + grad(x)

        limit = hi if side > 0 else lo
        if convex:
            reach = xp + side * (abs(g0) - a) / (b - kappa)
            far = min(reach, hi) if side > 0 else max(reach, lo)
        else:
            far, width = xp, (abs(g0) - a) / b
            for _ in range(60):
                far = min(xp + side * width, hi) if side > 0 else max(xp + side * width, lo)
                if h(far) * side >= 0 or far == limit:
                    break
                width *= 2.0
        h_far = h(far)
        if h_far * side < 0:
            candidates.append(far)  # the box boundary is reached
        elif far != xp:
            try:
                root = optimize.brentq(h, min(xp, far), max(xp, far), xtol=opts.inner_tol,
                                       rtol=4 * np.finfo(float).eps, maxiter=opts.max_inner_iter)
            except (RuntimeError, ValueError) as exc:
                raise SolverError(f"inner root search failed at t={t}: {exc}", np.array([far])) from None
            candidates.append(float(root))

    if not convex:
        grid = np.linspace(lo, hi, opts.grid_cells + 1)
        dist = np.abs(grid - xp)
        vals = a * dist + 0.5 * b * dist * dist + energy.evaluate(t, grid[:, None])
        interior = np.r_[True, vals[1:] <= vals[:-1]] & np.r_[vals[:-1] <= vals[1:], True]
        order = np.argsort(np.where(interior, vals, np.inf), kind="stable")[:opts.multistart]
        step = grid[1] - grid[0]
        for i in order:
            if not np.isfinite(vals[i]) or not interior[i]:
                continue
            left, right = max(grid[i] - step, lo), min(grid[i] + step, hi)
            brackets = [(left, xp), (xp, right)] if left < xp < right else [(left, right)]
            for u, v in brackets:
                if v - u <= opts.inner_tol:
                    candidates.append(0.5 * (u + v))
                    continue
                res = optimize.minimize_scalar(objective, bounds=(u, v), method="bounded",
                                               options={"xatol": opts.inner_tol, "maxiter": opts.max_inner_iter})
                if not res.success:
                    raise SolverError(f"inner polish failed at t={t}", np.array([float(res.x)]))
                candidates.append(float(res.x))

    best_val = objective(xp)
    for x in candidates:
        val = objective(x)
        if val < best_val:
            best_x, best_val = x, val
    return best_x


def _norm_lower_bound(norm) -> float | None:
    from .systems import EuclideanNorm

    if isinstance(norm, EuclideanNorm):
        return norm.scale
    return None


def _step_nd(system: System, t: float, qp: np.ndarray, tau: float, eps: float, opts: SolverOptions) -> np.ndarray:
    energy = system.energy
    norm = system.norm
    coef = 0.5 * eps / tau

    def objective(q):
        q = np.clip(q, system.lo, system.hi)
        r = float(norm.evaluate(qp, q - qp))
        return r + coef * r * r + float(energy.evaluate(t, q))

    grad = energy.grad_q(t, qp)
    slope = float(norm.dual_evaluate(qp, grad))
    starts = [qp.copy()]
    if slope > 1.0:
        direction = norm.descent_direction(qp, grad)
        starts.append(np.clip(qp + direction * (slope - 1.0) * tau / eps, system.lo, system.hi))
    scale = _norm_lower_bound(norm)
    kappa = energy.curvature_bound
    certified = (opts.global_scan != "always" and scale is not None and kappa is not None
                 and eps * scale * scale / tau > kappa * (1.0 + 1e-9))
    if not certified and opts.global_scan != "never" and opts.multistart > len(starts):
        axes = [np.linspace(system.lo[i], system.hi[i], 33) for i in range(system.dimension)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, system.dimension)
        r = norm.evaluate(qp, mesh - qp)
        vals = r + coef * r * r + energy.evaluate(t, mesh)
        for k in np.argsort(vals, kind="stable")[:opts.multistart - len(starts)]:
            starts.append(mesh[k])
    best_q, best_val = qp.copy(), objective(qp)
    span = float(np.max(system.hi - system.lo))
    for start in starts:
        res = optimize.minimize(objective, start, method="Powell",
                                options={"xtol": opts.inner_tol, "ftol": 1e-15,
                                         "maxiter": opts.max_inner_iter * system.dimension,
                                         "maxfev": 50 * opts.max_inner_iter * system.dimension,
                                         "direc": np.eye(system.dimension) * 1e-2 * span})
        cand = np.clip(res.x, system.lo, system.hi)
        val = objective(cand)
        if val < best_val:
            best_q, best_val = cand, val
    return best_q


def viscous_step(system: System, t_next: float, q_prev, opts: SolverOptions, visc) -> np.ndarray:
    """One minimizing-movement step of size ``opts.step``.

    The returned state never has a larger step objective than ``q_prev``.
    """
    eps = _eps(visc)
    q_prev = system.point(q_prev)
    t_next = system.time(t_next)
    tau = opts.step if opts.step is not None else 1e-4 * system.horizon
    if system.dimension == 1:
        return np.array([_step_1d(system, t_next, float(q_prev[0]), tau, eps, opts)])
    return _step_nd(system, t_next, q_prev, tau, eps, opts)


def default_grid(system: System, step: float | None = None, t_end: float | None = None) -> np.ndarray:
    t_end = system.horizon if t_end is None else float(t_end)
    step = 1e-4 * system.horizon if step is None else float(step)
    count = max(int(round(t_end / step)), 1)
    return np.linspace(0.0, t_end, count + 1)


def solve_viscous(system: System, q0, t_grid=None, visc=1e-2, opts: SolverOptions | None = None) -> Trajectory:
    """Chain viscous steps over ``t_grid`` starting from ``q0``.

    Steps whose speed exceeds :func:`fast_speed_threshold` are listed in
    ``meta["fast_steps"]`` (index of the interval's left sample).
    """
    eps = _eps(visc)
    opts = opts or SolverOptions()
    q = system.point(q0)
    times = default_grid(system, opts.step) if t_grid is None else np.asarray(t_grid, dtype=float).ravel()
    if times.size < 1 or np.any(np.diff(times) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    system.time(times[0])
    system.time(times[-1])
    states = np.empty((times.size, system.dimension))
    states[0] = q
    one_d = system.dimension == 1
    for k in range(1, times.size):
        tau = times[k] - times[k - 1]
        if one_d:
            states[k, 0] = _step_1d(system, float(times[k]), float(states[k - 1, 0]), tau, eps, opts)
        else:
            states[k] = _step_nd(system, float(times[k]), states[k - 1], tau, eps, opts)
    threshold = fast_speed_threshold(eps)
    from .systems import pair_lengths

    speeds = pair_lengths(system, states[:-1], states[1:]) / np.diff(times)
    fast = np.nonzero(speeds > threshold)[0]
    meta = {
        "solver": "minimizing_movement",
        "epsilon": eps,
        "tau": float(np.max(np.diff(times))) if times.size > 1 else 0.0,
        "options": asdict(opts),
        "fast_threshold": threshold,
        "fast_steps": fast.tolist(),
        "system": system.name,
    }
    return Trajectory(times, states, meta)


def balance_residual(system: System, traj: Trajectory, visc) -> np.ndarray:
    """Per-interval residual of the discrete energy-dissipation inequality.

    For the interval ``[t_k, t_{k+1}]`` with ``tau = t_{k+1} - t_k`` this is

        E(t_{k+1}, q_{k+1}) - E(t_k, q_k) - W_k
            + tau * [psi(R_1(q_k, dq) / tau) + psi*(slope(t_{k+1}, q_{k+1}))]

    where the work ``W_k = E(t_{k+1}, q_k) - E(t_k, q_k)`` is the exact time
    integral of the power along the frozen state ``q_k`` (the time part of
    the minimizing-movement path). Nonpositive values up to discretization
    error indicate a valid run.
    """
    eps = _eps(visc)
    t = traj.times
    q = traj.states
    if t.size < 2:
        return np.zeros(0)
    energy = system.energy
    tau = np.diff(t)
    e_next = energy.evaluate(t[1:], q[1:])
    e_frozen = energy.evaluate(t[1:], q[:-1])
    r = system.norm.evaluate(q[:-1], q[1:] - q[:-1])
    slope = system.slopes(t[1:], q[1:])
    dissipation = tau * (psi(eps, r / tau) + psi_star(eps, slope))
    return e_next - e_frozen + dissipation


def step_dissipation(system: System, traj: Trajectory, visc) -> np.ndarray:
    """Per-interval dissipation ``tau [psi + psi*]`` used by the energy a priori bound."""
    eps = _eps(visc)
    t, q = traj.times, traj.states
    tau = np.diff(t)
    r = system.norm.evaluate(q[:-1], q[1:] - q[:-1])
    return tau * (psi(eps, r / tau) + psi_star(eps, system.slopes(t[1:], q[1:])))
