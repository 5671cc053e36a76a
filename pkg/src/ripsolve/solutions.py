"""Solution concepts: validators, constructors and the vanishing-viscosity driver.

Validators sample their conditions and return a :class:`ValidationReport`
whose verdict is the conjunction of the condition passes. Conditions that
hold almost everywhere are checked at interior points of each segment.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import bvcalc
from .curves import BVTrajectory, JumpRecord, ParametrizedCurve, Piece
from .errors import DomainError, PreconditionError
from .quadrature import system_rule
from .reparam import collapse_fast_segments, project_to_bv, renormalize
from .systems import System, global_slope, pair_lengths
from .transition import TransitionCost
from .viscous import SolverOptions, default_grid, fast_speed_threshold, solve_viscous

CONCEPTS = ("parametrized", "bv", "energetic", "local", "phi_minimal")
DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


@dataclass
class Condition:
    name: str
    residual: float
    threshold: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "residual": _finite(self.residual), "threshold": self.threshold,
               "pass": bool(self.passed)}
        if self.detail:
            out["detail"] = self.detail
        return out


def _finite(x: float):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    if np.isnan(x):
        return "nan"
    return x


@dataclass
class ValidationReport:
    """Outcome of a solution-concept check."""

    concept: str
    conditions: list = field(default_factory=list)
    notes: str = ""

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def passed(self) -> bool:
        return self.verdict

    def condition(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list:
        return [c.name for c in self.conditions if not c.passed]

    def add(self, name: str, residual: float, threshold: float, detail: str = "", passed: bool | None = None):
        residual = float(residual)
        ok = bool(residual <= threshold) if passed is None else bool(passed)
        self.conditions.append(Condition(name, residual, float(threshold), ok, detail))

    def to_dict(self) -> dict:
        return {"concept": self.concept, "verdict": "pass" if self.verdict else "fail",
                "conditions": [c.to_dict() for c in self.conditions], "notes": self.notes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        lines = [f"{self.concept}: {'PASS' if self.verdict else 'FAIL'}"]
        for c in self.conditions:
            mark = "ok " if c.passed else "BAD"
            lines.append(f"  [{mark}] {c.name}: residual {c.residual:.3e} (threshold {c.threshold:.1e})"
                         + (f"  {c.detail}" if c.detail else ""))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# parametrized metric solutions


def _curve_nodes(system: System, curve: ParametrizedCurve):
    s = curve.params
    ds = np.diff(s)
    keep = ds > 0
    idx = np.nonzero(keep)[0]
    t, q, w, owner = system_rule(system, curve.t_hat[idx], curve.t_hat[idx + 1], curve.q_hat[idx],
                                 curve.q_hat[idx + 1], slope_levels=(1.0,))
    return idx, t, q, w, idx[owner]


def validate_parametrized(system: System, curve: ParametrizedCurve, M: TransitionCost | str | None = None,
                          tol: float = 1e-6, allow_degenerate: bool = False,
                          xi_tol: float = 1e-8) -> ValidationReport:
    """Check a parametrized metric solution.

    Conditions: ``t_hat`` nondecreasing, nondegeneracy ``t_hat' + |q_hat'| > 0``
    (skipped with ``allow_degenerate``), the per-interval energy inequality
    with the transition cost ``M``, the energy identity with ``slope * |q_hat'|``
    and the regime implications ``t_hat' > 0 => slope <= 1`` and
    ``|q_hat'| > 0 => slope >= 1``.

    ``xi_tol`` is the tolerance on ``slope = 1`` used by the regime tests and
    by infinite-valued costs; sampled solver output needs a larger value.
    """
    if M is None:
        M = TransitionCost.mzero()
    elif isinstance(M, str):
        M = TransitionCost.from_name(M)
    if curve.params.size < 2:
        raise DomainError("a parametrized curve needs at least two samples")
    report = ValidationReport("parametrized", notes=f"M = {M.kind}")
    dt = np.diff(curve.t_hat)
    report.add("a_monotone_time", max(0.0, -float(np.min(dt))), tol)
    speeds = curve.alpha + curve.nu
    degenerate = int(np.sum(speeds <= 1e-14))
    if allow_degenerate:
        report.add("b_nondegenerate", float(degenerate), np.inf, "skipped (degenerate curves allowed)")
    else:
        report.add("b_nondegenerate", float(degenerate), 0.0, "number of intervals with zero speed")

    idx, t, q, w, owner = _curve_nodes(system, curve)
    energy = system.energy
    alpha = np.maximum(curve.alpha, 0.0)
    nu = curve.nu
    ds = np.diff(curve.params)
    xi = system.slopes(t, q)
    xi_eff = np.where(np.abs(xi - 1.0) <= xi_tol, 1.0, xi)
    a_n, nu_n = alpha[owner], nu[owner]
    with np.errstate(invalid="ignore"):
        cost = np.asarray(M(a_n, nu_n, xi_eff), dtype=float)
    m = curve.params.size - 1
    m_int = np.zeros(m)
    work = np.zeros(m)
    diss = np.zeros(m)
    np.add.at(m_int, owner, w * ds[owner] * cost)
    np.add.at(work, owner, w * dt[owner] * energy.partial_t(t, q))
    np.add.at(diss, owner, w * ds[owner] * nu_n * xi)
    e_nodes = np.asarray(energy.evaluate(curve.t_hat, curve.q_hat), dtype=float)
    de = np.diff(e_nodes)
    ineq = de - work + m_int
    ineq = np.where(np.isnan(ineq), np.inf, ineq)
    report.add("c_energy_inequality", float(np.max(ineq[idx])) if idx.size else 0.0, tol,
               "max over intervals of dE - work + int M")
    identity = np.abs(de - work + diss)
    report.add("equality_identity", float(np.max(identity[idx])) if idx.size else 0.0, tol,
               "max over intervals of |dE - work + int slope |q'||")
    viol_time = np.where(a_n > xi_tol, np.maximum(xi - 1.0 - xi_tol, 0.0), 0.0)
    viol_move = np.where(nu_n > xi_tol, np.maximum(1.0 - xi_tol - xi, 0.0), 0.0)
    worst = float(max(np.max(viol_time, initial=0.0), np.max(viol_move, initial=0.0)))
    detail = ""
    if worst > 0:
        k = int(np.argmax(np.maximum(viol_time, viol_move)))
        which = "t' > 0 needs slope <= 1" if viol_time[k] >= viol_move[k] else "|q'| > 0 needs slope >= 1"
        detail = f"{which}; worst at t = {t[k]:.6g}, slope {xi[k]:.6g}"
    report.add("regime_implications", worst, 0.0, detail)
    return report


# ---------------------------------------------------------------------------
# BV, energetic and local solutions


def _interior_samples(bv: BVTrajectory, per_segment: int | None = None):
    ta, tb, qa, qb = bv.segments()
    if ta.size == 0:
        n = bv.dimension
        return np.zeros(0), np.zeros((0, n)), np.zeros(0, dtype=bool), np.zeros(0)
    if per_segment is None:
        per_segment = 8 if ta.size <= 1000 else 1
    lam = (np.arange(per_segment) + 0.5) / per_segment
    t = (ta[:, None] + lam[None, :] * (tb - ta)[:, None]).ravel()
    q = (qa[:, None, :] + lam[None, :, None] * (qb - qa)[:, None, :]).reshape(-1, qa.shape[1])
    dt = np.repeat(tb - ta, per_segment)
    return t, q, dt, np.repeat(np.arange(ta.size), per_segment)


def _motion_speed(system: System, bv: BVTrajectory) -> np.ndarray:
    ta, tb, qa, qb = bv.segments()
    if ta.size == 0:
        return np.zeros(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return pair_lengths(system, qa, qb) / np.maximum(tb - ta, 1e-300)


def _energy_check(system: System, bv: BVTrajectory, dissipation: str):
    cum = bvcalc.cumulative_functionals(system, bv)
    values = cum.energy + getattr(cum, dissipation) - cum.work
    return cum, values


def _path_conditions(system: System, jump: JumpRecord, slope_tol: float) -> dict:
    path = jump.polyline()
    n_pts = 16
    qa, qb = path[:-1], path[1:]
    lam = np.linspace(0.0, 1.0, n_pts)
    pts = (qa[:, None, :] + lam[None, :, None] * (qb - qa)[:, None, :]).reshape(-1, path.shape[1])
    min_slope = float(np.min(system.slopes(jump.t, pts)))
    left, right = jump.halves()
    energy = system.energy
    ident = 0.0
    for half in (left, right):
        if half.shape[0] < 2 or np.allclose(half[0], half[-1]) and half.shape[0] == 2:
            continue
        drop = float(energy.evaluate(jump.t, half[0]) - energy.evaluate(jump.t, half[-1]))
        ident = max(ident, abs(drop - bvcalc.path_integral(system, jump.t, half)))
    point_gap = float(np.max(np.abs(jump.point_at(jump.theta if jump.theta is not None else 0.0) - jump.q_point))) \
        if jump.path is not None else 0.0
    ends = float(max(np.max(np.abs(path[0] - jump.q_minus)), np.max(np.abs(path[-1] - jump.q_plus))))
    return {"min_slope": min_slope, "identity": ident, "point_gap": point_gap, "ends": ends}


def validate_bv(system: System, bv: BVTrajectory, tol: float = 1e-6, slope_tol: float | None = None,
                motion_tol: float = 1e-9) -> ValidationReport:
    """Check the four conditions of a BV solution and the single-inequality form.

    ``a_energy_inequality``: ``E(t) + Sigma_0[s, t] <= E(s) + work`` on all
    pairs of breakpoints. ``b_slope_upper``: slope <= 1 off jumps.
    ``c_slope_lower``: slope >= 1 where the curve moves. ``d_*``: every jump
    has a path through ``q(t)`` (alpha), the slope is at least 1 along it
    (beta) and the energy drop across each half equals its slope-weighted
    length (gamma). ``sigma1_inequality`` is the compact form with
    ``Sigma_1``.
    """
    slope_tol = tol if slope_tol is None else slope_tol
    report = ValidationReport("bv")
    cum, values = _energy_check(system, bv, "sigma0")
    report.add("a_energy_inequality", bvcalc.max_increase(values), tol)
    t, q, _, seg = _interior_samples(bv)
    xi = system.slopes(t, q) if t.size else np.zeros(0)
    excess = float(np.max(xi - 1.0, initial=0.0))
    detail = f"worst at t = {t[int(np.argmax(xi))]:.6g}" if excess > slope_tol else ""
    report.add("b_slope_upper", max(excess, 0.0), slope_tol, detail)
    speed = _motion_speed(system, bv)
    moving = speed[seg] > motion_tol if t.size else np.zeros(0, dtype=bool)
    deficit = float(np.max(np.where(moving, 1.0 - xi, 0.0), initial=0.0)) if t.size else 0.0
    detail = ""
    if deficit > slope_tol:
        k = int(np.argmax(np.where(moving, 1.0 - xi, -np.inf)))
        detail = f"moving at slope {xi[k]:.6g} near t = {t[k]:.6g}"
    report.add("c_slope_lower", max(deficit, 0.0), slope_tol, detail)

    missing, point_gap, beta, gamma_res = [], 0.0, 0.0, 0.0
    beta_detail = ""
    for jump in bv.jumps:
        if jump.degenerate:
            continue
        if jump.path is None and system.dimension > 1:
            missing.append(jump.t)
            continue
        checks = _path_conditions(system, jump, slope_tol)
        point_gap = max(point_gap, checks["point_gap"], checks["ends"])
        shortfall = max(1.0 - checks["min_slope"], 0.0)
        if shortfall > beta:
            beta = shortfall
            beta_detail = f"slope {checks['min_slope']:.6g} on the path at t = {jump.t:.6g}"
        gamma_res = max(gamma_res, checks["identity"])
    if missing:
        report.add("d_alpha_path", np.inf, tol, f"missing jump path at t = {missing}", passed=False)
    else:
        report.add("d_alpha_path", point_gap, max(tol, 1e-9))
    report.add("d_beta_slope", beta, slope_tol, beta_detail)
    report.add("d_gamma_identity", gamma_res, tol)
    _, values1 = _energy_check(system, bv, "sigma1")
    report.add("sigma1_inequality", float(values1[-1] - values1[0]), tol)
    return report


def _stability_samples(bv: BVTrajectory, per_piece: int):
    times, states = [], []
    for piece in bv.pieces:
        ts = np.linspace(piece.start, piece.end, per_piece)
        if piece.times.size <= per_piece:
            ts = np.unique(np.concatenate([ts, piece.times]))
        times.append(ts)
        states.append(piece(ts))
    for jump in bv.jumps:
        times.append(np.array([jump.t]))
        states.append(jump.q_point[None, :])
    return np.concatenate(times), np.vstack(states)


def validate_energetic(system: System, bv: BVTrajectory, grid: float | None = None, tol: float = 1e-6,
                       samples_per_piece: int = 41, include_gamma_star: bool = True) -> ValidationReport:
    """Check global stability (S), the energy balance (E) and the ``Gamma_*`` inequality.

    (S) is tested with :func:`global_slope` at ``samples_per_piece`` times of
    every continuous piece and at the jump points; ``grid`` is its grid
    resolution.
    """
    report = ValidationReport("energetic")
    ts, qs = _stability_samples(bv, samples_per_piece)
    worst, where = 0.0, None
    for t_i, q_i in zip(ts, qs):
        g = global_slope(system, float(t_i), np.clip(q_i, system.lo, system.hi), grid)
        if g - 1.0 > worst:
            worst, where = g - 1.0, (float(t_i), q_i)
    detail = f"global slope {1 + worst:.6g} at t = {where[0]:.6g}" if where is not None and worst > tol else ""
    report.add("S_global_stability", worst, tol, detail)
    cum, values = _energy_check(system, bv, "variation")
    balance = values - values[0]
    report.add("E_energy_balance", float(np.max(np.abs(balance))), tol)
    if include_gamma_star:
        gs = bvcalc.gamma_star(system, bv, grid_resolution=grid)
        lhs = cum.energy[-1] + gs - cum.energy[0] - cum.work[-1]
        report.add("gamma_star_inequality", float(lhs), tol, f"Gamma_* = {gs:.9g}")
    return report


def validate_local(system: System, bv: BVTrajectory, tol: float = 1e-6, slope_tol: float | None = None) -> ValidationReport:
    """Local stability (slope <= 1 off jumps) and the energy inequality with ``Var``."""
    slope_tol = tol if slope_tol is None else slope_tol
    report = ValidationReport("local")
    t, q, _, _ = _interior_samples(bv)
    xi = system.slopes(t, q) if t.size else np.zeros(0)
    excess = float(np.max(xi - 1.0, initial=0.0))
    detail = f"worst at t = {t[int(np.argmax(xi))]:.6g}" if excess > slope_tol else ""
    report.add("a1_local_stability", max(excess, 0.0), slope_tol, detail)
    _, values = _energy_check(system, bv, "variation")
    report.add("a2_energy_inequality", bvcalc.max_increase(values), tol)
    return report


# ---------------------------------------------------------------------------
# energetic solutions by incremental global minimization


def _search_points(system: System, search_grid) -> np.ndarray:
    n = system.dimension
    if search_grid is not None and np.ndim(search_grid) > 0:
        pts = np.asarray(search_grid, dtype=float)
        return pts.reshape(-1, n)
    count = int(search_grid) if search_grid is not None else (4001 if n == 1 else 201)
    axes = [np.linspace(system.lo[i], system.hi[i], count) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _grid_spacing(system: System, points: np.ndarray) -> float:
    n = system.dimension
    per_axis = max(round(points.shape[0] ** (1.0 / n)), 2)
    return float(np.max((system.hi - system.lo) / (per_axis - 1)))


def _stability_witness(system: System, t: float, q: np.ndarray, points: np.ndarray):
    e0 = float(system.energy.evaluate(t, q))
    dist = pair_lengths(system, np.broadcast_to(q, points.shape), points)
    drop = e0 - np.asarray(system.energy.evaluate(np.full(points.shape[0], t), points), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 1e-12, np.maximum(drop, 0.0) / dist, 0.0)
    k = int(np.argmax(ratio))
    return float(ratio[k]), points[k]


def energetic_step(system: System, t: float, q_prev, points: np.ndarray, h: float,
                   tie_tol: float = 1e-9) -> np.ndarray:
    """Global minimizer of ``E(t, q) + d(q_prev, q)`` over the search points, polished.

    Ties within ``tie_tol`` (relative) between separated minimizers resolve
    to the lexicographically smallest one; ``q_prev`` itself is preferred
    over nearby polished points of equal value.
    """
    q_prev = np.asarray(q_prev, dtype=float)
    n = system.dimension
    energy = system.energy

    def objective(x):
        x = np.atleast_2d(x)
        d = pair_lengths(system, np.broadcast_to(q_prev, x.shape), x)
        return np.asarray(energy.evaluate(np.full(x.shape[0], t), x), dtype=float) + d

    values = objective(points)
    candidates = [q_prev.copy()]
    if n == 1:
        x = points[:, 0]
        order = np.argsort(x)
        x, v = x[order], values[order]
        interior = np.nonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
        ends = [i for i in (0, x.size - 1) if v[i] <= v[min(max(i + (1 if i == 0 else -1), 0), x.size - 1)]]
        best = np.argsort(v)[:4]
        for i in sorted(set(interior.tolist()) | set(ends) | set(best.tolist())):
            lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
            res = optimize.minimize_scalar(lambda y: float(objective(np.array([[y]]))[0]), bounds=(lo, hi),
                                           method="bounded", options={"xatol": 1e-12})
            candidates.append(np.array([res.x if res.fun <= v[i] else x[i]]))
    else:
        best = np.argsort(values)[:6]
        for i in best:
            res = optimize.minimize(lambda y: float(objective(y)[0]), points[i], method="Powell",
                                    bounds=list(zip(system.lo, system.hi)), options={"xtol": 1e-10, "ftol": 1e-14})
            candidates.append(res.x if res.fun <= values[i] else points[i])
    cand = np.array(candidates)
    fv = objective(cand)
    fmin = float(np.min(fv))
    tied = cand[fv <= fmin + tie_tol * (1.0 + abs(fmin))]
    tied_f = fv[fv <= fmin + tie_tol * (1.0 + abs(fmin))]
    order = np.lexsort(tied.T[::-1])
    first = tied[order[0]]
    cluster = np.max(np.abs(tied - first), axis=1) <= 2.0 * h
    if np.any(np.all(np.abs(tied[cluster] - q_prev) <= 0.0, axis=1)):
        return q_prev.copy()
    members = tied[cluster]
    return members[int(np.argmin(tied_f[cluster]))].copy()


def search_spacing(system: System, search_grid=None) -> float:
    """Spacing of the state grid that :func:`solve_energetic` searches."""
    return _grid_spacing(system, _search_points(system, search_grid))


def solve_energetic(system: System, q0, t_grid=None, search_grid=None, stability_tol: float = 1e-9,
                    jump_tol: float | None = None) -> BVTrajectory:
    """Energetic solution by incremental minimization on a time grid.

    ``q_k`` minimizes ``E(t_k, q) + d(q_{k-1}, q)``. Consecutive minimizers
    farther apart than ``jump_tol`` (default ``10 * (max step + grid
    spacing)``) become a jump at ``t_k`` with a straight path and
    ``q(t_k) = q_k`` (right convention). Between steps the state is
    interpolated linearly, and held constant over the step that ends in a jump.

    Raises
    ------
    PreconditionError
        If ``q0`` is not globally stable at the initial time; the witness is
        the competitor with the largest energy-release ratio.
    """
    q0 = system.point(q0)
    t_grid = np.linspace(0.0, system.horizon, 601) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing with at least two times")
    points = _search_points(system, search_grid)
    h = _grid_spacing(system, points)
    ratio, witness = _stability_witness(system, float(t_grid[0]), q0, points)
    if ratio > 1.0 + stability_tol:
        raise PreconditionError(f"initial state is not globally stable (release ratio {ratio:.6g})", witness)
    jump_tol = 10.0 * (float(np.max(np.diff(t_grid))) + h) if jump_tol is None else jump_tol
    states = [q0]
    for t in t_grid[1:]:
        states.append(energetic_step(system, float(t), states[-1], points, h))
    states = np.array(states)
    steps = pair_lengths(system, states[:-1], states[1:])
    jump_idx = np.nonzero(steps > jump_tol)[0] + 1
    pieces, jumps = [], []
    start = 0
    for j in jump_idx:
        ts = list(t_grid[start:j]) + [t_grid[j]]
        qs = list(states[start:j]) + [states[j - 1]]
        pieces.append(Piece(np.array(ts), np.array(qs)))
        path = np.array([states[j - 1], states[j]])
        jumps.append(JumpRecord(float(t_grid[j]), states[j - 1], states[j], states[j], path,
                                np.array([0.0, 1.0]), 1.0, {"source": "solve_energetic"}))
        start = j
    if start < t_grid.size - 1:
        pieces.append(Piece(t_grid[start:], states[start:]))
    return BVTrajectory(tuple(pieces), tuple(jumps), "right")


def jump_transition(system: System, t: float, q_minus, opts: dict | None = None) -> JumpRecord:
    """Steepest-descent jump path from ``q_minus`` at frozen time ``t``.

    ``opts`` may hold ``step``, ``max_length`` and ``tol``; see
    :func:`ripsolve.bvcalc.jump_transition`.
    """
    return bvcalc.jump_transition(system, t, q_minus, **(opts or {}))


# ---------------------------------------------------------------------------
# vanishing viscosity


@dataclass
class SweepResult:
    """Output of :func:`vanishing_viscosity`."""

    eps: list
    runs: list
    curves: list
    curve: ParametrizedCurve
    bv: BVTrajectory
    diagnostics: dict
    reports: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.curve, self.bv, self.diagnostics))


def thread_count(requested: int | None = None) -> int:
    env = os.environ.get("RIPSOLVE_THREADS")
    cap = int(env) if env and env.strip().isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, requested or cap))


def _normalized_distance(system: System, a: ParametrizedCurve, b: ParametrizedCurve, samples: int = 4001) -> float:
    u = np.linspace(0.0, 1.0, samples)
    ta, qa = a(a.params[0] + u * a.span)
    tb, qb = b(b.params[0] + u * b.span)
    return float(np.max(np.abs(ta - tb) + pair_lengths(system, qa, qb)))


def vanishing_viscosity(system: System, q0, t_grid=None, eps_sequence=DEFAULT_EPS, opts: SolverOptions | None = None,
                        convention: str = "left", threads: int | None = None, validate: bool = True,
                        validation_tol: float | None = None) -> SweepResult:
    """Viscous solves for a decreasing sequence of ``eps`` and their limit candidate.

    Each run is reparametrized with its fast runs (speed above
    ``1 / sqrt(eps)``) frozen in time. Successive curves are compared as
    functions of normalized arclength ``s / S``. The finest curve is the
    limit candidate; its BV projection is returned with both validations.

    The diagnostics flag a non-Cauchy sweep (a difference that does not at
    least halve) and a variation more than twice that of the coarsest run.
    """
    eps = [float(e) for e in eps_sequence]
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("eps_sequence must be positive and strictly decreasing")
    opts = opts or SolverOptions()
    grid = default_grid(system, opts.step) if t_grid is None else np.asarray(t_grid, dtype=float)
    q0 = system.point(q0)

    def run(e):
        return solve_viscous(system, q0, grid, e, opts)

    with ThreadPoolExecutor(max_workers=thread_count(threads)) as pool:
        runs = list(pool.map(run, eps))
    curves = [collapse_fast_segments(system, r, fast_speed_threshold(e)) for r, e in zip(runs, eps)]
    curves = [renormalize(system, c, 0.0) for c in curves]
    variation = [float(np.sum(pair_lengths(system, r.states[:-1], r.states[1:]))) for r in runs]
    cauchy = [_normalized_distance(system, a, b) for a, b in zip(curves, curves[1:])]
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(cauchy, cauchy[1:])]
    warnings = []
    converged = bool(cauchy) and all(r <= 0.5 for r in ratios) and (len(cauchy) < 2 or bool(ratios))
    if len(cauchy) >= 2 and not converged:
        warnings.append("successive curve differences do not halve; convergence not declared")
    if len(cauchy) < 2:
        warnings.append("fewer than three viscosities; convergence cannot be assessed")
        converged = False
    variation_flag = max(variation) > 2.0 * variation[0]
    if variation_flag:
        warnings.append("variation grows along the sweep; no uniform bound observed")
    candidate = curves[-1]
    bv = project_to_bv(candidate, convention, horizon=float(grid[-1]), start=float(grid[0]))
    diagnostics = {
        "eps": eps, "tau": float(np.max(np.diff(grid))), "cauchy": cauchy, "ratios": ratios,
        "converged": converged, "variation": variation, "variation_flag": variation_flag,
        "fast_steps": [len(r.meta.get("fast_steps", ())) for r in runs],
        "jump_times": [float(j.t) for j in bv.jumps if not j.degenerate], "warnings": warnings,
    }
    result = SweepResult(eps, runs, curves, candidate, bv, diagnostics)
    if validate:
        vt = validation_tol if validation_tol is not None else sweep_tolerance(eps[-1], diagnostics["tau"])
        result.reports["bv"] = validate_bv(system, bv, tol=vt, slope_tol=vt)
        result.reports["parametrized"] = validate_parametrized(system, candidate, tol=vt, xi_tol=vt)
        diagnostics["validation"] = {k: v.verdict for k, v in result.reports.items()}
    return result


def sweep_tolerance(eps_min: float, tau: float) -> float:
    """Tolerance for validating sweep output: errors are O(eps + sqrt(tau))."""
    return 10.0 * (eps_min + np.sqrt(tau))


# ---------------------------------------------------------------------------
# Phi functional and order


@dataclass
class PhiEvaluation:
    """Pairwise Phi comparison of two curves from the same origin."""

    samples: np.ndarray
    values: np.ndarray
    other_values: np.ndarray
    disagreement_S: float
    order: str

    @property
    def precedes(self) -> bool:
        return self.order == "precedes"


def _check_normalized(curve: ParametrizedCurve, tol: float = 1e-6):
    if curve.alpha.size and curve.normalization_error > tol:
        raise DomainError(f"curve is not arclength-normalized (error {curve.normalization_error:.3g})")


def phi_values(system: System, curve: ParametrizedCurve, s) -> np.ndarray:
    """``Phi(s) = E(t(s), q(s)) + Var(q, [s_0, s]) - int partial_t E t'`` at the requested ``s``."""
    _check_normalized(curve)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    lo, hi = curve.params[0], curve.params[-1]
    if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
        raise DomainError(f"s must lie in [{lo}, {hi}]")
    s = np.clip(s, lo, hi)
    knots = np.unique(np.concatenate([curve.params, s]))
    t_k, q_k = curve(knots)
    e = np.asarray(system.energy.evaluate(t_k, q_k), dtype=float)
    if knots.size > 1:
        tt, qq, w, owner = system_rule(system, t_k[:-1], t_k[1:], q_k[:-1], q_k[1:])
        work = np.zeros(knots.size - 1)
        np.add.at(work, owner, w * (t_k[1:] - t_k[:-1])[owner] * system.energy.partial_t(tt, qq))
        var = pair_lengths(system, q_k[:-1], q_k[1:])
        acc = np.concatenate([[0.0], np.cumsum(var - work)])
    else:
        acc = np.zeros(1)
    phi = e + acc
    return phi[np.searchsorted(knots, s)]


def phi_functional(system: System, curve: ParametrizedCurve, s) -> float | np.ndarray:
    out = phi_values(system, curve, s)
    return float(out[0]) if np.ndim(s) == 0 else out


def phi_order(system: System, curve1: ParametrizedCurve, curve2: ParametrizedCurve, tol: float = 1e-6,
              refine: int = 400) -> PhiEvaluation:
    """Whether ``curve1`` precedes ``curve2`` in the Phi order.

    ``S`` is the last sample up to which the curves agree. ``curve1``
    precedes ``curve2`` when every sample ``s > S`` has some sample
    ``s*`` in ``(S, s]`` with ``Phi_1(s*) <= Phi_2(s*) + tol``; the
    quantifier runs over a grid with ``refine`` cells plus both curves'
    knots.
    """
    _check_normalized(curve1)
    _check_normalized(curve2)
    t1, q1 = curve1(curve1.params[0])
    t2, q2 = curve2(curve2.params[0])
    if abs(float(t1) - float(t2)) > tol or np.max(np.abs(q1 - q2)) > tol:
        raise DomainError("curves do not start at the same point of the extended state space")
    if abs(curve1.params[0] - curve2.params[0]) > tol or abs(curve1.span - curve2.span) > tol:
        raise DomainError("curves must share the same arclength span")
    lo = curve1.params[0]
    hi = min(curve1.params[-1], curve2.params[-1])
    s = np.unique(np.concatenate([np.linspace(lo, hi, refine + 1), curve1.params, curve2.params]))
    s = s[(s >= lo) & (s <= hi)]
    ta, qa = curve1(s)
    tb, qb = curve2(s)
    gap = np.abs(ta - tb) + pair_lengths(system, qa, qb)
    differ = np.nonzero(gap > tol)[0]
    phi1 = phi_values(system, curve1, s)
    phi2 = phi_values(system, curve2, s)
    if differ.size == 0:
        return PhiEvaluation(s, phi1, phi2, float(hi), "precedes")
    first = int(differ[0])
    agree_S = float(s[max(first - 1, 0)])
    after = s > agree_S
    good = phi1 <= phi2 + tol
    # for each later sample, is there a good sample in (S, s]? equivalently the first later sample is good
    running = np.cumsum(np.where(after, good, False)) > 0
    precedes = bool(np.all(running[after]))
    return PhiEvaluation(s, phi1, phi2, agree_S, "precedes" if precedes else "not_precedes")


def n_function(system: System, t: float, q) -> float:
    """``min(0, 1 - slope)``."""
    from .systems import local_slope

    return min(0.0, 1.0 - local_slope(system, t, q))


def lambda_form_check(system: System, curve: ParametrizedCurve, tol: float = 1e-6) -> dict:
    """Residuals of ``-D_q E in lambda dR_1(q')`` with ``lambda = max(slope, 1)``.

    At interior nodes the inclusion reads ``R_1*(-D_q E) <= lambda`` and,
    where the curve moves, ``<-D_q E, q'> = lambda R_1(q')``. The
    complementarity ``t' (lambda - 1) = 0`` is checked too.
    """
    idx, t, q, w, owner = _curve_nodes(system, curve)
    grad = np.asarray(system.energy.grad_q(t, q), dtype=float).reshape(t.size, -1)
    xi = system.slopes(t, q)
    lam = np.maximum(xi, 1.0)
    vel = (curve.q_hat[owner + 1] - curve.q_hat[owner]) / np.diff(curve.params)[owner][:, None]
    r1 = np.asarray(system.norm.evaluate(q, vel), dtype=float)
    moving = curve.nu[owner] > tol
    power = np.sum(-grad * vel, axis=1)
    direction = float(np.max(np.where(moving, np.abs(power - lam * r1), 0.0), initial=0.0))
    complement = float(np.max(curve.alpha[owner] * (lam - 1.0), initial=0.0))
    return {"dual_bound": float(np.max(xi - lam, initial=0.0)), "direction": direction,
            "complementarity": complement, "passed": direction <= tol and complement <= tol}
