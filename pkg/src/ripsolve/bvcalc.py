"""Slope distances and the dissipation functionals of BV trajectories.

For a BV trajectory ``q`` on ``[t0, t1]`` the functionals share one diffuse
integral over the continuous pieces and differ in their jump terms:

* ``Sigma_0``: slope distance ``S_0`` across each half jump,
* ``Gamma``: energy differences across each half jump,
* ``Sigma_1``: ``max(slope, 1)`` against the diffuse measure, the time
  integral of ``(slope - 1)^+`` and ``S_1`` across half jumps,
* ``Gamma_*``: like ``Sigma_1`` with the global slope and the jump terms
  ``max(|dE|, d)``.

Half jumps follow the boundary rule of the variation: a jump at the left
end of the interval contributes its right half only, and vice versa.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .curves import BVTrajectory, JumpRecord
from .errors import DomainError, SolverError
from .quadrature import system_rule
from .systems import System, global_slope, grid_graph_cost, pair_lengths

METHODS = ("auto", "exact_1d", "path_quadrature", "grid_graph")


@dataclass(frozen=True)
class SlopeDistanceQuery:
    """Arguments of :func:`slope_distance`."""

    t: float
    q0: tuple
    q1: tuple
    alpha: float = 0.0
    method: str = "auto"
    candidate_paths: tuple = ()


def _nodes(system: System, ta, tb, qa, qb, panels=None, levels=()):
    """Quadrature nodes on straight segments with time and length weights."""
    ta = np.atleast_1d(np.asarray(ta, dtype=float))
    tb = np.atleast_1d(np.asarray(tb, dtype=float))
    if ta.size == 0:
        return np.zeros(0), np.zeros((0, system.dimension)), np.zeros(0), np.zeros(0)
    qa = np.asarray(qa, dtype=float).reshape(ta.size, -1)
    qb = np.asarray(qb, dtype=float).reshape(ta.size, -1)
    t, q, w, owner = system_rule(system, ta, tb, qa, qb, panels=panels, slope_levels=levels)
    delta = qb - qa
    if system.norm.state_dependent:
        w_len = w * system.norm.evaluate(q, delta[owner])
    else:
        w_len = w * np.asarray(system.norm.evaluate(qa, delta))[owner]
    return t, q, w * (tb - ta)[owner], w_len


def path_integral(system: System, t: float, path, alpha: float = 0.0, panels: int = 8) -> float:
    """``int max(slope(t, y), alpha) R_1(y, y')`` along a polyline at frozen time.

    The integrand is split where it has kinks (state knots, sign changes of
    gradient components, the level ``alpha``), so the Gauss rule is exact
    for piecewise affine gradients.
    """
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[0] < 2:
        return 0.0
    qa, qb = path[:-1], path[1:]
    moving = np.any(qa != qb, axis=1)
    if not np.any(moving):
        return 0.0
    qa, qb = qa[moving], qb[moving]
    ta = np.full(qa.shape[0], float(t))
    tt, qq, _, w_len = _nodes(system, ta, ta, qa, qb, panels, (alpha,) if alpha > 0 else ())
    return float(np.sum(w_len * np.maximum(system.slopes(tt, qq), alpha)))


def slope_distance(system: System, t, q0=None, q1=None, alpha: float = 0.0, method: str = "auto",
                   candidate_paths=None, cells: int = 400, return_error: bool = False):
    """Slope distance ``S_alpha(t, q0, q1)``.

    The infimum over paths of ``int max(slope, alpha) R_1(y, y')``.

    Parameters
    ----------
    t : float or SlopeDistanceQuery
        Frozen time, or a query bundling all arguments.
    method : {"auto", "exact_1d", "path_quadrature", "grid_graph"}
        ``exact_1d`` integrates along the segment (n = 1 only; in 1D the
        straight path is optimal since the integrand is nonnegative).
        ``path_quadrature`` takes the best of the straight segment and
        ``candidate_paths``. ``grid_graph`` runs a shortest-path search on
        an 8-connected grid with ``cells`` cells per axis (n = 2).
    return_error : bool
        Also return an error estimate: the quadrature refinement gap, or
        the largest edge length times the largest edge weight for graphs.
    """
    if isinstance(t, SlopeDistanceQuery):
        query = t
        t, q0, q1, alpha, method = query.t, query.q0, query.q1, query.alpha, query.method
        candidate_paths = query.candidate_paths or candidate_paths
    if method not in METHODS:
        raise DomainError(f"unknown slope distance method {method!r}")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    t = system.time(t)
    q0, q1 = system.point(q0), system.point(q1)
    n = system.dimension
    if method == "exact_1d" and n != 1:
        raise DomainError("exact_1d slope distances need a one-dimensional system")
    if method == "grid_graph" and n != 2:
        raise DomainError("grid_graph slope distances need a two-dimensional system")
    if np.array_equal(q0, q1):
        return (0.0, 0.0) if return_error else 0.0
    if method == "grid_graph":
        def weight(points):
            return np.maximum(system.slopes(t, points), alpha)

        value, edge = grid_graph_cost(system, q0, q1, weight=weight, cells=cells)
        if return_error:
            pts = np.array([q0, q1])
            return value, edge * float(np.max(weight(pts))) * 2.0
        return value
    straight = np.array([q0, q1])
    value = path_integral(system, t, straight, alpha)
    error = abs(value - path_integral(system, t, straight, alpha, panels=2)) if return_error else 0.0
    if n > 1 or method == "path_quadrature":
        for path in candidate_paths or ():
            path = np.atleast_2d(np.asarray(path, dtype=float))
            if not (np.allclose(path[0], q0, atol=1e-9) and np.allclose(path[-1], q1, atol=1e-9)):
                # allow reversed candidates
                if np.allclose(path[-1], q0, atol=1e-9) and np.allclose(path[0], q1, atol=1e-9):
                    path = path[::-1]
                else:
                    raise DomainError("candidate path endpoints do not match q0 and q1")
            value = min(value, path_integral(system, t, path, alpha))
    return (value, error) if return_error else value


# ---------------------------------------------------------------------------
# dissipation functionals


@dataclass
class DissipationBudget:
    interval: tuple
    sigma0: float
    gamma: float
    sigma1: float
    gamma_star: float | None = None
    breakdown: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "interval": list(self.interval),
            "sigma0": self.sigma0,
            "gamma": self.gamma,
            "sigma1": self.sigma1,
            "gamma_star": self.gamma_star,
            "breakdown": self.breakdown,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _half_terms(system: System, half) -> dict:
    t = half.t
    a, b = half.q_from, half.q_to
    energy = system.energy
    drop = float(energy.evaluate(t, a) - energy.evaluate(t, b))
    if np.array_equal(a, b):
        return {"t": t, "energy_drop": 0.0, "s0": 0.0, "s1": 0.0, "distance": 0.0}
    paths = [half.path] if half.path is not None and system.dimension > 1 else None
    return {
        "t": t,
        "energy_drop": drop,
        "s0": slope_distance(system, t, a, b, 0.0, candidate_paths=paths),
        "s1": slope_distance(system, t, a, b, 1.0, candidate_paths=paths),
        "distance": float(pair_lengths(system, a[None, :], b[None, :])[0]),
    }


def _diffuse(system: System, bv: BVTrajectory, t0: float, t1: float) -> dict:
    ta, tb, qa, qb = bv.segments(t0, t1)
    t, q, w_dt, w_len = _nodes(system, ta, tb, qa, qb, levels=(1.0,))
    if t.size == 0:
        return {"slope": 0.0, "slope_max1": 0.0, "excess_time": 0.0, "power": 0.0, "variation": 0.0}
    xi = system.slopes(t, q)
    return {
        "slope": float(np.sum(w_len * xi)),
        "slope_max1": float(np.sum(w_len * np.maximum(xi, 1.0))),
        "excess_time": float(np.sum(w_dt * np.maximum(xi - 1.0, 0.0))),
        "power": float(np.sum(w_dt * system.energy.partial_t(t, q))),
        "variation": float(np.sum(w_len)),
    }


def _check_interval(bv: BVTrajectory, t0: float, t1: float):
    t0, t1 = float(t0), float(t1)
    if t0 > t1 or t0 < bv.start - 1e-9 or t1 > bv.horizon + 1e-9:
        raise DomainError(f"[{t0}, {t1}] is not a subinterval of [{bv.start}, {bv.horizon}]")
    return max(t0, bv.start), min(t1, bv.horizon)


def sigma0(system: System, bv: BVTrajectory, t0: float | None = None, t1: float | None = None) -> DissipationBudget:
    """``Sigma_0``, ``Gamma`` and ``Sigma_1`` on ``[t0, t1]`` with their breakdown."""
    t0 = bv.start if t0 is None else t0
    t1 = bv.horizon if t1 is None else t1
    t0, t1 = _check_interval(bv, t0, t1)
    diffuse = _diffuse(system, bv, t0, t1)
    halves = [_half_terms(system, h) for h in bv.half_jumps(t0, t1)]
    boundary = [h for h in halves if abs(h["t"] - t0) <= 1e-12 or abs(h["t"] - t1) <= 1e-12]
    interior = [h for h in halves if h not in boundary]
    s0 = diffuse["slope"] + sum(h["s0"] for h in halves)
    gam = diffuse["slope"] + sum(abs(h["energy_drop"]) for h in halves)
    s1 = diffuse["slope_max1"] + diffuse["excess_time"] + sum(h["s1"] for h in halves)
    breakdown = {"diffuse": diffuse, "boundary_jumps": boundary, "interior_jumps": interior}
    return DissipationBudget((t0, t1), s0, gam, s1, None, breakdown)


def gamma_func(system: System, bv: BVTrajectory, t0: float | None = None, t1: float | None = None) -> float:
    return sigma0(system, bv, t0, t1).gamma


def sigma1(system: System, bv: BVTrajectory, t0: float | None = None, t1: float | None = None) -> float:
    return sigma0(system, bv, t0, t1).sigma1


def _coarse_segments(bv: BVTrajectory, a: float, b: float, max_segments: int):
    ta, tb, qa, qb = bv.segments(a, b)
    if ta.size <= max_segments:
        return ta, tb, qa, qb
    parts = []
    per_piece = max(max_segments // max(len(bv.pieces), 1), 4)
    for piece in bv.pieces:
        lo, hi = max(a, piece.start), min(b, piece.end)
        if hi <= lo:
            continue
        times = piece.times
        grid = np.concatenate([[lo], times[(times > lo) & (times < hi)], [hi]])
        if grid.size > per_piece + 1:
            idx = np.unique(np.round(np.linspace(0, grid.size - 1, per_piece + 1)).astype(int))
            grid = grid[idx]
        states = piece(grid)
        parts.append((grid[:-1], grid[1:], states[:-1], states[1:]))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


def gamma_star(system: System, bv: BVTrajectory, r: float | None = None, s: float | None = None,
               grid_resolution: float | None = None, max_segments: int = 400) -> float:
    """``Gamma_*`` on ``[r, s]`` using the global slope on a grid.

    Trajectories with more than ``max_segments`` segments are subsampled for
    the diffuse integrals, since every node costs a global search.
    """
    r = bv.start if r is None else r
    s = bv.horizon if s is None else s
    r, s = _check_interval(bv, r, s)
    ta, tb, qa, qb = _coarse_segments(bv, r, s, max_segments)
    t, q, w_dt, w_len = _nodes(system, ta, tb, qa, qb, panels=1, levels=(1.0,))
    total = 0.0
    for ti, qi, wd, wl in zip(t, q, w_dt, w_len):
        g = global_slope(system, float(ti), np.clip(qi, system.lo, system.hi), grid_resolution)
        total += wl * max(g, 1.0) + wd * max(g - 1.0, 0.0)
    energy = system.energy
    for half in bv.half_jumps(r, s):
        drop = abs(float(energy.evaluate(half.t, half.q_from) - energy.evaluate(half.t, half.q_to)))
        dist = float(pair_lengths(system, half.q_from[None, :], half.q_to[None, :])[0])
        total += max(drop, dist)
    return float(total)


def work_integral(system: System, bv: BVTrajectory, t0: float, t1: float) -> float:
    """``int_{t0}^{t1} partial_t E(t, q(t)) dt``."""
    t0, t1 = _check_interval(bv, t0, t1)
    return _diffuse(system, bv, t0, t1)["power"]


def chain_rule_residual(system: System, bv: BVTrajectory, t0: float | None = None,
                        t1: float | None = None) -> float:
    """``E(t1, q(t1)) - E(t0, q(t0)) - int partial_t E + Gamma``, nonnegative for every BV curve."""
    t0 = bv.start if t0 is None else t0
    t1 = bv.horizon if t1 is None else t1
    t0, t1 = _check_interval(bv, t0, t1)
    budget = sigma0(system, bv, t0, t1)
    energy = system.energy
    e1 = float(energy.evaluate(t1, bv.value(t1)))
    e0 = float(energy.evaluate(t0, bv.value(t0)))
    return e1 - e0 - budget.breakdown["diffuse"]["power"] + budget.gamma


@dataclass
class CumulativeFunctionals:
    """Running values from the start time at each breakpoint of a BV curve.

    Values at a jump time use ``q(t)`` and include the left half of the jump.
    Increments over ``[t_j, t_k]`` are differences of entries, by additivity.
    """

    times: np.ndarray
    energy: np.ndarray
    work: np.ndarray
    sigma0: np.ndarray
    gamma: np.ndarray
    sigma1: np.ndarray
    variation: np.ndarray
    slope_variation: np.ndarray


def cumulative_functionals(system: System, bv: BVTrajectory) -> CumulativeFunctionals:
    """Cumulative energy, work, dissipation and variation at all breakpoints."""
    ta, tb, qa, qb = bv.segments()
    times = np.unique(np.concatenate([ta, tb, bv.jump_times, [bv.start, bv.horizon]]))
    m = times.size
    inc = {k: np.zeros(m) for k in ("work", "s0", "s1", "var")}
    if ta.size:
        tt, qq, w_dt, w_len = _nodes(system, ta, tb, qa, qb, levels=(1.0,))
        # node -> breakpoint interval that ends at the owning segment's right end
        seg_of_node = np.searchsorted(times, tt, side="right")
        seg_of_node = np.clip(seg_of_node, 1, m - 1)
        xi = system.slopes(tt, qq)
        np.add.at(inc["work"], seg_of_node, w_dt * system.energy.partial_t(tt, qq))
        np.add.at(inc["s0"], seg_of_node, w_len * xi)
        np.add.at(inc["s1"], seg_of_node, w_len * np.maximum(xi, 1.0) + w_dt * np.maximum(xi - 1.0, 0.0))
        np.add.at(inc["var"], seg_of_node, w_len)
    left = {k: np.zeros(m) for k in ("s0", "gamma", "s1", "var")}
    right = {k: np.zeros(m) for k in ("s0", "gamma", "s1", "var")}
    for half in bv.half_jumps():
        k = int(np.argmin(np.abs(times - half.t)))
        terms = _half_terms(system, half)
        side = left if half.side == "left" else right
        side["s0"][k] += terms["s0"]
        side["gamma"][k] += abs(terms["energy_drop"])
        side["s1"][k] += terms["s1"]
        side["var"][k] += terms["distance"]
    diffuse_s0 = np.cumsum(inc["s0"])
    shift = {k: np.concatenate([[0.0], np.cumsum(right[k])[:-1]]) for k in right}
    cum_left = {k: np.cumsum(left[k]) for k in left}
    s0 = diffuse_s0 + cum_left["s0"] + shift["s0"]
    gam = diffuse_s0 + cum_left["gamma"] + shift["gamma"]
    s1 = np.cumsum(inc["s1"]) + cum_left["s1"] + shift["s1"]
    var = np.cumsum(inc["var"]) + cum_left["var"] + shift["var"]
    states = np.array([bv.value(t) for t in times])
    energy = np.asarray(system.energy.evaluate(times, states), dtype=float)
    return CumulativeFunctionals(times, energy, np.cumsum(inc["work"]), s0, gam, s1, var, diffuse_s0)


def max_increase(values: np.ndarray) -> float:
    """``max_{j < k} (values[k] - values[j])`` (0 for fewer than two entries)."""
    if values.size < 2:
        return 0.0
    running_min = np.minimum.accumulate(values[:-1])
    return float(max(np.max(values[1:] - running_min), 0.0))


def max_decrease(values: np.ndarray) -> float:
    return max_increase(-values)


def jump_relation_residuals(system: System, bv: BVTrajectory) -> list:
    """Residuals of ``dE = S_0 = S_1`` for each half jump and the whole jump.

    Returns one dict per jump with the three rows ``(q-, q)``, ``(q, q+)``,
    ``(q-, q+)`` and their largest residual.
    """
    out = []
    energy = system.energy
    for jump in bv.jumps:
        rows = []
        left, right = jump.halves()
        if system.dimension > 1 and jump.path is not None:
            paths = {"left": [left], "right": [right], "full": [jump.path]}
        else:
            paths = {"left": None, "right": None, "full": None}
        for name, a, b in (("left", jump.q_minus, jump.q_point), ("right", jump.q_point, jump.q_plus),
                           ("full", jump.q_minus, jump.q_plus)):
            drop = float(energy.evaluate(jump.t, a) - energy.evaluate(jump.t, b))
            s0 = slope_distance(system, jump.t, a, b, 0.0, candidate_paths=paths[name])
            s1 = slope_distance(system, jump.t, a, b, 1.0, candidate_paths=paths[name])
            rows.append({"pair": name, "energy_drop": drop, "s0": s0, "s1": s1,
                         "residual": max(abs(drop - s0), abs(s0 - s1))})
        out.append({"t": jump.t, "rows": rows, "residual": max(r["residual"] for r in rows)})
    return out


# ---------------------------------------------------------------------------
# jump paths


def _path_checks(system: System, t: float, path: np.ndarray) -> dict:
    energy = system.energy
    drop = float(energy.evaluate(t, path[0]) - energy.evaluate(t, path[-1]))
    dissipation = path_integral(system, t, path)
    # slope along the path, on segment nodes and vertices
    qa, qb = path[:-1], path[1:]
    lam = np.linspace(0.0, 1.0, 9)
    pts = (qa[:, None, :] + lam[None, :, None] * (qb - qa)[:, None, :]).reshape(-1, path.shape[1])
    slopes = system.slopes(t, pts)
    return {"energy_drop": drop, "dissipation": dissipation, "min_slope": float(np.min(slopes)),
            "identity_residual": abs(drop - dissipation)}


def jump_transition(system: System, t: float, q_minus, step: float | None = None,
                    max_length: float | None = None, tol: float = 1e-9) -> JumpRecord:
    """Follow the unit-speed steepest descent from ``q_minus`` until the slope drops below 1.

    Returns a jump record with the connecting path, ``q_point = q_minus``
    and ``info`` holding the energy drop, the slope-weighted length of the
    path, the minimum slope along it and the energy-identity residual. When
    the descent immediately enters the region with slope below 1 the
    record is degenerate (``q_plus = q_minus``) and ``info["degenerate"]``
    is set.

    Raises
    ------
    DomainError
        If the slope at ``q_minus`` is below ``1 - tol``.
    SolverError
        If the path does not terminate within ``max_length``.
    """
    t = system.time(t)
    q = system.point(q_minus)
    slope0 = float(system.slopes(t, q))
    if slope0 < 1.0 - tol:
        raise DomainError(f"jump transitions start where the slope is at least 1; slope is {slope0:.6g}")
    n = system.dimension
    span = float(np.min(system.hi - system.lo))
    h = step if step is not None else span / 4096.0
    max_length = max_length if max_length is not None else 4.0 * system.diameter
    energy = system.energy

    def degenerate(reason):
        rec = JumpRecord(t, q, q, q, np.array([q, q]), np.array([0.0, 1.0]), 0.0)
        rec.info.update({"degenerate": True, "reason": reason, "energy_drop": 0.0, "dissipation": 0.0,
                         "min_slope": slope0, "identity_residual": 0.0})
        return rec

    grad = energy.grad_q(t, q)
    direction = system.norm.descent_direction(q, grad)
    probe = np.clip(q + 1e-6 * span * direction, system.lo, system.hi)
    if not np.any(direction) or float(system.slopes(t, probe)) < 1.0:
        return degenerate("slope drops below 1 along the descent direction")

    if n == 1:
        x0 = float(q[0])
        sign = float(np.sign(direction[0]))
        limit = float(system.hi[0] if sign > 0 else system.lo[0])
        reach = min(abs(limit - x0), max_length)
        grid = x0 + sign * np.linspace(1e-6 * span, reach, max(int(reach / h), 2))
        slopes = system.slopes(t, grid[:, None])
        below = np.nonzero(slopes < 1.0)[0]
        if below.size == 0:
            raise SolverError(f"descent from {x0} at t={t} does not terminate within the box", np.array([grid[-1]]))
        k = int(below[0])
        a = float(grid[k - 1]) if k > 0 else x0 + sign * 1e-6 * span
        b = float(grid[k])
        root = optimize.brentq(lambda x: float(system.slopes(t, np.array([x]))) - 1.0, min(a, b), max(a, b),
                               xtol=1e-13, rtol=4 * np.finfo(float).eps)
        knots = [kn for kn in getattr(energy, "knots", ()) if min(x0, root) < kn < max(x0, root)]
        pts = np.unique(np.concatenate([np.linspace(x0, root, 65), knots]))
        if sign < 0:
            pts = pts[::-1]
        path = pts[:, None]
    else:
        pts = [q.copy()]
        y = q.copy()
        travelled = 0.0
        while True:
            grad = energy.grad_q(t, y)
            v = system.norm.descent_direction(y, grad)
            nxt = np.clip(y + h * v, system.lo, system.hi)
            travelled += float(pair_lengths(system, y[None, :], nxt[None, :])[0])
            if float(system.slopes(t, nxt)) < 1.0:
                lo_f, hi_f = 0.0, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo_f + hi_f)
                    if float(system.slopes(t, y + mid * (nxt - y))) >= 1.0:
                        lo_f = mid
                    else:
                        hi_f = mid
                y = y + lo_f * (nxt - y)
                pts.append(y.copy())
                break
            if np.array_equal(nxt, y) or travelled > max_length:
                raise SolverError(f"descent at t={t} does not terminate within length {max_length}", y)
            y = nxt
            pts.append(y.copy())
        path = np.array(pts)
        if path.shape[0] > 257:
            idx = np.unique(np.round(np.linspace(0, path.shape[0] - 1, 257)).astype(int))
            path = path[idx]
    rec = JumpRecord(t, path[0], path[0], path[-1], path, None, 0.0)
    rec.info.update(_path_checks(system, t, path))
    rec.info["degenerate"] = False
    return rec
