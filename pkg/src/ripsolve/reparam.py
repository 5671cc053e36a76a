"""Variation, arclength reparametrization and projection back to BV curves.

A BV trajectory ``q`` induces the variation function ``V(t) = Var(q, [0, t])``
and ``sigma(t) = t + V(t)``. Its arclength curve ``(t_hat, q_hat)`` walks the
continuous pieces with unit speed ``dt_hat + d(q_hat) = ds`` and traverses
each jump along its connecting path at frozen time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import BVTrajectory, JumpRecord, ParametrizedCurve, Piece, Trajectory, make_curve
from .errors import DomainError
from .quadrature import segment_rule
from .systems import System, pair_lengths

PLATEAU_TOL = 1e-9


def _as_bv(traj) -> BVTrajectory:
    if isinstance(traj, BVTrajectory):
        return traj
    if isinstance(traj, Trajectory):
        return traj.as_bv()
    raise DomainError(f"expected a trajectory, got {type(traj).__name__}")


def _lengths(system: System | None, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if system is None:
        return np.linalg.norm(b - a, axis=-1)
    return pair_lengths(system, a, b)


def variation(traj, a: float | None = None, b: float | None = None, system: System | None = None) -> float:
    """Total variation ``Var(q, [a, b])`` of a sampled or BV trajectory.

    Continuous parts contribute the sum of consecutive distances. A jump
    inside ``(a, b)`` contributes ``d(q(t-), q(t)) + d(q(t), q(t+))``; a jump
    at ``a`` only its right half and a jump at ``b`` only its left half.
    Distances use ``system``'s norm, or the Euclidean one without a system.
    """
    bv = _as_bv(traj)
    a = bv.start if a is None else float(a)
    b = bv.horizon if b is None else float(b)
    if a > b:
        raise DomainError(f"variation needs a <= b, got [{a}, {b}]")
    if a < bv.start - 1e-9 or b > bv.horizon + 1e-9:
        raise DomainError(f"[{a}, {b}] is not inside [{bv.start}, {bv.horizon}]")
    if a == b:
        return 0.0
    ta, tb, qa, qb = bv.segments(a, b)
    total = float(np.sum(_lengths(system, qa, qb)))
    for half in bv.half_jumps(a, b):
        total += float(_lengths(system, half.q_from[None, :], half.q_to[None, :])[0])
    return total


@dataclass(eq=False)
class VariationMeasure:
    """The variation measure ``mu_q`` of a BV trajectory.

    ``times`` are the breakpoints of the trajectory (piece samples and jump
    times). At each one ``v_minus``, ``v_at`` and ``v_plus`` hold ``V(t-)``,
    ``V(t)`` and ``V(t+)``; they differ only at jumps. ``sigma_*`` are
    ``t + V``. Between breakpoints ``V`` grows linearly with slope
    ``diffuse_density``.
    """

    times: np.ndarray
    v_minus: np.ndarray
    v_at: np.ndarray
    v_plus: np.ndarray
    diffuse_density: np.ndarray
    atoms: list
    trajectory: BVTrajectory
    system: System | None = None

    @property
    def sigma_minus(self) -> np.ndarray:
        return self.times + self.v_minus

    @property
    def sigma_at(self) -> np.ndarray:
        return self.times + self.v_at

    @property
    def sigma_plus(self) -> np.ndarray:
        return self.times + self.v_plus

    @property
    def total_mass(self) -> float:
        return float(self.v_plus[-1])

    @property
    def diffuse_mass(self) -> float:
        return float(np.sum(self.diffuse_density * np.diff(self.times)))

    @property
    def atomic_mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def _locate(self, t: float):
        t = float(t)
        if t < self.times[0] - 1e-9 or t > self.times[-1] + 1e-9:
            raise DomainError(f"time {t} outside the trajectory")
        k = int(np.searchsorted(self.times, t))
        if k < self.times.size and abs(self.times[k] - t) <= 1e-12 * (1 + abs(t)):
            return k, None
        if k > 0 and abs(self.times[k - 1] - t) <= 1e-12 * (1 + abs(t)):
            return k - 1, None
        k = min(max(k, 1), self.times.size - 1)
        return k - 1, t - self.times[k - 1]

    def v(self, t: float, side: str = "at") -> float:
        """``V(t)``; ``side`` selects the left limit, the value or the right limit."""
        k, offset = self._locate(t)
        if offset is None:
            table = {"minus": self.v_minus, "at": self.v_at, "plus": self.v_plus}
            if side not in table:
                raise DomainError("side must be minus, at or plus")
            return float(table[side][k])
        return float(self.v_plus[k] + self.diffuse_density[k] * offset)

    def sigma(self, t: float, side: str = "at") -> float:
        return float(t) + self.v(t, side)

    def rho(self, t: float, side: str = "at") -> float:
        return self.v(t, side)


def arclength_profile(system: System | None, traj) -> VariationMeasure:
    """Variation measure of a sampled or BV trajectory, with ``V(start) = 0``."""
    bv = _as_bv(traj)
    ta, tb, qa, qb = bv.segments()
    lengths = _lengths(system, qa, qb)
    times = np.unique(np.concatenate([ta, tb, bv.jump_times])) if ta.size else \
        np.unique(np.concatenate([[bv.start, bv.horizon], bv.jump_times]))
    m = times.size
    increments = np.zeros(max(m - 1, 0))
    # segments are sub-intervals of consecutive breakpoints
    idx = np.searchsorted(times, ta)
    np.add.at(increments, idx, lengths)
    dt = np.diff(times)
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(dt > 0, increments / np.where(dt > 0, dt, 1.0), 0.0)
    left_w = np.zeros(m)
    right_w = np.zeros(m)
    atoms = []
    for jump in bv.jumps:
        k = int(np.argmin(np.abs(times - jump.t)))
        left = float(_lengths(system, jump.q_minus[None, :], jump.q_point[None, :])[0])
        right = float(_lengths(system, jump.q_point[None, :], jump.q_plus[None, :])[0])
        left_w[k] += left
        right_w[k] += right
        atoms.append((jump.t, left + right))
    v_minus = np.zeros(m)
    v_at = np.zeros(m)
    v_plus = np.zeros(m)
    running = 0.0
    for k in range(m):
        if k > 0:
            running += increments[k - 1]
        v_minus[k] = running
        # Var on [start, start] is zero even with an initial jump
        running += left_w[k] if k > 0 else 0.0
        v_at[k] = running
        running += right_w[k] + (left_w[k] if k == 0 else 0.0)
        v_plus[k] = running
    return VariationMeasure(times, v_minus, v_at, v_plus, density, atoms, bv, system)


def _chain_points(bv: BVTrajectory):
    """Time-ordered sample chain ``(t, q)`` of a BV trajectory with jump paths inserted."""
    ts, qs = [], []

    def push(t, pts):
        pts = np.atleast_2d(pts)
        ts.append(np.full(pts.shape[0], float(t)) if np.ndim(t) == 0 else np.asarray(t, dtype=float))
        qs.append(pts)

    start_jump = bv.jump_at(bv.start)
    end_jump = bv.jump_at(bv.horizon)
    if start_jump is not None:
        _, right = start_jump.halves()
        push(bv.start, right[:-1])
    interior = [j for j in bv.jumps if j is not start_jump and j is not end_jump]
    for k, piece in enumerate(bv.pieces):
        push(piece.times, piece.states)
        if k < len(interior):
            jump = interior[k]
            left, right = jump.halves()
            push(jump.t, left[1:])
            push(jump.t, right[1:-1])
    if end_jump is not None:
        # Var on [0, T] stops at q(T); the right half lies beyond the horizon
        left, _ = end_jump.halves()
        push(bv.horizon, left[1:])
    return np.concatenate(ts), np.vstack(qs)


def reparametrize(system: System | None, traj, s0: float = 0.0) -> ParametrizedCurve:
    """Arclength parametrization ``s -> (t_hat(s), q_hat(s))`` of a trajectory.

    Each interval satisfies ``dt_hat + d(q_hat_i, q_hat_{i+1}) = ds``. Jumps
    are traversed along their recorded paths (straight through ``q(t)``
    otherwise). ``s = sigma(t)`` at every sample time, with ``s`` at a jump
    running from ``sigma(t-)`` to ``sigma(t+)``.
    """
    bv = _as_bv(traj)
    t, q = _chain_points(bv)
    if t.size == 1:
        return ParametrizedCurve(np.array([s0]), t, q, np.zeros(0), np.zeros(0), {"source": "reparametrize"})
    dt = np.diff(t)
    dq = _lengths(system, q[:-1], q[1:])
    step = dt + dq
    keep = np.concatenate([[True], step > 0])
    t, q = t[keep], q[keep]
    step = step[keep[1:]]
    params = s0 + np.concatenate([[0.0], np.cumsum(step)])
    if params.size == 1:
        return ParametrizedCurve(params, t, q, np.zeros(0), np.zeros(0), {"source": "reparametrize"})
    curve = make_curve(system, params, t, q, {"source": "reparametrize"}) if system is not None else \
        ParametrizedCurve(params, t, q, np.diff(t) / np.diff(params),
                          np.linalg.norm(np.diff(q, axis=0), axis=1) / np.diff(params), {"source": "reparametrize"})
    return curve


def renormalize(system: System | None, curve: ParametrizedCurve, s0: float | None = None) -> ParametrizedCurve:
    """Re-parametrize a curve's samples by arclength in the extended space."""
    t, q = curve.t_hat, curve.q_hat
    dt = np.diff(t)
    if np.any(dt < -1e-12):
        raise DomainError("t_hat must be nondecreasing")
    dt = np.maximum(dt, 0.0)
    step = dt + _lengths(system, q[:-1], q[1:])
    keep = np.concatenate([[True], step > 0])
    t, q, step = t[keep], q[keep], step[keep[1:]]
    start = curve.params[0] if s0 is None else float(s0)
    params = start + np.concatenate([[0.0], np.cumsum(step)])
    if params.size == 1:
        return ParametrizedCurve(params, t, q, np.zeros(0), np.zeros(0), dict(curve.meta))
    if system is None:
        return ParametrizedCurve(params, t, q, np.diff(t) / step,
                                 np.linalg.norm(np.diff(q, axis=0), axis=1) / step, dict(curve.meta))
    return make_curve(system, params, t, q, curve.meta)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def project_to_bv(curve: ParametrizedCurve, convention: str = "left", horizon: float | None = None,
                  theta: float | None = None, start: float = 0.0, plateau_tol: float = PLATEAU_TOL) -> BVTrajectory:
    """BV trajectory ``q(t) = q_hat(s)`` with ``t_hat(s) = t``.

    Runs of intervals with ``dt_hat < plateau_tol`` become jumps whose path is
    the curve on that run. ``q(t)`` at a jump is the run's first point
    (``left``), its last point (``right``) or the point at path parameter
    ``theta`` (``supplied``, parameter proportional to ``s``).

    Raises
    ------
    DomainError
        If ``t_hat`` does not cover ``[start, horizon]``.
    """
    if convention not in ("left", "right", "supplied"):
        raise DomainError(f"unknown jump convention {convention!r}")
    if convention == "supplied" and theta is None:
        raise DomainError("the supplied convention needs theta")
    t = curve.t_hat
    s = curve.params
    q = curve.q_hat
    if np.any(np.diff(t) < -plateau_tol):
        raise DomainError("t_hat must be nondecreasing")
    lo, hi = float(t[0]), float(t[-1])
    if lo > start + plateau_tol:
        raise DomainError(f"t_hat does not cover the interval [{_fmt(start)}, {_fmt(lo)})")
    if horizon is not None and hi < horizon - plateau_tol:
        raise DomainError(f"t_hat does not cover the interval ({_fmt(hi)}, {_fmt(horizon)}]")
    flat = np.diff(t) < plateau_tol
    if np.all(flat):
        raise DomainError("t_hat is constant; the curve covers no time interval")
    pieces, jumps = [], []
    n_int = flat.size
    k = 0
    current_t, current_q = [], []

    def close_piece():
        if len(current_t) >= 2:
            pieces.append(Piece(np.array(current_t), np.array(current_q)))

    while k < n_int:
        if flat[k]:
            j = k
            while j < n_int and flat[j]:
                j += 1
            # plateau covers samples k..j
            seg_s = s[k:j + 1]
            path = q[k:j + 1]
            params = (seg_s - seg_s[0]) / (seg_s[-1] - seg_s[0])
            jt = float(t[k]) if current_t else lo
            if convention == "left":
                point, th = path[0], 0.0
            elif convention == "right":
                point, th = path[-1], 1.0
            else:
                th = float(theta)
                point = np.array([np.interp(th, params, path[:, i]) for i in range(path.shape[1])])
            jumps.append(JumpRecord(jt, path[0], point, path[-1], path, params, th))
            close_piece()
            current_t, current_q = [jt], [path[-1]]
            k = j
        else:
            if not current_t:
                current_t, current_q = [float(t[k])], [q[k]]
            current_t.append(float(t[k + 1]))
            current_q.append(q[k + 1])
            k += 1
    # a trailing plateau leaves a single pending sample: the jump sits at the final time
    close_piece()
    return BVTrajectory(tuple(pieces), tuple(jumps), convention)


def collapse_fast_segments(system: System | None, traj: Trajectory, threshold: float) -> ParametrizedCurve:
    """Arclength curve of a sampled trajectory with fast runs frozen in time.

    Consecutive intervals with speed ``d(q_k, q_{k+1}) / (t_{k+1} - t_k)``
    above ``threshold`` form a run. Its spatial motion is placed at the single
    time ``t_c`` (midpoint of the run's fastest interval); time advances at
    fixed state before and after. The result has true plateaus that
    :func:`project_to_bv` turns into jumps.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    t, q = traj.times, traj.states
    if t.size < 2:
        return reparametrize(system, traj)
    d = _lengths(system, q[:-1], q[1:])
    speed = d / np.diff(t)
    fast = speed > threshold
    new_t, new_q = [t[:1]], [q[:1]]
    k = 0
    n = fast.size
    while k < n:
        if fast[k]:
            j = k
            while j < n and fast[j]:
                j += 1
            # intervals k..j-1, samples k..j
            peak = k + int(np.argmax(speed[k:j]))
            tc = 0.5 * (t[peak] + t[peak + 1])
            new_t.append(np.array([tc]))
            new_q.append(q[k][None, :])
            new_t.append(np.full(j - k, tc))
            new_q.append(q[k + 1:j + 1])
            new_t.append(t[j:j + 1])
            new_q.append(q[j][None, :])
            k = j
        else:
            new_t.append(t[k + 1:k + 2])
            new_q.append(q[k + 1][None, :])
            k += 1
    t2 = np.concatenate(new_t)
    q2 = np.vstack(new_q)
    base = ParametrizedCurve(np.arange(t2.size, dtype=float), t2, q2, np.zeros(t2.size - 1), np.zeros(t2.size - 1))
    curve = renormalize(system, base, s0=0.0)
    curve.meta.update({"source": "collapse_fast_segments", "threshold": float(threshold),
                       "fast_intervals": int(np.count_nonzero(fast))})
    return curve


# ---------------------------------------------------------------------------
# integrals against the variation measure


def _call_test(test, t, q):
    try:
        out = np.asarray(test(t, q), dtype=float)
        if out.shape == np.shape(t):
            return out
        return np.broadcast_to(out, np.shape(t)).astype(float)
    except (TypeError, ValueError, IndexError):
        return np.array([float(test(ti, qi)) for ti, qi in zip(t, q)])


def measure_push(vm: VariationMeasure, test, a: float | None = None, b: float | None = None,
                 part: str = "all") -> float:
    """``int_[a, b] zeta d mu_q`` split into diffuse and atomic parts.

    ``test(t, q)`` is evaluated vectorized on time samples and the matching
    states. Atoms follow the boundary rule of :func:`variation`, so
    ``test = 1`` returns ``Var(q, [a, b])``.

    Parameters
    ----------
    part : {"all", "diffuse", "atomic"}
    """
    bv = vm.trajectory
    a = bv.start if a is None else float(a)
    b = bv.horizon if b is None else float(b)
    if a > b:
        raise DomainError("measure_push needs a <= b")
    total = 0.0
    if part in ("all", "diffuse"):
        ta, tb, qa, qb = bv.segments(a, b)
        if ta.size:
            lengths = _lengths(vm.system, qa, qb)
            moving = lengths > 0
            ta, tb, qa, qb, lengths = ta[moving], tb[moving], qa[moving], qb[moving], lengths[moving]
            if ta.size:
                lam, w, owner = segment_rule(ta, tb, qa, qb)
                tt = ta[owner] + lam * (tb[owner] - ta[owner])
                qq = qa[owner] + lam[:, None] * (qb[owner] - qa[owner])
                total += float(np.sum(w * lengths[owner] * _call_test(test, tt, qq)))
    if part in ("all", "atomic"):
        for half in bv.half_jumps(a, b):
            weight = float(_lengths(vm.system, half.q_from[None, :], half.q_to[None, :])[0])
            if weight > 0:
                point = bv.value(half.t)
                total += weight * float(_call_test(test, np.array([half.t]), point[None, :])[0])
    if part not in ("all", "diffuse", "atomic"):
        raise DomainError("part must be all, diffuse or atomic")
    return total


def curve_push(curve: ParametrizedCurve, test, s_from: float | None = None, s_to: float | None = None) -> float:
    """``int zeta(t_hat(s), q_hat(s)) |q_hat'|(s) ds`` over the curve's samples.

    Against a reparametrized BV curve this equals :func:`measure_push` with
    the test evaluated on the path at frozen time; for tests of ``t`` alone
    the two agree exactly up to quadrature.
    """
    s = curve.params
    lo = s[0] if s_from is None else float(s_from)
    hi = s[-1] if s_to is None else float(s_to)
    if curve.alpha.size == 0 or hi <= lo:
        return 0.0
    grid = np.concatenate([[lo], s[(s > lo) & (s < hi)], [hi]])
    ta, qa = curve(grid[:-1])
    tb, qb = curve(grid[1:])
    mids = 0.5 * (grid[:-1] + grid[1:])
    idx = np.clip(np.searchsorted(s, mids) - 1, 0, curve.nu.size - 1)
    length = curve.nu[idx] * np.diff(grid)
    lam, w, owner = segment_rule(ta, tb, qa, qb)
    tt = ta[owner] + lam * (tb[owner] - ta[owner])
    qq = qa[owner] + lam[:, None] * (qb[owner] - qa[owner])
    return float(np.sum(w * length[owner] * _call_test(test, tt, qq)))
