"""Curve containers: sampled trajectories, BV trajectories with jumps, and
parametrized curves in the extended state space ``[0, T] x R^n``.

All containers linearly interpolate between their samples.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

CONVENTIONS = ("left", "right", "supplied")
_TIME_TOL = 1e-12


def _states(states, count: int) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if states.ndim != 2 or states.shape[0] != count:
        raise DomainError("states must have one row per sample")
    return states


def _interp(times: np.ndarray, states: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    cols = [np.interp(t, times, states[:, i]) for i in range(states.shape[1])]
    return np.stack(cols, axis=-1)


@dataclass(eq=False)
class Trajectory:
    """Sampled time-continuous trajectory, e.g. the output of a viscous solve."""

    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).ravel()
        self.states = _states(self.states, self.times.size)
        if self.times.size == 0:
            raise DomainError("a trajectory needs at least one sample")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("trajectory times must be strictly increasing")

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return _interp(self.times, self.states, t)

    def as_bv(self) -> "BVTrajectory":
        return BVTrajectory((Piece(self.times, self.states),), (), "left")


@dataclass(eq=False)
class Piece:
    """Continuous piece of a BV trajectory between jump times."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).ravel()
        self.states = _states(self.states, self.times.size)
        if self.times.size < 2 or np.any(np.diff(self.times) <= 0):
            raise DomainError("a piece needs at least two samples with increasing times")

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return _interp(self.times, self.states, t)


@dataclass(eq=False)
class JumpRecord:
    """A jump at time ``t`` together with its connecting path.

    ``path`` holds samples of a curve from ``q_minus`` to ``q_plus``;
    ``path_params`` are their parameters in [0, 1] and ``theta`` is the
    parameter where the path passes through ``q_point``. A record without a
    path is allowed; validators that need one report it as missing.
    """

    t: float
    q_minus: np.ndarray
    q_point: np.ndarray
    q_plus: np.ndarray
    path: np.ndarray | None = None
    path_params: np.ndarray | None = None
    theta: float | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = float(self.t)
        self.q_minus = np.atleast_1d(np.asarray(self.q_minus, dtype=float))
        self.q_point = np.atleast_1d(np.asarray(self.q_point, dtype=float))
        self.q_plus = np.atleast_1d(np.asarray(self.q_plus, dtype=float))
        if self.path is not None:
            self.path = _states(self.path, len(self.path))
            if self.path.shape[0] < 2:
                raise DomainError("a jump path needs at least two samples")
            if self.path_params is None:
                steps = np.linalg.norm(np.diff(self.path, axis=0), axis=1)
                total = steps.sum()
                cum = np.concatenate([[0.0], np.cumsum(steps)])
                self.path_params = cum / total if total > 0 else np.linspace(0.0, 1.0, len(self.path))
            self.path_params = np.asarray(self.path_params, dtype=float).ravel()
            if self.theta is None:
                gaps = np.linalg.norm(self.path - self.q_point, axis=1)
                self.theta = float(self.path_params[int(np.argmin(gaps))])
        if self.theta is not None:
            self.theta = float(self.theta)

    @property
    def dimension(self) -> int:
        return self.q_minus.size

    @property
    def degenerate(self) -> bool:
        return bool(np.allclose(self.q_minus, self.q_plus, rtol=0, atol=1e-14))

    def point_at(self, theta: float) -> np.ndarray:
        if self.path is None:
            raise DomainError("jump record has no path")
        return _interp(self.path_params, self.path, theta)

    def polyline(self) -> np.ndarray:
        """The recorded path, or the straight polyline through the three points."""
        if self.path is not None:
            return self.path
        pts = [self.q_minus]
        for p in (self.q_point, self.q_plus):
            if not np.allclose(p, pts[-1], rtol=0, atol=0):
                pts.append(p)
        if len(pts) == 1:
            pts.append(self.q_plus)
        return np.array(pts)

    def halves(self) -> tuple[np.ndarray, np.ndarray]:
        """Path samples from ``q_minus`` to ``q_point`` and from there to ``q_plus``."""
        if self.path is None:
            return (np.array([self.q_minus, self.q_point]), np.array([self.q_point, self.q_plus]))
        theta = self.theta
        before = self.path_params < theta
        after = self.path_params > theta
        left = np.vstack([self.path[before], self.q_point[None, :]])
        right = np.vstack([self.q_point[None, :], self.path[after]])
        if left.shape[0] == 1:
            left = np.vstack([left, left])
        if right.shape[0] == 1:
            right = np.vstack([right, right])
        return left, right


@dataclass(frozen=True)
class HalfJump:
    """One side of a jump, a transition at frozen time from ``q_from`` to ``q_to``."""

    t: float
    q_from: np.ndarray
    q_to: np.ndarray
    path: np.ndarray
    jump: JumpRecord
    side: str = "left"


@dataclass(eq=False)
class BVTrajectory:
    """Everywhere-defined BV trajectory: continuous pieces separated by jumps.

    Pieces are ordered in time; interior jump times coincide with the end of
    one piece and the start of the next, with the piece endpoints equal to
    the jump's left and right limits. Jumps may also sit at the start time
    (before the first piece) or at the final time (after the last piece).
    """

    pieces: tuple
    jumps: tuple = ()
    convention: str = "left"

    def __post_init__(self):
        self.pieces = tuple(self.pieces)
        self.jumps = tuple(sorted(self.jumps, key=lambda j: j.t))
        if not self.pieces:
            raise DomainError("a BV trajectory needs at least one piece")
        if self.convention not in CONVENTIONS:
            raise DomainError(f"unknown jump convention {self.convention!r}")
        start, end = self.pieces[0].start, self.pieces[-1].end
        interior = [j for j in self.jumps if start + _TIME_TOL < j.t < end - _TIME_TOL]
        if len(interior) != len(self.pieces) - 1:
            raise DomainError("pieces and interior jumps do not alternate")
        for k, jump in enumerate(interior):
            left, right = self.pieces[k], self.pieces[k + 1]
            if abs(left.end - jump.t) > 1e-9 or abs(right.start - jump.t) > 1e-9:
                raise DomainError(f"jump at t={jump.t} does not separate adjacent pieces")
            if not np.allclose(left.states[-1], jump.q_minus, atol=1e-9) or \
                    not np.allclose(right.states[0], jump.q_plus, atol=1e-9):
                raise DomainError(f"jump limits at t={jump.t} differ from piece endpoints")
        for jump in self.jumps:
            if jump.t < start - 1e-9 or jump.t > end + 1e-9:
                raise DomainError(f"jump at t={jump.t} lies outside the trajectory")
            if abs(jump.t - start) <= _TIME_TOL and not np.allclose(self.pieces[0].states[0], jump.q_plus,
                                                                    atol=1e-9):
                raise DomainError("initial jump must end at the first piece")
            if abs(jump.t - end) <= _TIME_TOL and not np.allclose(self.pieces[-1].states[-1], jump.q_minus,
                                                                 atol=1e-9):
                raise DomainError("final jump must start at the last piece")

    # -- basic properties -------------------------------------------------
    @property
    def dimension(self) -> int:
        return self.pieces[0].states.shape[1]

    @property
    def start(self) -> float:
        return self.pieces[0].start

    @property
    def horizon(self) -> float:
        return self.pieces[-1].end

    @property
    def jump_times(self) -> np.ndarray:
        return np.array([j.t for j in self.jumps])

    def jump_at(self, t: float):
        for jump in self.jumps:
            if abs(jump.t - t) <= _TIME_TOL * (1 + abs(t)):
                return jump
        return None

    def _piece_for(self, t: float) -> Piece:
        for piece in self.pieces:
            if t <= piece.end + _TIME_TOL:
                return piece
        return self.pieces[-1]

    def _check(self, t: float):
        if t < self.start - 1e-9 or t > self.horizon + 1e-9:
            raise DomainError(f"time {t} outside [{self.start}, {self.horizon}]")

    # -- evaluation ------------------------------------------------------
    def value(self, t: float) -> np.ndarray:
        t = float(t)
        self._check(t)
        jump = self.jump_at(t)
        if jump is not None:
            return jump.q_point.copy()
        return self._piece_for(t)(t)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self.value(float(t))
        return np.array([self.value(float(x)) for x in t.ravel()]).reshape(t.shape + (self.dimension,))

    def left_limit(self, t: float) -> np.ndarray:
        t = float(t)
        self._check(t)
        jump = self.jump_at(t)
        if jump is not None:
            return jump.q_minus.copy()
        return self._piece_for(t)(t)

    def right_limit(self, t: float) -> np.ndarray:
        t = float(t)
        self._check(t)
        jump = self.jump_at(t)
        if jump is not None:
            return jump.q_plus.copy()
        return self._piece_for(t)(t)

    # -- decomposition used by integrals --------------------------------
    def segments(self, a: float | None = None, b: float | None = None):
        """Linear sub-segments of all pieces clipped to ``[a, b]``.

        Returns arrays ``ta, tb, qa, qb`` (the latter two of shape (m, n)).
        """
        a = self.start if a is None else float(a)
        b = self.horizon if b is None else float(b)
        parts = []
        for piece in self.pieces:
            lo, hi = max(a, piece.start), min(b, piece.end)
            if hi <= lo:
                continue
            times = piece.times
            inner = times[(times > lo) & (times < hi)]
            grid = np.concatenate([[lo], inner, [hi]])
            states = piece(grid)
            parts.append((grid[:-1], grid[1:], states[:-1], states[1:]))
        if not parts:
            n = self.dimension
            return np.zeros(0), np.zeros(0), np.zeros((0, n)), np.zeros((0, n))
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))

    def half_jumps(self, a: float | None = None, b: float | None = None) -> list:
        """Jump contributions on ``[a, b]`` following the boundary convention of Var.

        Interior jumps contribute both halves, a jump at ``a`` only its right
        half and a jump at ``b`` only its left half.
        """
        a = self.start if a is None else float(a)
        b = self.horizon if b is None else float(b)
        out = []
        for jump in self.jumps:
            if jump.t < a - _TIME_TOL or jump.t > b + _TIME_TOL:
                continue
            left_path, right_path = jump.halves()
            at_a = abs(jump.t - a) <= _TIME_TOL
            at_b = abs(jump.t - b) <= _TIME_TOL
            if not at_a:
                out.append(HalfJump(jump.t, jump.q_minus, jump.q_point, left_path, jump, "left"))
            if not at_b:
                out.append(HalfJump(jump.t, jump.q_point, jump.q_plus, right_path, jump, "right"))
        return out

    def sample_times(self) -> np.ndarray:
        return np.unique(np.concatenate([p.times for p in self.pieces]))

    def with_point_values(self, convention: str, theta: float | None = None) -> "BVTrajectory":
        """Copy with ``q(t)`` at jumps chosen by convention (left, right or a path parameter)."""
        jumps = []
        for jump in self.jumps:
            if convention == "left":
                point, th = jump.q_minus, 0.0
            elif convention == "right":
                point, th = jump.q_plus, 1.0
            elif convention == "supplied":
                if theta is None:
                    raise DomainError("the supplied convention needs a path parameter theta")
                point, th = jump.point_at(theta), float(theta)
            else:
                raise DomainError(f"unknown jump convention {convention!r}")
            jumps.append(JumpRecord(jump.t, jump.q_minus, point, jump.q_plus, jump.path,
                                    jump.path_params, th if jump.path is not None else None))
        return BVTrajectory(self.pieces, tuple(jumps), convention)


@dataclass(eq=False)
class ParametrizedCurve:
    """Curve ``s -> (t_hat(s), q_hat(s))`` in the extended state space.

    ``alpha`` and ``nu`` are the per-interval speeds ``dt_hat/ds`` and
    ``d(q_i, q_{i+1})/ds``; use :func:`make_curve` to compute them from a
    system's distance.
    """

    params: np.ndarray
    t_hat: np.ndarray
    q_hat: np.ndarray
    alpha: np.ndarray
    nu: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float).ravel()
        self.t_hat = np.asarray(self.t_hat, dtype=float).ravel()
        self.q_hat = _states(self.q_hat, self.params.size)
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        self.nu = np.asarray(self.nu, dtype=float).ravel()
        m = self.params.size
        if m == 0 or self.t_hat.size != m:
            raise DomainError("curve samples have inconsistent lengths")
        if self.alpha.size != max(m - 1, 0) or self.nu.size != max(m - 1, 0):
            raise DomainError("speeds need one entry per interval")
        if np.any(np.diff(self.params) <= 0):
            raise DomainError("curve parameters must be strictly increasing")

    @property
    def dimension(self) -> int:
        return self.q_hat.shape[1]

    @property
    def span(self) -> float:
        return float(self.params[-1] - self.params[0])

    @property
    def normalization_error(self) -> float:
        if self.alpha.size == 0:
            return 0.0
        return float(np.max(np.abs(self.alpha + self.nu - 1.0)))

    @property
    def normalized(self) -> bool:
        return self.normalization_error <= 1e-9

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.interp(s, self.params, self.t_hat), _interp(self.params, self.q_hat, s)


def make_curve(system, params, t_hat, q_hat, meta=None) -> ParametrizedCurve:
    """Build a :class:`ParametrizedCurve`, computing speeds with the system's distance."""
    from .systems import pair_lengths

    params = np.asarray(params, dtype=float).ravel()
    t_hat = np.asarray(t_hat, dtype=float).ravel()
    q_hat = _states(q_hat, params.size)
    ds = np.diff(params)
    if np.any(ds <= 0):
        raise DomainError("curve parameters must be strictly increasing")
    alpha = np.diff(t_hat) / ds
    nu = pair_lengths(system, q_hat[:-1], q_hat[1:]) / ds
    return ParametrizedCurve(params, t_hat, q_hat, alpha, nu, dict(meta or {}))


def piecewise_bv(breaks, formulas, jumps=(), samples: int = 2, convention: str = "left") -> BVTrajectory:
    """BV trajectory from closed-form continuous pieces.

    Parameters
    ----------
    breaks : sequence of float
        Piece boundaries ``b_0 < b_1 < ... < b_k``.
    formulas : sequence of callables
        ``formulas[i](t)`` gives the state on ``[b_i, b_{i+1}]``.
    jumps : sequence of JumpRecord
        Jumps; interior ones must sit at piece boundaries.
    samples : int
        Samples per piece (2 is exact for affine formulas).
    """
    pieces = []
    for i, formula in enumerate(formulas):
        ts = np.linspace(breaks[i], breaks[i + 1], samples)
        qs = np.array([np.atleast_1d(np.asarray(formula(t), dtype=float)) for t in ts])
        pieces.append(Piece(ts, qs))
    # merge pieces not separated by a jump
    jump_times = [j.t for j in jumps]
    merged = [pieces[0]]
    for i, piece in enumerate(pieces[1:], start=1):
        boundary = breaks[i]
        if any(abs(boundary - jt) <= 1e-12 for jt in jump_times):
            merged.append(piece)
        else:
            prev = merged[-1]
            merged[-1] = Piece(np.concatenate([prev.times, piece.times[1:]]),
                               np.vstack([prev.states, piece.states[1:]]))
    return BVTrajectory(tuple(merged), tuple(jumps), convention)
