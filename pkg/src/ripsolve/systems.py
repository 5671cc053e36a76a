"""Rate-independent systems on R^n: norms, energies, slopes and distances.

A :class:`System` bundles a dissipation norm, a time-dependent energy and a
compact bounds box. All array-valued methods accept points with shape
``(..., n)`` and broadcast over the leading axes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import DomainError

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GAUSS_NODES = 0.5 * (_GAUSS_NODES + 1.0)
_GAUSS_WEIGHTS = 0.5 * _GAUSS_WEIGHTS


# ---------------------------------------------------------------------------
# norms


class NormField:
    """Base class for (possibly state-dependent) norms on tangent vectors."""

    name = "norm"
    state_dependent = False

    def __init__(self, dimension: int):
        if int(dimension) < 1:
            raise DomainError("dimension must be a positive integer")
        self.dimension = int(dimension)

    def evaluate(self, q, v):
        raise NotImplementedError

    def dual_evaluate(self, q, w):
        raise NotImplementedError

    def descent_direction(self, q, w):
        """Unit vector minimizing ``<w, v>`` over the unit ball at ``q``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class EuclideanNorm(NormField):
    """Scaled Euclidean norm ``scale * |v|_2``."""

    name = "euclidean"

    def __init__(self, dimension: int = 1, scale: float = 1.0):
        super().__init__(dimension)
        if not scale > 0:
            raise DomainError("norm scale must be positive")
        self.scale = float(scale)

    def evaluate(self, q, v):
        return self.scale * np.linalg.norm(np.asarray(v, dtype=float), axis=-1)

    def dual_evaluate(self, q, w):
        return np.linalg.norm(np.asarray(w, dtype=float), axis=-1) / self.scale

    def descent_direction(self, q, w):
        w = np.asarray(w, dtype=float)
        size = np.linalg.norm(w)
        if size == 0.0:
            return np.zeros_like(w)
        return -w / (size * self.scale)

    def to_dict(self):
        out = {"kind": "euclidean"}
        if self.scale != 1.0:
            out["scale"] = self.scale
        return out


class WeightedL1Norm(NormField):
    """Weighted l1 norm ``sum_i w_i |v_i|``; its dual is ``max_i |xi_i| / w_i``."""

    name = "weighted_l1"

    def __init__(self, weights):
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if weights.ndim != 1 or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise DomainError("weights must be a finite positive vector")
        super().__init__(weights.size)
        self.weights = weights

    def evaluate(self, q, v):
        return np.sum(self.weights * np.abs(np.asarray(v, dtype=float)), axis=-1)

    def dual_evaluate(self, q, w):
        return np.max(np.abs(np.asarray(w, dtype=float)) / self.weights, axis=-1)

    def descent_direction(self, q, w):
        # every vertex attaining the dual norm is optimal; averaging the tied
        # vertices keeps symmetric descents (e.g. along a diagonal) symmetric
        w = np.asarray(w, dtype=float)
        ratios = np.abs(w) / self.weights
        top = ratios.max()
        if top == 0.0:
            return np.zeros_like(w)
        tied = ratios >= top * (1.0 - 1e-12)
        direction = np.where(tied, -np.sign(w) / self.weights, 0.0)
        return direction / np.count_nonzero(tied)

    def to_dict(self):
        return {"kind": "weighted_l1", "weights": self.weights.tolist()}


class ScaledNorm(NormField):
    """State-dependent norm ``factor(q) * base(v)`` with a positive factor field."""

    state_dependent = True

    def __init__(self, base: NormField, factor):
        super().__init__(base.dimension)
        self.base = base
        self.factor = factor
        self.name = f"scaled_{base.name}"

    def _factor(self, q):
        return np.asarray(self.factor(np.asarray(q, dtype=float)), dtype=float)

    def evaluate(self, q, v):
        return self._factor(q) * self.base.evaluate(q, v)

    def dual_evaluate(self, q, w):
        return self.base.dual_evaluate(q, w) / self._factor(q)

    def descent_direction(self, q, w):
        return self.base.descent_direction(q, w) / self._factor(q)

    def to_dict(self):
        raise DomainError("state-dependent norms with callable factors are not serializable")


# ---------------------------------------------------------------------------
# potentials


def double_well(x):
    """Piecewise quadratic double well: wells at -4 and 4, cap of height 4 at 0."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= -2.0, 0.5 * (x + 4.0) ** 2,
                    np.where(x >= 2.0, 0.5 * (x - 4.0) ** 2, 4.0 - 0.5 * x * x))


def double_well_derivative(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= -2.0, x + 4.0, np.where(x >= 2.0, x - 4.0, -x))


def _double_well_derivative_scalar(x: float) -> float:
    if x <= -2.0:
        return x + 4.0
    if x >= 2.0:
        return x - 4.0
    return -x


def _double_well_scalar(x: float) -> float:
    if x <= -2.0:
        return 0.5 * (x + 4.0) ** 2
    if x >= 2.0:
        return 0.5 * (x - 4.0) ** 2
    return 4.0 - 0.5 * x * x


class DoubleWellPotential:
    """One-dimensional double well potential, C^1 with kinks of U'' at +-2."""

    dimension = 1
    knots = (-2.0, 2.0)
    curvature_bound = 1.0

    profile = staticmethod(double_well)
    profile_derivative = staticmethod(double_well_derivative)
    scalar_profile = staticmethod(_double_well_scalar)
    scalar_derivative = staticmethod(_double_well_derivative_scalar)

    def value(self, q):
        return double_well(np.asarray(q, dtype=float)[..., 0])

    def gradient(self, q):
        return double_well_derivative(np.asarray(q, dtype=float)[..., 0])[..., None]

    def to_dict(self):
        return {"kind": "double_well"}


class PairPotential:
    """Two coupled particles: double well in the mean plus a gap-activated spring.

    ``V(q) = U((q1 + q2) / 2) + W(q1 - q2)`` where ``W(r) = 0`` for ``|r| < 1``
    and ``(|r| - 1)^2`` otherwise.
    """

    dimension = 2
    knots = ()
    curvature_bound = 4.0

    @staticmethod
    def spring(r):
        excess = np.maximum(np.abs(r) - 1.0, 0.0)
        return excess * excess

    @staticmethod
    def spring_derivative(r):
        return 2.0 * np.sign(r) * np.maximum(np.abs(r) - 1.0, 0.0)

    def value(self, q):
        q = np.asarray(q, dtype=float)
        mean = 0.5 * (q[..., 0] + q[..., 1])
        return double_well(mean) + self.spring(q[..., 0] - q[..., 1])

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        mean = 0.5 * (q[..., 0] + q[..., 1])
        well = 0.5 * double_well_derivative(mean)
        spring = self.spring_derivative(q[..., 0] - q[..., 1])
        return np.stack([well + spring, well - spring], axis=-1)

    def to_dict(self):
        return {"kind": "pair"}


class PolynomialPotential:
    """Separable polynomial ``sum_i p(q_i)`` with ``p(x) = sum_k c_k x^k``."""

    knots = ()

    def __init__(self, coefficients, dimension: int = 1):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.ndim != 1 or coefficients.size == 0:
            raise DomainError("polynomial coefficients must be a nonempty list")
        self.coefficients = coefficients
        self.dimension = int(dimension)
        self._derivative = np.polynomial.polynomial.polyder(coefficients) if coefficients.size > 1 \
            else np.zeros(1)
        degree = np.max(np.nonzero(coefficients)[0]) if np.any(coefficients) else 0
        self.curvature_bound = abs(2.0 * coefficients[2]) if degree == 2 else (0.0 if degree < 2 else None)

    def profile(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coefficients)

    def profile_derivative(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self._derivative)

    def scalar_profile(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coefficients))

    def scalar_derivative(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self._derivative))

    def value(self, q):
        return np.sum(self.profile(q), axis=-1)

    def gradient(self, q):
        return self.profile_derivative(q)

    def to_dict(self):
        return {"kind": "polynomial", "coefficients": self.coefficients.tolist()}


# ---------------------------------------------------------------------------
# loadings


class LinearLoading:
    """``l(t) = offset + rate * t``."""

    time_knots = ()

    def __init__(self, rate: float = 1.0, offset: float = 0.0):
        self.rate = float(rate)
        self.offset = float(offset)

    def value(self, t):
        return self.offset + self.rate * np.asarray(t, dtype=float)

    def derivative(self, t):
        return np.full(np.shape(t), self.rate)

    def to_dict(self):
        return {"kind": "linear", "rate": self.rate, "offset": self.offset}


class RampLoading:
    """Load up to ``peak`` then unload at unit rate: ``l(t) = min(t, 2*peak - t)``."""

    def __init__(self, peak: float):
        self.peak = float(peak)
        self.time_knots = (self.peak,)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.minimum(t, 2.0 * self.peak - t)

    def derivative(self, t):
        return np.where(np.asarray(t, dtype=float) <= self.peak, 1.0, -1.0)

    def to_dict(self):
        return {"kind": "ramp", "peak": self.peak}


class ConstantLoading:
    time_knots = ()

    def __init__(self, value: float = 0.0):
        self.level = float(value)

    def value(self, t):
        return np.full(np.shape(t), self.level)

    def derivative(self, t):
        return np.zeros(np.shape(t))

    def to_dict(self):
        return {"kind": "constant", "value": self.level}


# ---------------------------------------------------------------------------
# energies


class EnergyField:
    """Interface for time-dependent energies ``E(t, q)``.

    Subclasses implement ``evaluate``, ``partial_t`` and ``grad_q``. Optional
    attributes help quadrature and the viscous inner solver:

    knots
        state values (1D only) where ``E`` fails to be twice differentiable.
    time_knots
        times where ``partial_t`` is discontinuous.
    curvature_bound
        Lipschitz constant of ``grad_q`` in the Euclidean norm, or None.
    """

    dimension = 1
    horizon = 1.0
    knots: tuple = ()
    time_knots: tuple = ()
    curvature_bound = None

    def evaluate(self, t, q):
        raise NotImplementedError

    def partial_t(self, t, q):
        raise NotImplementedError

    def grad_q(self, t, q):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise DomainError(f"{type(self).__name__} is not serializable")


class LoadedPotentialEnergy(EnergyField):
    """``E(t, q) = V(q) - l(t) <f, q>`` for a potential V, loading l, direction f.

    Parameters
    ----------
    potential : object
        Provides ``value(q)``, ``gradient(q)`` and optionally ``knots`` and
        ``curvature_bound``.
    loading : object
        Provides ``value(t)``, ``derivative(t)`` and ``time_knots``.
    horizon : float
        Final time ``T``.
    direction : array_like, optional
        Load direction ``f``. Defaults to the mean ``(1/n, ..., 1/n)``.
    """

    def __init__(self, potential, loading, horizon: float, direction=None):
        if not horizon > 0:
            raise DomainError("horizon must be positive")
        self.potential = potential
        self.loading = loading
        self.dimension = int(potential.dimension)
        self.horizon = float(horizon)
        if direction is None:
            direction = np.full(self.dimension, 1.0 / self.dimension)
        self.direction = np.asarray(direction, dtype=float).reshape(self.dimension)
        self.knots = tuple(getattr(potential, "knots", ()))
        self.time_knots = tuple(getattr(loading, "time_knots", ()))
        self.curvature_bound = getattr(potential, "curvature_bound", None)

    def evaluate(self, t, q):
        q = np.asarray(q, dtype=float)
        return self.potential.value(q) - self.loading.value(t) * (q @ self.direction)

    def partial_t(self, t, q):
        q = np.asarray(q, dtype=float)
        return -self.loading.derivative(t) * (q @ self.direction)

    def grad_q(self, t, q):
        q = np.asarray(q, dtype=float)
        load = np.asarray(self.loading.value(t), dtype=float)
        return self.potential.gradient(q) - load[..., None] * self.direction

    # fast scalar path for one-dimensional stepping
    @property
    def has_scalar_path(self) -> bool:
        return self.dimension == 1 and hasattr(self.potential, "scalar_derivative")

    def scalar_value(self, t: float, x: float) -> float:
        return float(self.potential.scalar_profile(x) - float(self.loading.value(t)) * self.direction[0] * x)

    def scalar_derivative(self, t: float, x: float) -> float:
        return float(self.potential.scalar_derivative(x) - float(self.loading.value(t)) * self.direction[0])

    def to_dict(self):
        return {
            "kind": "loaded",
            "potential": self.potential.to_dict(),
            "loading": self.loading.to_dict(),
            "direction": self.direction.tolist(),
        }


class CallableEnergy(EnergyField):
    """Energy assembled from user callables (not serializable)."""

    def __init__(self, evaluate, partial_t, grad_q, dimension: int, horizon: float,
                 knots=(), time_knots=(), curvature_bound=None):
        self._evaluate = evaluate
        self._partial_t = partial_t
        self._grad_q = grad_q
        self.dimension = int(dimension)
        self.horizon = float(horizon)
        self.knots = tuple(knots)
        self.time_knots = tuple(time_knots)
        self.curvature_bound = curvature_bound

    def evaluate(self, t, q):
        return np.asarray(self._evaluate(t, np.asarray(q, dtype=float)), dtype=float)

    def partial_t(self, t, q):
        return np.asarray(self._partial_t(t, np.asarray(q, dtype=float)), dtype=float)

    def grad_q(self, t, q):
        return np.asarray(self._grad_q(t, np.asarray(q, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True, eq=False)
class System:
    """A rate-independent system ``(Q, d, E)`` restricted to a bounds box."""

    norm: NormField
    energy: EnergyField
    lo: np.ndarray
    hi: np.ndarray
    name: str = "system"

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        n = self.norm.dimension
        if self.energy.dimension != n:
            raise DomainError("norm and energy dimensions differ")
        if lo.shape != (n,) or hi.shape != (n,):
            raise DomainError("bounds must have one entry per coordinate")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
            raise DomainError("bounds box must be nonempty and bounded")

    @property
    def dimension(self) -> int:
        return self.norm.dimension

    @property
    def horizon(self) -> float:
        return self.energy.horizon

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, q, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        slack = tol * (1.0 + np.abs(self.hi - self.lo))
        return bool(np.all(q >= self.lo - slack) and np.all(q <= self.hi + slack))

    def point(self, q) -> np.ndarray:
        """Validate and return ``q`` as a float vector of shape ``(n,)``."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if q.shape != (self.dimension,):
            raise DomainError(f"expected a point in R^{self.dimension}, got shape {q.shape}")
        if not np.all(np.isfinite(q)) or not self.contains(q):
            raise DomainError(f"point {q.tolist()} lies outside the bounds box")
        return q

    def time(self, t) -> float:
        t = float(t)
        if not (-1e-12 <= t <= self.horizon * (1 + 1e-12) + 1e-12):
            raise DomainError(f"time {t} outside [0, {self.horizon}]")
        return t

    def slopes(self, t, q):
        """Vectorized local slope without input validation."""
        q = np.asarray(q, dtype=float)
        return self.norm.dual_evaluate(q, self.energy.grad_q(t, q))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "norm": self.norm.to_dict(),
            "energy": self.energy.to_dict(),
            "bounds": {"lo": self.lo.tolist(), "hi": self.hi.tolist()},
            "horizon": self.horizon,
        }


def local_slope(system: System, t: float, q) -> float:
    """Dual norm of the spatial differential, ``R_{1,*}(q, D_q E(t, q))``."""
    t = system.time(t)
    q = system.point(q)
    return float(system.slopes(t, q))


def lambda_multiplier(system: System, t: float, q) -> float:
    """The multiplier ``max(slope, 1)`` used in the lambda form of solutions."""
    return max(local_slope(system, t, q), 1.0)


def segment_lengths(system: System, q0, points) -> np.ndarray:
    """Lengths of straight segments from ``q0`` to each row of ``points``."""
    q0 = np.asarray(q0, dtype=float)
    points = np.asarray(points, dtype=float)
    delta = points - q0
    if not system.norm.state_dependent:
        return np.asarray(system.norm.evaluate(q0, delta), dtype=float)
    total = np.zeros(points.shape[:-1])
    for node, weight in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
        total = total + weight * system.norm.evaluate(q0 + node * delta, delta)
    return total


def pair_lengths(system: System, a, b) -> np.ndarray:
    """Straight-segment lengths ``d(a_i, b_i)`` for matching rows of ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    delta = b - a
    if not system.norm.state_dependent:
        return np.asarray(system.norm.evaluate(a, delta), dtype=float)
    total = np.zeros(delta.shape[:-1])
    for node, weight in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
        total = total + weight * system.norm.evaluate(a + node * delta, delta)
    return total


def grid_graph_cost(system: System, q0, q1, weight=None, cells: int = 400):
    """Shortest 8-connected grid path cost in 2D.

    Edge cost is ``weight(mid) * R_1(mid, delta)`` evaluated at edge midpoints.
    Returns ``(cost, edge)`` where ``edge`` is the largest edge length, a
    crude error bar for the discretization.
    """
    if system.dimension != 2:
        raise DomainError("grid graph paths are implemented for n = 2 only")
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    xs = np.linspace(system.lo[0], system.hi[0], cells + 1)
    ys = np.linspace(system.lo[1], system.hi[1], cells + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    index = np.arange(nodes.shape[0]).reshape(cells + 1, cells + 1)
    rows, cols, costs = [], [], []
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        i0 = slice(0, cells + 1 - di)
        i1 = slice(di, cells + 1)
        if dj >= 0:
            j0, j1 = slice(0, cells + 1 - dj), slice(dj, cells + 1)
        else:
            j0, j1 = slice(-dj, cells + 1), slice(0, cells + 1 + dj)
        a = index[i0, j0].ravel()
        b = index[i1, j1].ravel()
        mid = 0.5 * (nodes[a] + nodes[b])
        delta = nodes[b] - nodes[a]
        cost = system.norm.evaluate(mid, delta)
        if weight is not None:
            cost = cost * weight(mid)
        rows.append(a)
        cols.append(b)
        costs.append(cost)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    costs = np.concatenate(costs)
    graph = coo_matrix((costs, (rows, cols)), shape=(nodes.shape[0],) * 2).tocsr()
    start = int(np.argmin(np.sum((nodes - q0) ** 2, axis=1)))
    stop = int(np.argmin(np.sum((nodes - q1) ** 2, axis=1)))
    dist = dijkstra(graph, directed=False, indices=start)
    edge = float(np.hypot(xs[1] - xs[0], ys[1] - ys[0]))
    # straight connectors from the true endpoints to the snapped nodes
    connectors = 0.0
    for a, b in ((q0, nodes[start]), (nodes[stop], q1)):
        mid = 0.5 * (a + b)
        piece = float(system.norm.evaluate(mid, b - a))
        if weight is not None:
            piece *= float(weight(mid[None, :])[0])
        connectors += piece
    return float(dist[stop]) + connectors, edge


def distance(system: System, q0, q1, method: str = "auto", cells: int = 100) -> float:
    """Finsler distance between two points of the bounds box.

    State-independent norms give ``R_1(q1 - q0)`` exactly. State-dependent
    norms use straight-segment quadrature and, for n = 2 with ``method`` in
    {"auto", "graph"}, the smaller of that and an 8-connected grid-graph path.
    """
    q0 = system.point(q0)
    q1 = system.point(q1)
    if not system.norm.state_dependent:
        return float(system.norm.evaluate(q0, q1 - q0))
    straight = float(segment_lengths(system, q0, q1[None, :])[0])
    if system.dimension == 2 and method in ("auto", "graph"):
        graph, _ = grid_graph_cost(system, q0, q1, cells=cells)
        return min(straight, graph)
    return straight


def _polish_max(func, a: float, b: float, xatol: float) -> tuple[float, float]:
    if b - a <= xatol:
        x = 0.5 * (a + b)
        return x, func(x)
    res = optimize.minimize_scalar(lambda x: -func(x), bounds=(a, b), method="bounded",
                                   options={"xatol": xatol})
    return float(res.x), float(-res.fun)


def global_slope(system: System, t: float, q, grid_resolution: float | None = None) -> float:
    """Global slope ``sup_{q~ != q} (E(t,q) - E(t,q~))^+ / d(q, q~)``.

    The supremum is taken over a uniform grid of the bounds box and refined by
    a bounded scalar (1D) or Nelder-Mead (nD) polish around the grid maximizer.
    The local slope is included as the limit ``q~ -> q``, so the result never
    falls below it.

    Parameters
    ----------
    grid_resolution : float, optional
        Grid spacing. Defaults to diameter/2000 in 1D and extent/200 per axis
        otherwise.
    """
    t = system.time(t)
    q = system.point(q)
    energy = system.energy
    e0 = float(energy.evaluate(t, q))
    local = float(system.slopes(t, q))
    n = system.dimension

    def ratios(points):
        drop = e0 - energy.evaluate(t, points)
        dist = segment_lengths(system, q, points)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(dist > 1e-14, np.maximum(drop, 0.0) / dist, 0.0)
        return out

    if n == 1:
        span = float(system.hi[0] - system.lo[0])
        h = grid_resolution if grid_resolution is not None else span / 2000.0
        if not h > 0:
            raise DomainError("grid_resolution must be positive")
        cells = max(int(math.ceil(span / h)), 1)
        grid = np.linspace(system.lo[0], system.hi[0], cells + 1)
        values = ratios(grid[:, None])
        k = int(np.argmax(values))
        best = float(values[k])
        step = span / cells
        a = max(grid[k] - step, system.lo[0])
        b = min(grid[k] + step, system.hi[0])
        brackets = [(a, b)]
        if a < q[0] < b:
            brackets = [(a, q[0]), (q[0], b)]
        for lo, hi in brackets:
            x, val = _polish_max(lambda x: float(ratios(np.array([[x]]))[0]), lo, hi, 1e-12 * (1 + span))
            best = max(best, val)
        return max(best, local)

    h = grid_resolution
    axes = []
    for i in range(n):
        span = float(system.hi[i] - system.lo[i])
        cells = 200 if h is None else max(int(math.ceil(span / h)), 1)
        axes.append(np.linspace(system.lo[i], system.hi[i], cells + 1))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    values = ratios(mesh)
    k = int(np.argmax(values))
    best = float(values[k])
    if best > 0:
        def objective(x):
            x = np.clip(x, system.lo, system.hi)
            return -float(ratios(x[None, :])[0])
        res = optimize.minimize(objective, mesh[k], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
        best = max(best, -float(res.fun))
    return max(best, local)


# ---------------------------------------------------------------------------
# serialization


def _loading_from_dict(doc: dict):
    kind = doc.get("kind", "linear")
    if kind == "linear":
        return LinearLoading(doc.get("rate", 1.0), doc.get("offset", 0.0))
    if kind == "ramp":
        return RampLoading(doc["peak"])
    if kind == "constant":
        return ConstantLoading(doc.get("value", 0.0))
    raise DomainError(f"unknown loading kind {kind!r}")


def _potential_from_dict(doc: dict, dimension: int):
    kind = doc.get("kind")
    if kind == "double_well":
        return DoubleWellPotential()
    if kind == "pair":
        return PairPotential()
    if kind == "polynomial":
        return PolynomialPotential(doc["coefficients"], dimension)
    raise DomainError(f"unknown potential kind {kind!r}")


def norm_from_dict(doc: dict, dimension: int) -> NormField:
    kind = doc.get("kind", "euclidean")
    if kind == "euclidean":
        return EuclideanNorm(dimension, doc.get("scale", 1.0))
    if kind == "weighted_l1":
        weights = doc.get("weights", [1.0] * dimension)
        return WeightedL1Norm(weights)
    raise DomainError(f"unknown norm kind {kind!r}")


def system_from_dict(doc: dict) -> System:
    """Build a system from its JSON document form."""
    energy_doc = doc.get("energy", {})
    if energy_doc.get("kind") == "catalog":
        from .catalog import catalog

        params = {k: v for k, v in energy_doc.items() if k not in ("kind", "id")}
        base = catalog(energy_doc["id"], **params).system
        if "bounds" not in doc and "horizon" not in doc and "norm" not in doc:
            return base
        horizon = float(doc.get("horizon", base.horizon))
        energy = base.energy
        if horizon != base.horizon:
            energy = LoadedPotentialEnergy(energy.potential, energy.loading, horizon, energy.direction)
        bounds = doc.get("bounds", {"lo": base.lo, "hi": base.hi})
        norm = norm_from_dict(doc["norm"], base.dimension) if "norm" in doc else base.norm
        return System(norm, energy, bounds["lo"], bounds["hi"], doc.get("name", base.name))
    try:
        dimension = int(doc["dimension"])
        horizon = float(doc["horizon"])
        bounds = doc["bounds"]
    except KeyError as exc:
        raise DomainError(f"system document lacks field {exc.args[0]!r}") from None
    norm = norm_from_dict(doc.get("norm", {}), dimension)
    kind = energy_doc.get("kind")
    if kind == "polynomial":
        potential = PolynomialPotential(energy_doc["coefficients"], dimension)
    elif kind == "loaded":
        potential = _potential_from_dict(energy_doc["potential"], dimension)
    else:
        raise DomainError(f"unknown energy kind {kind!r}")
    loading = _loading_from_dict(energy_doc.get("loading", {"kind": "constant", "value": 0.0}))
    energy = LoadedPotentialEnergy(potential, loading, horizon, energy_doc.get("direction"))
    return System(norm, energy, bounds["lo"], bounds["hi"], doc.get("name", "system"))


def load_system(source: str) -> System:
    """Load a system from a catalog id (e.g. ``"ex52"``) or a JSON file path."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        with open(path, encoding="utf-8") as handle:
            return system_from_dict(json.load(handle))
    from .catalog import catalog

    return catalog(source).system
