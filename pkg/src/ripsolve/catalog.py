"""Catalog of one- and two-dimensional double-well examples with closed-form solutions.

All scalar examples use the state bounds ``[-10, 10]``, the distance
``|q0 - q1|``, ``E(t, q) = U(q) - l(t) q`` with the double well ``U`` and
``q0 = -5``. They differ in the loading:

========  ==========================  =======
id        loading ``l(t)``            horizon
========  ==========================  =======
ex51      ``t``                       6
ex52      ``min(t, 6 - t)``           10
ex53      ``min(t, 6 + 2 delta - t)`` 10
========  ==========================  =======

``ex54`` couples two particles in the plane through a gap-activated spring
with the distance ``(|dq1| + |dq2|) / 2`` and loads their mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bvcalc import path_integral
from .curves import BVTrajectory, JumpRecord, ParametrizedCurve, make_curve, piecewise_bv
from .errors import DomainError
from .systems import (DoubleWellPotential, EuclideanNorm, LinearLoading, LoadedPotentialEnergy, PairPotential,
                      RampLoading, System, WeightedL1Norm)

IDS = ("ex51", "ex52", "ex53", "ex54")


@dataclass(eq=False)
class ExampleSpec:
    """A catalog entry.

    ``reference`` maps names to BV trajectories, parametrized curves or
    factories: ``local(t_star, q_star)`` builds a member of the family of
    local solutions and ``viscous(eps)`` returns the exact viscous solution
    as a function of time.
    """

    id: str
    system: System
    q0: np.ndarray
    reference: dict
    notes: str = ""
    params: dict = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return self.system.horizon


def _scalar_system(name: str, loading, horizon: float) -> System:
    energy = LoadedPotentialEnergy(DoubleWellPotential(), loading, horizon)
    return System(EuclideanNorm(1), energy, [-10.0], [10.0], name)


def _jump(t, q_minus, q_plus, point=None, theta=None):
    q_minus = np.atleast_1d(np.asarray(q_minus, dtype=float))
    q_plus = np.atleast_1d(np.asarray(q_plus, dtype=float))
    path = np.array([q_minus, q_plus])
    if point is None:
        point, theta = q_minus, 0.0
    return JumpRecord(t, q_minus, point, q_plus, path, np.array([0.0, 1.0]), theta)


def _affine(slope, offset):
    return lambda t: slope * t + offset


def local_solution(t_star: float, q_star: float, horizon: float = 6.0, check: bool = True) -> BVTrajectory:
    """Local solution of ex51 jumping at ``t_star`` from ``t_star - 5`` to ``q_star``.

    It sticks at ``q_star`` until ``q_star - 3`` and then slips along ``t + 3``.
    With ``check`` the pair must satisfy
    ``0 <= q_star - 3 - t_star <= min(2, 4 sqrt(t_star - 1))`` and
    ``1 <= t_star <= 3``.
    """
    t_star, q_star = float(t_star), float(q_star)
    gap = q_star - 3.0 - t_star
    if check:
        if not 1.0 <= t_star <= 3.0:
            raise DomainError("t_star must lie in [1, 3]")
        bound = min(2.0, 4.0 * math.sqrt(t_star - 1.0))
        if gap < -1e-12 or gap > bound + 1e-12:
            raise DomainError(f"q_star must lie in [{3 + t_star}, {3 + t_star + bound}]")
    release = q_star - 3.0
    if release > horizon:
        raise DomainError("the sticking phase extends beyond the horizon")
    jump = _jump(t_star, t_star - 5.0, q_star)
    if release - t_star > 1e-12:
        breaks = [0.0, t_star, release, horizon]
        formulas = [_affine(1.0, -5.0), lambda t: q_star, _affine(1.0, 3.0)]
    else:
        breaks = [0.0, t_star, horizon]
        formulas = [_affine(1.0, -5.0), _affine(1.0, 3.0)]
    return piecewise_bv(breaks, formulas, [jump])


def viscous_ex52(eps: float):
    """Exact viscous solution of ex52 (double well, loading ``min(t, 6 - t)``).

    Obtained by matching linear ODEs: slip with a boundary layer on
    ``[0, 3]``, a short continued slip while the slope still exceeds 1 after
    the load reverses, sticking, then slip down ``3 - t`` with a lag of
    order ``eps``. Returns a vectorized function of time and the breakpoints.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    lag = eps * (1.0 - math.exp(-3.0 / eps))          # q(3) = -2 - lag
    q3 = -2.0 - lag
    t_stop = 3.0 + eps * math.log((eps + lag) / eps)   # continued slip ends
    q_stick = 1.0 - t_stop
    t_release = 3.0 - q_stick

    def q(t):
        t = np.asarray(t, dtype=float)
        first = t - 5.0 + eps * (np.exp(-np.minimum(t, 3.0) / eps) - 1.0)
        z = eps + (-lag - eps) * np.exp(-np.clip(t - 3.0, 0.0, None) / eps)
        second = z - t + 1.0
        last = 3.0 - t + eps * (1.0 - np.exp(-np.clip(t - t_release, 0.0, None) / eps))
        return np.where(t <= 3.0, first, np.where(t <= t_stop, second, np.where(t <= t_release, q_stick, last)))

    q.breakpoints = {"q_star": q3, "t_stop": t_stop, "q_stick": q_stick, "t_star": t_release}
    return q


def _ex51() -> ExampleSpec:
    horizon = 6.0
    system = _scalar_system("ex51", LinearLoading(1.0), horizon)
    energetic = piecewise_bv([0.0, 1.0, horizon], [_affine(1.0, -5.0), _affine(1.0, 3.0)],
                             [_jump(1.0, -4.0, 4.0, point=[4.0], theta=1.0)], convention="right")
    bv = piecewise_bv([0.0, 3.0, horizon], [_affine(1.0, -5.0), _affine(1.0, 3.0)], [_jump(3.0, -2.0, 6.0)])
    arclength = make_curve(system, [0.0, 6.0, 14.0, 20.0], [0.0, 3.0, 3.0, 6.0], [-5.0, -2.0, 6.0, 9.0],
                           {"source": "catalog"})
    refs = {"energetic": energetic, "bv": bv, "arclength": arclength,
            "local": lambda t_star, q_star: local_solution(t_star, q_star, horizon)}
    return ExampleSpec("ex51", system, np.array([-5.0]), refs,
                       "monotone loading; energetic solution jumps at t = 1, BV solution at t = 3")


def _ex52() -> ExampleSpec:
    horizon = 10.0
    system = _scalar_system("ex52", RampLoading(3.0), horizon)
    q1 = piecewise_bv([0.0, 3.0, 5.0, 9.0, horizon],
                      [_affine(1.0, -5.0), lambda t: 6.0, _affine(-1.0, 11.0), _affine(-1.0, 3.0)],
                      [_jump(3.0, -2.0, 6.0), _jump(9.0, 2.0, -6.0)])
    q2 = piecewise_bv([0.0, 3.0, 5.0, horizon], [_affine(1.0, -5.0), lambda t: -2.0, _affine(-1.0, 3.0)])
    arc1 = make_curve(system, [0.0, 6.0, 14.0, 16.0], [0.0, 3.0, 3.0, 5.0], [-5.0, -2.0, 6.0, 6.0],
                      {"source": "catalog"})
    arc2 = make_curve(system, [0.0, 6.0, 8.0, 16.0], [0.0, 3.0, 5.0, 9.0], [-5.0, -2.0, -2.0, -6.0],
                      {"source": "catalog"})
    refs = {"bv_q1": q1, "bv_q2": q2, "arclength_1": arc1, "arclength_2": arc2, "viscous": viscous_ex52}
    return ExampleSpec("ex52", system, np.array([-5.0]), refs,
                       "load reversal exactly at the jump point; two BV solutions, only q2 is approximable")


def _ex53(delta: float) -> ExampleSpec:
    delta = float(delta)
    if not -1.0 < delta < 1.0:
        raise DomainError("ex53 needs delta in (-1, 1)")
    horizon = 10.0
    peak = 3.0 + delta
    system = _scalar_system("ex53", RampLoading(peak), horizon)
    if delta <= 0:
        breaks = [0.0, peak, 5.0 + delta, horizon]
        formulas = [_affine(1.0, -5.0), lambda t: delta - 2.0, _affine(-1.0, 3.0 + 2.0 * delta)]
        jumps = []
    else:
        second = 9.0 + 2.0 * delta
        breaks = [0.0, 3.0, peak, 5.0 + delta]
        formulas = [_affine(1.0, -5.0), _affine(1.0, 3.0), lambda t: 6.0 + delta]
        jumps = [_jump(3.0, -2.0, 6.0)]
        if second < horizon:
            breaks += [second, horizon]
            formulas += [_affine(-1.0, 11.0 + 2.0 * delta), _affine(-1.0, 3.0 + 2.0 * delta)]
            jumps.append(_jump(second, 2.0, -6.0))
        else:
            breaks += [horizon]
            formulas += [_affine(-1.0, 11.0 + 2.0 * delta)]
    q_delta = piecewise_bv(breaks, formulas, jumps)
    return ExampleSpec("ex53", system, np.array([-5.0]), {"q_delta": q_delta},
                       "perturbed load reversal; unique solution for delta != 0", {"delta": delta})


def _ex54() -> ExampleSpec:
    horizon = 6.0
    energy = LoadedPotentialEnergy(PairPotential(), LinearLoading(1.0), horizon, direction=[0.5, 0.5])
    system = System(WeightedL1Norm([0.5, 0.5]), energy, [-10.0, -10.0], [10.0, 10.0], "ex54")
    diag = np.linspace(-2.0, 6.0, 33)
    path = np.stack([diag, diag], axis=1)
    jump = JumpRecord(3.0, [-2.0, -2.0], [-2.0, -2.0], [6.0, 6.0], path, None, 0.0)
    bv = piecewise_bv([0.0, 3.0, horizon], [lambda t: (t - 5.0, t - 5.0), lambda t: (t + 3.0, t + 3.0)], [jump])
    arclength = make_curve(system, [0.0, 6.0, 14.0, 20.0], [0.0, 3.0, 3.0, 6.0],
                           [[-5.0, -5.0], [-2.0, -2.0], [6.0, 6.0], [9.0, 9.0]], {"source": "catalog"})
    return ExampleSpec("ex54", system, np.array([-5.0, -5.0]), {"bv": bv, "arclength": arclength},
                       "two particles moving together; many optimal connecting paths at the jump")


def catalog(id: str, delta: float = -0.5, **params) -> ExampleSpec:
    """Look up a catalog example (``delta`` is used by ex53 only)."""
    key = str(id).lower()
    if params:
        raise DomainError(f"unknown catalog parameters {sorted(params)}")
    if key == "ex51":
        return _ex51()
    if key == "ex52":
        return _ex52()
    if key == "ex53":
        return _ex53(delta)
    if key == "ex54":
        return _ex54()
    raise DomainError(f"unknown catalog id {id!r}; choose from {', '.join(IDS)}")


def reference_eval(spec: ExampleSpec, name: str, t, **params):
    """Evaluate a named reference.

    BV references return ``q(t)`` (jump points by the reference's
    convention). Parametrized curves take the arclength ``s`` and return
    ``(t_hat, q_hat...)``. ``local`` needs ``t_star`` and ``q_star``;
    ``viscous`` needs ``eps``.
    """
    if name not in spec.reference:
        raise DomainError(f"{spec.id} has no reference {name!r}; available: {sorted(spec.reference)}")
    ref = spec.reference[name]
    if isinstance(ref, BVTrajectory):
        return ref(t)
    if isinstance(ref, ParametrizedCurve):
        th, qh = ref(t)
        return np.concatenate([np.atleast_1d(th)[..., None], qh], axis=-1) if np.ndim(t) else \
            np.concatenate([[float(th)], np.ravel(qh)])
    if name == "local":
        return ref(params["t_star"], params["q_star"])(t)
    if name == "viscous":
        eps = params.get("eps")
        if eps is None:
            raise DomainError("the viscous reference needs eps")
        out = ref(eps)(t)
        return out[..., None] if np.ndim(out) else np.array([float(out)])
    raise DomainError(f"reference {name!r} cannot be evaluated directly")


# ---------------------------------------------------------------------------
# connecting paths of the two-particle jump


def connecting_family(spec: ExampleSpec, gamma_profile, samples: int = 401) -> np.ndarray:
    """Jump path ``(m - gamma, m + gamma)`` around the diagonal of ex54.

    ``m(theta) = -2 + 8 theta`` runs along the diagonal from ``(-2, -2)`` to
    ``(6, 6)``. The profile must vanish at both ends, satisfy
    ``|gamma'| <= |m'| = 8`` (so the path length equals the diagonal's) and
    keep the gap ``2 |gamma|`` below 1, where the spring is inactive.

    Raises
    ------
    DomainError
        Naming the first violating sample.
    """
    if spec.id != "ex54":
        raise DomainError("connecting paths are defined for ex54 only")
    theta = np.linspace(0.0, 1.0, int(samples))
    gamma = np.broadcast_to(np.asarray(gamma_profile(theta), dtype=float), theta.shape).astype(float)
    if abs(gamma[0]) > 1e-12 or abs(gamma[-1]) > 1e-12:
        raise DomainError("gamma must vanish at theta = 0 and theta = 1")
    speed = 8.0
    dgamma = np.abs(np.diff(gamma)) / np.diff(theta)
    bad = np.nonzero(dgamma > speed * (1.0 + 1e-9))[0]
    if bad.size:
        k = int(bad[0])
        raise DomainError(f"|gamma'| = {dgamma[k]:.6g} exceeds {speed} on sample {k} (theta = {theta[k]:.6g})")
    bad = np.nonzero(2.0 * np.abs(gamma) > 1.0)[0]
    if bad.size:
        k = int(bad[0])
        raise DomainError(f"gap 2|gamma| = {2 * abs(gamma[k]):.6g} activates the spring on sample {k} "
                          f"(theta = {theta[k]:.6g})")
    m = -2.0 + speed * theta
    return np.stack([m - gamma, m + gamma], axis=1)


def path_dissipation(spec: ExampleSpec, path, t: float = 3.0) -> float:
    """Slope-weighted length ``int slope |y'|`` of a path at frozen time."""
    return path_integral(spec.system, t, path)


def slope_normalization_report(spec: ExampleSpec | None = None) -> dict:
    """Which slope normalization closes the jump energy identity of ex54.

    Compares the energy drop along the diagonal jump at ``t = 3`` with the
    slope-weighted length computed from the dual norm (``|U'(m) - t|``) and
    with half of it.
    """
    spec = spec or catalog("ex54")
    system = spec.system
    diag = np.linspace(-2.0, 6.0, 33)
    path = np.stack([diag, diag], axis=1)
    drop = float(system.energy.evaluate(3.0, path[0]) - system.energy.evaluate(3.0, path[-1]))
    full = path_integral(system, 3.0, path)
    half = 0.5 * full
    adopted = "dual_norm" if abs(full - drop) <= abs(half - drop) else "half"
    return {
        "energy_drop": drop,
        "dissipation_dual_norm": full,
        "dissipation_half_factor": half,
        "residual_dual_norm": abs(full - drop),
        "residual_half_factor": abs(half - drop),
        "adopted": adopted,
        "slope_formula": "|U'((q1 + q2) / 2) - t|" if adopted == "dual_norm" else "|U'((q1 + q2) / 2) - t| / 2",
    }
