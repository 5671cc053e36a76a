"""Transition costs ``M(alpha, nu, xi)`` and the stick/slip/jump classification.

The triple ``(alpha, nu, xi)`` collects the time speed ``alpha = dt/ds``, the
state speed ``nu = |dq/ds|`` and the local slope ``xi``. Extended real values
are IEEE ``inf``; every cost below guards the ``0 * inf`` case explicitly.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

INF = float("inf")


def _triple(alpha, nu, xi):
    alpha, nu, xi = (np.asarray(x, dtype=float) for x in (alpha, nu, xi))
    if np.any(alpha < 0) or np.any(nu < 0) or np.any(xi < 0):
        raise DomainError("transition costs take nonnegative arguments")
    return np.broadcast_arrays(alpha, nu, xi)


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def m_eps(eps: float, alpha, nu, xi):
    """Viscous cost ``nu + eps nu^2 / (2 alpha) + alpha ((xi - 1)^+)^2 / (2 eps)``.

    At ``alpha = 0`` the cost is 0 when ``nu = 0`` and ``inf`` otherwise.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    alpha, nu, xi = _triple(alpha, nu, xi)
    excess = np.maximum(xi - 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        viscous = np.where(alpha > 0, eps * nu * nu / (2.0 * np.where(alpha > 0, alpha, 1.0)), 0.0)
        value = nu + viscous + alpha * excess * excess / (2.0 * eps)
    value = np.where((alpha == 0) & (nu > 0), INF, value)
    return _out(value)


def m_zero(alpha, nu, xi):
    """Limit cost: ``nu + nu (xi - 1)^+`` at ``alpha = 0``; ``nu`` plus the indicator of ``xi <= 1`` otherwise."""
    alpha, nu, xi = _triple(alpha, nu, xi)
    value = np.where(alpha > 0, np.where(xi <= 1.0, nu, INF), nu + nu * np.maximum(xi - 1.0, 0.0))
    return _out(value)


def m_tilde(alpha, nu, xi):
    """Finite cost ``max(xi, 1) nu + (xi - 1)^+ alpha``."""
    alpha, nu, xi = _triple(alpha, nu, xi)
    return _out(np.maximum(xi, 1.0) * nu + np.maximum(xi - 1.0, 0.0) * alpha)


def m_inf(nu, xi):
    """Pointwise infimum over ``alpha`` of the viscous cost: ``nu + nu (xi - 1)^+``."""
    nu, xi = (np.asarray(x, dtype=float) for x in (nu, xi))
    if np.any(nu < 0) or np.any(xi < 0):
        raise DomainError("transition costs take nonnegative arguments")
    return _out(nu + nu * np.maximum(xi - 1.0, 0.0))


def m_sup(nu, xi):
    """``nu`` plus the indicator of ``xi <= 1``."""
    nu, xi = (np.asarray(x, dtype=float) for x in (nu, xi))
    if np.any(nu < 0) or np.any(xi < 0):
        raise DomainError("transition costs take nonnegative arguments")
    return _out(np.where(xi <= 1.0, nu, INF))


def optimal_alpha(eps: float, nu, xi):
    """Minimizer ``eps nu / (xi - 1)^+`` of ``alpha -> m_eps(eps, alpha, nu, xi)`` (``inf`` if ``xi <= 1``)."""
    nu, xi = np.asarray(nu, dtype=float), np.asarray(xi, dtype=float)
    excess = np.maximum(xi - 1.0, 0.0)
    with np.errstate(divide="ignore"):
        return _out(np.where(excess > 0, eps * nu / np.where(excess > 0, excess, 1.0), INF))


@dataclass(frozen=True)
class TransitionCost:
    """A named transition cost.

    Use the constructors :meth:`meps`, :meth:`mzero`, :meth:`mtilde`,
    :meth:`minf` and :meth:`msup`.
    """

    kind: str
    eps: float | None = None

    @classmethod
    def meps(cls, eps: float):
        if not eps > 0:
            raise DomainError("eps must be positive")
        return cls("Meps", float(eps))

    @classmethod
    def mzero(cls):
        return cls("Mzero")

    @classmethod
    def mtilde(cls):
        return cls("Mtilde")

    @classmethod
    def minf(cls):
        return cls("Minf")

    @classmethod
    def msup(cls):
        return cls("Msup")

    @classmethod
    def from_name(cls, name: str, eps: float | None = None):
        key = name.lower().replace("_", "")
        table = {"mzero": cls.mzero, "m0": cls.mzero, "mtilde": cls.mtilde,
                 "minf": cls.minf, "msup": cls.msup}
        if key in ("meps", "mepsilon"):
            return cls.meps(eps if eps is not None else 1.0)
        if key not in table:
            raise DomainError(f"unknown transition cost {name!r}")
        return table[key]()

    def __call__(self, alpha, nu, xi):
        if self.kind == "Meps":
            return m_eps(self.eps, alpha, nu, xi)
        if self.kind == "Mzero":
            return m_zero(alpha, nu, xi)
        if self.kind == "Mtilde":
            return m_tilde(alpha, nu, xi)
        _triple(alpha, nu, xi)
        if self.kind == "Minf":
            return m_inf(nu, xi)
        if self.kind == "Msup":
            return m_sup(nu, xi)
        raise DomainError(f"unknown transition cost kind {self.kind!r}")

    evaluate = __call__


class Regime(enum.Enum):
    STICK = "Stick"
    SLIP = "Slip"
    JUMP = "Jump"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class RegimeLabel:
    variant: Regime
    witness: tuple

    @property
    def inside(self) -> bool:
        return self.variant is not Regime.OUTSIDE


def _classify_arrays(alpha, nu, xi, tol):
    no_motion = nu <= tol
    no_time = alpha <= tol
    at_threshold = np.abs(xi - 1.0) <= tol
    codes = np.full(alpha.shape, 3)
    codes = np.where(no_time & (xi >= 1.0 - tol), 2, codes)
    codes = np.where(~no_time & at_threshold, 1, codes)
    codes = np.where(no_motion & (xi <= 1.0 + tol) & (codes == 3), 0, codes)
    codes = np.where(no_motion & (xi < 1.0), 0, codes)
    return codes


_CODES = (Regime.STICK, Regime.SLIP, Regime.JUMP, Regime.OUTSIDE)


def xi_classify(alpha, nu, xi, tol: float = 1e-8) -> RegimeLabel:
    """Label a triple as Stick, Slip, Jump or Outside.

    Stick is ``nu = 0, xi < 1``; Slip is ``alpha > 0, xi = 1``; Jump is
    ``alpha = 0, xi >= 1``. The equalities are tested with absolute tolerance
    ``tol``. A motionless triple with ``xi`` within ``tol`` above 1 lies on
    the closure of the stick piece and is labelled Stick.
    """
    alpha, nu, xi = (np.asarray(x, dtype=float) for x in _triple(alpha, nu, xi))
    code = int(_classify_arrays(alpha, nu, xi, tol))
    return RegimeLabel(_CODES[code], (float(alpha), float(nu), float(xi)))


def classify_many(alpha, nu, xi, tol: float = 1e-8) -> np.ndarray:
    """Vectorized :func:`xi_classify` returning codes 0..3 (stick, slip, jump, outside)."""
    alpha, nu, xi = _triple(alpha, nu, xi)
    return _classify_arrays(alpha, nu, xi, tol)


def in_xi(alpha, nu, xi, tol: float = 1e-8):
    """Boolean membership in the stick/slip/jump set, vectorized."""
    return classify_many(alpha, nu, xi, tol) != 3


@dataclass
class GammaProbeReport:
    triple: tuple
    eps_sequence: list
    alphas: list
    values: list
    limit: float
    mode: str
    bound_ok: bool
    tol: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(x):
            return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {
            "triple": list(self.triple),
            "eps_sequence": list(self.eps_sequence),
            "alphas": [clean(a) for a in self.alphas],
            "values": [clean(v) for v in self.values],
            "m_zero": clean(self.limit),
            "mode": self.mode,
            "bound_ok": self.bound_ok,
            "tol": self.tol,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _extrapolate(eps, values) -> float:
    """Value at eps = 0 of the line through the last two members (the last one if only one)."""
    if len(values) < 2 or not np.all(np.isfinite(values[-2:])):
        return float(values[-1])
    e1, e2 = eps[-2], eps[-1]
    v1, v2 = values[-2], values[-1]
    return float(v2 - e2 * (v1 - v2) / (e1 - e2))


def gamma_probe(eps_sequence, alpha: float, nu: float, xi: float, sequence=None,
                tol: float = 1e-9) -> GammaProbeReport:
    """Numerical probe of the convergence ``M_eps -> M_0``.

    Without ``sequence`` a recovery sequence is used: ``alpha`` itself when
    positive, ``eps nu / (xi - 1)^+`` when ``alpha = 0`` and ``xi > 1``, and
    ``alpha = 0`` otherwise. The check is ``limsup M_eps <= M_0 + tol``,
    read off the linear extrapolation to eps = 0 of the last two members
    (the recovery error is O(eps)).

    With ``sequence`` (a list of triples, one per eps) the check is
    ``liminf M_eps >= M_0 - tol`` over the tail of the sequence.
    """
    eps_sequence = [float(e) for e in eps_sequence]
    if not eps_sequence:
        raise DomainError("eps_sequence must be nonempty")
    if any(e <= 0 for e in eps_sequence) or any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise DomainError("eps_sequence must be positive and strictly decreasing")
    limit = m_zero(alpha, nu, xi)
    if sequence is None:
        alphas = []
        for eps in eps_sequence:
            if alpha > 0:
                alphas.append(float(alpha))
            elif xi > 1 and nu > 0:
                alphas.append(float(optimal_alpha(eps, nu, xi)))
            else:
                alphas.append(0.0)
        values = [m_eps(eps, a, nu, xi) for eps, a in zip(eps_sequence, alphas)]
        estimate = _extrapolate(eps_sequence, values)
        ok = bool(estimate <= limit + tol) if np.isfinite(limit) else True
        notes = [f"limsup estimate {estimate!r} (linear extrapolation to eps = 0)"]
        return GammaProbeReport((alpha, nu, xi), eps_sequence, alphas, values, limit, "recovery", ok, tol, notes)
    sequence = [tuple(map(float, s)) for s in sequence]
    if len(sequence) != len(eps_sequence):
        raise DomainError("sequence needs one triple per eps")
    values = [m_eps(eps, a, n, x) for eps, (a, n, x) in zip(eps_sequence, sequence)]
    tail = values[len(values) // 2:]
    ok = bool(min(tail) >= limit - tol) if np.isfinite(limit) else bool(min(tail) == INF or min(tail) > 1 / tol)
    notes = [] if np.isfinite(limit) else ["limit is infinite; liminf checked against 1/tol"]
    return GammaProbeReport((alpha, nu, xi), eps_sequence, [s[0] for s in sequence], values, limit,
                            "liminf", ok, tol, notes)
