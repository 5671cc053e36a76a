"""Gauss-Legendre rules on straight segments, split at non-smooth points."""
from __future__ import annotations

import numpy as np

_ORDER = 5
_X, _W = np.polynomial.legendre.leggauss(_ORDER)
_X = 0.5 * (_X + 1.0)
_W = 0.5 * _W


def _batch(ta, tb, qa, qb):
    ta = np.atleast_1d(np.asarray(ta, dtype=float))
    tb = np.atleast_1d(np.asarray(tb, dtype=float))
    qa = np.asarray(qa, dtype=float).reshape(ta.size, -1)
    qb = np.asarray(qb, dtype=float).reshape(ta.size, -1)
    return ta, tb, qa, qb


def segment_cuts(ta, tb, qa, qb, time_knots=(), state_knots=()) -> np.ndarray:
    """Sorted split fractions in [0, 1] per segment, shape (m, k).

    Unused slots are padded with 1, so consecutive differences of a row are
    either sub-interval widths or zero.
    """
    ta, tb, qa, qb = _batch(ta, tb, qa, qb)
    m = ta.size
    cuts = [np.zeros(m), np.ones(m)]
    dt = tb - ta
    for knot in time_knots:
        with np.errstate(divide="ignore", invalid="ignore"):
            cuts.append(np.where(dt > 0, (knot - ta) / dt, np.nan))
    if qa.shape[1] == 1:
        dq = qb[:, 0] - qa[:, 0]
        for knot in state_knots:
            with np.errstate(divide="ignore", invalid="ignore"):
                cuts.append(np.where(dq != 0, (knot - qa[:, 0]) / dq, np.nan))
    cuts = np.stack(cuts, axis=1)
    cuts = np.where((cuts > 0) & (cuts < 1), cuts, np.nan)
    cuts[:, 0] = 0.0
    cuts[:, 1] = 1.0
    return np.sort(np.where(np.isnan(cuts), 1.0, cuts), axis=1)


def refine_cuts(cuts: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Add the linear zero crossing of ``values`` inside each sub-interval.

    ``values`` has the shape of ``cuts`` (or an extra trailing component
    axis) and holds a function sampled at the cut points; sign changes
    between consecutive cuts get an extra cut at the interpolated root.
    """
    if values.ndim == cuts.ndim:
        values = values[..., None]
    a, b = values[:, :-1, :], values[:, 1:, :]
    la, lb = cuts[:, :-1, None], cuts[:, 1:, None]
    change = (a * b < 0) & (lb > la)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(change, la + (lb - la) * a / (a - b), 1.0)
    extra = root.reshape(cuts.shape[0], -1)
    return np.sort(np.concatenate([cuts, extra], axis=1), axis=1)


def rule_from_cuts(cuts: np.ndarray, panels: int):
    left = cuts[:, :-1]
    width = np.diff(cuts, axis=1)
    m = cuts.shape[0]
    offsets = (np.arange(panels) / panels)[None, None, :, None]
    nodes = left[:, :, None, None] + width[:, :, None, None] * (offsets + _X[None, None, None, :] / panels)
    weights = width[:, :, None, None] * np.broadcast_to(_W / panels, (1, 1, panels, _ORDER))
    owner = np.broadcast_to(np.arange(m)[:, None, None, None], nodes.shape)
    keep = np.broadcast_to(width[:, :, None, None] > 0, nodes.shape)
    return nodes[keep], weights[keep], owner[keep]


def default_panels(m: int) -> int:
    return 16 if m <= 256 else (4 if m <= 4096 else 1)


def segment_rule(ta, tb, qa, qb, time_knots=(), state_knots=(), panels: int | None = None):
    """Quadrature nodes on a batch of straight segments ``(ta, qa) -> (tb, qb)``.

    Each segment is split where it crosses a time knot or (1D only) a state
    knot, and every sub-interval gets ``panels`` Gauss panels of order 5.

    Returns
    -------
    lam : ndarray (K,)
        Segment-local parameter of each node in [0, 1].
    weight : ndarray (K,)
        Weights in the segment parameter; they sum to 1 per segment.
    owner : ndarray (K,)
        Index of the segment each node belongs to.
    """
    ta, tb, qa, qb = _batch(ta, tb, qa, qb)
    m = ta.size
    if m == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=int)
    panels = default_panels(m) if panels is None else panels
    return rule_from_cuts(segment_cuts(ta, tb, qa, qb, time_knots, state_knots), panels)


def system_rule(system, ta, tb, qa, qb, panels: int | None = None, slope_levels=()):
    """Segment rule adapted to a system's energy.

    Splits at the energy's state and time knots and additionally where a
    component of ``D_q E`` changes sign along the segment, which is where
    the slope ``R_1*(D_q E)`` has kinks for the norms in this package, and
    where the slope crosses one of ``slope_levels``.

    Returns ``t, q, weight, owner`` with weights in the segment parameter
    (summing to 1 per segment).
    """
    ta, tb, qa, qb = _batch(ta, tb, qa, qb)
    m = ta.size
    n = qa.shape[1]
    if m == 0:
        return np.zeros(0), np.zeros((0, n)), np.zeros(0), np.zeros(0, dtype=int)
    energy = system.energy
    cuts = segment_cuts(ta, tb, qa, qb, getattr(energy, "time_knots", ()), getattr(energy, "knots", ()))
    tt = ta[:, None] + cuts * (tb - ta)[:, None]
    qq = qa[:, None, :] + cuts[:, :, None] * (qb - qa)[:, None, :]
    grads = np.asarray(energy.grad_q(tt, qq), dtype=float).reshape(m, cuts.shape[1], n)
    cuts = refine_cuts(cuts, grads)
    for level in slope_levels:
        tt = ta[:, None] + cuts * (tb - ta)[:, None]
        qq = qa[:, None, :] + cuts[:, :, None] * (qb - qa)[:, None, :]
        slopes = system.norm.dual_evaluate(qq, energy.grad_q(tt, qq)) - level
        cuts = refine_cuts(cuts, np.asarray(slopes, dtype=float).reshape(cuts.shape))
    lam, w, owner = rule_from_cuts(cuts, default_panels(m) if panels is None else panels)
    t = ta[owner] + lam * (tb[owner] - ta[owner])
    q = qa[owner] + lam[:, None] * (qb[owner] - qa[owner])
    return t, q, w, owner
