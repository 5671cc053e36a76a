"""CSV and JSON serialization with round-trip precision (17 significant digits)."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .curves import BVTrajectory, JumpRecord, ParametrizedCurve, Piece, Trajectory, make_curve
from .errors import DomainError


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _clean(obj):
    """JSON-ready copy of nested metadata (arrays to lists, infinities to strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isfinite(x):
            return x
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict())
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _table(header: list, rows: np.ndarray) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def _read_table(path) -> tuple[list, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


# -- trajectories -------------------------------------------------------------

def trajectory_csv(traj: Trajectory) -> str:
    n = traj.states.shape[1]
    return _table(["t"] + [f"q_{i}" for i in range(n)], np.column_stack([traj.times, traj.states]))


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    return _write(path, trajectory_csv(traj))


def read_trajectory_csv(path) -> Trajectory:
    header, data = _read_table(path)
    if not header or header[0] != "t":
        raise DomainError(f"{path}: expected a header starting with 't'")
    return Trajectory(data[:, 0], data[:, 1:], {"source": str(path)})


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {"meta": traj.meta, "samples": np.column_stack([traj.times, traj.states])}


def trajectory_from_dict(doc: dict) -> Trajectory:
    samples = np.asarray(doc["samples"], dtype=float)
    return Trajectory(samples[:, 0], samples[:, 1:], dict(doc.get("meta", {})))


# -- parametrized curves ------------------------------------------------------

def curve_csv(curve: ParametrizedCurve) -> str:
    n = curve.q_hat.shape[1]
    return _table(["s", "t_hat"] + [f"q_{i}" for i in range(n)],
                  np.column_stack([curve.params, curve.t_hat, curve.q_hat]))


def write_curve_csv(curve: ParametrizedCurve, path) -> Path:
    return _write(path, curve_csv(curve))


def read_curve_csv(path, system=None) -> ParametrizedCurve:
    header, data = _read_table(path)
    if header[:2] != ["s", "t_hat"]:
        raise DomainError(f"{path}: expected a header starting with 's,t_hat'")
    return _curve(system, data[:, 0], data[:, 1], data[:, 2:], {"source": str(path)})


def _curve(system, s, t, q, meta) -> ParametrizedCurve:
    if system is not None:
        return make_curve(system, s, t, q, meta)
    ds = np.diff(s)
    return ParametrizedCurve(s, t, q, np.diff(t) / ds, np.linalg.norm(np.diff(q, axis=0), axis=1) / ds, meta)


def curve_to_dict(curve: ParametrizedCurve) -> dict:
    return {"kind": "parametrized_curve", "meta": curve.meta,
            "samples": np.column_stack([curve.params, curve.t_hat, curve.q_hat])}


def curve_from_dict(doc: dict, system=None) -> ParametrizedCurve:
    samples = np.asarray(doc["samples"], dtype=float)
    return _curve(system, samples[:, 0], samples[:, 1], samples[:, 2:], dict(doc.get("meta", {})))


# -- BV trajectories ----------------------------------------------------------

def bv_to_dict(bv: BVTrajectory) -> dict:
    return {
        "kind": "bv_trajectory",
        "convention": bv.convention,
        "pieces": [{"samples": np.column_stack([p.times, p.states])} for p in bv.pieces],
        "jumps": [{"t": j.t, "q_minus": j.q_minus, "q_point": j.q_point, "q_plus": j.q_plus,
                   "path": j.path, "path_params": j.path_params, "theta": j.theta} for j in bv.jumps],
    }


def bv_from_dict(doc: dict) -> BVTrajectory:
    pieces = []
    for p in doc["pieces"]:
        samples = np.asarray(p["samples"], dtype=float)
        pieces.append(Piece(samples[:, 0], samples[:, 1:]))
    jumps = []
    for j in doc.get("jumps", []):
        path = None if j.get("path") is None else np.asarray(j["path"], dtype=float)
        params = None if j.get("path_params") is None else np.asarray(j["path_params"], dtype=float)
        jumps.append(JumpRecord(float(j["t"]), j["q_minus"], j["q_point"], j["q_plus"], path, params, j.get("theta")))
    return BVTrajectory(tuple(pieces), tuple(jumps), doc.get("convention", "left"))


def bv_csv(bv: BVTrajectory) -> str:
    """Samples of a BV trajectory in time order; each jump adds its left and right limits."""
    rows = []
    for k, piece in enumerate(bv.pieces):
        for t, q in zip(piece.times, piece.states):
            rows.append([t, *q])
    order = np.argsort(np.array([r[0] for r in rows]), kind="stable")
    return _table(["t"] + [f"q_{i}" for i in range(bv.dimension)], np.array(rows)[order])


# -- generic ------------------------------------------------------------------

def save(obj, path) -> Path:
    """Write a trajectory, curve, BV trajectory or plain document; the format follows the suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        if isinstance(obj, Trajectory):
            return _write(path, trajectory_csv(obj))
        if isinstance(obj, ParametrizedCurve):
            return _write(path, curve_csv(obj))
        if isinstance(obj, BVTrajectory):
            return _write(path, bv_csv(obj))
        raise DomainError(f"cannot write {type(obj).__name__} as CSV")
    if isinstance(obj, Trajectory):
        doc = trajectory_to_dict(obj)
    elif isinstance(obj, ParametrizedCurve):
        doc = curve_to_dict(obj)
    elif isinstance(obj, BVTrajectory):
        doc = bv_to_dict(obj)
    elif hasattr(obj, "to_dict"):
        doc = obj.to_dict()
    else:
        doc = obj
    return _write(path, dumps(doc))


def load(path, system=None):
    """Read a file written by :func:`save`.

    CSV files with a leading ``s,t_hat`` header are curves, others sampled
    trajectories. JSON documents are told apart by their ``kind`` field.
    """
    path = Path(path)
    if not path.exists():
        raise DomainError(f"no such file: {path}")
    if path.suffix.lower() == ".csv":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        return read_curve_csv(path, system) if header[:2] == ["s", "t_hat"] else read_trajectory_csv(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "bv_trajectory":
        return bv_from_dict(doc)
    if kind == "parametrized_curve":
        return curve_from_dict(doc, system)
    if "samples" in doc:
        return trajectory_from_dict(doc)
    raise DomainError(f"{path}: unrecognized document")
