"""File formats: trajectories, reports, parameters, configuration, progress and leaderboards."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .dynamics import ModelParams, RobotKind
from .robustness import CRITERIA, DEFAULT_RANGES, N_SWEEP
from .scoring import SUCCESS_HEIGHT, WEIGHT_PRESETS
from .simulation import DEFAULT_DT, DEFAULT_T_FINAL, Trajectory

TRAJECTORY_COLUMNS = ("time", "pos1", "pos2", "vel1", "vel2", "tau1", "tau2")
EXTENDED_COLUMNS = TRAJECTORY_COLUMNS + ("tau_des1", "tau_des2", "tau_pert1", "tau_pert2")
PLOT_COLUMNS = TRAJECTORY_COLUMNS + ("tau_pert1", "tau_pert2")
PROGRESS_COLUMNS = ("generation", "best_cost", "mean_cost")


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _fmt(v):
    # shortest repr that round-trips exactly
    return repr(float(v))


def _prepare(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_table(path, header, rows):
    with open(_prepare(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def trajectory_table(traj, extended=True):
    cols = [traj.t[:, None], traj.x, traj.tau]
    if extended:
        cols += [traj.tau_des, traj.tau_pert]
    return np.hstack(cols)


def write_trajectory_csv(traj, path, extended=True):
    """Write ``traj`` with the basic or the extended column set."""
    header = EXTENDED_COLUMNS if extended else TRAJECTORY_COLUMNS
    _write_table(path, header, trajectory_table(traj, extended))


def read_trajectory_csv(path):
    """Read a basic or extended trajectory CSV.

    Raises
    ------
    FormatError
        On an unknown header, ragged rows or non-numeric cells.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text file") from exc
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = tuple(h.strip() for h in rows[0])
    if header not in (TRAJECTORY_COLUMNS, EXTENDED_COLUMNS):
        raise FormatError(f"{path}: unexpected header {','.join(header)}")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(header) or len(data) < 1:
        raise FormatError(f"{path}: expected rows of {len(header)} values")
    if len(data) > 1 and not np.allclose(np.diff(data[:, 0]), data[1, 0] - data[0, 0], rtol=1e-6, atol=1e-12):
        raise FormatError(f"{path}: time column is not uniformly spaced")
    kwargs = {}
    if header == EXTENDED_COLUMNS:
        kwargs = {"tau_des": data[:, 7:9], "tau_pert": data[:, 9:11]}
    return Trajectory(data[:, 0], data[:, 1:5], data[:, 5:7], **kwargs)


def write_plot_csv(traj, path):
    """Time, angles, velocities, applied torques and perturbation torques."""
    table = np.hstack([traj.t[:, None], traj.x, traj.tau, traj.tau_pert])
    _write_table(path, PLOT_COLUMNS, table)


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def dumps(obj):
    """Deterministic JSON text (sorted keys, non-finite floats as null)."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path):
    Path(_prepare(path)).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def write_params_json(params, path):
    write_json(params.to_dict(), path)


def read_params_json(path):
    data = read_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected an object of model parameters")
    return ModelParams.from_dict(data)


def write_progress_csv(history, path):
    """Rows of ``generation,best_cost,mean_cost``."""
    rows = [(int(g), b, m) for g, b, m in np.asarray(history, dtype=float)]
    with open(_prepare(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROGRESS_COLUMNS)
        for g, b, m in rows:
            writer.writerow([g, _fmt(b), _fmt(m)])


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    """Experiment settings, stored as a JSON object with these keys.

    ``sweep`` maps a criterion name to ``[low, high]`` or
    ``[low, high, n]``; missing criteria keep their defaults.
    """

    robot: str = "pendubot"
    dt: float = DEFAULT_DT
    t_final: float = DEFAULT_T_FINAL
    threshold: float = SUCCESS_HEIGHT
    weights: str = "sim"
    model_params: str = None
    seed: int = 0
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        RobotKind(self.robot)
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.weights not in WEIGHT_PRESETS:
            raise ValueError(f"weights must be one of {sorted(WEIGHT_PRESETS)}")
        for name, rng in self.sweep.items():
            if name not in DEFAULT_RANGES:
                raise ValueError(f"no sweep range for criterion {name!r}")
            if len(rng) not in (2, 3):
                raise ValueError(f"sweep range for {name} must be [low, high] or [low, high, n]")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        data = read_json(path)
        if not isinstance(data, dict):
            raise FormatError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, **overrides):
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return BenchConfig.from_dict(data)

    def load_model(self):
        return read_params_json(self.model_params) if self.model_params else ModelParams()

    def sweep_values(self, criterion):
        """Severity grid of a criterion honouring configured ranges."""
        if criterion not in CRITERIA or criterion == "perturbation":
            raise ValueError(f"{criterion!r} has no severity range")
        rng = self.sweep.get(criterion, DEFAULT_RANGES[criterion])
        n = int(rng[2]) if len(rng) == 3 else N_SWEEP
        return tuple(np.linspace(float(rng[0]), float(rng[1]), n).tolist())


# ---------------------------------------------------------------------------
# leaderboard
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeaderboardRow:
    name: str
    scores: tuple
    successes: int

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not self.scores:
            raise ValueError("a leaderboard row needs at least one trial")
        if not 0 <= self.successes <= len(self.scores):
            raise ValueError("success count must lie between 0 and the number of trials")

    @property
    def total(self):
        return len(self.scores)

    @property
    def average(self):
        return float(np.mean(self.scores))

    @property
    def best(self):
        return float(np.max(self.scores))

    def to_dict(self):
        return {
            "name": self.name,
            "scores": list(self.scores),
            "average": self.average,
            "best": self.best,
            "successes": self.successes,
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            row = cls(str(data["name"]), tuple(data["scores"]), int(data["successes"]))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed leaderboard row: {exc}") from exc
        return row


def sort_rows(rows):
    """Average descending, then best descending, then name."""
    return sorted(rows, key=lambda r: (-r.average, -r.best, r.name))


def leaderboard_markdown(rows):
    lines = [
        "| rank | controller | average | best | successes |",
        "|---:|:---|---:|---:|---:|",
    ]
    for i, r in enumerate(sort_rows(rows), 1):
        lines.append(f"| {i} | {r.name} | {r.average:.4f} | {r.best:.4f} | {r.successes}/{r.total} |")
    return "\n".join(lines) + "\n"


def write_leaderboard_csv(rows, path):
    with open(_prepare(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "name", "average", "best", "successes", "total"])
        for i, r in enumerate(sort_rows(rows), 1):
            writer.writerow([i, r.name, _fmt(r.average), _fmt(r.best), r.successes, r.total])


def load_rows(directory):
    """All ``*.json`` leaderboard rows in ``directory``, sorted by file name."""
    paths = sorted(Path(directory).glob("*.json"))
    rows = []
    for path in paths:
        data = read_json(path)
        if isinstance(data, dict) and "row" in data:
            data = data["row"]
        rows.append(LeaderboardRow.from_dict(data))
    return rows
