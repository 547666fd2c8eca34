"""Run configuration, dataset CSV, and model/report JSON files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernel import Dataset, WeightFn
from .measure import DiscreteMeasure
from .network import Activation, NetworkSpec, param_dim
from .trainer import Expansion

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration, dataset or file contents (exit status 2)."""


# -- configuration -----------------------------------------------------------

@dataclass
class CandidateSettings:
    bound: float | None = None
    count: int = 200
    seed: int = 0
    grid: bool = False
    k_per_dim: int = 3
    rounds: int = 2
    radius: float = 0.25
    per_center: int = 10
    refine_tol: float = 0.05
    max_centers: int = 20


@dataclass
class Tolerances:
    argmax_tol: float = 1e-6
    coeff_tol: float = 1e-8
    merge_tol: float = 1e-9
    lp_tol: float = 1e-9
    check_tol: float = 1e-8
    kkt_tol: float = 1e-6
    consistency_tol: float = 1e-6


@dataclass
class RegSettings:
    lam: float = 0.1
    loss: str = "square"


@dataclass
class PathSettings:
    loss: str = "square"
    lambdas: list[float] | None = None
    count: int = 10
    min_ratio: float = 1e-4


@dataclass
class TrainSettings:
    atom_count: int | None = None
    learning_rate: float = 0.1
    max_iters: int = 1000
    init_bound: float = 1.0
    weighted: bool = False
    grad_check_h: float = 1e-5


@dataclass
class RunConfig:
    network: NetworkSpec
    weight: WeightFn = field(default_factory=WeightFn)
    candidates: CandidateSettings = field(default_factory=CandidateSettings)
    tolerances: Tolerances = field(default_factory=Tolerances)
    reg: RegSettings = field(default_factory=RegSettings)
    path: PathSettings = field(default_factory=PathSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    dataset: Path | None = None
    output: Path = Path("out")


def _section(cls, raw, name, renames=None):
    raw = dict(raw or {})
    for old, new in (renames or {}).items():
        if old in raw:
            raw[new] = raw.pop(old)
    known = set(cls.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def _positive(value, name, allow_zero=False):
    ok = value >= 0 if allow_zero else value > 0
    if not (isinstance(value, (int, float)) and math.isfinite(value) and ok):
        raise ConfigError(f"{name} must be {'non-negative' if allow_zero else 'positive'}")


def config_from_dict(raw: dict, base_dir: Path | None = None) -> RunConfig:
    base_dir = Path(base_dir or ".")
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - {"network", "weight", "candidates", "tolerances", "reg",
                          "path", "train", "dataset", "output", "format_version"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    net = raw.get("network")
    if not isinstance(net, dict):
        raise ConfigError("the [network] section is required")
    try:
        spec = NetworkSpec(
            int(net["input_dim"]), int(net["output_dim"]),
            tuple(net.get("hidden", ())), Activation(net.get("activation", "relu")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [network] section: {exc}") from exc
    weight = _section(WeightFn, raw.get("weight"), "weight")
    cands = _section(CandidateSettings, raw.get("candidates"), "candidates")
    tols = _section(Tolerances, raw.get("tolerances"), "tolerances")
    reg = _section(RegSettings, raw.get("reg"), "reg", {"lambda": "lam"})
    path = _section(PathSettings, raw.get("path"), "path")
    train = _section(TrainSettings, raw.get("train"), "train")

    if cands.bound is not None:
        _positive(cands.bound, "candidates.bound")
    for name in ("count", "k_per_dim"):
        if int(getattr(cands, name)) < 1:
            raise ConfigError(f"candidates.{name} must be at least 1")
    for name in ("rounds", "per_center", "max_centers"):
        if int(getattr(cands, name)) < 0:
            raise ConfigError(f"candidates.{name} must be non-negative")
    if not 0 <= int(cands.seed) < 2 ** 64:
        raise ConfigError("candidates.seed must be an unsigned 64-bit integer")
    _positive(cands.radius, "candidates.radius")
    _positive(cands.refine_tol, "candidates.refine_tol", allow_zero=True)
    for name, value in vars(tols).items():
        _positive(value, f"tolerances.{name}", allow_zero=True)
    _positive(reg.lam, "reg.lambda")
    for loss in (reg.loss, path.loss):
        if loss not in ("square", "absolute"):
            raise ConfigError(f"unknown loss {loss!r}")
    if path.lambdas is not None:
        lams = [float(v) for v in path.lambdas]
        if not lams or any(v <= 0 for v in lams) or any(b >= a for a, b in zip(lams, lams[1:])):
            raise ConfigError("path.lambdas must be positive and strictly decreasing")
        path.lambdas = lams
    _positive(path.min_ratio, "path.min_ratio")
    if path.count < 1:
        raise ConfigError("path.count must be at least 1")
    _positive(train.learning_rate, "train.learning_rate")
    _positive(train.init_bound, "train.init_bound")
    if train.atom_count is not None and train.atom_count < 1:
        raise ConfigError("train.atom_count must be at least 1")
    if not 1e-7 <= train.grad_check_h <= 1e-3:
        raise ConfigError("train.grad_check_h must lie in [1e-7, 1e-3]")

    dataset = raw.get("dataset")
    dataset = (base_dir / dataset) if dataset else None
    output = base_dir / raw.get("output", "out")
    return RunConfig(spec, weight, cands, tols, reg, path, train, dataset, output)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw, path.parent)


# -- dataset ----------------------------------------------------------------

def dataset_header(s: int, t: int) -> list[str]:
    return [f"x{i}" for i in range(s)] + [f"y{k}" for k in range(t)]


def read_dataset(path, spec: NetworkSpec) -> Dataset:
    """Read a CSV with header ``x0..x{s-1},y0..y{t-1}`` and one row per point."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"dataset {path} is empty")
    expected = dataset_header(spec.input_dim, spec.output_dim)
    header = [h.strip() for h in rows[0]]
    if header != expected:
        raise ConfigError(f"dataset header {header} does not match {expected}")
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise ConfigError(f"dataset {path} has no data rows")
    try:
        values = np.array([[float(cell) for cell in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"dataset {path} has a non-numeric entry: {exc}") from exc
    if values.shape[1] != len(expected) or not np.all(np.isfinite(values)):
        raise ConfigError(f"dataset {path} has malformed rows")
    s = spec.input_dim
    X = values[:, :s]
    if len(np.unique(X, axis=0)) != X.shape[0]:
        raise ConfigError("dataset inputs must be distinct")
    return Dataset(X, values[:, s:])


def write_dataset(path, data: Dataset) -> None:
    path = Path(path)
    s, t = data.X.shape[1], data.Y.shape[1]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset_header(s, t))
        for x, y in zip(data.X, data.Y):
            w.writerow([repr(float(v)) for v in (*x, *y)])


# -- model and report files ---------------------------------------------------

def _spec_dict(spec: NetworkSpec) -> dict:
    return {
        "input_dim": spec.input_dim,
        "output_dim": spec.output_dim,
        "hidden": list(spec.hidden),
        "activation": spec.activation.value,
    }


@dataclass
class ModelFile:
    """A solved or trained expansion, self-contained for prediction.

    ``kind`` is ``"kernel"`` for sum_l c_l K(., theta_l) (solver output) and
    ``"network"`` for sum_l beta_l N(., theta_l) (trainer output, where the
    weight is applied only when ``weighted`` is set).
    """

    spec: NetworkSpec
    weight: WeightFn
    thetas: np.ndarray
    coeffs: np.ndarray
    kind: str = "kernel"
    weighted: bool = True

    @classmethod
    def from_measure(cls, mu: DiscreteMeasure) -> "ModelFile":
        return cls(mu.spec, mu.weight, mu.thetas, mu.coeffs, "kernel", True)

    @classmethod
    def from_expansion(cls, e: Expansion) -> "ModelFile":
        return cls(e.spec, e.weight or WeightFn(), np.asarray(e.thetas), np.asarray(e.betas),
                   "network", e.weight is not None)

    def predict(self, X) -> np.ndarray:
        exp = Expansion(self.spec, self.coeffs, self.thetas,
                        self.weight if self.weighted else None)
        return exp.predict(X)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "weighted": self.weighted,
            "network": _spec_dict(self.spec),
            "weight": {"kind": self.weight.kind, "alpha": self.weight.alpha},
            "atoms": [
                {"theta": [float(v) for v in th], "coeff": float(c)}
                for th, c in zip(self.thetas, self.coeffs)
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelFile":
        try:
            if raw["format_version"] != FORMAT_VERSION:
                raise ConfigError(f"unsupported model format_version {raw['format_version']}")
            net = raw["network"]
            spec = NetworkSpec(net["input_dim"], net["output_dim"], tuple(net["hidden"]),
                               Activation(net["activation"]))
            weight = WeightFn(raw["weight"]["kind"], raw["weight"]["alpha"])
            d = param_dim(spec)
            thetas = np.array([a["theta"] for a in raw["atoms"]], dtype=float).reshape(-1, d)
            coeffs = np.array([a["coeff"] for a in raw["atoms"]], dtype=float)
            return cls(spec, weight, thetas, coeffs, raw["kind"], bool(raw["weighted"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed model file: {exc}") from exc


def _clean(obj):
    """Make a structure JSON-safe: numpy scalars to Python, non-finite to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dump_json(path, obj) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def write_model(path, model: ModelFile) -> None:
    dump_json(path, model.to_dict())


def read_model(path) -> ModelFile:
    return ModelFile.from_dict(load_json(path))


def write_table(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
