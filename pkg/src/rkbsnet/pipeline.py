"""End-to-end runs behind the command-line subcommands.

Every run writes into the configured output directory: a model file, a JSON
report, CSV tables and PNG figures. The return value is the process exit
status: 0 when every verification passes, 1 when one fails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .candidates import BoxSpec, CandidateSet, default_box, refine, sample
from .formats import (
    FORMAT_VERSION,
    ConfigError,
    ModelFile,
    RunConfig,
    dump_json,
    load_json,
    read_dataset,
    read_model,
    write_model,
    write_table,
)
from .kernel import Dataset, feature_matrix
from .measure import f_mu_eval
from .mni import MniOptions, RankDeficientError, argmax_set, solve_dual, solve_mni
from .network import param_dim
from .regularized import (
    RegOptions,
    RegProblem,
    lambda_max,
    lambda_path,
    solve_regularized,
)
from .trainer import TrainConfig, grad_check, train_expansion

log = logging.getLogger(__name__)

TRACE_SLACK = 1e-10
ROUND_TRIP_TOL = 1e-12


@dataclass
class RunResult:
    status: int
    report: dict
    files: list[Path] = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        return list(self.report.get("failures", []))


def _prepare_output(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset is None:
        raise ConfigError("the configuration names no dataset")
    return read_dataset(cfg.dataset, cfg.network)


def _box(cfg: RunConfig) -> BoxSpec:
    return default_box(cfg.network, cfg.weight.alpha, cfg.candidates.bound)


def initial_candidates(cfg: RunConfig) -> CandidateSet:
    c = cfg.candidates
    box = _box(cfg)
    if c.grid:
        return sample(box, "grid", k_per_dim=c.k_per_dim, seed=c.seed)
    return sample(box, "random", count=c.count, seed=c.seed)


def _mni_options(cfg: RunConfig) -> MniOptions:
    t = cfg.tolerances
    return MniOptions(argmax_tol=t.argmax_tol, coeff_tol=t.coeff_tol, merge_tol=t.merge_tol,
                      lp_tol=t.lp_tol, check_tol=t.check_tol)


def _centers(cert, points, refine_tol, max_centers):
    """Candidates whose |g| is within ``refine_tol`` of the maximum, best first."""
    near = argmax_set(cert, refine_tol)
    order = sorted(near, key=lambda p: (-abs(cert.ghat_values[p]), p))
    return points[order[:max_centers]]


def _selected_indices(mu, points):
    return sorted(int(np.argmin(np.max(np.abs(points - a.theta), axis=1))) for a in mu.atoms)


def _model_residual(model: ModelFile, data: Dataset) -> float:
    pred = model.predict(data.X)
    return float(np.max(np.abs(pred - data.Y), initial=0.0))


def _finish(out, report, files, status):
    report["format_version"] = FORMAT_VERSION
    report["exit_status"] = status
    dump_json(out / "report.json", report)
    files.append(out / "report.json")
    return RunResult(status, report, files)


def run_sample(cfg: RunConfig) -> RunResult:
    out = _prepare_output(cfg)
    cands = initial_candidates(cfg)
    d = param_dim(cfg.network)
    path = out / "candidates.csv"
    write_table(path, ["index"] + [f"theta{i}" for i in range(d)],
                ([p, *row] for p, row in enumerate(cands.points)))
    report = {"command": "sample", "provenance": cands.provenance, "seed": cands.seed,
              "candidates": len(cands), "param_dim": d, "failures": []}
    return _finish(out, report, [path], 0)


def run_mni(cfg: RunConfig) -> RunResult:
    """Refine-and-resolve rounds, then the interpolation solve and its verification."""
    out = _prepare_output(cfg)
    data = _dataset(cfg)
    Y = data.targets()
    opts = _mni_options(cfg)
    cs = cfg.candidates
    cands = initial_candidates(cfg)
    trace = []
    failures = []
    trivial = not np.any(Y)

    try:
        if not trivial:
            for r in range(cs.rounds):
                A = feature_matrix(cfg.network, cfg.weight, data.X, cands)
                cert = solve_dual(A, Y, tol=opts.lp_tol)
                trace.append((r, len(cands), cert.cstar))
                log.info("round %d: %d candidates, C* = %.12g", r, len(cands), cert.cstar)
                centers = _centers(cert, cands.points, cs.refine_tol, cs.max_centers)
                cands = refine(cands, centers, cs.radius, cs.per_center, cs.seed + 1 + r)
        A = feature_matrix(cfg.network, cfg.weight, data.X, cands)
        mu, cert, mrep = solve_mni(A, Y, cands, opts)
    except RankDeficientError as exc:
        report = {"command": "mni", "failures": ["rank_check"], "message": str(exc)}
        return _finish(out, report, [], 1)
    trace.append((cs.rounds if not trivial else 0, len(cands), cert.cstar))

    monotone = all(b[2] <= a[2] + TRACE_SLACK * max(1.0, abs(a[2]))
                   for a, b in zip(trace, trace[1:]))
    failures.extend(mrep.failures)
    if not monotone:
        failures.append("cstar_trace")

    model = ModelFile.from_measure(mu)
    files = [out / "model.json", out / "trace.csv", out / "plot_data.csv"]
    write_model(files[0], model)
    write_table(files[1], ["round", "candidates", "cstar"], trace)
    selected = set(_selected_indices(mu, cands.points))
    write_table(files[2], ["candidate", "ghat", "selected"],
                ([p, float(g), int(p in selected)] for p, g in enumerate(cert.ghat_values)))
    files.append(plotting.certificate_figure(out / "certificate.png", cert.ghat_values,
                                             cert.ghat_norm, sorted(selected), opts.argmax_tol))
    files.append(plotting.trace_figure(out / "cstar_trace.png",
                                       [t[0] for t in trace], [t[2] for t in trace]))

    report = {
        "command": "mni",
        **mrep.as_dict(),
        "candidates": len(cands),
        "rounds": cs.rounds,
        "trace": [{"round": r, "candidates": n, "cstar": v} for r, n, v in trace],
        "trace_monotone": monotone,
        "model_residual": _model_residual(model, data),
        "failures": failures,
    }
    return _finish(out, report, files, 1 if failures else 0)


def _reg_setup(cfg: RunConfig):
    data = _dataset(cfg)
    cands = initial_candidates(cfg)
    A = feature_matrix(cfg.network, cfg.weight, data.X, cands)
    return data, cands, A


def run_reg(cfg: RunConfig) -> RunResult:
    out = _prepare_output(cfg)
    data, cands, A = _reg_setup(cfg)
    Y = data.targets()
    tol = cfg.tolerances
    opts = RegOptions(coeff_tol=tol.coeff_tol, merge_tol=tol.merge_tol, lp_tol=tol.lp_tol)
    mu, rep = solve_regularized(RegProblem(A, Y, cfg.reg.lam, cfg.reg.loss), opts)
    failures = []
    if rep.loss == "square" and rep.kkt_max_violation > tol.kkt_tol * max(1.0, rep.lam):
        failures.append("kkt")
    if rep.loss == "absolute" and rep.kkt_max_violation > tol.check_tol * max(1.0, rep.objective):
        failures.append("lp_duality")
    if rep.mni_consistency_gap is not None and \
            rep.mni_consistency_gap > tol.consistency_tol * max(1.0, rep.tv):
        failures.append("mni_consistency")

    model = ModelFile.from_measure(mu)
    files = [out / "model.json", out / "plot_data.csv"]
    write_model(files[0], model)
    selected = set(_selected_indices(mu, cands.points))
    coeff = np.zeros(len(cands))
    for a in mu.atoms:
        coeff[int(np.argmin(np.max(np.abs(cands.points - a.theta), axis=1)))] += a.coeff
    Z = f_mu_eval(mu, data.X).T
    ghat = solve_dual(A, Z).ghat_values if np.any(Z) else np.zeros(len(cands))
    write_table(files[1], ["candidate", "ghat", "coefficient", "selected"],
                ([p, float(ghat[p]), float(coeff[p]), int(p in selected)]
                 for p in range(len(cands))))
    files.append(plotting.coefficient_figure(out / "coefficients.png", coeff))
    report = {
        "command": "reg",
        **rep.as_dict(),
        "atom_count": len(mu),
        "candidates": len(cands),
        "lambda_max": lambda_max(A, Y),
        "predictions": Z,
        "model_residual": _model_residual(model, data),
        "failures": failures,
    }
    return _finish(out, report, files, 1 if failures else 0)


def run_path(cfg: RunConfig) -> RunResult:
    out = _prepare_output(cfg)
    data, cands, A = _reg_setup(cfg)
    Y = data.targets()
    ps = cfg.path
    lams = ps.lambdas
    if lams is None:
        top = lambda_max(A, Y)
        if top == 0.0:
            raise ConfigError("targets are orthogonal to every feature; no path to trace")
        lams = list(np.geomspace(top, top * ps.min_ratio, ps.count))
    rows = lambda_path(A, Y, lams, ps.loss,
                       RegOptions(coeff_tol=cfg.tolerances.coeff_tol, lp_tol=cfg.tolerances.lp_tol,
                                  check_consistency=False))
    failures = []
    tvs = [r.tv for r in rows]
    if any(b < a - 1e-9 * max(1.0, abs(a)) for a, b in zip(tvs, tvs[1:])):
        failures.append("tv_monotone")
    if ps.loss == "square" and any(
            r.kkt_max_violation > cfg.tolerances.kkt_tol * max(1.0, r.lam) for r in rows):
        failures.append("kkt")
    files = [out / "path.csv"]
    write_table(files[0], ["lambda", "loss_value", "tv", "kkt_max_violation"],
                ([r.lam, r.loss_value, r.tv, r.kkt_max_violation] for r in rows))
    files.append(plotting.path_figure(out / "path.png", [r.lam for r in rows], tvs,
                                      [r.loss_value for r in rows]))
    report = {
        "command": "path",
        "loss": ps.loss,
        "rows": [{"lambda": r.lam, "loss_value": r.loss_value, "tv": r.tv,
                  "kkt_max_violation": r.kkt_max_violation} for r in rows],
        "failures": failures,
    }
    return _finish(out, report, files, 1 if failures else 0)


def run_train(cfg: RunConfig) -> RunResult:
    out = _prepare_output(cfg)
    data = _dataset(cfg)
    ts = cfg.train
    tcfg = TrainConfig(
        init_box=BoxSpec.cube(param_dim(cfg.network), ts.init_bound),
        atom_count=ts.atom_count,
        learning_rate=ts.learning_rate,
        max_iters=ts.max_iters,
        seed=cfg.candidates.seed,
        weighted=ts.weighted,
    )
    expansion, trace = train_expansion(cfg.network, data, tcfg)
    failures = []
    err = None
    if cfg.network.activation.value == "sigmoid":
        err = grad_check(cfg.network, data, trace.betas, trace.thetas, ts.grad_check_h,
                         weight=expansion.weight)
        trace.grad_check_max_rel_err = err
        if err > 1e-5:
            failures.append("grad_check")
    if any(b > a for a, b in zip(trace.losses, trace.losses[1:])):
        failures.append("loss_monotone")

    model = ModelFile.from_expansion(expansion)
    files = [out / "model.json", out / "loss_trace.csv"]
    write_model(files[0], model)
    write_table(files[1], ["iteration", "loss"], enumerate(trace.losses))
    files.append(plotting.loss_figure(out / "loss_trace.png", trace.losses))
    report = {
        "command": "train",
        "atom_count": int(expansion.betas.size),
        "iterations": len(trace.losses) - 1,
        "initial_loss": trace.losses[0],
        "final_loss": trace.losses[-1],
        "grad_check_max_rel_err": err,
        "relu_kink_convention": trace.relu_kink_convention,
        "model_residual": _model_residual(model, data),
        "failures": failures,
    }
    return _finish(out, report, files, 1 if failures else 0)


def run_verify(cfg: RunConfig, model_path=None, report_path=None) -> RunResult:
    """Reload a model file and check it reproduces the recorded residuals and norm."""
    out = Path(cfg.output)
    model = read_model(model_path or out / "model.json")
    recorded = load_json(report_path or out / "report.json")
    data = _dataset(cfg)
    residual = _model_residual(model, data)
    failures = []
    checks = {"model_residual": residual}
    if "model_residual" in recorded and abs(residual - recorded["model_residual"]) > ROUND_TRIP_TOL:
        failures.append("model_residual")
    if recorded.get("command") == "mni":
        if abs(residual - recorded["max_interp_residual"]) > ROUND_TRIP_TOL:
            failures.append("max_interp_residual")
        tv = float(np.sum(np.abs(model.coeffs)))
        checks["tv"] = tv
        if abs(tv - recorded["tv"]) > ROUND_TRIP_TOL * max(1.0, abs(recorded["tv"])):
            failures.append("tv")
    report = {"command": "verify", "checks": checks, "recorded_command": recorded.get("command"),
              "failures": failures}
    status = 1 if failures else 0
    report["format_version"] = FORMAT_VERSION
    report["exit_status"] = status
    path = out / "verify.json"
    try:
        dump_json(path, report)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return RunResult(status, report, [path])


COMMANDS = {
    "sample": run_sample,
    "mni": run_mni,
    "reg": run_reg,
    "path": run_path,
    "train": run_train,
}
