"""
Command-line session: resolves the run configuration, runs the invariance
suite or an experiment run matrix, and writes reports, trajectories and
summaries.
"""
import argparse
import json
import logging
import math
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import imuon.configuration.config as config
import imuon.backend.manifold_part.manifolds as manifolds
import imuon.backend.oracle_part.oracle as oracle
import imuon.backend.optimizer_part.baselines as baselines
import imuon.backend.optimizer_part.optimizer as optimizer
import imuon.backend.problem_part.problems as problems
from imuon.backend.kernel_part.norms import CORE_NORMS, SPECTRAL, NormSpec
from imuon.backend.utility.errors import (
    ConvergenceFailure,
    DivergedError,
    ImuonError,
    InvalidInput,
    NotPositiveDefinite,
    RankDeficient,
)
from imuon.backend.utility.utils import TrajectoryWriter, build_id, setup_logging

logger = logging.getLogger(__name__)


# =====================================================
# RUN CONFIGURATION
# =====================================================

class ExperimentKind(str, Enum):
    VERIFY = "verify"
    COMPLETE = "complete"
    SPD = "spd"
    GRASSMANN = "grassmann"
    STIEFEL = "stiefel"
    SWEEP = "sweep"


COMPLETION_EXPERIMENTS = (ExperimentKind.COMPLETE, ExperimentKind.SWEEP)

# Per-experiment defaults layered under the config file and CLI flags
EXPERIMENT_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.VERIFY: {},
    ExperimentKind.COMPLETE: {
        "m": 200, "n": 200, "r": 5, "s": 10, "kappa": 10.0, "rho": 0.0,
        "methods": ["rgd", "imuon", "fw-muon", "spectron"], "max_iters": 2000,
    },
    ExperimentKind.SWEEP: {
        "m": 200, "n": 200, "r": 5, "s": 10,
        "kappas": [1.0, 10.0, 100.0], "rhos": [0.0, 0.05, 0.1, 0.5],
        "methods": ["rgd", "egd", "imuon", "fw-muon", "imuon-nu", "numuon"], "max_iters": 500,
    },
    ExperimentKind.SPD: {
        "n_dim": 16, "K": 5, "per_class": 20,
        "methods": ["rgd", "imuon", "imuon-nu", "egd", "muon"], "max_iters": 300,
    },
    ExperimentKind.GRASSMANN: {
        "m": 20, "k": 3, "K": 4, "per_class": 20,
        "methods": ["rgd", "imuon", "imuon-nu"], "max_iters": 300,
    },
    ExperimentKind.STIEFEL: {
        "m": 32, "C": 4, "q": 3, "per_class": 30,
        "methods": ["rgd", "imuon", "egd", "muon"], "max_iters": 300,
    },
}

# Random-point sizes for the verification suite
VERIFY_DIMS = {
    "fixed_rank": {"m": 12, "n": 10, "r": 4},
    "spd": {"n": 8},
    "stiefel": {"m": 10, "r": 3},
    "grassmann": {"m": 10, "r": 3},
}
C_PHI_REL_TOL = 0.01
GAUGE_CONTRAST_ALPHA = 1e3
GAUGE_CONTRAST_MIN = 0.5
COMPLETION_TARGET = 1e-2

SUMMARY_COLUMNS = [
    "experiment", "method", "norm", "seed", "lr", "kappa", "rho", "alpha",
    "status", "iterations", "final_value", "min_h_dual", "rel_error",
    "iters_to_target", "test_accuracy", "best_lr",
]
NUMERIC_COLUMNS = ["lr", "kappa", "rho", "alpha", "iterations", "final_value", "min_h_dual", "rel_error", "iters_to_target", "test_accuracy"]


class RunConfig(BaseModel):
    """Fully resolved settings of one CLI invocation"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: ExperimentKind
    out_dir: str = config.OUTPUT_DIRECTORY
    seeds: List[int] = Field(default_factory=lambda: list(config.DEFAULT_SEEDS), min_length=1)
    workers: int = Field(1, ge=1)
    norm: Optional[str] = None
    tau: float = Field(config.DEFAULT_TAU, gt=0)

    # optimizer
    methods: List[str] = Field(default_factory=lambda: ["imuon"], min_length=1)
    lr_grid: List[float] = Field(default_factory=lambda: list(config.LR_GRID), min_length=1)
    schedule: str = "decaying"
    max_iters: int = Field(300, ge=1)
    record_every: int = Field(config.DEFAULT_RECORD_EVERY, ge=1)
    momentum_beta: float = Field(0.0, ge=0.0, lt=1.0)
    spectron_momentum: bool = False
    polar: str = "exact"
    batch_size: Optional[int] = Field(None, ge=1)
    noise_sigma: float = Field(0.0, ge=0.0)

    # problems
    m: int = Field(200, ge=1)
    n: int = Field(200, ge=1)
    r: int = Field(5, ge=1)
    s: int = Field(10, ge=1)
    kappa: float = Field(10.0, ge=1.0)
    rho: float = Field(0.0, ge=0.0)
    alpha: float = Field(1.0, gt=0)
    kappas: List[float] = Field(default_factory=list)
    rhos: List[float] = Field(default_factory=list)
    n_dim: int = Field(16, ge=1)
    K: int = Field(5, ge=1)
    per_class: int = Field(20, ge=1)
    k: int = Field(3, ge=1)
    C: int = Field(4, ge=1)
    q: int = Field(3, ge=1)

    # verification
    manifolds: List[str] = Field(default_factory=lambda: list(VERIFY_DIMS))
    instances: int = Field(1, ge=1)
    tol: Optional[float] = Field(None, gt=0)

    tolerances: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("norm")
    @classmethod
    def _check_norm(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            NormSpec.parse(value)
        return value

    @field_validator("schedule")
    @classmethod
    def _check_schedule(cls, value: str) -> str:
        if value not in (optimizer.ScheduleKind.CONSTANT.value, optimizer.ScheduleKind.DECAYING.value):
            raise ValueError(f"schedule must be constant or decaying, got {value!r}")
        return value

    @field_validator("polar")
    @classmethod
    def _check_polar(cls, value: str) -> str:
        manifolds.PolarMethod(value)
        return value

    @field_validator("lr_grid")
    @classmethod
    def _check_lr(cls, value: List[float]) -> List[float]:
        if any(not (lr > 0 and math.isfinite(lr)) for lr in value):
            raise ValueError(f"learning rates must be positive and finite, got {value}")
        return value

    @field_validator("manifolds")
    @classmethod
    def _check_manifolds(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in VERIFY_DIMS]
        if unknown:
            raise ValueError(f"unknown manifolds {unknown}; choose from {list(VERIFY_DIMS)}")
        return value

    @model_validator(mode="after")
    def _check_methods(self) -> "RunConfig":
        for method in self.methods:
            if method not in baselines.METHOD_NORMS:
                raise ValueError(f"unknown method {method!r}; choose from {sorted(baselines.METHOD_NORMS)}")
            if method in baselines.FIXED_RANK_ONLY and self.experiment not in COMPLETION_EXPERIMENTS:
                raise ValueError(f"{method} runs only on completion experiments")
            if method == baselines.BaselineKind.SCALEDGD.value and self.momentum_beta > 0.0:
                raise ValueError("scaledgd does not take momentum; set momentum_beta = 0")
        unknown = [key for key in self.tolerances if key.upper() not in config.TUNABLE_KEYS]
        if unknown:
            raise ValueError(f"unknown tolerance keys {unknown}")
        return self

    @property
    def norm_spec(self) -> NormSpec:
        return NormSpec.parse(self.norm) if self.norm is not None else SPECTRAL

    @property
    def run_dir(self) -> str:
        return os.path.join(self.out_dir, self.experiment.value)


def _csv_list(cast):
    def parse(text: str) -> List[Any]:
        try:
            return [cast(item) for item in text.split(",") if item.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"bad list {text!r}: {e}")
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imuon",
        description="Intrinsic LMO verification suites and desk-scale experiments",
    )
    parser.add_argument("experiment", choices=[kind.value for kind in ExperimentKind])
    parser.add_argument("--config", type=str, default=None, metavar="PATH",
                        help="TOML file with one table per experiment and an optional [tolerances] table")
    parser.add_argument("--out", type=str, default=None, metavar="DIR", help="Output directory")
    parser.add_argument("--seeds", type=_csv_list(int), default=None, metavar="CSV", help="Seeds, e.g. 0,1,2")
    parser.add_argument("--workers", type=int, default=None, metavar="N", help="Worker processes for the run matrix")
    parser.add_argument("--norm", type=str, default=None, metavar="SPEC", help="Norm, e.g. spectral or kyfan:k=3")
    parser.add_argument("--method", type=_csv_list(str), default=None, metavar="TAG", help="Method tag(s), comma separated")
    parser.add_argument("--lr", type=_csv_list(float), default=None, metavar="GRID", help="Learning-rate grid, e.g. 0.3,1,3,10")
    parser.add_argument("--manifold", type=_csv_list(str), default=None, metavar="NAME",
                        help="Restrict verification to these manifolds")
    parser.add_argument("--tol", type=float, default=None, help="Override every verification tolerance")
    parser.add_argument("--max-iters", type=int, default=None, metavar="T", help="Iterations per run")
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Layer experiment defaults, the config file table and CLI flags

    Raises:
        InvalidInput: unreadable file or invalid settings
    """
    experiment = ExperimentKind(args.experiment)
    settings: Dict[str, Any] = {"experiment": experiment.value, **EXPERIMENT_DEFAULTS[experiment]}
    if args.config:
        try:
            with open(args.config, "rb") as f:
                document = tomllib.load(f)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise InvalidInput(f"Cannot read config {args.config}: {e}") from e
        table = document.get(experiment.value, {})
        if not isinstance(table, dict):
            raise InvalidInput(f"[{experiment.value}] in {args.config} must be a table")
        settings.update(table)
        if "tolerances" in document:
            settings["tolerances"] = dict(document["tolerances"])

    flags = {
        "out_dir": args.out,
        "seeds": args.seeds,
        "workers": args.workers,
        "norm": args.norm,
        "methods": args.method,
        "lr_grid": args.lr,
        "manifolds": args.manifold,
        "tol": args.tol,
        "max_iters": args.max_iters,
    }
    settings.update({key: value for key, value in flags.items() if value is not None})
    try:
        return RunConfig(**settings)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise InvalidInput(f"Invalid run config ({location}): {first['msg']}") from e


def write_resolved_config(cfg: RunConfig) -> str:
    os.makedirs(cfg.run_dir, exist_ok=True)
    if not os.access(cfg.run_dir, os.W_OK):
        raise InvalidInput(f"Output directory {cfg.run_dir} is not writable")
    path = os.path.join(cfg.run_dir, "resolved_config.json")
    payload = {"config": cfg.model_dump(mode="json"), "overrides": config.snapshot()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    return path


# =====================================================
# VERIFY
# =====================================================

def _c_phi_check(x: manifolds.ManifoldPoint, norm: NormSpec, rng: np.random.Generator, tol: Optional[float]) -> Optional[oracle.CheckResult]:
    analytic = manifolds.c_phi(x, norm)
    if not analytic:
        return None
    estimate = oracle.estimate_c_phi(x, norm, rng=rng)
    return oracle.make_check(
        f"{oracle.point_label(x)}/{norm}/c_phi_estimate",
        abs(estimate - analytic) / analytic,
        C_PHI_REL_TOL if tol is None else tol,
    )


def _gauge_contrast_check(x: manifolds.FixedRankPoint, tau: float, rng: np.random.Generator) -> oracle.CheckResult:
    """Factor-wise Muon must move under an imbalanced gauge; the check passes when it does"""
    egrad = manifolds.random_egrad(x, rng)
    r = x.B.shape[1]
    moved = manifolds.gauge_transform(x, GAUGE_CONTRAST_ALPHA * np.eye(r))
    reference = manifolds.ambient_update(x, baselines.factorwise_directions(x, egrad, tau))
    other = manifolds.ambient_update(moved, baselines.factorwise_directions(moved, egrad, tau))
    change = np.linalg.norm(other - reference) / max(np.linalg.norm(reference), np.finfo(np.float64).tiny)
    return oracle.make_check("fixed_rank/spectral/fw_muon_gauge_contrast", GAUGE_CONTRAST_MIN - change, 0.0)


def cmd_verify(cfg: RunConfig) -> int:
    """
    Run the invariance suite on random points of every selected
    (manifold, norm) cell and write verify_report.json

    Returns:
        EXIT_OK when every check passes, else EXIT_CHECK_FAILED
    """
    norms_to_check = [cfg.norm_spec] if cfg.norm is not None else list(CORE_NORMS)
    rng = np.random.default_rng(cfg.seeds[0])
    report = oracle.VerifyReport()

    for kind in cfg.manifolds:
        for norm in norms_to_check:
            logger.info(f"Verifying {kind} / {norm} on {cfg.instances} instance(s)")
            for _ in range(cfg.instances):
                x = manifolds.random_point(kind, VERIFY_DIMS[kind], rng)
                report.extend(oracle.invariance_suite(x, norm, cfg.tau, rng=rng, tol=cfg.tol))
            check = _c_phi_check(manifolds.random_point(kind, VERIFY_DIMS[kind], rng), norm, rng, cfg.tol)
            if check is not None:
                report.checks.append(check)
        if kind == "fixed_rank" and (cfg.norm is None or cfg.norm_spec == SPECTRAL):
            report.checks.append(_gauge_contrast_check(manifolds.random_point(kind, VERIFY_DIMS[kind], rng), cfg.tau, rng))

    path = os.path.join(cfg.run_dir, "verify_report.json")
    payload = {
        "build_id": build_id(),
        "passed": report.all_passed,
        "count": len(report.checks),
        "failures": report.failures,
        "checks": [c.model_dump(by_alias=True) for c in report.checks],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)

    if report.all_passed:
        logger.info(f"All {len(report.checks)} checks passed; report at {path}")
        return config.EXIT_OK
    logger.error(f"{len(report.failures)} of {len(report.checks)} checks failed: {report.failures}")
    return config.EXIT_CHECK_FAILED


# =====================================================
# EXPERIMENTS
# =====================================================

def build_problem(cfg: RunConfig, seed: int, kappa: Optional[float] = None, rho: Optional[float] = None):
    """Problem instance and starting point for one seed"""
    rng = np.random.default_rng(seed)
    if cfg.experiment in COMPLETION_EXPERIMENTS:
        inst = problems.gen_completion(cfg.m, cfg.n, cfg.r, cfg.s, cfg.kappa if kappa is None else kappa, cfg.rho if rho is None else rho, seed)
        problem = problems.CompletionProblem(inst)
        return problem, problem.initial_point(alpha=cfg.alpha)
    if cfg.experiment == ExperimentKind.SPD:
        problem = problems.SpdProtoProblem(problems.gen_spd_proto(cfg.n_dim, cfg.K, cfg.per_class, seed))
        return problem, problem.initial_point()
    if cfg.experiment == ExperimentKind.GRASSMANN:
        problem = problems.GrassmannFrechetProblem(problems.gen_grassmann_frechet(cfg.m, cfg.k, cfg.K, cfg.per_class, seed))
        return problem, problem.initial_point(rng)
    if cfg.experiment == ExperimentKind.STIEFEL:
        problem = problems.StiefelProtoProblem(problems.gen_stiefel_proto(cfg.m, cfg.C, cfg.q, cfg.per_class, seed))
        return problem, problem.initial_point(rng)
    raise InvalidInput(f"{cfg.experiment.value} is not an optimization experiment")


def build_sampler(problem, cfg: RunConfig):
    if cfg.batch_size is not None:
        return problems.MinibatchSampler(problem, cfg.batch_size)
    if cfg.noise_sigma > 0.0:
        return problems.AdditiveNoiseSampler(problem, cfg.noise_sigma)
    return None


def cell_path(cfg: RunConfig, method: str, seed: int, lr: float, kappa: Optional[float], rho: Optional[float]) -> str:
    name = f"seed{seed}_lr{lr:g}"
    if cfg.experiment == ExperimentKind.SWEEP:
        name += f"_kappa{kappa:g}_rho{rho:g}"
    return os.path.join(cfg.run_dir, method, name + ".jsonl")


def plan_cells(cfg: RunConfig, build: str) -> List[Dict[str, Any]]:
    """Run matrix in a fixed order: (kappa, rho) grid, method, seed, lr"""
    if cfg.experiment == ExperimentKind.SWEEP:
        grid = [(kappa, rho) for kappa in (cfg.kappas or [cfg.kappa]) for rho in (cfg.rhos or [cfg.rho])]
    elif cfg.experiment == ExperimentKind.COMPLETE:
        grid = [(cfg.kappa, cfg.rho)]
    else:
        grid = [(None, None)]
    settings = cfg.model_dump(mode="json")
    return [
        {
            "config": settings,
            "build_id": build,
            "method": method,
            "seed": seed,
            "lr": lr,
            "kappa": kappa,
            "rho": rho,
            "path": cell_path(cfg, method, seed, lr, kappa, rho),
        }
        for kappa, rho in grid
        for method in cfg.methods
        for seed in cfg.seeds
        for lr in cfg.lr_grid
    ]


def _first_hit(records: Sequence[optimizer.TrajectoryRecord], target: float) -> float:
    for record in records:
        if record.metric is not None and record.metric <= target:
            return float(record.t)
    return float("nan")


def run_cell(cell: Dict[str, Any]) -> Dict[str, Any]:
    """
    Run one (method, seed, lr) cell, write its trajectory file and return its
    summary row. Failures become a status, never an exception.
    """
    cfg = RunConfig(**cell["config"])
    config.apply_overrides(cfg.tolerances)
    method, seed, lr = cell["method"], cell["seed"], cell["lr"]
    norm = baselines.method_norm(method, cfg.norm_spec)
    nan = float("nan")
    row: Dict[str, Any] = {column: nan for column in SUMMARY_COLUMNS}
    row.update(
        experiment=cfg.experiment.value, method=method, norm=str(norm), seed=seed, lr=lr,
        kappa=nan if cell["kappa"] is None else cell["kappa"],
        rho=nan if cell["rho"] is None else cell["rho"],
        alpha=cfg.alpha if cfg.experiment in COMPLETION_EXPERIMENTS else nan,
    )

    records: List[optimizer.TrajectoryRecord] = []
    try:
        problem, x0 = build_problem(cfg, seed, cell["kappa"], cell["rho"])
        opt_cfg = optimizer.OptimizerConfig.build(
            norm=norm, tau=cfg.tau, schedule=cfg.schedule, eta=lr, eta0=lr,
            max_iters=cfg.max_iters, seed=seed, record_every=cfg.record_every,
            momentum_beta=cfg.momentum_beta, spectron_momentum=cfg.spectron_momentum, polar=cfg.polar,
        )
        step = baselines.make_step(method, opt_cfg, x0)
        sampler = build_sampler(problem, cfg)
        if sampler is None:
            result = optimizer.run_deterministic(problem, x0, opt_cfg, step)
        else:
            result = optimizer.run_stochastic(problem, sampler, x0, opt_cfg, step)
        records = result.trajectory
        row["status"] = "ok"
    except DivergedError as e:
        logger.warning(f"{method} seed={seed} lr={lr:g} diverged: {e}")
        records = list(e.trajectory)
        row["status"] = "diverged"
    except (RankDeficient, NotPositiveDefinite, ConvergenceFailure, ValueError, np.linalg.LinAlgError) as e:
        logger.warning(f"{method} seed={seed} lr={lr:g} failed: {e}")
        row["status"] = "failed"

    header = {key: cell[key] for key in ("method", "seed", "lr", "kappa", "rho", "build_id")}
    header.update(experiment=cfg.experiment.value, norm=str(norm), status=row["status"], config=cell["config"])
    TrajectoryWriter(cell["path"], header).append(records)

    if records:
        last = records[-1]
        row.update(
            iterations=float(last.t),
            final_value=last.f_value,
            min_h_dual=min(r.H_dual for r in records),
        )
        if cfg.experiment in COMPLETION_EXPERIMENTS:
            row["rel_error"] = nan if last.metric is None else last.metric
            row["iters_to_target"] = _first_hit(records, COMPLETION_TARGET)
        else:
            row["test_accuracy"] = nan if last.metric is None else last.metric
    return row


def select_best_lr(frame: pd.DataFrame, criterion: str, higher_is_better: bool) -> pd.DataFrame:
    """Attach best_lr: per (method, kappa, rho), the lr with the best seed-mean criterion"""
    keys = ["method", "kappa", "rho"]
    means = frame.groupby(keys + ["lr"], dropna=False)[criterion].mean().reset_index()
    if higher_is_better:
        means[criterion] = -means[criterion]
    means = means.dropna(subset=[criterion]).sort_values(keys + [criterion, "lr"], kind="mergesort")
    best = means.drop_duplicates(subset=keys, keep="first")[keys + ["lr"]].rename(columns={"lr": "best_lr"})
    merged = frame.drop(columns="best_lr").merge(best, on=keys, how="left")
    return merged[SUMMARY_COLUMNS]


def aggregate_summary(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean and std over seeds per (method, norm, lr, kappa, rho)"""
    keys = ["method", "norm", "lr", "kappa", "rho"]
    return frame.groupby(keys, dropna=False, sort=False).agg(
        runs=("seed", "count"),
        ok=("status", lambda s: int((s == "ok").sum())),
        final_value_mean=("final_value", "mean"),
        final_value_std=("final_value", "std"),
        rel_error_mean=("rel_error", "mean"),
        rel_error_std=("rel_error", "std"),
        iters_to_target_mean=("iters_to_target", "mean"),
        test_accuracy_mean=("test_accuracy", "mean"),
        test_accuracy_std=("test_accuracy", "std"),
        best_lr=("best_lr", "first"),
    ).reset_index()


def cmd_experiment(cfg: RunConfig) -> int:
    """
    Run the (method, seed, lr) matrix and write trajectories, summary.csv and
    summary_agg.csv. Diverged or failed cells are rows, not errors.
    """
    cells = plan_cells(cfg, build_id())
    # invalid problem sizes fail the whole run up front
    build_problem(cfg, cfg.seeds[0], cells[0]["kappa"], cells[0]["rho"])
    logger.info(f"Running {len(cells)} cell(s) of {cfg.experiment.value} with {cfg.workers} worker(s)")
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            rows = list(executor.map(run_cell, cells))
    else:
        rows = [run_cell(cell) for cell in cells]

    frame = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    frame[NUMERIC_COLUMNS] = frame[NUMERIC_COLUMNS].astype(float)
    if cfg.experiment in COMPLETION_EXPERIMENTS:
        frame = select_best_lr(frame, "rel_error", higher_is_better=False)
    else:
        frame = select_best_lr(frame, "test_accuracy", higher_is_better=True)

    summary_path = os.path.join(cfg.run_dir, "summary.csv")
    frame.to_csv(summary_path, index=False)
    aggregate_summary(frame).to_csv(os.path.join(cfg.run_dir, "summary_agg.csv"), index=False)

    counts = frame["status"].value_counts().to_dict()
    logger.info(f"Wrote {len(frame)} summary rows to {summary_path}; status counts {counts}")
    return config.EXIT_OK


# =====================================================
# SESSION
# =====================================================

class ExperimentSession:
    """One CLI invocation: logging, resolved config and the selected command"""

    def __init__(self, cfg: RunConfig):
        try:
            self.cfg = cfg
            self.log_path = setup_logging()
            self.previous = config.apply_overrides(cfg.tolerances)
            self.config_path = write_resolved_config(cfg)
            logger.info(f"Session initialized for {cfg.experiment.value}; log at {self.log_path}")
        except Exception as e:
            logger.error(f"Error initializing session: {e}")
            raise

    def close(self) -> None:
        """Restore tolerance constants changed by this session"""
        config.apply_overrides(self.previous)

    def run(self) -> int:
        try:
            if self.cfg.experiment == ExperimentKind.VERIFY:
                return cmd_verify(self.cfg)
            return cmd_experiment(self.cfg)
        finally:
            self.close()


def start(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point: parse arguments, run the session and map outcomes to exit codes

    Returns:
        0 on success, 1 on verification failure, 2 on usage or config errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return config.EXIT_OK if e.code in (0, None) else config.EXIT_USAGE

    try:
        cfg = load_run_config(args)
        session = ExperimentSession(cfg)
    except (InvalidInput, KeyError, OSError) as e:
        logger.error(f"Configuration error: {e}")
        print(f"Configuration error: {e}", file=sys.stderr)
        return config.EXIT_USAGE

    try:
        return session.run()
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return config.EXIT_OK
    except InvalidInput as e:
        logger.critical(f"Run aborted: {e}")
        return config.EXIT_USAGE
    except ImuonError as e:
        logger.critical(f"Run aborted: {e}")
        return config.EXIT_CHECK_FAILED
