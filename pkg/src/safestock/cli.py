"""Command-line entry point: check, fit, simulate, optimize, report, run."""
from __future__ import annotations

import argparse
import fnmatch
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__, report
from .config import ConfigError, RunConfig, bundled_config, load_config
from .ingest import DataError, ValidatedDataset, ValidationError, load_dataset
from .optimizer import InfeasibleError, build_problem, solve_bb, summarize
from .simulator import fit_item, run_grid
from .stats_tests import normality_report, variance_report

log = logging.getLogger("safestock")

EXIT_OK, EXIT_VALIDATION, EXIT_STAGE, EXIT_INFEASIBLE = 0, 1, 2, 3

FILES = {
    "normality": "normality.csv",
    "variance": "variance.csv",
    "pmf": "pmf.csv",
    "models": "models.csv",
    "grid": "grid.csv",
    "plan": "plan.csv",
    "summary": "summary.csv",
    "comparison": "comparison.csv",
    "curves": "service_curves.csv",
    "manifest": "manifest.json",
}


class PlanInfeasible(RuntimeError):
    """At least one model's class targets are unreachable; one InfeasibleError per model."""

    def __init__(self, errors: list[InfeasibleError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        super().__init__(f"stage {stage} failed: {cause}")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else bundled_config()
    if args.seed is not None:
        cfg = cfg.replace(base_seed=args.seed)
    return cfg


def _dataset(args, cfg: RunConfig) -> ValidatedDataset:
    ds = load_dataset(cfg)
    if args.items:
        patterns = [p.strip() for p in args.items.split(",") if p.strip()]
        chosen = [i for i in ds.item_ids() if any(fnmatch.fnmatchcase(i, p) for p in patterns)]
        if not chosen:
            raise ValidationError([f"--items {args.items!r} matched no items"])
        ds = ds.filter(chosen)
    return ds


def stage_check(ds: ValidatedDataset, out: Path) -> list[Path]:
    return [
        report.write_table(out / FILES["normality"], "normality", report.NORMALITY_COLUMNS,
                           report.normality_rows(normality_report(ds))),
        report.write_table(out / FILES["variance"], "variance", report.VARIANCE_COLUMNS,
                           report.variance_rows(variance_report(ds))),
    ]


def stage_fit(ds: ValidatedDataset, out: Path) -> list[Path]:
    fitted = {i: fit_item(ds.items[i], ds.config) for i in ds.item_ids()}
    model_rows = [(i, m.combined.n, m.combined.mean, m.combined.variance, m.kde.bandwidth,
                   m.pmf.mean, m.normal.mean, m.normal.std, m.normal.sigma_source)
                  for i, m in fitted.items()]
    return [
        report.write_table(out / FILES["pmf"], "pmf", report.PMF_COLUMNS,
                           report.pmf_rows({i: m.pmf for i, m in fitted.items()})),
        report.write_table(out / FILES["models"], "models",
                           ("item_id", "n", "combined_mean", "combined_variance", "bandwidth",
                            "pmf_mean", "normal_mean", "normal_std", "sigma_source"),
                           model_rows),
    ]


def stage_simulate(ds: ValidatedDataset, out: Path, threads: int) -> list[Path]:
    grid = run_grid(ds, threads=threads)
    return [report.write_table(out / FILES["grid"], "grid", report.GRID_COLUMNS,
                               report.grid_rows(grid))]


def stage_optimize(ds: ValidatedDataset, out: Path) -> list[Path]:
    grid = report.read_grid(out / FILES["grid"])
    wanted = set(ds.item_ids())
    grid = type(grid)([c for c in grid if c.item_id in wanted])
    problems = build_problem(grid, ds)
    plans, infeasible = {}, []
    for model, problem in problems.items():
        try:
            plans[model] = solve_bb(problem)
        except InfeasibleError as exc:
            infeasible.append(exc)
    if infeasible:
        raise PlanInfeasible(infeasible)
    rows = summarize(plans, problems, grid, ds)
    print(report.format_summary(rows))
    return [
        report.write_table(out / FILES["plan"], "plan", report.PLAN_COLUMNS,
                           report.plan_rows(plans, problems, grid)),
        report.write_table(out / FILES["summary"], "summary", report.SUMMARY_COLUMNS,
                           report.summary_rows(rows)),
        report.write_table(out / FILES["comparison"], "comparison",
                           report.COMPARISON_COLUMNS,
                           report.comparison_rows(plans, problems, grid)),
    ]


def stage_report(out: Path) -> list[Path]:
    grid = report.read_grid(out / FILES["grid"])
    return [report.write_table(out / FILES["curves"], "service_curves", report.CURVE_COLUMNS,
                               report.emit_service_curves(grid))]


def _digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, ds: ValidatedDataset, out: Path, outputs: list[Path]) -> Path:
    """Everything needed to replay the run; contains no timestamps or host details."""
    inputs = {p.name: _digest(p) for p in (cfg.demand_history, cfg.forecast, cfg.item_master)}
    manifest = {
        "tool": "safestock",
        "version": __version__,
        "format_version": report.FORMAT_VERSION,
        "base_seed": cfg.base_seed,
        "config": cfg.snapshot(),
        "items": ds.item_ids(),
        "inputs": inputs,
        "outputs": {p.name: _digest(p) for p in outputs},
    }
    path = out / FILES["manifest"]
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _run_stage(name: str, fn, *args):
    try:
        return fn(*args)
    except (PlanInfeasible, ValidationError, DataError, ConfigError, FileNotFoundError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="safestock", description=__doc__)
    parser.add_argument("--version", action="version", version=f"safestock {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration "
                        "(default: bundled synthetic dataset)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, help="override base_seed")
    common.add_argument("--items", help="comma-separated item ids or glob patterns")
    common.add_argument("--threads", type=int, default=1, help="simulation worker threads")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "check": "normality and variance test tables",
        "fit": "fit KDE and normal models, write per-item PMFs",
        "simulate": "run the service-level simulation grid",
        "optimize": "choose cost-minimal service levels from grid.csv",
        "report": "write service-curve plot data from grid.csv",
        "run": "check, fit, simulate, optimize and report, plus a manifest",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    out: Path = args.out
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _config(args)
        if args.command == "report":
            written = _run_stage("report", stage_report, out)
        else:
            ds = _dataset(args, cfg)
            out.mkdir(parents=True, exist_ok=True)
            written = []
            if args.command in ("check", "run"):
                written += _run_stage("check", stage_check, ds, out)
            if args.command in ("fit", "run"):
                written += _run_stage("fit", stage_fit, ds, out)
            if args.command in ("simulate", "run"):
                written += _run_stage("simulate", stage_simulate, ds, out, args.threads)
            if args.command in ("optimize", "run"):
                written += _run_stage("optimize", stage_optimize, ds, out)
            if args.command == "run":
                written += _run_stage("report", stage_report, out)
                written.append(write_manifest(cfg, ds, out, written))
    except (ValidationError, DataError, ConfigError, FileNotFoundError) as exc:
        for line in getattr(exc, "violations", None) or [str(exc)]:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    except PlanInfeasible as exc:
        for err in exc.errors:
            print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    for p in written:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
