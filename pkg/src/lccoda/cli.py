"""Command line interface: ``lccoda {forecast,tune,evaluate,intervals,plotdata}``.

Exit codes: 0 success, 2 input/parse errors, 3 invalid configuration,
4 numerical failures, 1 anything else.
"""

import argparse
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .composition import build_composition
from .errors import CodaError, ConfigError, PipelineError
from .intervals import IntervalConfig, bootstrap_intervals
from .io import ingest, load_ordering, write_csv, write_json
from .pipeline import PipelineConfig, fit_model, run_point_forecast
from .transforms import Transform, ZeroStrategy
from .tuning import (
    DEFAULT_GRID,
    evaluate_methods,
    make_fold_plan,
    comparison_methods,
    parse_method,
    tune_alpha,
)


@dataclass(frozen=True)
class RunManifest:
    input: str
    sex: str = None
    ordering: str = None
    transform: str = "alpha"
    alpha: float = None
    alpha_grid: tuple = DEFAULT_GRID
    zeros: str = "none"
    horizon: int = 10
    n_test: int = 4
    n_folds: int = 4
    criterion: str = "mae"
    centring: str = "window"
    n_boot: int = 1000
    coverage: float = 0.9
    seed: int = 0
    out_dir: str = "out"
    global_factor: bool = False
    reclose_bands: bool = False
    methods: tuple = field(default=())

    def as_dict(self):
        d = asdict(self)
        d["alpha_grid"] = list(self.alpha_grid)
        d["methods"] = list(self.methods)
        d["version"] = __version__
        return d

    def transform_spec(self):
        try:
            return Transform.parse(self.transform, self.alpha)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, CodaError):
                raise
            raise ConfigError(f"bad transform {self.transform!r}: {exc}") from None

    def zero_strategy(self):
        try:
            return ZeroStrategy.parse(self.zeros)
        except ValueError as exc:
            if isinstance(exc, CodaError):
                raise
            raise ConfigError(f"bad zero strategy {self.zeros!r}") from None

    def pipeline_config(self, horizon=None):
        return PipelineConfig(
            self.transform_spec(),
            self.zero_strategy(),
            self.horizon if horizon is None else horizon,
            self.global_factor,
            self.seed,
        )


def _load(manifest):
    panel, _ = ingest(manifest.input, manifest.sex, load_ordering(manifest.ordering))
    return panel


def _out(manifest, name):
    return Path(manifest.out_dir) / name


def _cells(years, panel):
    """``(row, part, year, age_band, cause)`` for every forecast cell."""
    C = len(panel.causes)
    for i, y in enumerate(years):
        for p in range(len(panel.age_bands) * C):
            u, c = divmod(p, C)
            yield i, p, y, panel.age_bands[u], panel.causes[c]


def cmd_forecast(manifest):
    panel = _load(manifest)
    fs = run_point_forecast(panel, manifest.pipeline_config())
    meta = manifest.as_dict()
    rows = [(y, a, c, fs.densities[i, p]) for i, p, y, a, c in _cells(fs.years, panel)]
    out = {
        "forecast": write_csv(
            _out(manifest, "forecast.csv"), ("year", "age_band", "cause", "density"), rows, meta
        ),
        "clamps": write_csv(
            _out(manifest, "clamps.csv"), ("year", "age_band", "cause"), fs.clamp_events, meta
        ),
        "manifest": write_json(
            _out(manifest, "manifest.json"), {"manifest": meta, "provenance": fs.provenance}
        ),
    }
    return out


def _fold_columns(n):
    return [f"rmse_fold{k}" for k in range(1, n + 1)] + [f"mae_fold{k}" for k in range(1, n + 1)]


def cmd_tune(manifest):
    panel = _load(manifest)
    plan = make_fold_plan(panel.years, manifest.n_test, manifest.n_folds)
    baselines = [(Transform("clr"), ZeroStrategy("omit")), (Transform("ilr"), ZeroStrategy("omit"))]
    result = tune_alpha(
        panel,
        manifest.alpha_grid,
        plan,
        manifest.criterion,
        zero_strategy=manifest.zero_strategy(),
        global_factor=manifest.global_factor,
        baselines=baselines,
        centring=manifest.centring,
    )
    meta = manifest.as_dict()
    header = ["method", "alpha", "rmse_x100", "mae_x100"] + _fold_columns(plan.n_folds)
    rows = []
    for r in result.baselines + result.table:
        alpha = 0.0 if r.transform.log_ratio else r.alpha
        rows.append([r.label, alpha, r.rmse, r.mae, *r.fold_rmse, *r.fold_mae])
    paths = {"alpha_grid": write_csv(_out(manifest, "alpha_grid.csv"), header, rows, meta)}
    chosen = {"alpha": result.best_alpha, "criterion": result.criterion, "manifest": meta}
    paths["chosen_alpha"] = write_json(_out(manifest, "chosen_alpha.json"), chosen)
    return paths


def _methods(manifest):
    if manifest.methods:
        return [parse_method(m) for m in manifest.methods]
    alphas = [0.5, 0.7, 0.9]
    if manifest.alpha is not None:
        alphas.append(manifest.alpha)
    return comparison_methods(alphas)


def cmd_evaluate(manifest):
    panel = _load(manifest)
    results = evaluate_methods(
        panel, _methods(manifest), manifest.n_test, global_factor=manifest.global_factor
    )
    rows = [(r.label, "" if r.alpha is None else r.alpha, r.rmse, r.mae) for r in results]
    path = write_csv(
        _out(manifest, "methods_table.csv"),
        ("method", "alpha", "rmse_x100", "mae_x100"),
        rows,
        manifest.as_dict(),
    )
    return {"methods_table": path}


def cmd_intervals(manifest):
    panel = _load(manifest)
    icfg = IntervalConfig(manifest.n_boot, manifest.coverage, manifest.seed, manifest.reclose_bands)
    iv = bootstrap_intervals(panel, manifest.pipeline_config(), icfg)
    rows = [
        (y, a, c, iv.lower[i, p], iv.point[i, p], iv.upper[i, p])
        for i, p, y, a, c in _cells(iv.years, panel)
    ]
    path = write_csv(
        _out(manifest, "intervals.csv"),
        ("year", "age_band", "cause", "lower", "point", "upper"),
        rows,
        manifest.as_dict(),
    )
    return {"intervals": path}


def _by_cause(dens, n_causes):
    return dens.reshape(dens.shape[0], -1, n_causes).sum(axis=1)


def cmd_plotdata(manifest):
    """Observed, fitted and forecast proportions by cause (summed over ages)."""
    panel = _load(manifest)
    cfg = manifest.pipeline_config()
    model = fit_model(panel, cfg)
    C = len(panel.causes)
    observed = _by_cause(build_composition(panel).values, C)
    fitted = _by_cause(model.fitted_densities(), C)
    fs = run_point_forecast(panel, cfg)
    forecast = _by_cause(fs.densities, C)
    rows = []
    for series, years, values in (
        ("observed", panel.years, observed),
        ("fitted", panel.years, fitted),
        ("forecast", fs.years, forecast),
    ):
        for i, y in enumerate(years):
            for c in range(C):
                rows.append((series, y, panel.causes[c], values[i, c]))
    path = write_csv(
        _out(manifest, "plotdata.csv"), ("series", "year", "cause", "value"), rows, manifest.as_dict()
    )
    return {"plotdata": path}


COMMANDS = {
    "forecast": cmd_forecast,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
    "intervals": cmd_intervals,
    "plotdata": cmd_plotdata,
}


def _grid(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="lccoda", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lccoda {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", required=True, help="long CSV: year,age_band,cause,sex,deaths")
    p.add_argument("--sex")
    p.add_argument("--ordering", help="JSON sidecar with age_band and cause label order")
    p.add_argument("--transform", default="alpha", help="clr | ilr | rda | alpha | alpha:<value>")
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-grid", type=_grid, default=DEFAULT_GRID)
    p.add_argument("--zeros", default="none", help="none | omit | replace:<x>")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--n-test", type=int, default=4)
    p.add_argument("--n-folds", type=int, default=4)
    p.add_argument("--criterion", choices=("rmse", "mae"), default="mae")
    p.add_argument(
        "--centring",
        choices=("window", "fold"),
        default="window",
        help="tune: centre folds on the whole tuning window or on each training window",
    )
    p.add_argument("--n-boot", type=int, default=1000)
    p.add_argument("--coverage", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--global-factor", action="store_true")
    p.add_argument("--reclose-bands", action="store_true")
    p.add_argument(
        "--methods",
        type=lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
        default=(),
        help="evaluate only these, e.g. clr-omit,ilr-replace:0.5,alpha:0.5,rda",
    )
    return p


def manifest_from_args(args):
    return RunManifest(
        input=args.input,
        sex=args.sex,
        ordering=args.ordering,
        transform=args.transform,
        alpha=args.alpha,
        alpha_grid=tuple(args.alpha_grid),
        zeros=args.zeros,
        horizon=args.horizon,
        n_test=args.n_test,
        n_folds=args.n_folds,
        criterion=args.criterion,
        centring=args.centring,
        n_boot=args.n_boot,
        coverage=args.coverage,
        seed=args.seed,
        out_dir=args.out_dir,
        global_factor=args.global_factor,
        reclose_bands=args.reclose_bands,
        methods=tuple(args.methods),
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        manifest = manifest_from_args(args)
        paths = COMMANDS[args.command](manifest)
    except PipelineError as exc:
        print(f"lccoda {args.command}: stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except CodaError as exc:
        print(f"lccoda {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"lccoda {args.command}: {exc}", file=sys.stderr)
        return 2
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
