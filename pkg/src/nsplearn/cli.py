"""Command-line harness: ``nsplearn <command> [options]``.

Exit status is 0 on success, 1 when generation or learning fails and 2 for
usage or configuration errors. Every command is deterministic for a given
seed; trial ``t`` uses seed ``seed + t``.
"""
import csv
import logging
import sys
from pathlib import Path

import click

from . import experiments as ex
from . import io
from .errors import ConfigError, NsplearnError
from .evaluation import evaluate as evaluate_estimate
from .evaluation import summarize

log = logging.getLogger("nsplearn")

REPORT_HEADER = ("scenario", "method", "trial", "nnce", "nppe", "npoe")
METRICS = ("nnce", "nppe", "npoe")


class UsageFailure(click.UsageError):
    """Configuration problems surface as usage errors (exit status 2)."""


def _num(v):
    return repr(float(v))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    click.echo(str(path))


def _report_rows(rows):
    return [[r["scenario"], r["method"], r["trial"]] + [_num(r[m]) for m in METRICS] for r in rows]


def _summary_cells(rows):
    s = summarize(rows)
    return [_num(s[m][stat]) for m in METRICS for stat in ("mean", "sd", "median")]


SUMMARY_COLUMNS = tuple(f"{m}_{stat}" for m in METRICS for stat in ("mean", "sd", "median"))


def _progress(row):
    log.info("%s/%s trial %d: nnce=%.3g nppe=%.3g npoe=%.3g", row["scenario"], row["method"], row["trial"],
             row["nnce"], row["nppe"], row["npoe"])


def _config(ctx, **overrides):
    path = ctx.obj.get("config")
    text = Path(path).read_text() if path else None
    try:
        return ex.make_config(text, **overrides)
    except ConfigError as exc:
        raise UsageFailure(str(exc)) from None


common = [
    click.option("--seed", type=int, default=None, help="Base seed; trial t uses seed + t."),
    click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True,
                 help="Output directory."),
]


def with_common(func):
    for option in reversed(common):
        func = option(func)
    return func


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="key = value file with experiment settings; flags override it.")
@click.option("-v", "--verbose", is_flag=True, help="Log per-trial progress to stderr.")
@click.pass_context
def cli(ctx, config_path, verbose):
    """Learn null-space projections from constrained demonstrations."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(message)s")
    ctx.ensure_object(dict)
    ctx.obj["config"] = config_path


@cli.command()
@click.option("--scenario", type=str, default=None, help="Scenario id, e.g. toy_linear or arm_xz.")
@click.option("--trial", type=int, default=0, show_default=True, help="Trial index.")
@click.option("--noise", "noise_fraction", type=float, default=None, help="Policy-noise fraction for training data.")
@with_common
@click.pass_context
def generate(ctx, scenario, trial, noise_fraction, seed, out):
    """Write train.txt and test.txt datasets (with metadata sidecars)."""
    cfg = _config(ctx, scenario=scenario, seed=seed, noise_fraction=noise_fraction)
    train, test = ex.generate_trial_data(cfg, trial)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in (("train.txt", train), ("test.txt", test)):
        io.write_dataset(data, out / name)
        click.echo(str(out / name))


@cli.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Training dataset.")
@click.option("--scenario", type=str, default=None, help="Defaults to the dataset's scenario.")
@click.option("--method", type=str, default=None, help="fixed_rows, selection or state_dependent.")
@with_common
@click.pass_context
def learn(ctx, data_path, scenario, method, seed, out):
    """Fit the null-space component model and a constraint estimate."""
    data = io.read_dataset(data_path)
    scenario = scenario or data.meta.get("scenario")
    cfg = _config(ctx, scenario=scenario, method=method, seed=seed)
    model, estimate = ex.learn(cfg, data, ex.trial_seed(cfg, data.meta.get("trial", 0)))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_model(model, out / "model.txt")
    io.write_estimate(estimate, out / "estimate.txt")
    click.echo(str(out / "model.txt"))
    click.echo(str(out / "estimate.txt"))


@cli.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Test dataset with ground truth.")
@click.option("--estimate", "estimate_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Null-space component model; without it NNCE is computed for the true components.")
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True)
def evaluate(data_path, estimate_path, model_path, out):
    """Write report.csv with NNCE, NPPE and NPOE on a test dataset."""
    data = io.read_dataset(data_path)
    estimate = io.read_estimate(estimate_path)
    model = io.read_model(model_path) if model_path else None
    report = evaluate_estimate(estimate, model, data)
    row = {"scenario": data.meta.get("scenario", ""), "method": estimate.variant,
           "trial": data.meta.get("trial", 0), "nnce": report.nnce, "nppe": report.nppe, "npoe": report.npoe}
    _write_csv(Path(out) / "report.csv", REPORT_HEADER, _report_rows([row]))


def _trials_option(func):
    return click.option("--trials", "n_trials", type=int, default=None, help="Trials per cell (default 50).")(func)


@cli.command("reproduce-table1")
@_trials_option
@with_common
@click.pass_context
def reproduce_table1(ctx, n_trials, seed, out):
    """Toy problem: every policy, fixed-row method."""
    cfg = _config(ctx, seed=seed, n_trials=n_trials)
    results = ex.table1(cfg, _progress)
    rows = [r for scenario in results for r in results[scenario]]
    _write_csv(Path(out) / "table1_trials.csv", REPORT_HEADER, _report_rows(rows))
    summary = [[s, "fixed_rows"] + _summary_cells(results[s]) for s in results]
    _write_csv(Path(out) / "table1.csv", ("scenario", "method") + SUMMARY_COLUMNS, summary)


@cli.command("reproduce-table2")
@_trials_option
@with_common
@click.pass_context
def reproduce_table2(ctx, n_trials, seed, out):
    """Arm: every constraint, selection and state-dependent methods."""
    cfg = _config(ctx, scenario="arm_xz", seed=seed, n_trials=n_trials)
    results = ex.table2(cfg, _progress)
    rows = [r for key in results for r in results[key]]
    _write_csv(Path(out) / "table2_trials.csv", REPORT_HEADER, _report_rows(rows))
    summary = [list(key) + _summary_cells(results[key]) for key in results]
    _write_csv(Path(out) / "table2.csv", ("scenario", "method") + SUMMARY_COLUMNS, summary)


def _sweep(ctx, parameter, values, name, seed, n_trials, scenario, out):
    cfg = _config(ctx, scenario=scenario or "toy_limit_cycle", seed=seed, n_trials=n_trials)
    results = ex.sweep(cfg, parameter, values, _progress)
    trials = [[v] + row for v in values for row in _report_rows(results[v])]
    _write_csv(Path(out) / f"{name}_trials.csv", (parameter,) + REPORT_HEADER, trials)
    summary = [[v] + _summary_cells(results[v]) for v in values]
    _write_csv(Path(out) / f"{name}.csv", (parameter,) + SUMMARY_COLUMNS, summary)


@cli.command("sweep-data-size")
@_trials_option
@click.option("--scenario", type=str, default=None, help="Toy scenario (default toy_limit_cycle).")
@with_common
@click.pass_context
def sweep_data_size(ctx, n_trials, scenario, seed, out):
    """Metrics against the number of training points."""
    _sweep(ctx, "n_points", ex.DATA_SIZES, "sweep_data_size", seed, n_trials, scenario, out)


@cli.command("sweep-noise")
@_trials_option
@click.option("--scenario", type=str, default=None, help="Toy scenario (default toy_limit_cycle).")
@with_common
@click.pass_context
def sweep_noise(ctx, n_trials, scenario, seed, out):
    """Metrics against the injected policy-noise fraction."""
    _sweep(ctx, "noise_fraction", ex.NOISE_LEVELS, "sweep_noise", seed, n_trials, scenario, out)


def main(argv=None):
    """Entry point; maps package errors onto exit status 1 (runtime) and 2 (usage)."""
    try:
        cli.main(args=argv, prog_name="nsplearn", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except NsplearnError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
