"""Command-line entry points: simulate, calibrate, conduct, serve.

Exit codes: 0 success, 1 usage/configuration error, 2 runtime failure.
"""

from __future__ import annotations

import json
import os
import platform
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, load_preset_design, parse_config, parse_design, resolved_design_dict
from .criteria import calibrate_asymmetry
from .designs import TrialCompleteError
from .models import calibrate_skeleton
from .simulate import run_study, write_report_csv, write_report_json


@click.group()
@click.version_option(version=__version__, prog_name="escalate")
def cli():
    """Dose-escalation designs: simulation, calibration and trial conduct."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Study configuration JSON.")
@click.option("--output-dir", default=".", type=click.Path(file_okay=False), help="Directory for reports.")
@click.option("--reps", type=int, default=None, help="Override the configured replication count.")
@click.option("--seed", type=int, default=None, help="Override the configured master seed.")
@click.option("--jobs", type=int, default=None, help="Override the configured parallelism.")
def simulate(config_path, output_dir, reps, seed, jobs):
    """Run a Monte Carlo study and write CSV/JSON reports plus a manifest."""
    cfg = parse_config(config_path)
    if reps is not None:
        cfg.reps = reps
    if seed is not None:
        cfg.seed = seed
    if jobs is not None:
        cfg.parallelism = jobs
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    report = run_study(cfg.designs, cfg.scenarios, cfg.reps, cfg.seed, parallelism=cfg.parallelism)
    elapsed = time.perf_counter() - start
    report.runtime_seconds = elapsed

    echo = cfg.resolved_dict()
    json_path = out / f"{cfg.output_prefix}_report.json"
    csv_path = out / f"{cfg.output_prefix}_report.csv"
    manifest_path = out / f"{cfg.output_prefix}_manifest.json"
    write_report_json(report, json_path, config_echo=echo)
    write_report_csv(report, csv_path)
    manifest = {
        "config_file": str(config_path),
        "seed": cfg.seed,
        "reps": cfg.reps,
        "parallelism": cfg.parallelism,
        "wall_time_seconds": elapsed,
        "outputs": {"json": str(json_path), "csv": str(csv_path)},
        "versions": {
            "escalate": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name, stats in report.summary.items():
        geo = stats["geometric_mean_accuracy"]
        click.echo(
            f"{name}: mean accuracy {stats['mean_accuracy']:.4f}"
            + (f", geometric {geo:.4f}" if geo is not None else ", geometric n/a")
            + f", mean DLTs/trial {stats['mean_dlt_count']:.2f} ({stats['mean_dlt_pct']:.2f}%)"
        )
    click.echo(f"wrote {json_path}, {csv_path}, {manifest_path} in {elapsed:.1f}s")


@cli.command()
@click.option("--gamma", type=float, required=True, help="Target DLT probability.")
@click.option("--theta", type=float, required=True, help="Half-width of the safety-priority interval.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def calibrate(gamma, theta, as_json):
    """Asymmetry parameter for which the penalty is equal at gamma +- theta."""
    a = calibrate_asymmetry(gamma, theta)
    if as_json:
        click.echo(json.dumps({"gamma": gamma, "theta": theta, "a": a}))
    else:
        click.echo(f"a = {a:.6f}")


@cli.command("calibrate-skeleton")
@click.option("--doses", "n_doses", type=int, required=True, help="Number of dose levels.")
@click.option("--prior-mtd", type=int, required=True, help="1-based prior MTD index.")
@click.option("--gamma", type=float, required=True, help="Target DLT probability.")
@click.option("--halfwidth", type=float, required=True, help="Indifference half-width.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def calibrate_skeleton_cmd(n_doses, prior_mtd, gamma, halfwidth, as_json):
    """Skeleton from the indifference-interval recursion."""
    skeleton = calibrate_skeleton(n_doses, prior_mtd, gamma, halfwidth)
    if as_json:
        click.echo(json.dumps({"values": list(skeleton.values), "prior_mtd_index": skeleton.prior_mtd_index}))
    else:
        click.echo(" ".join(f"{v:.6f}" for v in skeleton.values))


def _print_trial_state(design):
    means = design.posterior_mean_tox()
    values = design.criterion_values()
    click.echo(f"patients treated: {design.n_treated_}  DLTs: {design.n_dlt_}")
    click.echo("dose  prior   post.mean  criterion")
    rec = None if design.is_complete() else design.next_dose()
    for i, (guess, mean, value) in enumerate(zip(design.skeleton_.values, means, values), start=1):
        marker = " <- next" if rec == i else ""
        click.echo(f"  d{i}   {guess:.3f}   {mean:.4f}     {value:.4f}{marker}")


@cli.command()
@click.option("--design", "design_path", type=click.Path(), default=None, help="Design payload JSON file.")
@click.option("--preset", default=None, help="Shipped preset name (e.g. everolimus-cibp, everolimus-crm).")
def conduct(design_path, preset):
    """Interactive text session driving one trial.

    At each prompt enter the treated dose followed by the cohort's binary
    outcomes (e.g. ``1 0 0 0``), or ``terminate [reason]``, or ``quit``.
    """
    if (design_path is None) == (preset is None):
        raise click.UsageError("provide exactly one of --design or --preset")
    if preset is not None:
        name, design = load_preset_design(preset)
    else:
        payload = json.loads(Path(design_path).read_text())
        name, design = parse_design(payload)
    design.fit()
    click.echo(f"conducting: {name} (target gamma={design.gamma}, cohort size {design.cohort_size})")
    click.echo(f"first cohort is assigned dose d{design.next_dose()}")
    while not design.is_complete():
        try:
            line = click.prompt("cohort", type=str)
        except click.Abort:
            return
        tokens = line.strip().split()
        if not tokens:
            continue
        if tokens[0] == "quit":
            return
        if tokens[0] == "terminate":
            design.terminate()
            break
        try:
            dose = int(tokens[0])
            outcomes = [int(t) for t in tokens[1:]]
            if not outcomes:
                raise ValueError("no outcomes given")
            design.record_cohort(dose, outcomes)
        except (ValueError, TrialCompleteError) as exc:
            click.echo(f"error: {exc}")
            continue
        _print_trial_state(design)
    if design.n_treated_ > 0:
        click.echo(f"final MTD selection: d{design.select_mtd()}")
    else:
        click.echo("no data recorded; no MTD selection possible")


@cli.command()
@click.option("--port", type=int, default=None, help="Port (defaults to ESCALATE_PORT or 8000).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None, help="Event-log directory (defaults to ESCALATE_DATA_DIR).")
def serve(port, host, data_dir):
    """Start the HTTP conduct service."""
    import uvicorn

    from .service import create_app

    if port is None:
        port = int(os.environ.get("ESCALATE_PORT", "8000"))
    uvicorn.run(create_app(data_dir), host=host, port=port)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ConfigError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # engine or I/O failure
        click.echo(f"runtime error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
