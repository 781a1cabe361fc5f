"""Command-line interface.

Every command loads a model document (a path, or the literal ``demo`` for
the bundled example), validates it, and prints CSV to stdout so output
pipes straight into files or other tools. Failures exit nonzero and print
a machine-readable error code on the first stderr line, then the human
explanation.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import reports, schema
from .errors import (
    BlockScalingError,
    InterventionError,
    ModelFormatError,
    ModelValidationError,
    PlotsmithError,
    StateSpaceCapError,
)
from .filtering import filter_series
from .model import PlotModel, ensure_valid, validate
from .seu import rank_interventions
from .simulate import sample_trajectory

_ERROR_CODES = (
    (ModelFormatError, "format-error"),
    (ModelValidationError, "validation-error"),
    (StateSpaceCapError, "state-cap-error"),
    (BlockScalingError, "block-scaling-error"),
    (InterventionError, "intervention-error"),
    (PlotsmithError, "model-error"),
    (KeyError, "unknown-id"),
    (ValueError, "invalid-value"),
    (OSError, "io-error"),
)


def _fail(exc: BaseException) -> SystemExit:
    for etype, code in _ERROR_CODES:
        if isinstance(exc, etype):
            break
    else:
        raise exc
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    click.echo(code, err=True)
    click.echo(message, err=True)
    return SystemExit(1)


def _command_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PlotsmithError, KeyError, ValueError, OSError) as exc:
            raise _fail(exc) from None

    return wrapper


def _load(model_path: str, validated: bool = True) -> PlotModel:
    if model_path == "demo":
        model = schema.load_demo()
    else:
        model = schema.load_model(model_path)
    return ensure_valid(model) if validated else model


def _load_observations(path: str) -> list[tuple[float, ...]]:
    if path == "demo":
        return schema.load_demo_observations()
    return schema.parse_observations_csv(Path(path).read_text(encoding="utf-8"))


@click.group()
def main():
    """Inference and decision support for staged-progression plot models."""


@main.command("validate")
@click.argument("model_path")
@_command_errors
def validate_cmd(model_path: str):
    """Check a model document; exit 0 only when no errors remain."""
    model = _load(model_path, validated=False)
    findings = validate(model)
    for f in findings:
        click.echo(str(f))
    errors = [f for f in findings if f.level == "error"]
    if errors:
        raise _fail(ModelValidationError(errors))
    click.echo(
        f"ok: {model.title} (phases={model.m}, tasks={model.n}, horizon={model.horizon})"
    )


@main.command()
@click.argument("model_path")
@click.option("--steps", type=int, default=None, help="Slices to draw (default: the horizon).")
@click.option("--seed", type=int, required=True, help="Deterministic stream key.")
@click.option("--intervene", "intervene", default=None, help="Intervention id to apply at face value.")
@click.option("--at", "enact_at", type=int, default=1, show_default=True, help="Enactment time for --intervene.")
@_command_errors
def simulate(model_path: str, steps, seed: int, intervene, enact_at: int):
    """Sample one trajectory and print it as CSV.

    With --intervene, the named action's behavior changes apply from --at
    onward before sampling. Arrest-style thinning is an outcome-analysis
    construct and does not alter sampled trajectories.
    """
    model = _load(model_path)
    if intervene is not None:
        from .causal import apply_unintelligent

        d = model.intervention(intervene).retimed(enact_at, model.horizon)
        model = apply_unintelligent(model, d)
    if steps is not None:
        if not 1 <= steps <= model.horizon:
            raise ValueError(f"--steps must lie in 1..{model.horizon}, got {steps}")
    traj = sample_trajectory(model, seed)
    if steps is not None and steps < len(traj):
        from .simulate import Trajectory

        traj = Trajectory(traj.phases[:steps], traj.thetas[:steps], traj.zs[:steps])
    click.echo(
        f"# rng philox seed={seed} stream=0; per-step draw order: phase, tasks, intensities",
        err=True,
    )
    click.echo(schema.trajectory_csv(traj), nl=False)


@main.command("filter")
@click.argument("model_path")
@click.option("--observations", required=True, help="Observation CSV path (or demo).")
@_command_errors
def filter_cmd(model_path: str, observations: str):
    """Filter observations; print per-time phase marginals as CSV."""
    model = _load(model_path)
    rows = _load_observations(observations)
    beliefs = filter_series(model, rows)
    click.echo(reports.beliefs_csv(model, beliefs), nl=False)
    click.echo(f"# log evidence: {beliefs[-1].log_evidence!r}", err=True)


@main.command()
@click.argument("model_path")
@click.option("--observations", required=True, help="Observation CSV path (or demo).")
@click.option("--cut", type=int, required=True, help="Condition on the first CUT observations.")
@click.option("--intervene", "intervene", default=None, help="Candidate intervention id.")
@click.option("--profile", default=None, help="Adversary profile for the reaction mixture; omit to apply the action at face value.")
@click.option("--horizon", type=int, default=None, help="Last slice to project (default: the model horizon).")
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
    help="Directory for the three CSVs.",
)
@_command_errors
def whatif(model_path: str, observations: str, cut: int, intervene, profile, horizon, out_dir: Path):
    """Project idle vs intervened phase marginals past a cut point.

    Writes idle_predictions.csv, intervened_predictions.csv and
    prediction_diff.csv (intervened minus idle), row-aligned from the cut
    slice to the horizon.
    """
    model = _load(model_path)
    rows = _load_observations(observations)
    result = reports.whatif_predictions(
        model, rows, cut, intervene, profile=profile, horizon=horizon
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, text in reports.whatif_csvs(result).items():
        path = out_dir / f"{stem}.csv"
        path.write_text(text, encoding="utf-8")
        click.echo(str(path))


@main.command()
@click.argument("model_path")
@click.option("--candidates", default=None, help="Comma-separated intervention ids (default: the whole catalogue).")
@click.option("--u-d", "u_d", type=float, required=True, help="Defender utility of a foiled-but-free outcome, strictly in (0,1).")
@click.option("--horizon", type=int, default=None, help="Last slice scored (default: the model horizon).")
@click.option("--profile", default=None, help="Adversary profile (default: the model's only profile).")
@click.option("--observations", default=None, help="Observation CSV to condition on before scoring.")
@click.option("--cut", type=int, default=None, help="Observations to condition on (default: all provided).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@_command_errors
def score(model_path: str, candidates, u_d: float, horizon, profile, observations, cut, fmt: str):
    """Rank candidate interventions by defender expected utility."""
    model = _load(model_path)
    if profile is None:
        if len(model.profiles) != 1:
            raise ValueError(
                "--profile is required when the model defines "
                f"{len(model.profiles)} adversary profiles"
            )
        profile = next(iter(model.profiles))
    prof = model.profile(profile)
    ids = (
        [c.strip() for c in candidates.split(",") if c.strip()]
        if candidates is not None
        else [d.id for d in model.interventions]
    )
    belief = None
    if observations is not None:
        rows = _load_observations(observations)
        take = len(rows) if cut is None else cut
        if not 0 <= take <= len(rows):
            raise ValueError(f"--cut {take} outside the observed range 0..{len(rows)}")
        belief = filter_series(model, rows[:take])[-1]
    ranked = rank_interventions(
        model, ids, prof, u_d, horizon=horizon, start_belief=belief
    )
    if fmt == "json":
        click.echo(json.dumps({"u_d": u_d, "rows": reports.seu_rows(ranked)}, indent=2))
    else:
        click.echo(reports.seu_csv(ranked), nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--model", "model_path", default="demo", show_default=True, help="Document served as the starting model.")
def serve(host: str, port: int, model_path: str):
    """Run the HTTP API (see plotsmith.service for the endpoints)."""
    import uvicorn

    from .service import build_app

    app = build_app(default_model=model_path)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
