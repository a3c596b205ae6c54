"""Script that evaluates mixed renewal functions on a grid."""

import logging
from enum import Enum
from typing import Annotated, Optional

import numpy as np
import typer

from mixed_renewal.cli_common import (
    ConfigOption,
    DebugOption,
    OutputOption,
    SeedOption,
    StartOption,
    StepOption,
    StopOption,
    check_output,
    describe_grid,
    exit_on_error,
    grid_flags,
    load_config,
    setup_logging,
)
from mixed_renewal.config import ExperimentConfig
from mixed_renewal.data import write_curves
from mixed_renewal.dirichlet_renewal import dp_renewal_curve
from mixed_renewal.errors import UnsupportedModelError
from mixed_renewal.exchangeable import DirichletProcess, ErlangGamma
from mixed_renewal.renewal_core import mc_renewal_function, renewal_curve_closed, renewal_curve_series

logger = logging.getLogger(__name__)
app = typer.Typer()


class Method(str, Enum):
    """Ways of evaluating U(t)."""

    closed = "closed"
    series = "series"
    mc = "mc"


def evaluate(config: ExperimentConfig, method: Method, workers: int = 1) -> dict[str, np.ndarray]:
    """Return the output columns for one model and method."""
    model = config.get_model()
    grid = config.get_grid()
    logger.info(f"Evaluating U(t) of {model} by {method.value} on {describe_grid(grid)}")
    if method == Method.closed:
        return {"t": grid, "value": renewal_curve_closed(model, grid).values}
    if method == Method.mc:
        curve = mc_renewal_function(model, grid, config.get_replicates(), config.get_seed(), workers=workers)
        return {"t": grid, "value": curve.values, "stderr": curve.stderr}
    if isinstance(model, ErlangGamma):
        curve = renewal_curve_series(model, grid, config.get_tolerance("series"))
        return {"t": grid, "value": curve.values, "error": curve.stderr}
    if isinstance(model, DirichletProcess):
        results = dp_renewal_curve(grid, model.alpha, model.base, config.get_tolerance("dp"))
        return {
            "t": grid,
            "value": np.array([r.value for r in results]),
            "error": np.array([r.error_estimate for r in results]),
            "n_used": np.array([r.n_used for r in results]),
        }
    raise UnsupportedModelError(f"no series evaluation for {type(model).__name__}")


@app.command("renewal")
def main(
    output: OutputOption,
    method: Annotated[Method, typer.Option("--method", "-m", help="Evaluation method")] = Method.closed,
    config_file: ConfigOption = None,
    shape: Annotated[Optional[int], typer.Option("--shape", min=1, help="Erlang shape m of the model")] = None,
    alpha: Annotated[Optional[float], typer.Option("--alpha", help="Mixing parameter alpha of the model")] = None,
    replicates: Annotated[
        Optional[int], typer.Option("--replicates", "-r", min=1, help="Monte Carlo replicates")
    ] = None,
    workers: Annotated[int, typer.Option("--workers", min=1, help="Worker processes for Monte Carlo")] = 1,
    start: StartOption = None,
    stop: StopOption = None,
    step: StepOption = None,
    seed: SeedOption = None,
    debug: DebugOption = False,
) -> None:
    """Evaluate U(t) in closed form, by series or by Monte Carlo and write t,value[,stderr] CSV."""
    setup_logging(debug)
    with exit_on_error():
        config = load_config(
            config_file,
            seed,
            replicates=replicates,
            **{"model.m": shape, "model.alpha": alpha},
            **grid_flags(start, stop, step),
        )
        check_output(output)
        write_curves(output, evaluate(config, method, workers))
        logger.info(f"Wrote renewal function to {output}")
