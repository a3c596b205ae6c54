"""Script that solves the mixed renewal equation and its i.i.d. counterpart."""

import logging
from typing import Annotated, Optional

import numpy as np
import typer

from mixed_renewal.cli_common import (
    ConfigOption,
    DebugOption,
    OutputOption,
    check_output,
    exit_on_error,
    load_config,
    setup_logging,
)
from mixed_renewal.config import ExperimentConfig
from mixed_renewal.data import write_curves
from mixed_renewal.exchangeable import ExpGamma, ExpMixture
from mixed_renewal.renewal_equation import (
    marginal_cdf_for,
    solve_closed_continuous,
    solve_closed_discrete,
    solve_iid_comparator,
    solve_numeric,
)

logger = logging.getLogger(__name__)
app = typer.Typer()


def solve(config: ExperimentConfig, horizon: float, step: float, comparator: bool) -> dict[str, np.ndarray]:
    """Return the output columns t, A[, A_closed][, A_iid]."""
    if not (step > 0 and horizon > 0):
        raise ValueError("horizon and step must be positive")
    model = config.get_model()
    drift = config.get_drift()
    grid = np.linspace(0.0, horizon, int(round(horizon / step)) + 1)
    columns = {"t": grid, "A": solve_numeric(drift, model, grid).values}
    if isinstance(model, ExpMixture):
        columns["A_closed"] = solve_closed_discrete(grid, drift.beta, model.weights, model.rates)
    elif isinstance(model, ExpGamma):
        columns["A_closed"] = solve_closed_continuous(grid, model.alpha, drift.beta, model.lam)
    if comparator:
        columns["A_iid"] = solve_iid_comparator(drift, marginal_cdf_for(model), grid).values
        gap = float(np.max(np.abs(columns["A"] - columns["A_iid"])))
        logger.info(f"Largest gap between exchangeable and i.i.d. solutions: {gap:.4g}")
    return columns


@app.command("solve")
def main(
    output: OutputOption,
    config_file: ConfigOption = None,
    beta: Annotated[Optional[float], typer.Option("--beta", help="Drift a(t) = 1 - exp(-beta t)")] = None,
    horizon: Annotated[float, typer.Option("--horizon", "-T", help="Right end of the grid")] = 10.0,
    step: Annotated[float, typer.Option("--step", "-s", help="Grid step")] = 1e-3,
    comparator: Annotated[bool, typer.Option("--iid/--no-iid", help="Also solve the i.i.d. equation")] = True,
    debug: DebugOption = False,
) -> None:
    """Solve A = a + E[F * A(., {F})] on a uniform grid and write t,A[,A_closed][,A_iid] CSV."""
    setup_logging(debug)
    with exit_on_error():
        config = load_config(config_file, **{"drift.beta": beta})
        check_output(output)
        write_curves(output, solve(config, horizon, step, comparator))
        logger.info(f"Wrote renewal-equation solutions to {output}")
