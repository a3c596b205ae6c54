"""Script that tabulates the Dirichlet-process renewal quantities."""

import copy
import logging
from enum import Enum
from typing import Annotated, Optional

import numpy as np
import typer

from mixed_renewal.cli_common import (
    ConfigOption,
    DebugOption,
    OutputOption,
    StartOption,
    StepOption,
    StopOption,
    check_output,
    exit_on_error,
    grid_flags,
    load_config,
    setup_logging,
)
from mixed_renewal.constant import DEFAULT_DIRICHLET_MODEL, N_MAX
from mixed_renewal.data import write_curves
from mixed_renewal.dirichlet_renewal import dp_renewal_curve, enumerate_partitions, ewens_probability, sn_cdf

logger = logging.getLogger(__name__)
app = typer.Typer()


class Table(str, Enum):
    """Tables the command can write."""

    weights = "weights"
    sn = "sn"
    renewal = "renewal"


@app.command("dp")
def main(
    output: OutputOption,
    table: Annotated[Table, typer.Option("--table", help="Ewens weights, S_n CDF or U(t)")] = Table.renewal,
    alpha: Annotated[Optional[float], typer.Option("--alpha", help="Precision of the Dirichlet process")] = None,
    rate: Annotated[Optional[float], typer.Option("--rate", help="Rate of the exponential base")] = None,
    n: Annotated[Optional[int], typer.Option("--n", min=1, help="Number of draws for weights and S_n")] = None,
    n_max: Annotated[int, typer.Option("--n-max", min=1, help="Largest partition size")] = N_MAX,
    tol: Annotated[Optional[float], typer.Option("--tol", help="Truncation tolerance of the U(t) series")] = None,
    config_file: ConfigOption = None,
    start: StartOption = None,
    stop: StopOption = None,
    step: StepOption = None,
    debug: DebugOption = False,
) -> None:
    """Write Ewens weights, P(S_n <= t) or the truncated U(t) series as CSV."""
    setup_logging(debug)
    if tol is not None and not tol > 0:
        raise typer.BadParameter("tolerance must be positive", param_hint="--tol")
    if table != Table.renewal and n is None:
        raise typer.BadParameter(f"--n is required for the {table.value} table", param_hint="--n")
    with exit_on_error():
        flags = {"model": copy.deepcopy(DEFAULT_DIRICHLET_MODEL)} if config_file is None else {}
        flags.update({"model.alpha": alpha, "model.base.rate": rate, "tolerance.dp": tol})
        config = load_config(config_file, **flags, **grid_flags(start, stop, step))
        model = config.get_dirichlet_model()
        check_output(output)
        if table == Table.weights:
            partitions = enumerate_partitions(n, n_max)
            columns = {
                "partition": [" ".join(str(c) for c in v.v) for v in partitions],
                "blocks": [v.blocks for v in partitions],
                "probability": [ewens_probability(v, model.alpha) for v in partitions],
            }
        elif table == Table.sn:
            grid = config.get_grid()
            columns = {"t": grid, "cdf": sn_cdf(grid, n, model.alpha, model.base, n_max=n_max)}
        else:
            grid = config.get_grid()
            results = dp_renewal_curve(grid, model.alpha, model.base, config.get_tolerance("dp"), n_max)
            columns = {
                "t": grid,
                "value": np.array([r.value for r in results]),
                "error": np.array([r.error_estimate for r in results]),
                "n_used": np.array([r.n_used for r in results]),
                "method": [r.method for r in results],
            }
        write_curves(output, columns)
        logger.info(f"Wrote {table.value} table to {output}")
