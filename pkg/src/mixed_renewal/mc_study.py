"""Script that runs the Monte Carlo study of the renewal-function estimators."""

import logging
from pathlib import Path
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
from mixed_renewal.data import write_curves
from mixed_renewal.inference import StudyBands, monte_carlo_study

logger = logging.getLogger(__name__)
app = typer.Typer()


def band_columns(bands: StudyBands) -> dict:
    """Columns of the bands CSV in their fixed order."""
    return {
        "t": bands.grid,
        "true_U": bands.true_curve,
        "exch_median": bands.exchangeable.median,
        "exch_lo": bands.exchangeable.lower,
        "exch_hi": bands.exchangeable.upper,
        "iid_median": bands.iid.median,
        "iid_lo": bands.iid.lower,
        "iid_hi": bands.iid.upper,
    }


@app.command("mc-study")
def main(
    output: OutputOption,
    config_file: ConfigOption = None,
    estimates: Annotated[Optional[Path], typer.Option("--estimates", help="CSV of per-replicate estimates")] = None,
    replicates: Annotated[Optional[int], typer.Option("--replicates", "-r", min=1, help="Study replicates")] = None,
    workers: Annotated[int, typer.Option("--workers", min=1, help="Worker processes")] = 1,
    start: StartOption = None,
    stop: StopOption = None,
    step: StepOption = None,
    seed: SeedOption = None,
    debug: DebugOption = False,
) -> None:
    """Simulate, refit and write percentile bands of the exchangeable and i.i.d. estimators."""
    setup_logging(debug)
    with exit_on_error():
        config = load_config(config_file, seed, replicates=replicates, **grid_flags(start, stop, step))
        check_output(output)
        grid = config.get_grid()
        model = config.get_true_model()
        logger.info(f"Study of {model} on {describe_grid(grid)}")
        bands = monte_carlo_study(
            model,
            config.get_lengths(),
            config.get_replicates(),
            grid,
            config.get_seed(),
            config.get_m_range(),
            workers,
        )
        write_curves(output, band_columns(bands))
        logger.info(f"Coverage of the truth by the exchangeable band: {bands.coverage:.2%}")
        m_hat, _, corr_hat = np.median(bands.estimates, axis=0)
        logger.info(f"Median m_hat={m_hat:g}, median corr_hat={corr_hat:.4f}")
        if estimates is not None:
            check_output(estimates)
            write_curves(
                estimates,
                {
                    "m_hat": bands.estimates[:, 0].astype(int),
                    "alpha_hat": bands.estimates[:, 1],
                    "corr_hat": bands.estimates[:, 2],
                },
            )
        if bands.failures:
            logger.warning(f"{bands.failures} replicate fits failed and were left out")
