"""Script that fits the Erlang-Gamma model to sequence data."""

import logging
from pathlib import Path
from typing import Annotated, Optional

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
from mixed_renewal.data import read_sequences, write_curves, write_fit
from mixed_renewal.inference import fit_mle, fitted_renewal_exchangeable, fitted_renewal_iid
from mixed_renewal.renewal_core import empirical_renewal_curve

logger = logging.getLogger(__name__)
app = typer.Typer()


@app.command("fit")
def main(
    input_file: Annotated[Path, typer.Option("--input", "-i", help="Long-format seq_id,time CSV")],
    output: OutputOption,
    curves: Annotated[Optional[Path], typer.Option("--curves", help="CSV of fitted renewal curves")] = None,
    config_file: ConfigOption = None,
    m_min: Annotated[Optional[int], typer.Option("--m-min", min=1, help="Smallest Erlang shape")] = None,
    m_max: Annotated[Optional[int], typer.Option("--m-max", min=1, help="Largest Erlang shape")] = None,
    profile_iid: Annotated[bool, typer.Option("--profile-iid", help="Profile m for the i.i.d. fit")] = False,
    start: StartOption = None,
    stop: StopOption = None,
    step: StepOption = None,
    debug: DebugOption = False,
) -> None:
    """Estimate (m, alpha) by maximum likelihood and write the fit as JSON."""
    setup_logging(debug)
    with exit_on_error():
        config = load_config(config_file, **{"fit.m_min": m_min, "fit.m_max": m_max}, **grid_flags(start, stop, step))
        check_output(output)
        data = read_sequences(input_file)
        fit = fit_mle(data, config.get_m_range())
        logger.info(f"m_hat={fit.m_hat}, alpha_hat={fit.alpha_hat:.6g}, corr_hat={fit.corr_hat:.4f}")
        write_fit(output, fit)
        if curves is not None:
            check_output(curves)
            grid = config.get_grid()
            write_curves(
                curves,
                {
                    "t": grid,
                    "U_exch": fitted_renewal_exchangeable(grid, fit),
                    "U_iid": fitted_renewal_iid(
                        grid, data, fit.m_hat, profile_m=profile_iid, m_range=config.get_m_range()
                    ),
                    "U_empirical": empirical_renewal_curve(data, grid).values,
                },
            )
            logger.info(f"Wrote fitted curves to {curves}")
