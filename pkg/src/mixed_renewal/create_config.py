"""Script that writes a starter experiment file."""

import logging

import typer

from mixed_renewal.cli_common import DebugOption, OutputOption, check_output, exit_on_error, setup_logging
from mixed_renewal.config import create_default_config

logger = logging.getLogger(__name__)
app = typer.Typer()


@app.command("config")
def main(output: OutputOption, debug: DebugOption = False) -> None:
    """Write the default experiment configuration as YAML."""
    setup_logging(debug)
    with exit_on_error():
        check_output(output)
        create_default_config(output)
        logger.info(f"Default configuration written to {output}")
