"""Script that simulates exchangeable inter-arrival sequences."""

import logging
from typing import Annotated, Optional

import typer

from mixed_renewal.cli_common import (
    ConfigOption,
    DebugOption,
    OutputOption,
    SeedOption,
    check_output,
    exit_on_error,
    load_config,
    setup_logging,
)
from mixed_renewal.data import write_sequences
from mixed_renewal.exchangeable import sample_sequences
from mixed_renewal.inference import SequenceSet

logger = logging.getLogger(__name__)
app = typer.Typer()


def parse_lengths(value: Optional[str]) -> Optional[list[int]]:
    """Parse a comma separated list of sequence lengths."""
    if value is None:
        return None
    try:
        lengths = [int(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"'{value}' is not a comma separated list of integers") from e
    if not lengths or min(lengths) < 1:
        raise typer.BadParameter("every sequence length must be at least 1")
    return lengths


@app.command("simulate")
def main(
    output: OutputOption,
    config_file: ConfigOption = None,
    lengths: Annotated[Optional[str], typer.Option("--lengths", "-n", help="Comma separated lengths")] = None,
    seed: SeedOption = None,
    debug: DebugOption = False,
) -> None:
    """Simulate independent exchangeable sequences and write them as "seq_id,time" CSV."""
    setup_logging(debug)
    with exit_on_error():
        config = load_config(config_file, seed, lengths=parse_lengths(lengths))
        model = config.get_model()
        sizes = config.get_lengths()
        check_output(output)
        sequences = sample_sequences(model, sizes, config.get_seed())
        write_sequences(output, SequenceSet(tuple(sequences)))
        logger.info(f"Wrote {len(sequences)} sequences of {type(model).__name__} to {output}")
