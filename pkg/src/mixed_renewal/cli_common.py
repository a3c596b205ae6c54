"""Helpers shared by the command-line scripts."""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Iterator, Optional

import coloredlogs
import numpy as np
import typer

from mixed_renewal.config import ExperimentConfig
from mixed_renewal.constant import SEED_ENVVAR
from mixed_renewal.errors import DataFormatError

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

ConfigOption = Annotated[Optional[Path], typer.Option("--config", "-c", help="YAML experiment file")]
SeedOption = Annotated[
    Optional[int], typer.Option("--seed", envvar=SEED_ENVVAR, help="Master seed of the random streams")
]
DebugOption = Annotated[bool, typer.Option("--debug", help="Increase logs verbosity")]
OutputOption = Annotated[Path, typer.Option("--output", "-o", help="Output file")]
StartOption = Annotated[Optional[float], typer.Option("--start", help="First grid point")]
StopOption = Annotated[Optional[float], typer.Option("--stop", help="Last grid point")]
StepOption = Annotated[Optional[float], typer.Option("--step", help="Grid step")]


def setup_logging(debug: bool) -> None:
    """Set up logging based on command line arguments."""
    level = logging.INFO

    if debug:
        level = logging.DEBUG

    if level == logging.DEBUG:
        coloredlogs.install(
            fmt="[%(asctime)s][%(name)s:%(lineno)d][%(levelname).4s] %(message)s",
            datefmt="%H:%M:%S",
            level=level,
        )
    else:
        coloredlogs.install(
            fmt="[%(asctime)s][%(levelname).4s] %(message)s",
            datefmt="%H:%M:%S",
            level=level,
        )


def load_config(config_file: Optional[Path], seed: Optional[int] = None, **flags: object) -> ExperimentConfig:
    """Load the experiment file and apply command-line flags.

    The seed comes from --seed, then the environment variable, then the
    file, then the built-in default.
    """
    if config_file is not None and not config_file.exists():
        raise FileNotFoundError(f"The path {config_file} does not exist.")
    return ExperimentConfig(config_file).override(seed=seed, **flags)


def grid_flags(start: Optional[float], stop: Optional[float], step: Optional[float]) -> dict[str, Optional[float]]:
    """Map grid options onto dotted configuration keys."""
    return {"grid.start": start, "grid.stop": stop, "grid.step": step}


def check_output(path: Path) -> None:
    """Check that the parent directory of an output file exists."""
    if not path.parent.exists():
        raise FileNotFoundError(f"The directory {path.parent} does not exist.")


def describe_grid(grid: np.ndarray) -> str:
    """Short description of a grid for logs."""
    return f"{len(grid)} points on [{grid[0]:g}, {grid[-1]:g}]"


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Log library errors and exit with the matching code.

    Data and file problems exit with 3, numerical failures with 4, and bad
    arguments with 2.
    """
    try:
        yield
    except (DataFormatError, OSError) as e:
        logger.error(str(e))
        raise typer.Exit(code=EXIT_DATA) from e
    except ArithmeticError as e:
        logger.error(str(e))
        raise typer.Exit(code=EXIT_NUMERICAL) from e
    except (ValueError, KeyError, NotImplementedError) as e:
        logger.error(str(e))
        raise typer.Exit(code=EXIT_USAGE) from e
