import typer

from mixed_renewal import (
    compute_renewal,
    create_config,
    dirichlet_tables,
    fit,
    mc_study,
    simulate,
    solve_equation,
)

app = typer.Typer(no_args_is_help=True, add_completion=False)
app.registered_commands += simulate.app.registered_commands
app.registered_commands += fit.app.registered_commands
app.registered_commands += compute_renewal.app.registered_commands
app.registered_commands += solve_equation.app.registered_commands
app.registered_commands += mc_study.app.registered_commands
app.registered_commands += dirichlet_tables.app.registered_commands
app.registered_commands += create_config.app.registered_commands

if __name__ == "__main__":
    app()
