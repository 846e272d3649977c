import sys
from collections.abc import Sequence

import click

from thermoscope import __version__
from thermoscope.cli_logging import CLILogger, attach_library_logging, verbosity_from_env
from thermoscope.commands.ideal import ideal
from thermoscope.commands.maxent_cmd import maxent
from thermoscope.commands.transport import transport
from thermoscope.commands.vdw import vdw_isotherm, vdw_maxwell, vdw_selector, vdw_state_cmd
from thermoscope.errors import ThermoscopeError


class ThermoscopeGroup(click.Group):
    """Click group that turns domain failures into one-line errors with exit code 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ThermoscopeError as e:
            click.echo(e.format_line(), err=True)
            sys.exit(1)
        except OSError as e:
            detail = f"{e.filename}: {e.strerror}" if e.filename else str(e)
            click.echo(f"error: io: {detail}", err=True)
            sys.exit(1)
        finally:
            # Flush stdout so piped CSV is complete before the process exits.
            sys.stdout.flush()


@click.group(cls=ThermoscopeGroup)
@click.version_option(version=__version__, prog_name="thermoscope")
@click.pass_context
def cli_main(ctx):
    """
    thermoscope - numerical thermodynamics from maximum entropy to Maxwell.

    \b
    QUICK START:
      thermoscope ideal --N 2 --T 3 --P 1
      thermoscope vdw-maxwell --a 1 --b 1 --T 0.2
      thermoscope vdw-isotherm --a 1 --b 1 --T 0.2 --v-lo 1.5 --v-hi 20 --adjust true
      thermoscope transport --nq 128 --np 128 --output traj.csv

    Diagnostics go to stderr; set THERMOSCOPE_LOG=error|warn|info|debug.
    """
    ctx.ensure_object(dict)
    logger = CLILogger(verbosity=verbosity_from_env())
    attach_library_logging(logger)
    ctx.obj["logger"] = logger


@cli_main.command("version")
def version_cmd():
    """Print the toolkit version."""
    click.echo(f"thermoscope {__version__}")


cli_main.add_command(maxent)
cli_main.add_command(ideal)
cli_main.add_command(vdw_state_cmd)
cli_main.add_command(vdw_isotherm)
cli_main.add_command(vdw_maxwell)
cli_main.add_command(vdw_selector)
cli_main.add_command(transport)

# Console-script entry point
cli = cli_main


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI in-process and return its exit code instead of exiting."""
    try:
        cli_main.main(args=list(argv) if argv is not None else None, prog_name="thermoscope")
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    return 0


if __name__ == "__main__":
    cli_main()
