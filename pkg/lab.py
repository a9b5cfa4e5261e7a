import os
import logging

import click

from checks import CheckFailure
from reports import MissingColumn
from scenario import ConfigError
from utils import load_dotenv

APP_NAME = 'lab'
APP_VERSION = '1.0.0'
LOG_LEVEL_ENV = 'LAB_LOG_LEVEL'

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_CHECK_FAILURE = 2


def configure_logging():
    level_name = os.environ.get(LOG_LEVEL_ENV, 'INFO').upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(message)s')
    if level_name != logging.getLevelName(level):
        logging.warning('Unknown %s=%r, logging at INFO', LOG_LEVEL_ENV, level_name)


class LabGroup(click.Group):
    """Maps domain errors to the exit-code contract: 1 config/IO, 2 failed checks."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except CheckFailure as e:
            logging.error('%s', e)
            ctx.exit(EXIT_CHECK_FAILURE)
        except click.UsageError as e:
            # click reports usage errors with 2, which is reserved for failed checks
            e.exit_code = EXIT_CONFIG_ERROR
            raise
        except ConfigError as e:
            logging.error('Invalid scenario: %s', e)
            ctx.exit(EXIT_CONFIG_ERROR)
        except OSError as e:
            logging.error('I/O error: %s', e)
            ctx.exit(EXIT_CONFIG_ERROR)
        except MissingColumn as e:
            logging.error('Invalid series: %s', e)
            ctx.exit(EXIT_CONFIG_ERROR)
        except ValueError as e:
            logging.error('Cannot evaluate scenario: %s', e, exc_info=True)
            ctx.exit(EXIT_CONFIG_ERROR)


def create_cli():
    @click.group(cls=LabGroup)
    @click.version_option(APP_VERSION, prog_name=APP_NAME)
    def cli():
        """Numerical laboratory for directional spectral asymptotics of toric Toeplitz operators."""

    # Register subcommands
    from commands.run import run_cmd
    from commands.spectrum import spectrum_cmd
    from commands.project import project_cmd
    from commands.trace import trace_cmd
    from commands.verify import verify_cmd
    from commands.fit import fit_cmd
    cli.add_command(run_cmd)
    cli.add_command(spectrum_cmd)
    cli.add_command(project_cmd)
    cli.add_command(trace_cmd)
    cli.add_command(verify_cmd)
    cli.add_command(fit_cmd)
    return cli


def main(argv=None):
    load_dotenv()
    configure_logging()
    create_cli().main(args=argv, prog_name=APP_NAME)


if __name__ == '__main__':
    main()
