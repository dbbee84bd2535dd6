""" Entry point for the fractional heat kernel laboratory.
    One subcommand per artifact set; all settings come from a YAML config.
"""

import argparse
import logging
import sys

from . import laboratory
from .config import RunConfig
from .errors import LabError

logger = logging.getLogger(__name__)

# subcommand -> Laboratory method
commands = {
    'kernel':    'run_kernel',
    'perturbed': 'run_perturbed',
    'verify':    'run_verify',
    'kato':      'run_kato',
    'mc':        'run_mc',
    }


def load_config(args):
    config = RunConfig.load(args.config) if args.config else RunConfig()
    suites = args.suites.split(',') if args.suites else None
    return config.override(args.out, args.seed, suites)


def run(args):
    """ Run one subcommand; the exit code is 0 unless verification failed. """
    lab = laboratory.Laboratory(load_config(args))
    result = getattr(lab, commands[args.command])()
    if args.command == 'verify':
        failed = [r.estimate_id for r in result.records if not r.pass_flag]
        if failed:
            logger.warning("%d of %d estimates failed: %s", len(failed), len(result.records),
                           ", ".join(failed))
            return 1
        logger.info("all %d estimates passed", len(result.records))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(description='Fractional heat kernel laboratory')
    parser.add_argument('command',              choices=commands.keys())
    parser.add_argument('--config', dest='config', type=str,
                              help="YAML (or JSON) run configuration; defaults apply when omitted")
    parser.add_argument('--out', dest='out',    type=str,
                              help="Artifact directory, overrides the config's 'out'")
    parser.add_argument('--suites', dest='suites', type=str,
                              help="Comma separated suite or group names for 'verify'")
    parser.add_argument('--seed', dest='seed',  type=int,
                              help="Master seed, overrides the config's 'seed'")
    parser.add_argument('-v', dest='verbose',   action='count', default=0,
                              help="More logging; repeat for debug output")

    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    print(args)

    try:
        code = run(args)
    except LabError as err:
        logger.error("%s: %s", type(err).__name__, err)
        code = 2
    return code


if __name__ == '__main__':
    sys.exit(main())
