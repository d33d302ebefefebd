import logging

from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from apps.ensemble.exceptions import NoAcceptedRuns, Unconverged
from apps.linalg.exceptions import WeakMeasurementError
from apps.scenarios.runner import run_scenario
from apps.scenarios.serializers import FORMATS, SCENARIOS, SCHEMES, validate_config
from apps.scenarios.utils import parse_config_file
from apps.trajectories.exceptions import StepUnstable

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_REJECTED = 3

# run-time errors that count as a failed acceptance check under --assert
STATISTICAL_ERRORS = (Unconverged, NoAcceptedRuns, StepUnstable)

# numeric flags stay strings so that the serializer reports bad values
NUMERIC_FLAGS = (
    ('--phi', 'phi', 'Phase angle in radians'),
    ('--sigma', 'sigma', 'Gaussian measurement error'),
    ('--n', 'n', 'Runs per experiment / random cases for meter-check'),
    ('--g2', 'g2', 'Time-continuous measurement strength g²'),
    ('--dt', 'dt', 'Integration step'),
    ('--n-traj', 'n_traj', 'Number of trajectories'),
    ('--seed', 'seed', 'Master seed (default: WEAKMEASURE_DEFAULT_SEED)'),
    ('--repetitions', 'repetitions', 'Weak-limit repetitions'),
    ('--threads', 'threads', 'Worker threads (does not change the output)'),
    ('--block-size', 'block_size', 'Runs per parallel work block'),
)


def _format_errors(detail):
    if isinstance(detail, dict):
        return '; '.join(f"{field}: {' '.join(str(m) for m in messages)}"
                         for field, messages in detail.items())
    return ' '.join(str(message) for message in detail)


class Command(BaseCommand):
    help = 'Run one weak-measurement scenario and write its report'

    def add_arguments(self, parser):
        parser.add_argument('scenario', choices=SCENARIOS, help='Scenario to run')
        for flag, dest, text in NUMERIC_FLAGS:
            parser.add_argument(flag, dest=dest, type=str, default=None, help=text)
        parser.add_argument('--t', '--t-final', dest='t_final', type=str, default=None,
                            help='Final time of time-continuous scenarios')
        parser.add_argument('--output', type=str, default=None,
                            help='Output file (default: WEAKMEASURE_OUTPUT_DIR/<scenario>.<format>)')
        parser.add_argument('--format', choices=FORMATS, default=None, help='Output format')
        parser.add_argument('--scheme', choices=SCHEMES, default=None,
                            help='Quantum trajectory update (default: euler)')
        parser.add_argument('--config', type=str, default=None,
                            help='key=value file; flags given on the command line win')
        parser.add_argument('--assert', dest='assert_checks', action='store_true',
                            help='Exit with status 3 when an acceptance check fails')
        parser.add_argument('--trace', type=str, default=None,
                            help='Write trajectory 0 as CSV (collapse, classical-continuous)')

    def _raw_config(self, options):
        raw = {}
        if options['config']:
            try:
                raw.update(parse_config_file(options['config']))
            except (OSError, ValueError) as exc:
                raise CommandError(f"config: {exc}", returncode=EXIT_INVALID)
        names = [dest for _, dest, _ in NUMERIC_FLAGS]
        names += ['t_final', 'output', 'format', 'scheme', 'trace']
        for name in names:
            if options.get(name) is not None:
                raw[name] = options[name]
        if options.get('assert_checks'):
            raw['assert_checks'] = True
        raw['scenario'] = options['scenario']
        return raw

    def handle(self, *args, **options):
        try:
            cfg = validate_config(self._raw_config(options))
        except serializers.ValidationError as exc:
            raise CommandError(f"invalid configuration: {_format_errors(exc.detail)}",
                               returncode=EXIT_INVALID)

        try:
            outcome = run_scenario(cfg)
        except STATISTICAL_ERRORS as exc:
            code = EXIT_REJECTED if cfg.assert_checks else EXIT_FAILURE
            raise CommandError(f"{cfg.scenario}: {exc}", returncode=code)
        except WeakMeasurementError as exc:
            raise CommandError(f"{cfg.scenario}: {exc}", returncode=EXIT_FAILURE)

        self.stdout.write(outcome.summary)
        if cfg.assert_checks and not outcome.passed:
            for check in outcome.failed_checks:
                logger.warning(f"acceptance check failed: {check.name} ({check.detail})")
            names = ', '.join(check.name for check in outcome.failed_checks)
            raise CommandError(f"acceptance checks failed: {names}", returncode=EXIT_REJECTED)
