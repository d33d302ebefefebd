"""
Scenario configuration: parsing and validation of command-line and file input
"""
from dataclasses import dataclass
from math import pi
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from apps.trajectories.config import STABILITY_RATIO

SCENARIOS = (
    'weak-limit',
    'anomaly',
    'decoherence',
    'collapse',
    'classical-continuous',
    'meter-check',
)
FORMATS = ('csv', 'json')
SCHEMES = ('euler', 'kraus')
TRAJECTORY_SCENARIOS = ('collapse', 'classical-continuous')
# scenarios whose n_traj feeds an ensemble, so it needs at least MIN_TRAJECTORIES
ENSEMBLE_SCENARIOS = (*TRAJECTORY_SCENARIOS, 'decoherence')
MIN_TRAJECTORIES = 100

# per-scenario defaults; g2-scaled entries are multiplied by g2 once it is known
SCENARIO_DEFAULTS = {
    'weak-limit': {'sigma': 10.0, 'n': 100, 'repetitions': 1},
    'anomaly': {'phi': pi / 3, 'sigma': 10.0, 'n': 3600},
    'decoherence': {'phi': pi / 4, 'g2': 1.0},
    'collapse': {'phi': pi / 3, 'g2': 1.0, 'n_traj': 4000},
    'classical-continuous': {'g2': 1.0, 'n_traj': 4000},
    'meter-check': {'n': 50},
}
G2_SCALED_DEFAULTS = {
    'decoherence': {'t_final': 5.0, 'dt': 1e-3},
    'collapse': {'t_final': 50.0, 'dt': 1e-3},
    'classical-continuous': {'t_final': 50.0, 'dt': 1e-3},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated parameters of one scenario run"""
    scenario: str
    output: Path
    format: str = 'csv'
    phi: float | None = None
    sigma: float | None = None
    n: int | None = None
    g2: float | None = None
    dt: float | None = None
    t_final: float | None = None
    n_traj: int | None = None
    seed: int = 0
    repetitions: int = 1
    threads: int = 1
    block_size: int = 250
    scheme: str = 'euler'
    trace: Path | None = None
    assert_checks: bool = False

    def parameters(self):
        """Numeric parameters that are set, for logging"""
        names = ('phi', 'sigma', 'n', 'g2', 'dt', 't_final', 'n_traj', 'seed', 'repetitions', 'threads')
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}


class ScenarioConfigSerializer(serializers.Serializer):
    """
    Serializer for ScenarioConfig.

    Field types are checked by the fields; every range constraint is checked
    in ``validate`` so that all violations are reported together.
    """

    scenario = serializers.ChoiceField(choices=SCENARIOS)
    phi = serializers.FloatField(required=False, allow_null=True)
    sigma = serializers.FloatField(required=False, allow_null=True)
    n = serializers.IntegerField(required=False, allow_null=True)
    g2 = serializers.FloatField(required=False, allow_null=True)
    dt = serializers.FloatField(required=False, allow_null=True)
    t_final = serializers.FloatField(required=False, allow_null=True)
    n_traj = serializers.IntegerField(required=False, allow_null=True)
    seed = serializers.IntegerField(required=False, allow_null=True)
    repetitions = serializers.IntegerField(required=False, allow_null=True)
    threads = serializers.IntegerField(required=False, allow_null=True)
    block_size = serializers.IntegerField(required=False, allow_null=True)
    scheme = serializers.ChoiceField(choices=SCHEMES, required=False, default='euler')
    format = serializers.ChoiceField(choices=FORMATS, required=False, default='csv')
    output = serializers.CharField(required=False, allow_null=True, allow_blank=False)
    trace = serializers.CharField(required=False, allow_null=True, allow_blank=False)
    assert_checks = serializers.BooleanField(required=False, default=False)

    def _apply_defaults(self, attrs):
        scenario = attrs['scenario']
        options = settings.WEAKMEASURE
        merged = {name: value for name, value in attrs.items() if value is not None}
        for name, value in SCENARIO_DEFAULTS[scenario].items():
            merged.setdefault(name, value)
        g2 = merged.get('g2')
        if g2 is not None and g2 > 0:
            for name, factor in G2_SCALED_DEFAULTS.get(scenario, {}).items():
                merged.setdefault(name, factor * g2)
        merged.setdefault('seed', options['DEFAULT_SEED'])
        merged.setdefault('threads', options['THREADS'])
        merged.setdefault('block_size', options['BLOCK_SIZE'])
        merged.setdefault('repetitions', 1)
        return merged

    def validate(self, attrs):
        attrs = self._apply_defaults(attrs)
        scenario = attrs['scenario']
        errors = {}

        def reject(field, message):
            errors.setdefault(field, []).append(message)

        phi = attrs.get('phi')
        if phi is not None:
            if scenario == 'anomaly':
                if not 0 <= phi < pi / 2:
                    reject('phi', "phi must lie in [0, π/2) for anomaly: "
                                  "acceptance rate cos²φ must be positive")
            elif not 0 <= phi <= pi:
                reject('phi', "phi must lie in [0, π]")
        if attrs.get('sigma') is not None and not attrs['sigma'] > 0:
            reject('sigma', "sigma must be positive")
        if attrs.get('n') is not None and attrs['n'] < 1:
            reject('n', "n must be at least 1")
        g2 = attrs.get('g2')
        if g2 is not None and not g2 > 0:
            reject('g2', "g2 must be positive")
        dt = attrs.get('dt')
        if dt is not None:
            if not dt > 0:
                reject('dt', "dt must be positive")
            elif g2 is not None and g2 > 0 and dt > g2 / STABILITY_RATIO:
                reject('dt', f"dt must not exceed g2/{STABILITY_RATIO:g} = "
                             f"{g2 / STABILITY_RATIO:g} (stability guard)")
        if attrs.get('t_final') is not None and not attrs['t_final'] > 0:
            reject('t_final', "t_final must be positive")
        n_traj = attrs.get('n_traj')
        if n_traj is not None:
            minimum = MIN_TRAJECTORIES if scenario in ENSEMBLE_SCENARIOS else 1
            if n_traj < minimum:
                reject('n_traj', f"n_traj must be at least {minimum} for {scenario}")
        if attrs['seed'] < 0:
            reject('seed', "seed must be nonnegative")
        if attrs['threads'] < 1:
            reject('threads', "threads must be at least 1")
        if attrs['block_size'] < 1:
            reject('block_size', "block_size must be at least 1")
        if attrs['repetitions'] < 1:
            reject('repetitions', "repetitions must be at least 1")
        if attrs.get('trace') and scenario not in TRAJECTORY_SCENARIOS:
            reject('trace', f"trace is only written by {' and '.join(TRAJECTORY_SCENARIOS)}")

        if errors:
            raise serializers.ValidationError(errors)
        return attrs

    def create(self, validated_data):
        data = dict(validated_data)
        fmt = data.get('format', 'csv')
        output = data.pop('output', None)
        if output is None:
            output = Path(settings.WEAKMEASURE['OUTPUT_DIR']) / f"{data['scenario']}.{fmt}"
        trace = data.pop('trace', None)
        return ScenarioConfig(
            output=Path(output),
            trace=Path(trace) if trace else None,
            **data,
        )


def validate_config(raw):
    """
    Raw flag/file values → ScenarioConfig.

    Raises rest_framework.serializers.ValidationError naming every offending
    parameter.
    """
    serializer = ScenarioConfigSerializer(data=raw)
    serializer.is_valid(raise_exception=True)
    return serializer.save()
