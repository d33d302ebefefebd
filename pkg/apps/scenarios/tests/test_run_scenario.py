"""
Tests for the run_scenario management command and config validation
"""
import csv
import io
import json
from math import cos, exp, pi, sin

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from rest_framework import serializers

from apps.scenarios.runner import run_scenario
from apps.scenarios.serializers import ScenarioConfig, validate_config
from apps.scenarios.utils import parse_config_file


def run(*argv):
    """Run the command and return its stdout"""
    out = io.StringIO()
    call_command('run_scenario', *[str(a) for a in argv], stdout=out)
    return out.getvalue()


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as stream:
        return list(csv.DictReader(stream))


class TestValidateConfig:
    """Tests for validate_config"""

    def test_defaults(self):
        cfg = validate_config({'scenario': 'anomaly'})
        assert isinstance(cfg, ScenarioConfig)
        assert cfg.phi == pytest.approx(pi / 3)
        assert cfg.sigma == 10.0
        assert cfg.n == 3600
        assert cfg.seed == 20240601
        assert cfg.output.name == 'anomaly.csv'

    def test_g2_scaled_defaults(self):
        cfg = validate_config({'scenario': 'collapse', 'g2': '2'})
        assert cfg.t_final == pytest.approx(100.0)
        assert cfg.dt == pytest.approx(2e-3)

    def test_negative_sigma(self):
        with pytest.raises(serializers.ValidationError) as exc:
            validate_config({'scenario': 'weak-limit', 'sigma': '-1'})
        assert 'sigma' in exc.value.detail

    def test_stability_guard(self):
        with pytest.raises(serializers.ValidationError) as exc:
            validate_config({'scenario': 'decoherence', 'g2': '1', 'dt': '0.5'})
        assert 'dt' in exc.value.detail

    def test_zero_acceptance(self):
        with pytest.raises(serializers.ValidationError) as exc:
            validate_config({'scenario': 'anomaly', 'phi': str(pi / 2)})
        assert 'cos²φ' in str(exc.value.detail['phi'][0])

    def test_all_violations_reported(self):
        with pytest.raises(serializers.ValidationError) as exc:
            validate_config({'scenario': 'anomaly', 'sigma': '0', 'n': '0', 'threads': '0'})
        assert {'sigma', 'n', 'threads'} <= set(exc.value.detail)

    def test_trace_only_for_trajectories(self):
        with pytest.raises(serializers.ValidationError) as exc:
            validate_config({'scenario': 'anomaly', 'trace': 'trace.csv'})
        assert 'trace' in exc.value.detail

    def test_decoherence_ensemble_size(self):
        with pytest.raises(serializers.ValidationError) as exc:
            validate_config({'scenario': 'decoherence', 'n_traj': '10'})
        assert 'n_traj' in exc.value.detail

    def test_unknown_scenario(self):
        with pytest.raises(serializers.ValidationError):
            validate_config({'scenario': 'teleport'})


class TestConfigFile:
    """Tests for parse_config_file"""

    def test_parse(self, tmp_path):
        path = tmp_path / 'sweep.cfg'
        path.write_text("# weak limit sweep\nsigma = 10\nn-traj=200  # trajectories\nt = 3\n\n")
        assert parse_config_file(path) == {'sigma': '10', 'n_traj': '200', 't_final': '3'}

    def test_malformed_line(self, tmp_path):
        path = tmp_path / 'bad.cfg'
        path.write_text("sigma 10\n")
        with pytest.raises(ValueError):
            parse_config_file(path)


class TestRunScenario:
    """End-to-end runs of the command"""

    def test_anomaly(self, tmp_path):
        output = tmp_path / 'anomaly.csv'
        summary = run('anomaly', '--phi', 1.0471975512, '--sigma', 10, '--n', 3600,
                      '--seed', 1, '--output', output)
        assert summary.startswith('anomaly:')
        rows = read_csv(output)
        assert len(rows) == 1
        assert float(rows[0]['predicted_mean']) == pytest.approx(2.0, abs=1e-9)
        assert float(rows[0]['predicted_delta']) == pytest.approx(0.33, abs=0.03)
        assert abs(float(rows[0]['mean']) - 2.0) <= 3 * float(rows[0]['predicted_delta'])

    def test_decoherence(self, tmp_path):
        output = tmp_path / 'decoherence.csv'
        run('decoherence', '--phi', 0.7853981634, '--g2', 1, '--t', 2, '--output', output, '--assert')
        rows = read_csv(output)
        assert float(rows[-1]['t']) == pytest.approx(2.0)
        phi = 0.7853981634
        for row in rows:
            t = float(row['t'])
            assert float(row['offdiag']) == pytest.approx(cos(phi) * sin(phi) * exp(-t / 2), abs=1e-12)
            assert float(row['offdiag_numeric']) == pytest.approx(float(row['offdiag']), abs=1e-8)

    def test_anomaly_checks(self, tmp_path):
        cfg = validate_config({'scenario': 'anomaly', 'seed': '1', 'output': str(tmp_path / 'a.csv')})
        outcome = run_scenario(cfg)
        checks = {check.name: check for check in outcome.checks}
        assert set(checks) == {'acceptance rate', 'accepted count', 'accepted mean',
                               'weak value', 'postselected moments'}
        assert outcome.passed
        assert 'eigenvalues -0.5, 1.5' in checks['weak value'].detail

    def test_anomaly_under_assert(self, tmp_path):
        summary = run('anomaly', '--phi', 1.0471975512, '--sigma', 10, '--n', 3600, '--seed', 1,
                      '--output', tmp_path / 'anomaly.csv', '--assert')
        accepted = int(summary.split('accepted ')[1].split('/')[0])
        assert 810 <= accepted <= 990

    def test_anomaly_witness(self, tmp_path):
        cfg = validate_config({'scenario': 'anomaly', 'n': '36000', 'seed': '3', 'threads': '4',
                               'output': str(tmp_path / 'a.csv')})
        outcome = run_scenario(cfg)
        witness = [check for check in outcome.checks if check.name == 'anomaly witness']
        assert len(witness) == 1
        assert witness[0].passed

    def test_decoherence_ensemble(self, tmp_path):
        output = tmp_path / 'decoherence.json'
        summary = run('decoherence', '--phi', 0.7853981634, '--g2', 1, '--t', 1, '--n-traj', 2000,
                      '--seed', 101, '--threads', 4, '--format', 'json', '--output', output, '--assert')
        assert '2000 trajectories' in summary
        assert 'ensemble_max_z' in json.loads(output.read_text())

    def test_byte_identical_reruns(self, tmp_path):
        first, second = tmp_path / 'first.csv', tmp_path / 'second.csv'
        run('weak-limit', '--sigma', 10, '--n', 100, '--seed', 7, '--output', first)
        run('weak-limit', '--sigma', 10, '--n', 100, '--seed', 7, '--output', second)
        assert first.read_bytes() == second.read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path):
        outputs = []
        for threads in (1, 4):
            output = tmp_path / f'weak-{threads}.json'
            run('weak-limit', '--repetitions', 30, '--seed', 5, '--threads', threads, '--block-size', 4,
                '--format', 'json', '--output', output)
            outputs.append(output.read_bytes())
        assert outputs[0] == outputs[1]

    def test_collapse_thread_independence(self, tmp_path):
        outputs = []
        for threads in (1, 3):
            output = tmp_path / f'collapse-{threads}.csv'
            run('classical-continuous', '--n-traj', 120, '--t', 30, '--seed', 9,
                '--threads', threads, '--block-size', 50, '--output', output)
            outputs.append(output.read_bytes())
        assert outputs[0] == outputs[1]

    def test_json_output(self, tmp_path):
        output = tmp_path / 'meter.json'
        summary = run('meter-check', '--n', 5, '--seed', 3, '--format', 'json', '--output', output)
        assert summary.startswith('meter-check: 5 cases')
        data = json.loads(output.read_text())
        assert len(data) == 5
        assert all(case['max_abs_diff'] < 1e-12 for case in data)
        assert output.read_bytes().endswith(b'\n')

    def test_config_file_with_override(self, tmp_path):
        config = tmp_path / 'weak.cfg'
        config.write_text("sigma = 10\nn = 100\nseed = 7  # overridden below\n")
        from_file, from_flags = tmp_path / 'file.csv', tmp_path / 'flags.csv'
        run('weak-limit', '--config', config, '--seed', 8, '--output', from_file)
        run('weak-limit', '--sigma', 10, '--n', 100, '--seed', 8, '--output', from_flags)
        assert from_file.read_bytes() == from_flags.read_bytes()

    def test_trace(self, tmp_path):
        output, trace = tmp_path / 'classical.csv', tmp_path / 'trace.csv'
        run('classical-continuous', '--n-traj', 100, '--t', 30, '--seed', 2,
            '--output', output, '--trace', trace)
        lines = trace.read_text().splitlines()
        assert lines[0] == 't,alpha,rho_1,rho_2'
        assert len(lines) == 30000 + 2
        rows = read_csv(output)
        assert [row['eigenvalue'] for row in rows] == ['-1', '1']


class TestExitCodes:
    """Errors map to exit statuses"""

    def test_validation_error_exits_2(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            run('weak-limit', '--sigma', -1, '--output', tmp_path / 'x.csv')
        assert exc.value.returncode == 2
        assert 'sigma' in str(exc.value)

    def test_non_numeric_value_exits_2(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            run('anomaly', '--n', 'many', '--output', tmp_path / 'x.csv')
        assert exc.value.returncode == 2
        assert 'n:' in str(exc.value)

    def test_zero_acceptance_exits_2(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            run('anomaly', '--phi', pi / 2, '--output', tmp_path / 'x.csv')
        assert exc.value.returncode == 2

    def test_unconverged_exits_3_under_assert(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            run('collapse', '--n-traj', 100, '--t', 1, '--dt', 0.01, '--output', tmp_path / 'x.csv',
                '--assert')
        assert exc.value.returncode == 3

    def test_unconverged_exits_1_without_assert(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            run('collapse', '--n-traj', 100, '--t', 1, '--dt', 0.01, '--output', tmp_path / 'x.csv')
        assert exc.value.returncode == 1

    def test_missing_config_file_exits_2(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            run('anomaly', '--config', tmp_path / 'missing.cfg')
        assert exc.value.returncode == 2

    def test_strong_anomaly_rejected_under_assert(self, tmp_path):
        """At σ = 0.1 the accepted mean is near 0.8, not the weak value"""
        with pytest.raises(CommandError) as exc:
            run('anomaly', '--sigma', 0.1, '--n', 2000, '--seed', 4, '--output', tmp_path / 'x.csv',
                '--assert')
        assert exc.value.returncode == 3
        assert 'accepted mean' in str(exc.value)

    def test_strong_anomaly_without_assert_exits_0(self, tmp_path):
        summary = run('anomaly', '--sigma', 0.1, '--n', 200, '--seed', 4, '--output', tmp_path / 'x.csv')
        assert summary.startswith('anomaly:')
