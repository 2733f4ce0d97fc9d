import json

import pytest
from click.testing import CliRunner

from src.main import cli


@pytest.fixture
def run():
    try:
        runner = CliRunner(mix_stderr=False)
    except TypeError:  # click >= 8.2 always keeps stderr separate
        runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, list(args))

    return invoke


def test_lpoly_text(run):
    result = run('lpoly', 'p=2', 'u=1', 's=1', 'f=x^3')
    assert result.exit_code == 0, result.stderr
    assert '1 + 2*T^2' in result.stdout
    assert 'supersingular: true' in result.stdout


def test_lpoly_json(run):
    result = run('--json', 'lpoly', '--verify', 'p=2 u=1 s=1 f=x^3')
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data['coeffs'] == ['1', '0', '2']
    assert data['slopes'] == ['1/2', '1/2']
    assert data['verified'] is True


def test_newton(run):
    result = run('--json', 'newton', 'p=2', 'f=x^7')
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)['first_slope'] == '1/3'


def test_check_passes(run):
    result = run('--json', 'check', 'p=2 u=1 s=1 f=x^3')
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data['newton']['first_slope'] == '1/2'
    assert data['status'] == 'PASS'
    assert 'timing' not in data


def test_check_output_is_byte_identical(run):
    first = run('--json', 'check', 'p=3 u=1 s=1 f=x^4+x')
    second = run('--json', 'check', 'p=3 u=1 s=1 f=x^4+x')
    assert first.exit_code == 0
    assert first.stdout == second.stdout


def test_check_with_timing(run):
    result = run('--json', '--timing', 'check', 'p=2 f=x^3')
    assert 'timing' in json.loads(result.stdout)


@pytest.mark.parametrize('curve', ['p=2 f=x^2', 'p=4 f=x^3', 'p=2 f=x^3 +', 'f=x^3'])
def test_parse_errors_exit_2(run, curve):
    result = run('check', curve)
    assert result.exit_code == 2
    assert 'column' in result.stderr


def test_budget_exit_2(run):
    result = run('--budget', '1', 'lpoly', 'p=2 f=x^3')
    assert result.exit_code == 2
    assert 'budget' in result.stderr


def test_budget_from_environment(run, monkeypatch):
    monkeypatch.setenv('SLOPEKIT_BUDGET', '1')
    assert run('lpoly', 'p=2 f=x^3').exit_code == 2


def test_bounds(run):
    result = run('--json', 'bounds', '2', '1', '1', '15', '7')
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data['hw_classic'] == '154'
    assert data['hw_improved'] == '152'
    assert data['divisibility_exponent'] == 2


@pytest.mark.parametrize('args', [
    ('2', '1', '1', '15', '0'),
    ('4', '1', '1', '15', '7'),
    ('2', '1', '1', '4', '7'),
    ('2', '1', '1', '15'),
])
def test_bounds_usage_errors(run, args):
    assert run('bounds', *args).exit_code == 2


def test_examples(run):
    result = run('--json', 'examples')
    assert result.exit_code == 0, result.stderr
    rows = json.loads(result.stdout)
    statuses = {row['status'] for row in rows if row['example'] == 'Example 3'}
    assert 'FLAG' in statuses
    assert all(row['status'] == 'PASS' for row in rows if row['example'] != 'Example 3')


def test_tiling_with_bijection(run):
    result = run('--json', 'tiling', '3', '1,3', '2', '3')
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data['tilde_s'] == 1
    assert data['tilings'] == [[[1, 0, 3]]]
    assert data['bijection']['ok'] is True


def test_tiling_without_tilings(run):
    result = run('--json', 'tiling', '1', '{2}', '2')
    data = json.loads(result.stdout)
    assert data['tilde_s'] == 'inf'
    assert data['tilings'] == []


def test_tiling_text(run):
    result = run('tiling', '2', '1', '2')
    assert result.stdout.splitlines()[0] == 's~_2(2, {1}) = 1'


@pytest.mark.parametrize('args', [('3', '0,1', '2'), ('3', 'a', '2'), ('3', '1', '6'), ('501', '1', '2')])
def test_tiling_usage_errors(run, args):
    assert run('tiling', *args).exit_code == 2


def test_tiling_guardrail_from_config(run, isolated):
    (isolated / 'config.ini').write_text('[tiling]\nmax_r = 20\n')
    assert run('tiling', '21', '1', '2').exit_code == 2
    assert run('tiling', '20', '1', '2').exit_code == 0


def test_series_verify_y(run):
    result = run('--json', 'series-verify', 'y')
    assert result.exit_code == 0, result.stderr
    assert {row['status'] for row in json.loads(result.stdout)} == {'PASS'}


def test_series_verify_unknown_selector(run):
    assert run('series-verify', 'zeta').exit_code == 2


def test_scan(run, isolated):
    out = isolated / 'scan.jsonl'
    args = ('--json', 'scan', '--family', 'monomial', '--p', '2', '--degrees', '3,5', '--output', str(out))
    result = run(*args)
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)['written'] == 2
    again = json.loads(run(*args).stdout)
    assert again['written'] == 0
    assert again['existing'] == 2


def test_sweep_small(run):
    result = run('--json', '--budget', '4096', 'sweep', '--count', '3', '--seed', '5')
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data['curves'] == 3
    assert data['violations'] == []


def test_tiling_verify_small(run):
    result = run('--json', 'tiling-verify', '--r-max', '8', '--sets', '3', '--kbox-r-max', '12')
    assert result.exit_code == 0, result.stderr
    data = json.loads(result.stdout)
    assert data['violations'] == []
    assert 'FAIL' not in data['kbox']


def test_config_round_trip(run, isolated):
    result = run('set-config', 'tiling', 'max_r', '40')
    assert result.exit_code == 0, result.stderr
    shown = run('show-config').stdout
    assert '# loaded from: config.ini' in shown
    assert 'max_r = 40' in shown
