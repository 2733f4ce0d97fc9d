import json

from src.records import RunRecord, analyze_curve, analyze_text

CANONICAL_KEYS = ['curve', 'p', 'u', 's', 'd', 'genus', 'sigma', 'tau', 'lpoly', 'newton', 'verdicts', 'status']


def test_elliptic_record(elliptic):
    record = analyze_curve(elliptic)
    assert record.lpoly == ['1', '0', '2']
    assert record.slopes == ['1/2', '1/2']
    assert record.first_slope == '1/2'
    assert record.supersingular
    assert record.verdicts['family'] == 'SupersingularFamily'
    assert record.status == 'PASS'
    assert record.coefficients == [1, 0, 2]


def test_nonsupersingular_record(septic):
    record = analyze_curve(septic, verify=True)
    assert record.first_slope == '1/3'
    assert record.sigma == 3
    assert record.tau == 3
    assert record.verdicts['family'] == 'NonSupersingularFamily(h=3, i=1)'
    assert record.verdicts['family_verdict'] == 'PASS'
    assert not record.supersingular


def test_canonical_key_order(elliptic):
    data = analyze_curve(elliptic).to_dict()
    assert list(data) == CANONICAL_KEYS
    assert list(data['newton']) == ['vertices', 'slopes', 'first_slope', 'supersingular']


def test_timing_is_kept_apart(elliptic):
    timed = analyze_curve(elliptic, timing=True)
    assert set(timed.to_dict()['timing']) == {'lpoly', 'checks'}
    assert 'timing' not in timed.to_dict(with_timing=False)
    assert 'timing' not in analyze_curve(elliptic).to_dict()


def test_output_is_deterministic():
    first = analyze_text('p=3 u=1 s=1 f=x^4+x').to_json(with_timing=False)
    second = analyze_text('p=3 u=1 s=1 f=x^4+x').to_json(with_timing=False)
    assert first == second


def test_from_dict_restores_record(elliptic):
    record = analyze_curve(elliptic)
    restored = RunRecord.from_json(record.to_json())
    assert restored == record
    assert restored.status == record.status


def test_status_precedence():
    record = RunRecord(curve='c', p=2, u=1, s=1, d=3, genus=1, sigma=2, tau=2, lpoly=['1', '0', '2'],
                       verdicts={'a': 'PASS', 'b': 'FLAG'})
    assert record.status == 'FLAG'
    record.verdicts['c'] = 'FAIL'
    assert record.status == 'FAIL'
    record = RunRecord(curve='c', p=2, u=1, s=1, d=3, genus=1, sigma=2, tau=2, lpoly=['1', '0', '2'],
                       verdicts={'a': 'PASS', 'b': 'SKIP'})
    assert record.status == 'PASS'


def test_record_is_plain_json(elliptic):
    text = analyze_curve(elliptic).to_json(indent=None)
    assert json.loads(text)['lpoly'] == ['1', '0', '2']
