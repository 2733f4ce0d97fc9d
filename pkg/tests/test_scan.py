import json

import pytest

from src.curve import parse_curve
from src.records import analyze_curve
from src.scan import ScanWriter, family_curves, run_scan


def test_monomial_family_drops_multiples_of_p():
    curves = family_curves('monomial', 2, 1, 1, [3, 4, 5])
    assert [c.to_string() for c in curves] == ['p=2 u=1 s=1 f=x^3', 'p=2 u=1 s=1 f=x^5']


def test_all_family():
    curves = family_curves('all', 2, 1, 1, [3])
    assert len(curves) == 4
    assert all(c.coeffs[0] == 0 and c.coeffs[-1] == 1 for c in curves)
    assert len(family_curves('all', 2, 1, 1, [3], limit=2)) == 2


def test_random_family_is_seeded():
    first = family_curves('random', 3, 1, 1, [2, 4], count=5, seed=7)
    second = family_curves('random', 3, 1, 1, [2, 4], count=5, seed=7)
    assert [c.to_string() for c in first] == [c.to_string() for c in second]
    assert len({c.to_string() for c in first}) == len(first)


def test_unknown_family():
    with pytest.raises(ValueError):
        family_curves('cubic', 2, 1, 1, [3])


def test_writer_skips_duplicates(tmp_path, elliptic):
    path = tmp_path / 'out' / 'scan.jsonl'
    writer = ScanWriter(str(path))
    record = analyze_curve(elliptic)
    assert writer.append(record)
    assert not writer.append(record)
    assert elliptic.to_string() in writer
    assert len(path.read_text().splitlines()) == 1


def test_writer_tolerates_corrupted_lines(tmp_path, elliptic):
    path = tmp_path / 'scan.jsonl'
    good = json.dumps(analyze_curve(elliptic).to_dict())
    path.write_text(good + '\n{"truncated": \n')
    writer = ScanWriter(str(path))
    assert writer.keys == {elliptic.to_string()}
    assert [r.curve for r in writer.records()] == [elliptic.to_string()]


def test_scan_resumes(tmp_path):
    path = str(tmp_path / 'scan.jsonl')
    curves = family_curves('monomial', 2, 1, 1, [3, 5, 7])
    summary = run_scan(curves, path)
    assert (summary.total, summary.written, summary.existing, summary.errors) == (3, 3, 0, 0)
    assert summary.failures == 0

    again = run_scan(curves + [parse_curve('p=2 u=1 s=1 f=x^9')], path)
    assert (again.total, again.written, again.existing) == (4, 1, 3)
    lines = open(path).read().splitlines()
    assert [json.loads(line)['curve'] for line in lines] == [
        'p=2 u=1 s=1 f=x^3', 'p=2 u=1 s=1 f=x^5', 'p=2 u=1 s=1 f=x^7', 'p=2 u=1 s=1 f=x^9']


def test_scan_counts_budget_errors(tmp_path):
    path = str(tmp_path / 'scan.jsonl')
    summary = run_scan(family_curves('monomial', 2, 1, 1, [3, 9]), path, budget=8)
    assert summary.written == 1
    assert summary.errors == 1


def test_parallel_scan_keeps_input_order(tmp_path):
    path = str(tmp_path / 'scan.jsonl')
    curves = family_curves('monomial', 3, 1, 1, [2, 4, 5])
    summary = run_scan(curves, path, workers=2)
    assert summary.written == 3
    written = [json.loads(line)['curve'] for line in open(path).read().splitlines()]
    assert written == [c.to_string() for c in curves]
