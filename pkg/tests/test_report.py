from gmpy2 import mpq

from triquad.report import CSV_FIELDS, csv_row, render, render_csv, to_json
from triquad.theorems import analyze_pair


def test_big_values_become_strings():
    text = to_json({'small': 7, 'big': 2 ** 80, 'half': mpq(1, 2), 'list': [mpq(4)]})
    assert '"big": "1208925819614629174706176"' in text
    assert '"half": "1/2"' in text
    assert '"small": 7' in text
    assert '"4"' in text


def test_csv_header():
    assert render_csv([]) == ','.join(CSV_FIELDS) + '\n'


def test_render_formats():
    report = analyze_pair(5, 13)
    row = csv_row(report)
    assert row['case'] == report.case.label
    assert row['case'].startswith('MT1A.')
    assert row['resolved_by_search'] in ('true', 'false')
    assert render([report], 'csv').splitlines()[1].startswith('5,13,5,5,')
    assert 'q(K)' in render([report], 'text')
    assert render([report], 'json').startswith('{')
