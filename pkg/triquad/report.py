import csv
import io
import json
import logging

from gmpy2 import mpq, mpz

from triquad.arith import format_rational
from triquad.errors import PreconditionError

logger = logging.getLogger(__name__)

CSV_FIELDS = ['p1', 'p2', 'p1mod8', 'p2mod8', 'n1', 'n2', 'n3', 'n4', 'case',
              'qK', 'h2K', 'qL', 'h2L', 'resolved_by_search']

INT64_LIMIT = 2 ** 63


def _jsonable(value):
    """Plain JSON values; integers beyond 64 bits and rationals become strings."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (str, float)):
        return value
    if isinstance(value, mpq):
        return str(value.numerator) if value.denominator == 1 else format_rational(value)
    if isinstance(value, (int, mpz)):
        value = int(value)
        return value if abs(value) < INT64_LIMIT else str(value)
    return str(value)


def to_json(data) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=2)


def to_json_line(data) -> str:
    return json.dumps(_jsonable(data), sort_keys=True)


def csv_row(report) -> dict:
    p1, p2 = report.pair
    n1, n2, n3, n4 = report.signature.as_tuple()
    return {
        'p1': p1, 'p2': p2, 'p1mod8': p1 % 8, 'p2mod8': p2 % 8,
        'n1': n1, 'n2': n2, 'n3': n3, 'n4': n4,
        'case': report.case.label,
        'qK': report.qK,
        'h2K': '' if report.h2K is None else report.h2K,
        'qL': report.qL,
        'h2L': '' if report.h2L is None else report.h2L,
        'resolved_by_search': str(report.resolved_by_search).lower(),
    }


def render_csv(rows, header=True) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator='\n')
    if header:
        writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def _value(v):
    return 'unknown' if v is None else str(v)


def render_text(report) -> str:
    p1, p2 = report.pair
    case = report.case
    lines = [
        f"K = Q(sqrt2, sqrt{p1}, sqrt{p2})   p1 = {p1 % 8}, p2 = {p2 % 8} (mod 8)",
        f"norm signature (n1,n2,n3,n4) = ({report.signature})",
        f"case {case.full_label}" + (f" with p1 = {report.canonical[0]}, p2 = {report.canonical[1]}"
                                     if case.swapped else '')
        + (" [hypothesis relaxed]" if case.relaxed else ''),
        "fundamental system of units:",
    ]
    lines += [f"  {word}" for word in report.fsu]
    lines += [
        f"q(K)  = {report.qK}",
        f"h2(K) = {_value(report.h2K)}" + (f"   = {report.h2K_trace}" if report.h2K_trace else ''),
        f"q(L)  = {report.qL}",
        f"h2(L) = {_value(report.h2L)}",
    ]
    if report.resolution is not None:
        res = report.resolution
        outcome = f"found {res.word}" if res.found else f"none, using {res.fallback}"
        lines.append(f"square search ({len(res.candidates)} candidates): {outcome}")
    for note in report.notes:
        lines.append(f"note: {note}")
    failed = sorted(name for name, ok in report.checks.items() if not ok)
    lines.append(f"checks: {len(report.checks) - len(failed)}/{len(report.checks)} passed"
                 + (f" (failed: {', '.join(failed)})" if failed else ''))
    return '\n'.join(lines) + '\n'


def render(reports, fmt='json') -> str:
    if fmt == 'json':
        data = [r.to_dict() for r in reports]
        return to_json(data[0] if len(data) == 1 else data) + '\n'
    if fmt == 'csv':
        return render_csv(csv_row(r) for r in reports)
    if fmt == 'text':
        return '\n'.join(render_text(r) for r in reports)
    raise PreconditionError(f"Unknown output format '{fmt}'")


def write_csv(rows, path, fieldnames):
    with open(path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames, extrasaction='ignore')
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.info(f"Results saved to {path}")
