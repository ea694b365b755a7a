"""
Independent checks of everything the case analysis produces.

verify_index recomputes q(K) as a ratio of regulators, saturation_index
recomputes the unit group by blind 2-saturation, and the sweeps re-check the
lemma-level facts the theorems rest on over ranges of primes.
"""

import json
import logging
import os
import sys
from typing import List

import flint
import pandas as pd
from sympy import primerange
from tqdm import tqdm

from triquad.arith import is_squarefree, rational_sqrt
from triquad.config import DEFAULT_CONFIG
from triquad.errors import TriquadError, InconclusiveError, InconsistencyError
from triquad.mfield import (
    GALOIS_GROUP, MQElement, algebraic_norm, embed_real, embeddings, mul, working_precision,
)
from triquad.quadratic import (
    class_group_real, field_discriminant, fundamental_unit, h2_lemma, lemma10_norm,
)
from triquad.report import write_csv
from triquad.theorems import PairContext, analyze_pair, lemma7_params, sqrt_2p1p2_form
from triquad.units import E, QUADRATIC_BASE, exponent_index, same_group, saturate

logger = logging.getLogger(__name__)

# (p1, p2) -> ((n1, n2, n3, n4), q(K))
TABLE1 = {
    (89, 73): ((1, 1, 1, 1), 32),
    (193, 97): ((1, 1, 1, 1), 32),
    (41, 13): ((-1, -1, -1, -1), 16),
    (41, 29): ((-1, -1, -1, -1), 32),
    (457, 41): ((-1, -1, -1, -1), 16),
    (457, 113): ((-1, -1, -1, -1), 32),
    (97, 17): ((1, 1, -1, 1), 32),
    (281, 17): ((1, 1, -1, 1), 16),
    (41, 73): ((-1, 1, 1, 1), 32),
    (41, 337): ((-1, 1, 1, 1), 16),
}

RESULT_FIELDS = ['suite', 'check', 'subject', 'case', 'expected', 'actual', 'status', 'detail']


def regulator(gens: List[MQElement], guard: int):
    """|det| of log|sigma(g_j)| over the seven non-identity embeddings."""
    rows = [[None] * len(gens) for _ in GALOIS_GROUP[1:]]
    for j, g in enumerate(gens):
        precision = working_precision(g, guard)
        for i, sigma in enumerate(GALOIS_GROUP[1:]):
            with flint.ctx.workprec(precision):
                rows[i][j] = abs(embed_real(g, sigma, precision)).log()
    with flint.ctx.workprec(guard):
        return abs(flint.arb_mat(rows).det())


def verify_index(words, pc: PairContext, config=None) -> int:
    """Regulator ratio of the quadratic units over the claimed generators, as a certified integer."""
    config = config or pc.config
    base = [pc.realizer.realize(w) for w in QUADRATIC_BASE]
    claimed = [pc.realizer.realize(w) for w in words]
    for guard in config.precision_ladder():
        ratio = regulator(base, guard) / regulator(claimed, guard)
        if ratio.rad() < 0.125:
            n = ratio.unique_fmpz()
            if n is not None:
                n = int(n)
                if n <= 0 or n & (n - 1):
                    raise InconsistencyError(f"Regulator index {n} for ({pc.p1}, {pc.p2}) is not a power of 2")
                return n
        logger.debug(f"Regulator ratio {ratio} not certified with {guard} guard bits")
    raise InconclusiveError(f"Regulator index for ({pc.p1}, {pc.p2}) not certified")


def check_unit(element: MQElement, config=None) -> bool:
    """Exact norm +-1, and the product of the embeddings encloses it."""
    config = config or DEFAULT_CONFIG
    norm = algebraic_norm(element)
    if abs(norm) != 1:
        return False
    precision = working_precision(element, config.precision_start)
    with flint.ctx.workprec(precision):
        product = flint.arb(1)
        for value in embeddings(element, precision):
            product = product * value
    return bool(product.overlaps(flint.arb(int(norm))))


def saturation_index(pc: PairContext, config=None):
    """q(K) by blind 2-saturation of the quadratic units, with the saturated generators."""
    result = saturate(pc.realizer, list(QUADRATIC_BASE), config=config)
    index = exponent_index(result.words)
    logger.info(f"Saturation of ({pc.p1}, {pc.p2}): {result.rounds} roots, index {index}")
    return int(index), result.words


class VerificationSystem:
    def __init__(self, config=None, cache=None, results_dir=None, progress=True):
        self.config = config or DEFAULT_CONFIG
        self.cache = cache
        self.results_dir = results_dir or self.config.results_dir
        self.progress = progress and sys.stderr.isatty()
        self.results = []

    def _record(self, suite, check, subject, ok, expected='', actual='', case='', detail=''):
        row = {'suite': suite, 'check': check, 'subject': str(subject), 'case': case,
               'expected': str(expected), 'actual': str(actual),
               'status': 'pass' if ok else 'fail', 'detail': detail}
        if not ok:
            logger.warning(f"{suite}/{check} failed for {subject}: expected {expected}, got {actual} {detail}")
        self.results.append(row)
        return row

    def _iter(self, items, desc):
        return tqdm(items, desc=desc, disable=not self.progress)

    def run_table1(self):
        for (p1, p2), (signature, qK) in self._iter(list(TABLE1.items()), 'table1'):
            try:
                report = analyze_pair(p1, p2, self.config, self.cache)
            except TriquadError as e:
                self._record('table1', 'analyze', (p1, p2), False, detail=f"{type(e).__name__}: {e}")
                continue
            case = report.case.full_label
            self._record('table1', 'signature', (p1, p2), report.signature.as_tuple() == signature,
                         signature, report.signature.as_tuple(), case)
            self._record('table1', 'qK', (p1, p2), report.qK == qK, qK, report.qK, case,
                         detail='' if report.qK == qK else json.dumps(report.to_dict(), default=str))
            try:
                saturated_q, _ = saturation_index(report.pair_context, self.config)
            except TriquadError as e:
                self._record('table1', 'saturation', (p1, p2), False, qK, case=case,
                             detail=f"{type(e).__name__}: {e}")
                continue
            self._record('table1', 'saturation', (p1, p2), saturated_q == qK, qK, saturated_q, case)
        return self.results

    def verify_pair(self, p1, p2):
        """Index suite for one pair: regulator ratio, saturation and per-generator checks."""
        subject = (p1, p2)
        try:
            report = analyze_pair(p1, p2, self.config, self.cache)
            pc = report.pair_context
            case = report.case.full_label
            regulator_q = verify_index(report.fsu, pc)
            self._record('index', 'regulator', subject, regulator_q == report.qK, report.qK, regulator_q, case)
            saturated_q, saturated = saturation_index(pc, self.config)
            self._record('index', 'saturation', subject, saturated_q == report.qK, report.qK, saturated_q, case)
            for word in report.fsu:
                element = pc.realizer.realize(word)
                self._record('index', 'unit', f"{subject} {word}", check_unit(element, self.config), case=case)
                if not word.is_integral():
                    target = pc.realizer.realize(word.power(2))
                    square = mul(element, element) in (target, -target)
                    self._record('index', 'squaring', f"{subject} {word}", square, case=case)
            self._record('index', 'same_group', subject, same_group(report.fsu, saturated), case=case)
            for name, ok in report.checks.items():
                self._record('index', name, subject, ok, case=case)
        except TriquadError as e:
            self._record('index', 'analyze', subject, False, detail=f"{type(e).__name__}: {e}")

    def run_index(self, bound):
        pairs = list(prime_pairs(bound)) + [p for p in TABLE1 if max(p) > bound]
        for p1, p2 in self._iter(pairs, 'index'):
            self.verify_pair(p1, p2)
        return self.results

    def sweep_properties(self, bound, pair_bound=None):
        """Lemma-level properties over primes / discriminants below bound; pairs below pair_bound."""
        pair_bound = pair_bound or min(bound, 300)
        primes = [p for p in primerange(5, bound) if p % 4 == 1]
        for p in self._iter(primes, 'norms'):
            self._sweep_prime(p)
        for d in self._iter(range(2, bound + 1), 'lemma8'):
            if is_squarefree(d):
                self._sweep_lemma8(d)
        pairs = list(prime_pairs(pair_bound)) + [p for p in TABLE1 if max(p) > pair_bound]
        for p1, p2 in self._iter(pairs, 'pairs'):
            self._sweep_pair(p1, p2)
        covered = sum(1 for r in self.results if r['suite'] == 'sweep' and r['check'] == 'final_corollary')
        if not covered:
            logger.info(f"No pair up to {pair_bound} or in Table 1 meets the final corollary hypothesis")
        self._record('sweep', 'final_corollary_pairs', pair_bound, True, actual=covered)
        return self.results

    def _sweep_prime(self, p):
        self._guard('lemma10', p, lambda: self._norm_rule(p))
        self._guard('lemma10', 2 * p, lambda: self._norm_rule(2 * p))
        self._guard('lemma5', p, lambda: self._h2_rule(p))
        self._guard('lemma5', 2 * p, lambda: self._h2_rule(2 * p))
        if p % 8 == 1 and fundamental_unit(2 * p, self.cache).norm == 1:
            self._guard('lemma7', p, lambda: self._lemma7(p))

    def _guard(self, check, subject, func):
        try:
            func()
        except TriquadError as e:
            self._record('sweep', check, subject, False, detail=f"{type(e).__name__}: {e}")

    def _norm_rule(self, d):
        predicted = lemma10_norm(d)
        if predicted is not None:
            actual = fundamental_unit(d, self.cache).norm
            self._record('sweep', 'lemma10', d, actual == predicted, predicted, actual)

    def _h2_rule(self, d):
        rule = h2_lemma(d)
        if rule is None or field_discriminant(d) > self.config.oracle_bound:
            return
        oracle = class_group_real(d, self.config.oracle_bound)[1]
        self._record('sweep', 'lemma5', d, oracle == rule.value, rule.value, oracle)

    def _lemma7(self, p):
        params = lemma7_params(p, self.cache)
        unit = fundamental_unit(2 * p, self.cache)
        a1, a2 = params.alpha1, params.alpha2
        ok = (a1 * a2 == unit.b and a1 ** 2 + 2 * p * a2 ** 2 == 2 * unit.a
              and a1 ** 2 - 2 * p * a2 ** 2 == 2 * (-1) ** params.u)
        self._record('sweep', 'lemma7', p, ok, actual=params.to_dict())

    def _sweep_lemma8(self, d):
        unit = fundamental_unit(d, self.cache)
        if unit.norm != 1:
            return
        squares = [m for m in (2, 2 * d) for s in (1, -1)
                   if m * (unit.x + s) > 0 and rational_sqrt(m * (unit.x + s)) is not None]
        self._record('sweep', 'lemma8', d, not squares, actual=squares)

    def _sweep_pair(self, p1, p2):
        subject = (p1, p2)
        try:
            pc = PairContext(p1, p2, self.config, self.cache)
            n1, n2, n3, n4 = pc.signature.as_tuple()
            for d in (p1 * p2, 2 * p1 * p2):
                self._norm_rule(d)
                self._h2_rule(d)
            if n4 == -1:
                found = pc.realizer.try_realize(E('2', 'p1', 'p2', '2p1p2').sqrt()) is not None
                self._record('sweep', 'lemma9_1', subject, found)
            if n3 == -1:
                found = pc.realizer.try_realize(E('p1', 'p2', 'p1p2').sqrt()) is not None
                self._record('sweep', 'lemma9_2', subject, found)
            if n4 == 1:
                form = sqrt_2p1p2_form(pc)
                self._record('sweep', 'twosquare', subject, True, actual=form.tag)
            report = analyze_pair(p1, p2, self.config, self.cache)
            for name, ok in report.checks.items():
                self._record('sweep', name, subject, ok, case=report.case.full_label)
        except TriquadError as e:
            self._record('sweep', 'pair', subject, False, detail=f"{type(e).__name__}: {e}")

    @property
    def failures(self):
        return [r for r in self.results if r['status'] != 'pass']

    def save(self, results_dir=None):
        """Write per-check rows and a pandas summary; returns the summary dict."""
        results_dir = results_dir or self.results_dir
        os.makedirs(results_dir, exist_ok=True)
        csv_path = os.path.join(results_dir, 'verification_results.csv')
        write_csv(self.results, csv_path, RESULT_FIELDS)
        df = pd.DataFrame(self.results, columns=RESULT_FIELDS)
        counts = df.groupby(['suite', 'check', 'status']).size().unstack(fill_value=0) if len(df) else pd.DataFrame()
        summary = {
            'total': int(len(df)),
            'failed': int((df['status'] == 'fail').sum()) if len(df) else 0,
            'by_check': {f"{suite}/{check}": {k: int(v) for k, v in row.items()}
                         for (suite, check), row in counts.iterrows()},
            'results_csv': csv_path,
        }
        summary_path = os.path.join(results_dir, 'verification_summary.json')
        with open(summary_path, 'w') as f:
            json.dump(summary, f, sort_keys=True, indent=2)
        logger.info(f"Verification summary saved to {summary_path}")
        summary['summary_json'] = summary_path
        return summary


def prime_pairs(bound):
    """Pairs p1 < p2 of primes = 1 (mod 4) up to bound, in lexicographic order."""
    primes = [p for p in primerange(5, bound + 1) if p % 4 == 1]
    for i, p1 in enumerate(primes):
        for p2 in primes[i + 1:]:
            yield p1, p2
