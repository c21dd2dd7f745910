"""Acceptance criteria, one test per criterion, each printing a verdict line.

Heavy artifacts (the |M| <= 499 sweeps, the bulk coefficient tables) are
session fixtures so later criteria reuse them.  Tolerances are fixed
here, not configurable: they are the contract.
"""

import copy
import itertools
import json
import math
import random
from fractions import Fraction

import mpmath as mp
import pytest

from twistval.analytic import (
    gauss_sum,
    l_value,
    period_integral,
    periods,
    twisted_l_value,
)
from twistval.cli_io import cli_main, make_context
from twistval.prime_sets import sieve_matched_primes
from twistval.rationalize import ord2
from twistval import verify as V

IDENTITY_M = (3, 5, 7, 13, 15, 21, 35)
IDENTITY_TOL = 1e-20
SWEEP_BOUND = 499
SWEEP_CURVES = ("11a1", "14a1", "34a1")
INTEGRALITY_CURVES = ("11a1", "14a1")  # both have negative discriminant
INTEGRALITY_PRIME_MAX = 60
INTEGRALITY_RESIDUAL_TOL = 1e-6
EXACT_SAMPLES = 10
EXACT_PRIME_BOUND = 200
ZERO_THRESHOLD = 1e-15
STABILITY_TOL = 1e-25
ROUTE_TOL = 1e-20
ROUTE_PAIRS = 100


@pytest.fixture(scope="session")
def sweep_reports(table, config):
    out = {}
    for label in SWEEP_CURVES:
        rec = table[label]
        ctx = make_context(rec, config)
        out[label] = V.verify_lower_bound(rec, ctx, SWEEP_BOUND, jobs=2)
    return out


def test_criterion_1_identity_suite(table, config):
    total = 0
    for label in INTEGRALITY_CURVES:
        rec = table[label]
        ctx = make_context(rec, config)
        ms = [m for m in IDENTITY_M if math.gcd(m, rec.conductor) == 1]
        checks = V.verify_identity_suite(rec, ctx, ms, tol=IDENTITY_TOL)
        assert checks and all(c.ok for c in checks)
        total += len(checks)
    print(f"\nACCEPTANCE 1 (identity suite): PASS - {total} dual-route residuals "
          f"< {IDENTITY_TOL} on {INTEGRALITY_CURVES}")


def test_criterion_2_integrality(table, config):
    worst = 0.0
    count = 0
    for label in INTEGRALITY_CURVES:
        rec = table[label]
        assert rec.model.disc < 0  # parity clause applies on both fixtures
        ctx = make_context(rec, config)
        reports = V.integrality_sweep(rec, ctx, prime_max=INTEGRALITY_PRIME_MAX,
                                      r_max=3)
        for rep in reports:
            assert rep.divisibility_ok, (label, rep.m)
            assert max(rep.residual, rep.residual_prime) < INTEGRALITY_RESIDUAL_TOL
            assert rep.parity_equal, (label, rep.m)
        worst = max(worst, max(max(r.residual, r.residual_prime) for r in reports))
        count += len(reports)
    print(f"\nACCEPTANCE 2 (integrality invariants): PASS - {count} values of m, "
          f"worst residual {worst:.2e}, divisibility and parity exact")


def test_criterion_3_lower_bound_sweep(sweep_reports):
    total = vacuous = 0
    for label, reports in sweep_reports.items():
        fails = [r for r in reports if r.verdict == "FAIL"
                 or r.verdict.startswith("ERROR")]
        assert not fails, (label, fails)
        total += len(reports)
        vacuous += sum(1 for r in reports if r.verdict == "VACUOUS")
    print(f"\nACCEPTANCE 3 (lower-bound sweep |M| <= {SWEEP_BOUND}): PASS - "
          f"{total} admissible twists on {SWEEP_CURVES}, 0 FAIL "
          f"({vacuous} vacuous)")


def test_criterion_4_exact_valuation(table, config):
    from twistval.analytic import LSeriesContext, Precision

    eligible = []
    for rec in table.values():
        if not rec.optimal:
            continue
        ctx = make_context(rec, config)
        if V.check_hypotheses(rec, ctx, EXACT_PRIME_BOUND).exact_valuation_eligible:
            eligible.append(rec.label)
    assert eligible, "at least one bundled curve must qualify"
    checked = 0
    for label in eligible:
        rec = table[label]
        ctx = make_context(rec, config)
        # sample twists reach |M| ~ 1.7e4; pinning small integers there
        # only needs a float-engine budget, the ledger keeps full precision
        fast = LSeriesContext(rec.model, rec.conductor, Precision(64, 1e-12),
                              curve_key=rec.label, cache_dir=config.cache_dir)
        for r in (1, 2, 3):
            ledger, reports = V.verify_exact_valuation(
                rec, ctx, r, sample_count=EXACT_SAMPLES,
                prime_bound=EXACT_PRIME_BOUND, sample_ctx=fast)
            assert len(reports) == EXACT_SAMPLES
            assert all(rep.verdict == "PASS" for rep in reports)
            assert all(rep.ord2 == r - 1 for rep in reports)
            checked += len(reports)
    print(f"\nACCEPTANCE 4 (exact valuation): PASS - {len(eligible)} eligible "
          f"curves {eligible}, {checked} twists with ord2 = r - 1 exactly")


def test_criterion_5_counterexamples(table, config):
    reps = V.reproduce_counterexamples(table, lambda r: make_context(r, config))
    for rep in reps:
        assert rep.is_zero and rep.l_abs < ZERO_THRESHOLD
        assert rep.ok
    print("\nACCEPTANCE 5 (named vanishing twists): PASS - "
          + ", ".join(f"L({r.label}^({r.m_signed}),1) = 0" for r in reps))


def test_criterion_6_local_degree_equivalence(table):
    branch_counts = {}
    for label in ("11a1", "34a1", "14a1"):
        checks = V.lemma_local_degree_sweep(table[label], count=200)
        assert len(checks) == 200
        assert all(c.agree for c in checks)
        branch_counts[label] = checks[0].branch
    assert set(branch_counts.values()) == {1, 2}
    print("\nACCEPTANCE 6 (local 2-torsion field degrees): PASS - 200 primes "
          "per curve on 11a1/34a1/14a1, 100% agreement on both branches")


def test_criterion_7_density_corollaries(table, config):
    rec = table["11a1"]
    res = sieve_matched_primes(rec.model, rec.conductor, 10 ** 5,
                               cache_dir=config.cache_dir, curve_key="11a1",
                               jobs=2)
    assert res.report.predicted_positive and res.report.matched_count > 0

    sq = table["192sq"]
    res_sq = sieve_matched_primes(sq.model, sq.conductor, 10 ** 5,
                                  cache_dir=config.cache_dir, curve_key="192sq",
                                  jobs=2)
    assert res_sq.report.subfamily_empty_expected
    assert res_sq.report.four_torsion_subfamily_count == 0
    print(f"\nACCEPTANCE 7 (density corollaries): PASS - 11a1 has "
          f"{res.report.matched_count} matched primes below 1e5 "
          f"(fraction {float(res.report.fraction):.4f}); 192sq subfamily "
          f"empty below 1e5 as predicted")


def test_criterion_8_numerics_regression(table, config, contexts, cache_dir):
    # stability under +64 mantissa bits
    base = contexts("11a1")
    high = contexts("11a1", bits=256, eps=1e-40)
    pd_b, pd_h = periods(base.model, base.prec), periods(high.model, high.prec)
    checks = [
        abs(pd_b.omega_plus - pd_h.omega_plus),
        abs(pd_b.omega_minus - pd_h.omega_minus),
        abs(l_value(base) - l_value(high)),
        abs(twisted_l_value(base, 13) - twisted_l_value(high, 13)),
        abs(period_integral(base, 1, 7) - period_integral(high, 1, 7)),
        abs(gauss_sum(15, base.prec) - gauss_sum(15, high.prec)),
    ]
    assert all(c < STABILITY_TOL for c in checks)

    # Hasse bound over every cached good a_p
    from twistval.finite_field import load_ap_cache

    values = load_ap_cache(cache_dir, "11a1")
    assert len(values) > 10 ** 4
    for p, a in values.items():
        if base.model.disc % p:
            assert a * a <= 4 * p

    # twisted-value route agreement on 100 (curve, M) pairs
    rng = random.Random(17)
    labels = ("11a1", "14a1", "34a1", "19a1", "26a1")
    pairs = []
    for label in labels:
        rec = table[label]
        ms = [m for m in range(-150, 151)
              if m % 4 == 1 and m not in (0, 1)
              and math.gcd(m, rec.conductor) == 1 and _squarefree(abs(m))]
        pairs += [(label, m) for m in rng.sample(ms, ROUTE_PAIRS // len(labels))]
    for label, m_signed in pairs:
        twisted_l_value(contexts(label), m_signed, check_route=True,
                        route_tol=ROUTE_TOL)
    print(f"\nACCEPTANCE 8 (numerics regression): PASS - 6 outputs stable to "
          f"< {STABILITY_TOL} under +64 bits; Hasse bound over "
          f"{len(values)} cached a_p; {len(pairs)} twisted dual routes "
          f"agree to {ROUTE_TOL}")


def _squarefree(n):
    return all(n % (d * d) for d in range(2, int(n ** 0.5) + 1))


def test_criterion_9_route_consistency(sweep_reports):
    nonzero = 0
    for label, reports in sweep_reports.items():
        for rep in reports:
            if rep.verdict == "PASS":  # nonzero value
                nonzero += 1
                # ord2 equality of the two normalizations was enforced in
                # algebraic_l_value; re-derive it from the report fields
                assert ord2(Fraction(rep.symbol_integer)) == rep.ord2
                assert isinstance(rep.period_ratio_log2, int)
    assert nonzero > 100
    print(f"\nACCEPTANCE 9 (valuation route consistency): PASS - {nonzero} "
          f"nonzero twists, twisted-period vs symbol-sum ord2 agree on all; "
          f"every sqrt(|M|)-scaled period ratio an exact power of 2")


def test_criterion_10_determinism(tmp_path, cache_dir):
    docs = []
    for jobs in (1, 4, 8):
        path = str(tmp_path / f"det{jobs}.json")
        rc = cli_main(["--curve", "11a1", "--cache", cache_dir,
                       "--max-m", "160", "--jobs", str(jobs),
                       "--out", path, "verify", "lower-bound"])
        assert rc == 0
        doc = json.load(open(path))
        for row in doc["results"]:
            row.pop("seconds", None)
        doc["config"].pop("jobs")
        docs.append(doc)
    assert docs[0] == docs[1] == docs[2]
    print("\nACCEPTANCE 10 (determinism): PASS - identical reports with "
          "1, 4 and 8 workers (timing stripped)")
