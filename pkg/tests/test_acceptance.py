"""Acceptance criteria 1-9. Run with ``pytest -s tests/test_acceptance.py`` to see
one PASS/FAIL line per criterion."""

import math

import numpy as np
import pytest

from oracles import scan_substitute

from nsrps.estimators import entropy_via_nsrps, kl_via_nsrps, returning_time, waiting_time
from nsrps.seqcore import Alphabet, sequence
from nsrps.sources import (
    MarkovModel,
    analytic_conditional_entropy,
    analytic_cross_conditional_entropy,
    analytic_cross_entropy_rate,
    analytic_entropy_rate,
    analytic_kl_rate,
    bernoulli_marginals,
    exact_bernoulli_transform,
    exact_pair_table,
    generate,
)
from nsrps.stats import conditional_entropy, kl_1block
from nsrps.substitution import (
    FixedSchedule,
    SubstitutionRule,
    expand_pair,
    run_paired_nsrps,
    substitute_pair,
)

LN2 = math.log(2)
KL_BERN = 0.143841
CROSS_BERN = 0.836988


def report(number, name, ok, detail=""):
    print(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    assert ok, f"criterion {number} failed: {detail}"


def _digits(text):
    return sequence([int(c) for c in text], 2)


def _transform_01(seq):
    alphabet, alpha = Alphabet.binary().with_pair(0, 1)
    out, step = substitute_pair(seq.with_alphabet(alphabet), SubstitutionRule(0, 1, alpha))
    return out, step


def test_criterion_1_literal_examples():
    results = []
    for text, (a, b) in (("0010001011100100", (0, 1)), ("0001000011", (0, 0))):
        alphabet, alpha = Alphabet.binary().with_pair(a, b)
        out, _ = substitute_pair(_digits(text).with_alphabet(alphabet), SubstitutionRule(a, b, alpha))
        results.append(out)
    first, second = results
    got = ("".join(map(str, first.symbols)), "".join(map(str, second.symbols)))
    report(1, "literal substitution examples", got == ("020022110200", "2012211"), f"{got}")


def test_criterion_2_exact_bernoulli_oracle():
    stationary, P = exact_bernoulli_transform(0.5)
    expected_P = np.array([[0.5, 0, 0.5], [0.25, 0.5, 0.25], [0.25, 0.5, 0.25]])
    table = exact_pair_table(bernoulli_marginals(0.5))
    checks = {
        "stationary": np.abs(stationary - 1 / 3).max() < 1e-15,
        "P": np.abs(P.probs - expected_P).max() < 1e-15,
        "fixed point": np.abs(stationary @ P.probs - stationary).max() < 1e-10,
        "table sum": abs(table.sum() - 1.0) < 1e-12,
        "table(0,1)": table[0, 1] == 0.0,
    }
    report(2, "exact transformed Bernoulli(0.5) chain", all(checks.values()),
           ", ".join(f"{k}={'ok' if v else 'bad'}" for k, v in checks.items()))


def test_criterion_3_entropy_invariance():
    stationary, P = exact_bernoulli_transform(0.5)
    analytic = analytic_entropy_rate(MarkovModel(1, P.probs))
    analytic_ok = abs(analytic - 4 / 3 * LN2) < 1e-10
    values = []
    for seed in range(10):
        out, step = _transform_01(generate(MarkovModel.bernoulli(0.5), 10**6, 300 + seed))
        values.append(conditional_entropy(out, 1) / step.z_step)
    values = np.array(values)
    mean = float(values.mean())
    three_sigma = 3 * float(values.std(ddof=1)) / math.sqrt(len(values))
    empirical_ok = abs(mean - LN2) + three_sigma < 0.005 and np.abs(values - LN2).max() < 0.005
    report(3, "entropy invariance under 01->2", analytic_ok and empirical_ok,
           f"analytic={analytic:.12f} (target {4 / 3 * LN2:.12f}); "
           f"empirical mean={mean:.6f} 3sigma={three_sigma:.2e} max|dev|={np.abs(values - LN2).max():.2e}")


def test_criterion_4_kl_scaling():
    _, P = exact_bernoulli_transform(0.5)
    _, Q = exact_bernoulli_transform(0.25)
    Z = 1 / (1 - 0.5 * 0.5)
    exact = kl_1block(P, Q)
    d = analytic_kl_rate(MarkovModel.bernoulli(0.5), MarkovModel.bernoulli(0.25))
    analytic_ok = abs(exact - Z * d) < 1e-9 and abs(exact - 4 / 3 * KL_BERN) < 1e-6
    mu = generate(MarkovModel.bernoulli(0.5), 10**6, 41)
    nu = generate(MarkovModel.bernoulli(0.25), 10**6, 42)
    series = kl_via_nsrps(mu, nu, 1, strategy=FixedSchedule([(0, 1)]))
    empirical = series.estimate[1]
    empirical_ok = abs(empirical - KL_BERN) < 0.01
    report(4, "KL scaling under 01->2", analytic_ok and empirical_ok,
           f"exact={exact:.12f} Z*d={Z * d:.12f}; empirical kl/z={empirical:.6f} z={series.zbar_mu[1]:.5f}")


@pytest.fixture(scope="module")
def order5_run(order5_models, order5_samples):
    mu_model, nu_model = order5_models
    mu, nu = order5_samples
    paired = kl_via_nsrps(mu, nu, 20, driver="nu")
    nu_alone = entropy_via_nsrps(nu, 20)
    return mu_model, nu_model, paired, nu_alone


def test_criterion_5_order5_convergence(order5_run):
    mu_model, nu_model, paired, nu_alone = order5_run
    targets = {
        "h(mu)": (paired.entropy[-1], analytic_entropy_rate(mu_model)),
        "h(nu)": (nu_alone.final, analytic_entropy_rate(nu_model)),
        "h(mu||nu)": (paired.cross[-1], analytic_cross_entropy_rate(mu_model, nu_model)),
    }
    rel = {k: (est - ref) / ref for k, (est, ref) in targets.items()}
    kl_est, kl_ref = paired.kl[-1], analytic_kl_rate(mu_model, nu_model)
    kl_ok = abs(kl_est - kl_ref) <= max(0.02 * abs(kl_ref), 0.01)
    ok = all(abs(r) < 0.02 for r in rel.values()) and kl_ok and len(paired) == 21
    detail = ", ".join(f"{k} rel={r:+.4f}" for k, r in rel.items())
    report(5, "order-5 estimates at N=20", ok, f"{detail}, kl={kl_est:.5f} vs {kl_ref:.5f}")


def test_criterion_6_contraction_increasing(order5_samples):
    mu, nu = order5_samples
    tr_mu, tr_nu = run_paired_nsrps(mu, nu, 20, driver="nu")
    zm, zn = tr_mu.zbar, tr_nu.zbar
    ok = len(zm) == 20 and all(a < b for a, b in zip(zm, zm[1:])) and all(a < b for a, b in zip(zn, zn[1:]))
    report(6, "zbar_mu and zbar_nu strictly increasing", ok, f"zbar_mu[20]={zm[-1]:.3f} zbar_nu[20]={zn[-1]:.3f}")


def test_criterion_7_identities(order5_samples):
    rng = np.random.default_rng(7)
    w_eq_r = True
    for _ in range(100):
        m = int(rng.integers(2, 5))
        w = sequence(rng.integers(0, m, int(rng.integers(1, 200))), m)
        n = int(rng.integers(1, len(w) + 1))
        w_eq_r &= waiting_time(w, w, n) == returning_time(w, n)
    mu = order5_samples[0][:200_000]
    self_kl = kl_via_nsrps(mu, mu, 20)
    kl_zero = all(x == 0.0 for x in self_kl.estimate)
    round_trip = True
    for _ in range(1000):
        m = int(rng.integers(1, 5))
        seq = sequence(rng.integers(0, m, int(rng.integers(0, 60))), m)
        a, b = (int(x) for x in rng.integers(0, m, 2))
        alphabet, alpha = seq.alphabet.with_pair(a, b)
        rule = SubstitutionRule(a, b, alpha)
        out, _ = substitute_pair(seq.with_alphabet(alphabet), rule)
        round_trip &= out.symbols.tolist() == scan_substitute(seq.symbols.tolist(), a, b, alpha)
        round_trip &= expand_pair(out, rule).symbols.tolist() == seq.symbols.tolist()
    report(7, "identity suite", w_eq_r and kl_zero and round_trip,
           f"W=R {w_eq_r}, self-KL zero {kl_zero}, round trip {round_trip}")


def test_criterion_8_monotonicity_and_gibbs():
    decreasing = cross_ge = saturated = True
    for seed in range(5):
        model = MarkovModel.markov5(seed)
        hs = [analytic_conditional_entropy(model, n) for n in range(1, 6)]
        decreasing &= all(a >= b - 1e-10 for a, b in zip(hs, hs[1:]))
    pairs = [(MarkovModel.markov5(s), MarkovModel.random(k, 2, 50 + s)) for s, k in enumerate([1, 2, 3, 5])]
    pairs.append((MarkovModel.bernoulli(0.5), MarkovModel.bernoulli(0.25)))
    for mu, nu in pairs:
        cross_ge &= analytic_cross_entropy_rate(mu, nu) >= analytic_entropy_rate(mu) - 1e-10
        k = nu.order
        hk = analytic_cross_conditional_entropy(mu, nu, k)
        saturated &= all(abs(analytic_cross_conditional_entropy(mu, nu, l) - hk) < 1e-10 for l in range(k, k + 4))
    report(8, "monotonicity and Gibbs suite", decreasing and cross_ge and saturated,
           f"h_l decreasing {decreasing}, cross>=entropy {cross_ge}, saturation {saturated}")


@pytest.mark.slow
def test_criterion_9_waiting_time_trend():
    z = generate(MarkovModel.bernoulli(0.25), 10**7, 900)
    prefixes = [generate(MarkovModel.bernoulli(0.5), 20, 1000 + i) for i in range(50)]
    medians, errors = {}, {}
    for n in (10, 15, 20):
        rates = []
        for w in prefixes:
            t = waiting_time(w, z, n)
            rates.append(math.inf if t is None else math.log(t) / n)
        medians[n] = float(np.median(rates))
        errors[n] = float(np.median([abs(r - CROSS_BERN) for r in rates]))
    within = abs(medians[20] - CROSS_BERN) <= 0.25 * CROSS_BERN
    shrinking = errors[10] > errors[15] > errors[20]
    report(9, "waiting-time trend", within and shrinking,
           "median rate " + ", ".join(f"n={n}:{v:.4f}" for n, v in medians.items())
           + "; median |error| " + ", ".join(f"n={n}:{v:.4f}" for n, v in errors.items()))
