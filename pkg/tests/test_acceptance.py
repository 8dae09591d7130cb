"""Acceptance suite.

Each test implements one numbered acceptance criterion at its stated
tolerance and prints a single pass/fail line (run with ``pytest -s`` to see
the lines as they complete).
"""

import contextlib
import math
import time

import numpy as np
import pytest
from scipy import stats

from relbelief import (
    Discretization,
    FiniteModelSpec,
    FiniteProbSpace,
    LocationNormalSpec,
    McConfig,
    bias_against_e,
    bias_against_h,
    bias_in_favor_e,
    bias_in_favor_h,
    conflict_check,
    estimate,
    make_finite,
    make_location_normal,
    rb_event,
    rb_profile,
    reparam_profile,
    strength,
)
from relbelief.checking import locnormal_tail_prob
from relbelief.cli import main
from relbelief.rng import substream

from oracle import FiniteOracle, random_finite_spec

NS = (5, 10, 20, 50, 100)
TABLE1 = {(1.0, 1.0): (0.095, 0.065, 0.044, 0.026, 0.018),
          (0.0, 1.0): (0.143, 0.104, 0.074, 0.045, 0.031)}
TABLE2 = {(1.0, 1.0): (0.871, 0.747, 0.519, 0.125, 0.006),
          (0.0, 1.0): (0.631, 0.516, 0.327, 0.062, 0.002)}
TABLE3 = {1.0: (0.107, 0.075, 0.051, 0.031, 0.021),
          0.25: (0.193, 0.146, 0.107, 0.067, 0.046)}
TABLE5 = {1.0: (0.451, 0.185, 0.025, 0.000, 0.000),
          0.5: (0.798, 0.690, 0.486, 0.131, 0.009)}

ACCEPTANCE_SEED = 20190531


@contextlib.contextmanager
def criterion(num, name, budget_s=None):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {num:2d} ({name}): FAIL")
        raise
    elapsed = time.perf_counter() - start
    if budget_s is not None:
        assert elapsed < budget_s, f"criterion {num} exceeded its {budget_s}s budget: {elapsed:.2f}s"
    print(f"criterion {num:2d} ({name}): PASS [{elapsed:.2f}s]")


def locnormal(n, mu_star, tau_sq):
    return make_location_normal(
        LocationNormalSpec(n=n, sigma0_sq=1.0, mu_star=mu_star, tau_star_sq=tau_sq)
    )


def test_criterion_01_bias_against_table():
    with criterion(1, "hypothesis bias against reference values", budget_s=1.0):
        for prior, expected in TABLE1.items():
            for n, want in zip(NS, expected):
                got = bias_against_h(locnormal(n, *prior), 0.0)
                assert got.method == "Exact"
                assert abs(got.value - want) <= 0.002, (prior, n, got.value, want)


def test_criterion_02_bias_in_favor_table():
    with criterion(2, "hypothesis bias in favor reference values", budget_s=1.0):
        for prior, expected in TABLE2.items():
            for n, want in zip(NS, expected):
                got = bias_in_favor_h(locnormal(n, *prior), 0.0, 0.5)
                assert got.method == "Exact"
                assert abs(got.value - want) <= 0.002, (prior, n, got.value, want)


def test_criterion_03_average_bias_against_table():
    with criterion(3, "average estimation bias against reference values", budget_s=5.0):
        for tau_sq, expected in TABLE3.items():
            for n, want in zip(NS, expected):
                avg, _ = bias_against_e(locnormal(n, 0.0, tau_sq))
                assert avg.method == "Exact"
                assert abs(avg.value - want) <= 0.003, (tau_sq, n, avg.value, want)
        coverage = 1.0 - bias_against_e(locnormal(20, 0.0, 1.0))[0].value
        assert abs(coverage - 0.949) <= 0.003


def test_criterion_04_average_bias_in_favor_table():
    with criterion(4, "average estimation bias in favor reference values", budget_s=5.0):
        for delta, expected in TABLE5.items():
            for n, want in zip(NS, expected):
                got = bias_in_favor_e(locnormal(n, 0.0, 1.0), delta)
                assert got.method == "Exact"
                assert abs(got.value - want) <= 0.003, (delta, n, got.value, want)
        assert bias_in_favor_e(locnormal(100, 0.0, 1.0), 1.0).value < 0.0005


def test_criterion_05_monte_carlo_cross_validation():
    with criterion(5, "Monte Carlo reproduces the exact path within 3 SE", budget_s=60.0):
        mc = McConfig(n_sim=100_000, seed=ACCEPTANCE_SEED)
        for prior in TABLE1:
            for n in NS:
                bundle = locnormal(n, *prior)
                exact = bias_against_h(bundle, 0.0).value
                est = bias_against_h(bundle, 0.0, mc=mc, method="mc")
                assert abs(est.value - exact) <= 3.0 * max(est.se, 1e-12), (
                    "against", prior, n, est.value, exact, est.se)
                exact_f = bias_in_favor_h(bundle, 0.0, 0.5).value
                est_f = bias_in_favor_h(bundle, 0.0, 0.5, mc=mc, method="mc")
                assert abs(est_f.value - exact_f) <= 3.0 * max(est_f.se, 1e-12), (
                    "favor", prior, n, est_f.value, exact_f, est_f.se)


def test_criterion_06_strength_approaches_p_value():
    with criterion(6, "strength matches the two-sided tail probability in the diffuse limit"):
        spec = LocationNormalSpec(n=100, sigma0_sq=1.0, mu_star=0.0, tau_star_sq=1e4)
        bundle = make_location_normal(spec)
        disc = Discretization(delta=0.002, anchor=0.0)
        for z in (0.5, 1.0, 1.96, 3.0):
            xbar = z / math.sqrt(spec.n)
            profile = rb_profile(bundle, xbar, disc)
            s = strength(profile, 0.0)
            p_value = 2.0 * (1.0 - stats.norm.cdf(z))
            assert abs(s - p_value) <= 0.005, (z, s, p_value)


def test_criterion_07_prosecutor_exactness():
    with criterion(7, "prosecutor example is exact"):
        n_pop, m = 1000, 10
        spec = FiniteModelSpec(
            theta_labels=["guilty", "not_guilty"],
            prior=[1 / n_pop, (n_pop - 1) / n_pop],
            likelihood=[[1.0, 0.0], [(m - 1) / (n_pop - 1), (n_pop - m) / (n_pop - 1)]],
            x_labels=["trait", "no_trait"],
        )
        profile = rb_profile(make_finite(spec), "trait")
        rb_guilty = float(profile.rb[list(profile.labels).index("guilty")])
        assert abs(rb_guilty - 100.0) <= 1e-12 * 100.0
        report = estimate(profile)
        assert report.psi_hat == "guilty"
        assert abs(report.pl_posterior_content - 0.1) <= 1e-12
        # the event-level computation gives the identical ratio
        labels = [f"p{i}" for i in range(n_pop)]
        space = FiniteProbSpace(labels, [1 / n_pop] * n_pop)
        rb_ev = rb_event(space, space.event(["p0"]), space.event(labels[:m]))
        assert abs(rb_ev - 100.0) <= 1e-12 * 100.0


def test_criterion_08_oracle_equivalence():
    with criterion(8, "library equals exhaustive enumeration on 50 random finite models"):
        rng = np.random.default_rng(ACCEPTANCE_SEED)
        for _ in range(50):
            spec = random_finite_spec(rng, max_theta=6, max_x=8)
            bundle = make_finite(FiniteModelSpec(**spec))
            oracle = FiniteOracle(spec)
            tol = 1e-12
            for x in spec["x_labels"]:
                profile = rb_profile(bundle, x)
                for i, psi in enumerate(bundle.psi_labels):
                    assert abs(profile.prior_content[i] - oracle.prior_psi(psi)) <= tol
                    assert abs(profile.posterior_content[i] - oracle.posterior_psi(psi, x)) <= tol
                    assert abs(profile.rb[i] - oracle.rb(psi, x)) <= tol * max(1, oracle.rb(psi, x))
                    assert abs(strength(profile, psi) - oracle.strength(psi, x)) <= tol
                report = estimate(profile)
                assert set(report.plausible_values) == set(oracle.plausible(x))
                if report.pl_posterior_content > 1e-6:
                    gamma = 0.6 * report.pl_posterior_content
                    got = estimate(profile, gamma=gamma).credible
                    cutoff, region = oracle.credible(gamma, x)
                    assert abs(got.cutoff - cutoff) <= tol * max(1.0, cutoff)
                    assert {profile.labels[i] for i in got.indices} == set(region)
            for psi in bundle.psi_labels:
                assert abs(bias_against_h(bundle, psi).value - oracle.bias_against_h(psi)) <= tol
            if len(bundle.psi_labels) > 1:
                psi0 = bundle.psi_labels[0]
                assert abs(
                    bias_in_favor_h(bundle, psi0, 1.0).value - oracle.bias_in_favor_h(psi0)
                ) <= tol
                assert abs(bias_in_favor_e(bundle, 1.0).value - oracle.avg_bias_in_favor()) <= tol
            avg, sup = bias_against_e(bundle)
            assert abs(avg.value - oracle.avg_bias_against()) <= tol
            assert abs(sup.value - oracle.sup_bias_against()) <= tol


def _markov_sandwich_profiles():
    yield rb_profile(locnormal(10, 0.5, 2.0), 0.9, Discretization(delta=0.1))
    yield rb_profile(locnormal(40, 0.0, 1.0), -0.2, Discretization(delta=0.05, anchor=0.0))
    rng = np.random.default_rng(99)
    for _ in range(3):
        yield rb_profile(make_finite(FiniteModelSpec(**random_finite_spec(rng))), 0)


def test_criterion_09_property_suites():
    with criterion(9, "property suites"):
        # Markov sandwich on every usable cell, and the supremum ratio >= 1
        for profile in _markov_sandwich_profiles():
            assert float(np.nanmax(profile.rb)) >= 1.0 - 1e-9
            for i in np.flatnonzero(profile.usable):
                value = profile.labels[i] if profile.is_labeled else float(profile.centers[i])
                s = strength(profile, value)
                assert profile.posterior_content[i] <= s + 1e-9
                assert s <= min(1.0, profile.rb[i]) + 1e-9

        # symmetry and complement flip on 1000 randomized event triples
        rng = np.random.default_rng(ACCEPTANCE_SEED + 1)
        for _ in range(1000):
            weights = rng.uniform(0.05, 1.0, size=8)
            weights = weights / weights.sum()
            labels = [f"w{i}" for i in range(8)]
            space = FiniteProbSpace(labels, weights)
            pick = lambda: space.event(
                [labels[i] for i in rng.choice(8, size=int(rng.integers(1, 8)), replace=False)]
            )
            a, c = pick(), pick()
            rb_ac = rb_event(space, a, c)
            assert abs(rb_ac - rb_event(space, c, a)) <= 1e-12 * max(1.0, rb_ac)
            comp = space.complement(a)
            if space.prob(comp) > 0:
                rb_c = rb_event(space, comp, c)
                assert (rb_ac > 1) == (rb_c < 1) or (rb_ac == 1 and rb_c == 1)

        # evidence for a grouped value averages the per-theta evidence under
        # the conditional prior, exactly, on finite models
        rng = np.random.default_rng(ACCEPTANCE_SEED + 2)
        for _ in range(20):
            spec = random_finite_spec(rng)
            bundle = make_finite(FiniteModelSpec(**spec))
            oracle = FiniteOracle(spec)
            for x in spec["x_labels"]:
                profile = rb_profile(bundle, x)
                for i, psi in enumerate(bundle.psi_labels):
                    members = [t for t in oracle.theta_labels if oracle.psi_of[t] == psi]
                    mass = sum(oracle.prior[t] for t in members)
                    acc = sum(
                        (oracle.joint(t, x) / oracle.predictive(x) / oracle.prior[t])
                        * (oracle.prior[t] / mass)
                        for t in members
                    )
                    assert abs(profile.rb[i] - acc) <= 1e-12 * max(1.0, acc)

        # unbiasedness by enumeration on 50 random finite models: evidence in
        # favor of a value is likelier when it is true than when it is false
        # (the prior mixture over the alternatives; the probability under one
        # specific alternative can exceed it), and the plausible region covers
        # the truth at least as often as an independently drawn value
        rng = np.random.default_rng(ACCEPTANCE_SEED + 3)
        for _ in range(50):
            spec = random_finite_spec(rng)
            oracle = FiniteOracle(spec)
            usable = [p for p in oracle.psi_labels if oracle.usable(p)]
            favor_prob = {
                (p0, p): sum(
                    oracle.m_given_psi(x, p)
                    for x in oracle.x_labels
                    if oracle.rb(p0, x) > 1.0
                )
                for p0 in usable
                for p in usable
            }
            for p0 in usable:
                false_mass = 1.0 - oracle.prior_psi(p0)
                if false_mass <= 0.0:
                    continue
                favor_when_false = (
                    sum(
                        oracle.prior_psi(p) * favor_prob[(p0, p)]
                        for p in usable
                        if p != p0
                    )
                    / false_mass
                )
                assert favor_prob[(p0, p0)] >= favor_when_false - 1e-12
            cover_true = sum(oracle.prior_psi(p) * favor_prob[(p, p)] for p in usable)
            cover_indep = sum(
                oracle.prior_psi(p0) * oracle.prior_psi(p) * favor_prob[(p0, p)]
                for p0 in usable
                for p in usable
            )
            assert cover_true >= cover_indep - 1e-12

        # reparameterization invariance under 20 random monotone maps
        rng = np.random.default_rng(ACCEPTANCE_SEED + 4)
        profile = rb_profile(locnormal(20, 0.0, 1.0), 0.4, Discretization(delta=0.05))
        base = estimate(profile)
        for _ in range(20):
            a = float(rng.uniform(0.2, 3.0))
            b = float(rng.uniform(0.0, 2.0))
            c = float(rng.normal(0.0, 1.0))
            sign = 1.0 if rng.random() < 0.5 else -1.0
            lam = lambda x, a=a, b=b, c=c, s=sign: s * (a * x + b * np.arctan(x - c))
            mapped = reparam_profile(profile, lam)
            image = estimate(mapped)
            assert image.psi_hat == pytest.approx(lam(base.psi_hat), rel=1e-9, abs=1e-9)
            assert image.pl_posterior_content == pytest.approx(base.pl_posterior_content)
            assert len(image.plausible_indices) == len(base.plausible_indices)


def test_criterion_10_conflict_calibration():
    with criterion(10, "conflict check: Monte Carlo agreement and uniform calibration"):
        bundle = locnormal(10, 1.0, 2.0)
        xbar = 3.4
        exact = conflict_check(bundle, xbar).tail_prob
        mc = conflict_check(bundle, xbar, mc=McConfig(n_sim=100_000, seed=ACCEPTANCE_SEED), method="mc")
        se = math.sqrt(exact * (1.0 - exact) / 100_000)
        assert abs(mc.tail_prob - exact) <= 3.0 * se

        mean, var = bundle.prior_predictive_params()
        rng = substream(ACCEPTANCE_SEED, "conflict-uniformity")
        draws = mean + math.sqrt(var) * rng.standard_normal(10_000)
        tails = 2.0 * (1.0 - stats.norm.cdf(np.abs(draws - mean) / math.sqrt(var)))
        assert stats.kstest(tails, "uniform").statistic < 0.02
        # same statistic via the public checker on a subsample
        sub = [locnormal_tail_prob(bundle, t) for t in draws[:100]]
        assert np.allclose(sub, tails[:100], atol=1e-12)


def test_criterion_11_reproduction_is_deterministic(tmp_path):
    with criterion(11, "byte-identical reproduction across thread counts"):
        out1, out8 = tmp_path / "one", tmp_path / "eight"
        assert main(["reproduce", "table1", "--seed", "7", "--threads", "1", "--out", str(out1)]) == 0
        assert main(["reproduce", "table1", "--seed", "7", "--threads", "8", "--out", str(out8)]) == 0
        first = (out1 / "table1.csv").read_bytes()
        assert first == (out8 / "table1.csv").read_bytes()
        assert main(["reproduce", "table1", "--seed", "7", "--threads", "1", "--out", str(out1)]) == 0
        assert first == (out1 / "table1.csv").read_bytes()
