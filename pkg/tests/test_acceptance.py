"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report lines; the scaling criterion takes a few minutes by design.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

import sensorsched as ss
from conftest import (
    all_schedules,
    propagated_batch_covariance,
    random_feasible_schedule,
    random_prior,
    random_spd,
    random_spd_block_tridiag,
    random_stable_system,
    random_suite,
)
from sensorsched.cli import run_scenario

LOG_2PIE = math.log(2 * math.pi * math.e)


def report(criterion, detail):
    print(f"ACCEPTANCE {criterion}: PASS  [{detail}]")


def rel_err(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# shared instance families
# ---------------------------------------------------------------------------

CROSS_FORMULA_KINDS = ("tracking", "gauss_markov", "dense_cov", "dense_prec")


@pytest.fixture(scope="module")
def cross_formula_instances():
    """210 seeded instances spanning prior kinds, n<=3, K<=4, m<=5."""
    instances = []
    for i in range(210):
        rng = np.random.default_rng(10_000 + i)
        n = int(rng.integers(1, 4))
        K = int(rng.integers(1, 5))
        m = int(rng.integers(1, 6))
        kind = CROSS_FORMULA_KINDS[i % len(CROSS_FORMULA_KINDS)]
        prior = random_prior(rng, n, K, kind)
        suite = random_suite(rng, n, m)
        budgets = tuple(int(rng.integers(0, m + 1)) for _ in range(K))
        ctx = ss.make_context(prior, suite, allow_form_conversion=True)
        count = ss.num_candidate_schedules(m, budgets)
        if count <= 4096:
            schedules = list(all_schedules(m, budgets))
        else:
            schedules = [random_feasible_schedule(rng, m, budgets) for _ in range(200)]
        instances.append({"ctx": ctx, "budgets": budgets, "schedules": schedules})
    return instances


@pytest.fixture(scope="module")
def enumerable_instances():
    """100 seeded instances small enough for exhaustive certification.

    The last 25 use m >= 10 (wide ground sets) so the lazy-evaluation
    criterion has the population it quantifies over.
    """
    instances = []
    for i in range(100):
        rng = np.random.default_rng(20_000 + i)
        if i < 75:
            n = int(rng.integers(1, 3))
            K = int(rng.integers(1, 4))
            m = int(rng.integers(2, 6))
            budgets = tuple(int(rng.integers(1, min(m, 3) + 1)) for _ in range(K))
        else:
            n = int(rng.integers(1, 3))
            K = int(rng.integers(1, 3))
            m = int(rng.choice([10, 12]))
            budgets = tuple(2 for _ in range(K))
        assert math.prod(math.comb(m, s) for s in budgets) <= 10**5
        kind = CROSS_FORMULA_KINDS[i % len(CROSS_FORMULA_KINDS)]
        prior = random_prior(rng, n, K, kind)
        suite = random_suite(rng, n, m)
        ctx = ss.make_context(prior, suite, allow_form_conversion=True)

        eager_schedule, eager_trace = ss.greedy_schedule(ctx, budgets)
        lazy_schedule, lazy_trace = ss.greedy_schedule(ctx, budgets, lazy=True)
        cert = ss.certify_bound(
            ctx, budgets, ss.conditional_entropy(ctx, eager_schedule)
        )
        instances.append(
            {
                "m": m,
                "budgets": budgets,
                "eager_schedule": eager_schedule,
                "eager_calls": eager_trace.total_oracle_calls,
                "lazy_schedule": lazy_schedule,
                "lazy_calls": lazy_trace.total_oracle_calls,
                "certificate": cert,
            }
        )
    return instances


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_criterion_1_cross_formula_equivalence(cross_formula_instances):
    started = time.perf_counter()
    worst = 0.0
    checked = 0
    for inst in cross_formula_instances:
        ctx = inst["ctx"]
        for sched in inst["schedules"]:
            a = ss.conditional_entropy_covariance_form(ctx, sched)
            b = ss.conditional_entropy_precision_form(ctx, sched)
            err = rel_err(a, b)
            worst = max(worst, err)
            checked += 1
            assert err <= 1e-8, (sched.sets, a, b)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"criterion 1 took {elapsed:.1f}s (budget 60s)"
    report(
        1,
        f"{len(cross_formula_instances)} instances, {checked} schedule evaluations, "
        f"worst relative gap {worst:.3e}, {elapsed:.1f}s",
    )


def test_criterion_2_approximation_bound(enumerable_instances):
    started = time.perf_counter()
    worst_ratio = 0.0
    degenerate = 0
    for inst in enumerable_instances:
        cert = inst["certificate"]
        assert cert.holds, (inst["budgets"], cert)
        if cert.ratio is None:
            degenerate += 1
        else:
            assert cert.ratio <= 0.5 + 1e-9
            worst_ratio = max(worst_ratio, cert.ratio)
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    report(
        2,
        f"100 instances certified, empirical worst ratio {worst_ratio:.4f}, "
        f"{degenerate} degenerate (certified equal), {elapsed:.1f}s",
    )


def test_criterion_3_supermodularity_and_monotonicity():
    started = time.perf_counter()
    shapes = [(2, 4), (4, 2), (2, 3), (3, 2), (4, 1), (1, 6)]
    triples = 0
    pairs = 0
    for idx, (m, K) in enumerate(shapes):
        rng = np.random.default_rng(30_000 + idx)
        n = int(rng.integers(1, 3))
        kind = CROSS_FORMULA_KINDS[idx % len(CROSS_FORMULA_KINDS)]
        prior = random_prior(rng, n, K, kind)
        suite = random_suite(rng, n, m)
        ctx = ss.make_context(prior, suite, allow_form_conversion=True)
        budgets = tuple(m for _ in range(K))

        cost = {}
        for sched in all_schedules(m, budgets):
            cost[sched.sets] = ss.conditional_entropy(ctx, sched)

        # every nested pair A <= B arises from a per-element 3-way split:
        # in both, in B only, in neither
        elements = [(k, i) for k in range(K) for i in range(m)]
        for assignment in itertools.product(range(3), repeat=len(elements)):
            A = [[] for _ in range(K)]
            B = [[] for _ in range(K)]
            for (k, i), a in zip(elements, assignment):
                if a >= 1:
                    B[k].append(i)
                if a == 2:
                    A[k].append(i)
            A_key = tuple(tuple(s) for s in A)
            B_key = tuple(tuple(s) for s in B)
            pairs += 1
            assert cost[A_key] >= cost[B_key] - 1e-9, (A_key, B_key)
            for k, i in elements:
                if i in B[k]:
                    continue
                A_c = tuple(
                    tuple(sorted(s + [i])) if kk == k else tuple(s)
                    for kk, s in enumerate(A)
                )
                B_c = tuple(
                    tuple(sorted(s + [i])) if kk == k else tuple(s)
                    for kk, s in enumerate(B)
                )
                gain_A = cost[A_key] - cost[A_c]
                gain_B = cost[B_key] - cost[B_c]
                triples += 1
                assert gain_A >= gain_B - 1e-9, (A_key, B_key, (k, i))
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(
        3,
        f"{len(shapes)} instances (mK <= 8), {pairs} nested pairs, "
        f"{triples} addition triples, zero violations, {elapsed:.1f}s",
    )


def test_criterion_4_sparse_logdet_correctness():
    started = time.perf_counter()
    rng = np.random.default_rng(40_000)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        K = int(rng.integers(1, 9))
        M, dense = random_spd_block_tridiag(rng, n, K)
        oracle = np.linalg.slogdet(dense)[1]
        err = abs(ss.logdet_block_tridiagonal(M) - oracle) / max(1.0, abs(oracle))
        worst = max(worst, err)
        assert err <= 1e-9
    # constructed indefinite matrices must raise
    indefinite = [
        ss.BlockTridiagonalMatrix(diag_blocks=([[-1.0]],), offdiag_blocks=()),
        ss.BlockTridiagonalMatrix(
            diag_blocks=([[1.0]], [[1.0]]), offdiag_blocks=([[2.0]],)
        ),
        ss.BlockTridiagonalMatrix(
            diag_blocks=(np.eye(2), np.eye(2), -np.eye(2)),
            offdiag_blocks=(np.zeros((2, 2)), np.zeros((2, 2))),
        ),
    ]
    for M in indefinite:
        assert np.linalg.eigvalsh(M.assemble())[0] < 0
        with pytest.raises(ss.NotPositiveDefiniteError):
            ss.logdet_block_tridiagonal(M)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report(4, f"500 SPD instances, worst relative error {worst:.3e}, {elapsed:.1f}s")


def test_criterion_5_posterior_covariance_consistency(cross_formula_instances):
    started = time.perf_counter()
    worst = 0.0
    checked = 0
    for idx, inst in enumerate(cross_formula_instances):
        ctx = inst["ctx"]
        rng = np.random.default_rng(50_000 + idx)
        full = ss.Schedule(
            sets=tuple(tuple(range(ctx.suite.m)) for _ in range(ctx.K)),
            budgets=tuple(ctx.suite.m for _ in range(ctx.K)),
        )
        probes = [ss.Schedule.empty([ctx.suite.m] * ctx.K), full] + [
            random_feasible_schedule(rng, ctx.suite.m, [ctx.suite.m] * ctx.K)
            for _ in range(3)
        ]
        for sched in probes:
            cov = ss.posterior_covariance(ctx, sched)
            via_cov = 0.5 * np.linalg.slogdet(cov)[1] + 0.5 * ctx.prior.dim * LOG_2PIE
            err = abs(via_cov - ss.conditional_entropy_precision_form(ctx, sched))
            worst = max(worst, err)
            checked += 1
            assert err <= 1e-9
    elapsed = time.perf_counter() - started
    report(
        5,
        f"{checked} schedule probes over {len(cross_formula_instances)} instances, "
        f"worst absolute gap {worst:.3e}, {elapsed:.1f}s",
    )


def _scaling_scenario(K, dense):
    rng = np.random.default_rng(777)
    n, m = 4, 8
    A = random_stable_system(rng, n, radius=0.7)
    Q = random_spd(rng, n, scale=0.3)
    Sigma0 = random_spd(rng, n, scale=0.3)
    prior = ss.build_gauss_markov_prior(A, Q, Sigma0, mu0=rng.normal(0, 0.5, n), K=K)
    if dense:
        prior = ss.densify(prior)
    suite = random_suite(rng, n, m)
    return ss.make_context(prior, suite), tuple(2 for _ in range(K))


def _median_per_call_ms(K, dense, repetitions=3):
    ctx, budgets = _scaling_scenario(K, dense)
    samples = []
    for _ in range(repetitions):
        started = time.perf_counter()
        _, trace = ss.greedy_schedule(ctx, budgets)
        wall_ms = (time.perf_counter() - started) * 1e3
        samples.append(wall_ms / trace.total_oracle_calls)
    return float(np.median(samples))


def test_criterion_6_linear_in_k_scaling():
    started = time.perf_counter()
    sparse_100 = _median_per_call_ms(100, dense=False)
    sparse_200 = _median_per_call_ms(200, dense=False)
    dense_100 = _median_per_call_ms(100, dense=True)
    dense_200 = _median_per_call_ms(200, dense=True)
    elapsed = time.perf_counter() - started

    sparse_ratio = sparse_200 / sparse_100
    dense_ratio = dense_200 / dense_100
    assert 1.5 <= sparse_ratio <= 3.0, (
        f"sparse per-call ratio {sparse_ratio:.2f} outside [1.5, 3.0] "
        f"({sparse_100:.3f} -> {sparse_200:.3f} ms/call)"
    )
    assert dense_ratio >= 4.0, (
        f"dense per-call ratio {dense_ratio:.2f} below 4 "
        f"({dense_100:.3f} -> {dense_200:.3f} ms/call)"
    )
    assert elapsed < 600.0
    report(
        6,
        f"sparse ratio {sparse_ratio:.2f} in [1.5, 3.0]; dense ratio "
        f"{dense_ratio:.2f} >= 4; per-call sparse {sparse_100:.2f}/{sparse_200:.2f} ms, "
        f"dense {dense_100:.2f}/{dense_200:.2f} ms; {elapsed:.0f}s",
    )


def test_criterion_7_lazy_greedy(enumerable_instances):
    wide = [inst for inst in enumerable_instances if inst["m"] >= 10]
    assert len(wide) >= 20
    strictly_lower = 0
    for inst in enumerable_instances:
        assert inst["lazy_schedule"].sets == inst["eager_schedule"].sets
        assert inst["lazy_calls"] <= inst["eager_calls"]
    for inst in wide:
        if inst["lazy_calls"] < inst["eager_calls"]:
            strictly_lower += 1
    fraction = strictly_lower / len(wide)
    assert fraction >= 0.9, f"lazy strictly cheaper on only {fraction:.0%} of wide instances"
    report(
        7,
        f"identical schedules on 100 instances; calls never higher; strictly "
        f"lower on {strictly_lower}/{len(wide)} wide (m >= 10) instances",
    )


def test_criterion_8_gauss_markov_construction():
    rng = np.random.default_rng(80_000)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        K = int(rng.integers(1, 6))
        A = random_stable_system(rng, n)
        Q = random_spd(rng, n, scale=0.5)
        Sigma0 = random_spd(rng, n, scale=0.5)
        prior = ss.build_gauss_markov_prior(A, Q, Sigma0, K=K)
        oracle = propagated_batch_covariance(A, Q, Sigma0, K)
        got = np.linalg.inv(prior.assembled())
        err = np.max(np.abs(got - oracle)) / max(1.0, np.max(np.abs(oracle)))
        worst = max(worst, err)
        assert err <= 1e-9
    report(8, f"100 (A, Q, Sigma0) triples, worst relative error {worst:.3e}")


def test_criterion_9_cli_determinism(tmp_path):
    config = {
        "name": "determinism-check",
        "seed": 20260810,
        "prior": {
            "kind": "gauss_markov",
            "n": 2,
            "K": 3,
            "A": [[0.7, 0.1], [0.0, 0.6]],
            "Q": [[0.4, 0.0], [0.0, 0.3]],
            "Sigma0": [[1.0, 0.2], [0.2, 0.8]],
            "mu0": [0.5, -0.5],
        },
        "sensors": [
            {"kind": "range", "anchor": [2.0, 2.0], "noise_var": 0.5},
            {"kind": "linear_coordinate", "axis": 0, "noise_var": 1.0},
            {"kind": "bearing", "anchor": [-2.0, 1.0], "noise_var": 0.2},
            {"kind": "quadratic", "weight": [[1.0, 0.0], [0.0, 2.0]], "noise_var": 1.5},
        ],
        "budgets": 2,
        "schedulers": ["greedy", "lazy", "random", "exhaustive"],
    }
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(config))

    a = run_scenario(cfg_path, tmp_path / "run_a")
    b = run_scenario(cfg_path, tmp_path / "run_b")
    assert a["results"].read_bytes() == b["results"].read_bytes()
    assert a["trace"].read_bytes() == b["trace"].read_bytes()
    # and through the manifest round trip
    c = run_scenario(a["manifest"], tmp_path / "run_c")
    assert a["results"].read_bytes() == c["results"].read_bytes()
    report(9, "results.csv and trace.csv byte-identical across reruns + manifest round trip")
