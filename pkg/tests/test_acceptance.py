"""The ten acceptance criteria, each at its stated tolerance and time limit."""
import math
import time

import numpy as np
from scipy import stats

from cgdms import (bowen_dimension, consistency_report, geometric_equivalence, holder_diagnostic,
                   partition_pressure, scaling_pressure, spectral_dimension)
from cgdms.cli import main
from cgdms.fixtures import fixture_system
from cgdms.scaling import dual_ratios, random_dual_word
from cgdms.symbolic import word_array

from conftest import ACCEPTANCE_RESULTS, GOLDEN, LOG2_LOG3
from test_system import separation_violations

T_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def record(k, ok, detail):
    ACCEPTANCE_RESULTS[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_ternary_bowen_dimension():
    system = fixture_system("ternary")
    t0 = time.perf_counter()
    res = bowen_dimension(system, "partition", depth=10, tol=1e-4)
    dt = time.perf_counter() - t0
    err = abs(res.estimate - LOG2_LOG3)
    record(1, err <= 1e-3 and dt < 5, f"t*={res.estimate:.10f} |err|={err:.2e} time={dt:.2f}s")


def test_criterion_02_similarity_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("ternary", "ratios_half_quarter", "half_ratio"):
        system = fixture_system(name)
        ratios = system.ratios()
        for t in (0.0, 0.5, 1.0):
            expect = math.log(math.fsum(r ** t for r in ratios))
            for n in range(4, 11):
                for fn in (partition_pressure, scaling_pressure):
                    worst = max(worst, abs(fn(system, t, n=n).value - expect))
    dt = time.perf_counter() - t0
    record(2, worst <= 1e-12 and dt < 5, f"max |P_n - log sum lambda^t|={worst:.2e} time={dt:.2f}s")


def test_criterion_03_spectral_consistency():
    t0 = time.perf_counter()
    cases = [([[1 / 3, 1 / 3], [1 / 3, 1 / 3]], LOG2_LOG3),
             ([[1 / 2, 1 / 2], [1 / 2, 0]], math.log2(GOLDEN))]
    ok, parts = True, []
    for M, expect in cases:
        spec = spectral_dimension(M)
        rep = consistency_report(M)
        e_spec = abs(spec.estimate - expect)
        ok &= e_spec <= 1e-6 and rep.difference <= 1e-3
        parts.append(f"|spectral-exact|={e_spec:.1e} |bowen-spectral|={rep.difference:.1e}")
    dt = time.perf_counter() - t0
    record(3, ok and dt < 10, "; ".join(parts) + f" time={dt:.2f}s")


def test_criterion_04_cross_method_pressure():
    system = fixture_system("perturbed_ternary")
    t0 = time.perf_counter()
    est = {(m, n, t): fn(system, t, n=n)
           for m, fn in (("partition", partition_pressure), ("scaling", scaling_pressure))
           for n in (6, 8, 10) for t in T_GRID}
    agree = cauchy = 0
    worst = 0.0
    for n in (6, 8, 10):
        for t in T_GRID:
            a, b = est["partition", n, t], est["scaling", n, t]
            gap = abs(a.value - b.value)
            if gap > 0:
                worst = max(worst, gap / (a.envelope + b.envelope))
            agree += gap > a.envelope + b.envelope
    for m in ("partition", "scaling"):
        for t in T_GRID:
            for n1, n2 in ((6, 8), (6, 10), (8, 10)):
                a, b = est[m, n1, t], est[m, n2, t]
                cauchy += abs(a.value - b.value) > a.envelope + b.envelope
    dt = time.perf_counter() - t0
    record(4, agree == 0 and cauchy == 0 and dt < 60,
           f"cross-method violations={agree} cauchy violations={cauchy} "
           f"max gap/envelope={worst:.3f} time={dt:.2f}s")


def test_criterion_05_distortion_every_dual_word():
    system = fixture_system("perturbed_ternary")
    K, lam, alpha = system.distortion_constant, system.constants.lambda_, system.constants.holder_alpha
    words = word_array(system.graph, 12)  # every written dual word of length 12
    r = dual_ratios(system, words)
    bad = checks = 0
    for n in range(1, 12):
        bound = K * lam ** (n * alpha)
        logq = np.log(r[:, n:] / r[:, [n - 1]])
        bad += int((np.abs(logq) > bound).sum())
        checks += logq.size
    record(5, bad == 0, f"{checks} ratio checks over {len(words)} words, violations={bad}, K={K:.4f}")


def test_criterion_06_scaling_convergence_rate():
    system = fixture_system("perturbed_ternary")
    K, lam = system.distortion_constant, system.constants.lambda_
    rng = np.random.default_rng(20240606)
    words = np.array([random_dual_word(system, 24, rng).sequence for _ in range(50)])
    r = dual_ratios(system, words)
    ns = np.arange(4, 21)
    slopes, envelope_bad = [], 0
    for row in r:
        diff = np.abs(row[ns - 1] - row[23])
        envelope_bad += int((diff > row[23] * np.expm1(K * lam ** ns)).sum())
        keep = diff > 0
        slopes.append(stats.linregress(ns[keep], np.log(diff[keep])).slope)
    slopes = np.array(slopes)
    record(6, np.all(slopes < 0) and envelope_bad == 0,
           f"slopes in [{slopes.min():.3f}, {slopes.max():.3f}], envelope violations={envelope_bad}")


def test_criterion_07_holder_bound():
    system = fixture_system("perturbed_ternary")
    d = holder_diagnostic(system, 100, 12, seed=7)
    bad = sum(q > d.K_theory for *_, q in d.pairs)
    record(7, d.K_hat <= d.K_theory and bad == 0,
           f"K_hat={d.K_hat:.4f} K_hat_upper={d.K_hat_upper:.4f} K={d.K_theory:.4f} violations={bad}")


def test_criterion_08_geometric_equivalence():
    t0 = time.perf_counter()
    tern = fixture_system("ternary")
    pos = geometric_equivalence(tern, fixture_system("ternary_conjugate"), depth=24, samples=32, seed=0)
    neg = geometric_equivalence(tern, fixture_system("half_ratio"), depth=24, samples=32, seed=0,
                                require_separation=False)
    lo, hi = neg.tail
    offset = float(neg.envelope[lo - 1:hi].min())
    dt = time.perf_counter() - t0
    ok = (pos.verdict == "equivalent" and pos.slope < 0 and neg.verdict == "not-equivalent"
          and offset >= 0.3 and abs(offset - 1 / 3) < 1e-12 and dt < 30)
    record(8, ok, f"conjugate: {pos.verdict} slope={pos.slope:.4f}; half-ratio: {neg.verdict} "
                  f"tail |q-1|={offset:.6f}; time={dt:.2f}s")


def test_criterion_09_separation():
    bad = {name: separation_violations(fixture_system(name), 100, 10, seed)
           for name, seed in (("ternary", 91), ("perturbed_ternary", 92))}
    record(9, sum(bad.values()) == 0, f"200 pairs, violations {bad}")


def test_criterion_10_report_determinism(tmp_path):
    outs = []
    for k, workers in enumerate((1, 1, 4)):
        path = tmp_path / f"report{k}.json"
        assert main(["report", "--seed", "0", "--workers", str(workers), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    same_runs, same_workers = outs[0] == outs[1], outs[0] == outs[2]
    record(10, same_runs and same_workers,
           f"repeat identical={same_runs}, workers 1 vs 4 identical={same_workers}, {len(outs[0])} bytes")

