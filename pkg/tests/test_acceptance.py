"""Acceptance criteria 1-12 at their stated sizes and tolerances.

Each test records a one-line verdict that the terminal summary prints under
"acceptance criteria". Criterion 11 for the disk billiard is known to fail
(see the notes in the xfail reason) and is marked strict so that an
unexpected pass is reported too.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, get_table
from helpers import collision_fd, rel_error
from rdslab.billiard import CollisionState, collide, dphi, dPhi
from rdslab.cli import main
from rdslab.equidist import BinGrid, chi_square_dependent, chi_square_uniform
from rdslab.noise import Degenerate, RngStream, SingularVertical, UniformBall
from rdslab.projective import E_LINE, Outcome, classify_system, invariance_defect, \
    proj_distance, stationary_measure
from rdslab.rds import (billiard_system, lyapunov, lyapunov_singular, random_orbit,
                        standard_system, timed)
from rdslab.toralmaps import (standard_derivative, standard_map, torus_close, trace_g2,
                              two_step_reduction)

pytestmark = pytest.mark.slow

N = 1_000_000
NOISE = UniformBall(0.05)
Y0 = (0.1, 0.2)
SEED = 20261015

# frozen before the main build: oracles.standard_lyapunov_bruteforce(1.0, 0.05, 10**5, 20261015)
BRUTE_K1 = 1.1685382445311585
BRUTE_K1_SE = 0.0021837466401736466

# frozen: trace of D g_1 at the h2 witness (0.3, 0), i.e. 2 + 2 pi cos(0.6 pi)
H2_TRACE = 0.05838896127451

DERIV_TABLES = ("disk_e2", "ellipse", "disk_s2")
DISKS = ("disk_e2", "disk_s2", "disk_h2")
NON_DISKS = ("ellipse", "pdisk_h2")

_parts = {}


def record(n, ok, msg, part=None):
    """Store the verdict line for criterion n (parts are joined into one line)."""
    _parts.setdefault(n, {})[part] = (ok, msg)
    parts = _parts[n]
    status = "PASS" if all(p[0] for p in parts.values()) else "FAIL"
    ACCEPTANCE[n] = f"criterion {n:2d}: {status}  " + "; ".join(p[1] for p in parts.values())


# -- shared long runs ------------------------------------------------------------------
@pytest.fixture(scope="module")
def deriv_sample():
    rng = np.random.default_rng(SEED)
    # interior: theta kept 1e-3 away from the boundary so the FD stencil stays in [0, pi]
    return {name: list(zip(rng.uniform(0, 1, 1000), rng.uniform(1e-3, math.pi - 1e-3, 1000)))
            for name in DERIV_TABLES}


@pytest.fixture(scope="module")
def billiard_runs():
    out = {}
    for i, name in enumerate(DISKS + NON_DISKS):
        sys_ = billiard_system(get_table(name), NOISE)
        out[name] = timed(lyapunov, sys_, (0.3, 0.1), N, rng=RngStream(SEED, i))
    return out


@pytest.fixture(scope="module")
def standard_runs():
    return {K: lyapunov(standard_system(K, NOISE), Y0, N, rng=RngStream(SEED, 10 + i))
            for i, K in enumerate((0.0, 1.0))}


@pytest.fixture(scope="module")
def singular_runs():
    return {K: lyapunov_singular(K, SingularVertical(0.1), Y0, N, RngStream(SEED, 20 + i))
            for i, K in enumerate((0.0, 1.0))}


# -- 1-3: billiard derivatives ---------------------------------------------------------
def test_criterion_01_derivative_correctness(deriv_sample):
    t0 = time.perf_counter()
    worst = {}
    for name, sample in deriv_sample.items():
        t = get_table(name)
        worst[name] = max(rel_error(collision_fd(t, s, th), dphi(t, CollisionState(s, th)).matrix)
                          for s, th in sample)
    wall = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and wall < 30
    record(1, ok, "max rel FD error " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
           + f" (< 1e-4); {wall:.1f} s (< 30 s)")
    assert ok


def test_criterion_02_determinant_laws(deriv_sample):
    e1 = e2 = 0.0
    for name, sample in deriv_sample.items():
        t = get_table(name)
        for s, th in sample:
            st = CollisionState(s, th)
            res = collide(t, st)
            e1 = max(e1, abs(dphi(t, st, res).det - math.sin(th) / math.sin(res.next.theta)))
            e2 = max(e2, abs(dPhi(t, st, res).det - 1.0))
    ok = e1 < 1e-9 and e2 < 1e-9
    record(2, ok, f"max |det dphi - sin th/sin th1| {e1:.1e}, max |det dPhi - 1| {e2:.1e} (< 1e-9)")
    assert ok


def test_criterion_03_grazing_limit():
    worst = 0.0
    for name in DERIV_TABLES:
        t = get_table(name)
        for s in np.random.default_rng(SEED).uniform(0, 1, 100):
            m = dphi(t, CollisionState(s, 1e-6)).matrix
            worst = max(worst, float(np.abs(m - [[1, 2 / t.curvature(s)], [0, 1]]).max()))
    ok = worst < 1e-3
    record(3, ok, f"max entrywise deviation {worst:.1e} over 100 s per table (< 1e-3)")
    assert ok


# -- 4-7: exponents --------------------------------------------------------------------
def test_criterion_04_billiard_dichotomy(billiard_runs):
    wall = sum(w for _, w in billiard_runs.values())
    msgs, ok = [], wall < 600
    for name in DISKS:
        est = billiard_runs[name][0]
        ok &= abs(est.lambda_plus) < 0.01
        msgs.append(f"{name} {est.lambda_plus:.1e}")
    for name in NON_DISKS:
        est = billiard_runs[name][0]
        ok &= est.lambda_plus > max(0.01, 5 * est.std_error)
        msgs.append(f"{name} {est.lambda_plus:.4f}+-{est.std_error:.4f}")
    record(4, ok, "lambda+ " + ", ".join(msgs) + f"; {wall:.0f} s (< 600 s)")
    assert ok


def test_criterion_05_standard_dichotomy(standard_runs):
    k0, k1 = standard_runs[0.0], standard_runs[1.0]
    se = math.hypot(k1.std_error, BRUTE_K1_SE)
    gap = abs(k1.lambda_plus - BRUTE_K1)
    ok = abs(k0.lambda_plus) < 0.01 and k1.lambda_plus > 5 * k1.std_error and gap < 3 * se
    record(5, ok, f"K=0 {k0.lambda_plus:.1e}; K=1 {k1.lambda_plus:.4f}+-{k1.std_error:.4f}; "
                  f"brute force {BRUTE_K1:.4f}+-{BRUTE_K1_SE:.4f}, gap {gap / se:.2f} SE (< 3)")
    assert ok


def test_criterion_06_singular_noise(singular_runs):
    (d0, r0), (d1, r1) = singular_runs[0.0], singular_runs[1.0]
    se = math.hypot(d1.std_error, r1.std_error)
    gap = abs(d1.lambda_plus - r1.lambda_plus)
    ok = (abs(d0.lambda_plus) < 0.01 and abs(r0.lambda_plus) < 0.01
          and d1.lambda_plus > 5 * d1.std_error and r1.lambda_plus > 5 * r1.std_error
          and gap < 3 * se)
    record(6, ok, f"K=0 direct {d0.lambda_plus:.1e} reduced {r0.lambda_plus:.1e}; "
                  f"K=1 direct {d1.lambda_plus:.4f}+-{d1.std_error:.4f} "
                  f"reduced {r1.lambda_plus:.4f}+-{r1.std_error:.4f}, gap {gap / se:.2f} SE (< 3)")
    assert ok


def test_criterion_07_zero_sum(billiard_runs, standard_runs, singular_runs):
    runs = {f"billiard {k}": v[0] for k, v in billiard_runs.items()}
    runs.update({f"standard K={k:g}": v for k, v in standard_runs.items()})
    for k, (d, r) in singular_runs.items():
        runs[f"singular K={k:g} direct"] = d
        runs[f"singular K={k:g} reduced"] = r
    bad = [name for name, est in runs.items() if not est.zero_sum_ok(3.0)]
    worst = max(abs(est.zero_sum) for est in runs.values())
    record(7, not bad, f"{len(runs)} runs, max |lambda+ + lambda-| {worst:.1e}"
                       + (f"; outside 3 SE: {bad}" if bad else "; all within 3 SE"))
    assert not bad


# -- 8-9: algebra and classifier ---------------------------------------------------------
def test_criterion_08_two_step_identity():
    rng = np.random.default_rng(SEED)
    e_id = e_tr = 0.0
    for _ in range(1000):
        K, a, b = rng.uniform(-2, 2), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)
        y = tuple(rng.random(2))
        lhs, rhs = two_step_reduction(K, a, b, y)
        d = [(u - v) - round(u - v) for u, v in zip(lhs, rhs)]
        e_id = max(e_id, max(abs(x) for x in d))
        m = standard_derivative(K, standard_map(K, y)) @ standard_derivative(K, y)
        e_tr = max(e_tr, abs(trace_g2(K, y) - m.trace))
    ok = e_id <= 1e-12 and e_tr <= 1e-10 and torus_close(lhs, rhs, 1e-12)
    record(8, ok, f"max identity error {e_id:.1e} (<= 1e-12), max trace error {e_tr:.1e} (<= 1e-10)")
    assert ok


def test_criterion_09_classifier():
    v1 = classify_system(standard_system(1.0, Degenerate()), grid=100)
    cert = v1.outcome is Outcome.POSITIVE_EXPONENT_CERTIFICATE
    ok = cert
    msg = f"K=1 {v1.outcome.value}"
    if cert:
        h1, h2 = v1.witnesses
        ok &= abs(h1.trace - 8.283) < 1e-3
        ok &= abs(h2.trace - 0.0586) < 1e-3 and abs(h2.trace - H2_TRACE) < 1e-9
        msg += f" (tr h1 {h1.trace:.6f}, tr h2 {h2.trace:.6f})"
    others = {"K=0": standard_system(0.0, Degenerate())}
    others.update({name: billiard_system(get_table(name), Degenerate()) for name in DISKS})
    for label, sys_ in others.items():
        v = classify_system(sys_, grid=100)
        good = v.outcome is Outcome.INVARIANT_LINE_DETECTED and proj_distance(v.line, E_LINE) < 1e-8
        ok &= good
        msg += f"; {label} {v.outcome.value}" + (" at e" if good else "")
    record(9, ok, msg)
    assert ok


# -- 10-11: measures ----------------------------------------------------------------------
def test_criterion_10_invariance_principle():
    msgs, ok = [], True
    for i, name in enumerate(DISKS):
        sys_ = billiard_system(get_table(name), NOISE)
        eta = stationary_measure(sys_, N, RngStream(SEED, 30 + i))
        mass = eta.mass_within(E_LINE, 0.05)
        defect = invariance_defect(sys_, eta, 100_000, RngStream(SEED, 40 + i))
        ok &= mass >= 0.95 and defect < 0.05
        msgs.append(f"{name} mass {mass:.4f} defect {defect:.4f}")
    record(10, ok, ", ".join(msgs) + " (mass >= 0.95, defect < 0.05)")
    assert ok


def _equidist(system, stream):
    pts = random_orbit(system, (0.3, 0.1) if system.lows[1] else Y0, N, stream)[1:]
    grid = BinGrid.from_points(pts, 16, system.periods, system.lows)
    stat, p = chi_square_uniform(grid)
    return stat, p, chi_square_dependent(pts, 16, system.periods, system.lows)


def test_criterion_11_equidistribution_standard_map():
    stat, p, _ = _equidist(standard_system(1.0, NOISE), RngStream(SEED, 50))
    ok = p > 0.01
    record(11, ok, f"K=1 chi2 {stat:.0f} (df 255) p {p:.3f}", part="standard")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "unattainable: r is invariant under the disk map, so it only diffuses under the noise; "
    "n = 10^6 holds ~150 effective sweeps and the independent-sample Pearson test rejects"))
def test_criterion_11_equidistribution_disk_billiard():
    stat, p, dep = _equidist(billiard_system(get_table("disk_e2"), NOISE), RngStream(SEED, 51))
    ok = p > 0.01
    record(11, ok, f"disk_e2 chi2 {stat:.0f} (df 255) p {p:.1e} [dependence-corrected p "
                   f"{dep.p_value:.3f}, effective df {dep.dof:.1f}]", part="disk")
    assert ok


# -- 12: reproducibility --------------------------------------------------------------------
CONFIGS = {
    "lyapunov": 'system.kind = "billiard"\ntable.kind = "ellipse"\nrun.n_steps = 20000\n'
                "run.replicas = 3\n",
    "orbit": 'system.kind = "standard"\nrun.n_steps = 1000\nrun.replicas = 2\n',
    "projective": 'system.kind = "billiard"\nsystem.surface = "s2"\ntable.radius = 0.5\n'
                  "run.n_steps = 100000\nprojective.n_push = 5000\n",
    "classify": 'system.kind = "standard"\n',
    "equidist": 'system.kind = "standard"\nrun.n_steps = 50000\nrun.replicas = 2\n',
    "dichotomy": 'system.kind = "standard"\nrun.n_steps = 10000\ndichotomy.values = [0.0, 1.0]\n'
                 "run.replicas = 2\n",
}


def test_criterion_12_reproducibility(tmp_path):
    differ = []
    for cmd, body in CONFIGS.items():
        cfg = tmp_path / f"{cmd}.toml"
        cfg.write_text(f"seed = {SEED}\nrun.workers = 2\n" + body)
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / rep / f"{cmd}.csv"
            assert main([cmd, str(cfg), "-o", str(out)]) == 0
            outs.append(sorted(p for p in out.parent.glob(f"{cmd}*.csv") if ".timing" not in p.name))
        if [p.read_bytes() for p in outs[0]] != [p.read_bytes() for p in outs[1]]:
            differ.append(cmd)
    # the in-process API is deterministic too
    sys_ = billiard_system(get_table("pdisk_h2"), NOISE)
    same = lyapunov(sys_, (0.3, 0.1), 20_000, rng=RngStream(SEED)) == \
        lyapunov(sys_, (0.3, 0.1), 20_000, rng=RngStream(SEED))
    ok = not differ and same
    record(12, ok, f"{len(CONFIGS)} commands run twice: "
                   + ("all artifacts byte-identical" if not differ else f"differ: {differ}"))
    assert ok
