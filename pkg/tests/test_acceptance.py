"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings. Every tolerance is pinned here, not configurable.
"""

import itertools
import math
import random
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from csbmlab.density import (
    DensityParams,
    decompose_plain,
    decompose_revised,
    is_self_bad,
)
from csbmlab.experiments import SweepConfig, sweep, trial_generator
from csbmlab.graphs import (
    Graph,
    count_cycles,
    cycles_up_to,
    excess,
    independent_cycles,
    isolated,
    leaves,
    two_core,
)
from csbmlab.models import (
    ModelParams,
    cycle_intensity,
    event_E_holds,
    sample_null,
    sample_sbm,
    sample_truncated,
)
from csbmlab.moments import (
    centered_moment,
    chain_expectation,
    chain_expectation_brute,
    exact_phi_expectation_P,
    exact_phi_expectation_Q,
    moment_closed_form,
)
from csbmlab.statistics import (
    CenteredMatrix,
    colorful_probability,
    f_tree_stat,
    w_color_coding,
    w_exact,
)
from csbmlab.trees import (
    a_coefficient,
    enumerate_trees,
    otter_estimate,
    prufer_canonical_codes,
    tree_canonical_key,
)


def report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_criterion_01_orthonormality():
    t0 = time.time()
    params = ModelParams(n=8, lam=1.0, k=2, eps=0.3, s=0.5)
    family = [
        Graph.build([(0, 1)]), Graph.build([(4, 7)]),
        Graph.build([(0, 1), (1, 2)]), Graph.build([(2, 4), (4, 6)]),
        Graph.build([(0, 1), (1, 2), (2, 3)]), Graph.build([(3, 5), (5, 6), (6, 7)]),
        Graph.build([(0, 1), (0, 2), (0, 3)]), Graph.build([(4, 2), (4, 5), (4, 6)]),
    ]
    pairs = [(a, b) for a in family for b in family]
    worst = 0.0
    for (s1, s2) in pairs:
        for (t1, t2) in pairs[::5]:  # every fifth ordered pair against all
            got = exact_phi_expectation_Q(s1, s2, t1, t2, params)
            want = 1.0 if (s1, s2) == (t1, t2) else 0.0
            worst = max(worst, abs(got - want))
    for (s1, s2) in pairs[:40]:
        got = exact_phi_expectation_Q(s1, s2, s1, s2, params)
        worst = max(worst, abs(got - 1.0))
    elapsed = time.time() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    report(1, "null orthonormality indicator", ok,
           f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_criterion_02_chain_identity():
    t0 = time.time()
    worst = 0.0
    for length in range(1, 7):
        for k in (2, 3, 4):
            for eps in (0.0, 0.3, 0.7, 0.99):
                for equal in (True, False):
                    closed = chain_expectation(length, eps, k, equal)
                    brute = chain_expectation_brute(length, eps, k, equal)
                    worst = max(worst, abs(closed - brute))
    elapsed = time.time() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    report(2, "chain identity closed vs brute", ok,
           f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_criterion_03_moment_kernels():
    t0 = time.time()
    worst = 0.0
    grid = [(0.8, 0.0, 0.5), (1.0, 0.3, 0.8), (1.5, 0.7, 0.6),
            (2.0, 0.5, 1.0), (0.5, 0.99, 0.3)]
    for lam, eps, s in grid:
        for n in (10, 100):
            params = ModelParams(n=n, lam=lam, k=2, eps=eps, s=s)
            for r in range(3):
                for t in range(3):
                    for same in (True, False):
                        worst = max(worst, abs(
                            centered_moment(r, t, same, params)
                            - moment_closed_form(r, t, same, params)))
    elapsed = time.time() - t0
    ok = worst <= 1e-14 and elapsed < 1.0
    report(3, "moment kernels brute vs closed", ok,
           f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-14
    assert elapsed < 1.0


def test_criterion_04_first_moment_dual_path():
    t0 = time.time()
    rng = random.Random(44)
    worst = 0.0
    counted = 0
    for n in (6, 7, 8):
        params = ModelParams(n=n, lam=1.0, k=2, eps=0.5, s=0.6)
        n_pairs = 17 if n < 8 else 16
        for _ in range(n_pairs):
            pats = []
            for _ in range(2):
                n_edges = rng.randint(1, 3)
                edges = set()
                while len(edges) < n_edges:
                    u, v = rng.sample(range(n), 2)
                    edges.add(tuple(sorted((u, v))))
                pats.append(Graph.build(sorted(edges)))
            res = exact_phi_expectation_P(pats[0], pats[1], params)
            worst = max(worst, abs(res.via_kernels - res.via_closed_forms))
            counted += 1
    # ratio trend for a fixed matching tree pattern
    shape = enumerate_trees(2)[0]
    pattern = shape.graph()
    ratios = []
    for n in (6, 7, 8):
        params = ModelParams(n=n, lam=1.0, k=2, eps=0.5, s=0.6)
        val = exact_phi_expectation_P(pattern, pattern, params).value
        ratios.append(val / a_coefficient(shape, n, 0.6))
    gaps = [abs(r - 1) for r in ratios]
    monotone = gaps[2] <= gaps[1] + 1e-9 <= gaps[0] + 2e-9
    elapsed = time.time() - t0
    ok = worst <= 1e-10 and monotone and elapsed < 120
    report(4, "planted first-moment dual path", ok,
           f"{counted} pairs, max gap {worst:.2e}, "
           f"ratios {['%.4f' % r for r in ratios]}, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert monotone, ratios
    assert elapsed < 120


def test_criterion_05_tree_catalog():
    t0 = time.time()
    expected = (1, 1, 2, 3, 6, 11, 23)
    ok_counts = True
    for aleph in range(1, 8):
        mine = {tree_canonical_key(sh.graph()) for sh in enumerate_trees(aleph)}
        oracle = prufer_canonical_codes(aleph)
        ok_counts &= len(mine) == expected[aleph - 1] == len(oracle)
        ok_counts &= mine == oracle
    estimates = [otter_estimate(a) for a in range(1, 8)]
    increasing = all(b > a for a, b in zip(estimates[1:], estimates[2:]))
    elapsed = time.time() - t0
    ok = ok_counts and increasing and elapsed < 10
    report(5, "tree catalog vs Prüfer oracle", ok,
           f"counts {expected}, growth-> {estimates[-1]:.3f}, {elapsed:.1f}s")
    assert ok_counts
    assert increasing
    assert elapsed < 10


def test_criterion_06_null_variance():
    # Stated bands at the stated size; the evaluator is the exact one (see
    # the decisions ledger: honest color-coding reps cost ~17 h here), with a
    # companion check tying the color-coding estimator's variance to its
    # predicted inflation at a scale where the honest rep count fits.
    t0 = time.time()
    params = ModelParams(n=500, lam=1.5, k=2, eps=0.3, s=0.8)
    values = []
    for t in range(2000):
        rng = trial_generator(6, 0, t, 1)
        a, b = sample_null(params, rng)
        values.append(f_tree_stat(a, b, params, 4, method="sparse").value)
    values = np.array(values)
    target = 0.50331648
    var = values.var(ddof=1)
    m4 = ((values - values.mean()) ** 4).mean()
    se_var = math.sqrt((m4 - var ** 2) / len(values))
    se_mean = values.std(ddof=1) / math.sqrt(len(values))
    mean_ok = abs(values.mean()) <= 3 * se_mean
    var_ok = abs(var - target) <= 3 * se_var

    # color-coding companion: honest reps at a feasible size
    params_cc = ModelParams(n=120, lam=1.5, k=2, eps=0.0, s=0.8)
    gen = np.random.default_rng(606)
    reps = 280
    q = colorful_probability(2)
    inflation = (1 + 1 / (q * reps)) ** 2
    cc_vals = []
    for t in range(300):
        a, b = sample_null(params_cc, trial_generator(66, 0, t, 1))
        cc_vals.append(f_tree_stat(a, b, params_cc, 2, method="cc",
                                   reps=reps, rng=gen).value)
    cc_vals = np.array(cc_vals)
    cc_target = 0.8 ** 4 * 1 * inflation
    cc_var = cc_vals.var(ddof=1)
    cc_m4 = ((cc_vals - cc_vals.mean()) ** 4).mean()
    cc_se = math.sqrt((cc_m4 - cc_var ** 2) / len(cc_vals))
    cc_ok = abs(cc_var - cc_target) <= 3.5 * cc_se

    elapsed = time.time() - t0
    ok = mean_ok and var_ok and cc_ok and elapsed < 300
    report(6, "null variance of the tree statistic", ok,
           f"var {var:.4f} vs {target} (3se {3*se_var:.4f}), "
           f"mean {values.mean():.4f}, cc-var {cc_var:.4f} vs {cc_target:.4f}, "
           f"{elapsed:.0f}s")
    assert mean_ok
    assert var_ok
    assert cc_ok
    assert elapsed < 300


def test_criterion_07_poisson_cycle_law():
    t0 = time.time()
    params = ModelParams(n=2000, lam=1.5, k=2, eps=0.5, s=0.5)
    c3 = cycle_intensity(3, params)
    xs, ys = [], []
    for t in range(2000):
        rng = trial_generator(7, 0, t, 0)
        _, g = sample_sbm(params, rng)
        xs.append(count_cycles(g, 3))
        ys.append(count_cycles(g, 4))
    xs = np.array(xs, float)
    ys = np.array(ys, float)
    assert c3 == pytest.approx(0.6328125)
    se_mean = xs.std(ddof=1) / math.sqrt(len(xs))
    mean_ok = abs(xs.mean() - c3) <= 3 * se_mean
    var = xs.var(ddof=1)
    m4 = ((xs - xs.mean()) ** 4).mean()
    se_var = math.sqrt((m4 - var ** 2) / len(xs))
    var_ok = abs(var - c3) <= 3 * se_var
    dev = (xs - xs.mean()) * (ys - ys.mean())
    cov = dev.mean()
    se_cov = dev.std(ddof=1) / math.sqrt(len(dev))
    cov_ok = abs(cov) <= 3 * se_cov
    elapsed = time.time() - t0
    ok = mean_ok and var_ok and cov_ok and elapsed < 120
    report(7, "Poisson cycle law", ok,
           f"mean {xs.mean():.4f}/var {var:.4f} vs {c3:.7f}, cov {cov:.4f}, "
           f"{elapsed:.0f}s")
    assert mean_ok and var_ok and cov_ok
    assert elapsed < 120


def test_criterion_08_truncated_model():
    t0 = time.time()
    params = ModelParams(n=2000, lam=1.5, k=2, eps=0.5, s=0.5)
    # postcondition on every draw
    for t in range(150):
        rng = trial_generator(8, 0, t, 0)
        _, parent, trunc = sample_truncated(params, 5, 30, rng)
        assert cycles_up_to(trunc, 5) == []
        assert trunc.edge_set <= parent.edge_set
    # event frequency against the Poisson product
    desk = DensityParams.create(n=2000)
    target = math.exp(-sum(cycle_intensity(j, params) for j in (3, 4, 5)))
    hits = 0
    n_draws = 2000
    for t in range(n_draws):
        rng = trial_generator(8, 1, t, 0)
        _, g = sample_sbm(params, rng)
        hits += event_E_holds(g, 5, 30, desk)
    p_hat = hits / n_draws
    se = math.sqrt(target * (1 - target) / n_draws)
    freq_ok = abs(p_hat - target) <= 3 * se
    elapsed = time.time() - t0
    ok = freq_ok and elapsed < 120
    report(8, "truncated model", ok,
           f"P(E) {p_hat:.4f} vs {target:.4f} (3se {3*se:.4f}), {elapsed:.0f}s")
    assert freq_ok
    assert elapsed < 120


def test_criterion_09_phi_properties():
    t0 = time.time()
    dense = DensityParams.create(n=1e126, D=100, lam=1.0, k=2)
    lx, ly = dense.log_vertex_factor, dense.log_edge_factor

    # log-submodularity on 1e5 random subgraph pairs (bitmask arithmetic)
    rng = random.Random(909)
    worst = -math.inf
    for _ in range(100_000):
        n = rng.randint(4, 12)
        pairs = list(itertools.combinations(range(n), 2))
        host = [i for i in range(len(pairs)) if rng.random() < 0.4]
        sm = sum(1 << i for i in host if rng.random() < 0.6)
        tm = sum(1 << i for i in host if rng.random() < 0.6)
        inc = [0] * n
        for i, (u, v) in enumerate(pairs):
            inc[u] |= 1 << i
            inc[v] |= 1 << i

        def phi_of(mask):
            e = bin(mask).count("1")
            v = sum(1 for w in range(n) if mask & inc[w])
            return v * lx + e * ly

        lhs = phi_of(sm | tm) + phi_of(sm & tm)
        rhs = phi_of(sm) + phi_of(tm)
        worst = max(worst, lhs - rhs)
    submodular_ok = worst <= 1e-9

    # self-bad => two-core equality: exhaustive <= 6 vertices directly
    direct_ok = True
    flagged_small = 0
    for n in range(1, 7):
        pairs = list(itertools.combinations(range(n), 2))
        for bits in range(1 << len(pairs)):
            g = Graph.build([e for i, e in enumerate(pairs) if bits >> i & 1], n=n)
            if g.n_edges and is_self_bad(g, dense):
                flagged_small += 1
                direct_ok &= two_core(g) == g

    # 7 vertices: exhaustive via a vectorized subset-minimum oracle
    pairs7 = list(itertools.combinations(range(7), 2))
    m = len(pairs7)
    masks = np.arange(1 << m, dtype=np.int64)
    pop = np.zeros(1 << m, dtype=np.int64)
    tmp = masks.copy()
    while tmp.any():
        pop += tmp & 1
        tmp >>= 1
    vmin = np.zeros(1 << m, dtype=np.int64)
    inc7 = [0] * 7
    for i, (u, v) in enumerate(pairs7):
        inc7[u] |= 1 << i
        inc7[v] |= 1 << i
    for w in range(7):
        vmin += (masks & inc7[w]) != 0
    val = vmin * lx + pop * ly
    subset_min = val.copy()
    for b in range(m):
        bit = 1 << b
        idx = np.flatnonzero((masks & bit) != 0)
        subset_min[idx] = np.minimum(subset_min[idx], subset_min[idx ^ bit])
    strict_min = np.full(1 << m, np.inf)
    for b in range(m):
        bit = 1 << b
        idx = np.flatnonzero((masks & bit) != 0)
        strict_min[idx] = np.minimum(strict_min[idx], subset_min[idx ^ bit])
    min_proper = np.where(vmin < 7, np.minimum(strict_min, vmin * lx + pop * ly),
                          strict_min)
    phi_full = 7 * lx + pop * ly
    self_bad = (phi_full < dense.log_bad_threshold) & (phi_full < min_proper)
    # every flagged mask must have min degree >= 2 (hence equal its 2-core)
    min_deg = np.full(1 << m, 99, dtype=np.int64)
    for w in range(7):
        deg_w = np.zeros(1 << m, dtype=np.int64)
        t2 = masks & inc7[w]
        while t2.any():
            deg_w += t2 & 1
            t2 >>= 1
        np.minimum(min_deg, deg_w, out=min_deg)
    flagged = np.flatnonzero(self_bad)
    core_ok = bool((min_deg[flagged] >= 2).all())
    # cross-validate the oracle against the implementation
    sample = list(flagged[:: max(1, len(flagged) // 120)][:120])
    sample += [int(x) for x in
               np.random.default_rng(9).integers(0, 1 << m, size=60)]
    cross_ok = True
    for mask in sample:
        g = Graph.build([e for i, e in enumerate(pairs7) if mask >> i & 1], n=7)
        cross_ok &= is_self_bad(g, dense) == bool(self_bad[mask])
        if self_bad[mask]:
            cross_ok &= two_core(g) == g
    elapsed = time.time() - t0
    ok = (submodular_ok and direct_ok and core_ok and cross_ok
          and flagged_small > 0 and len(flagged) > 0 and elapsed < 60)
    report(9, "density-score properties", ok,
           f"submod worst {worst:.1e}, self-bad <=6v: {flagged_small}, "
           f"7v: {len(flagged)}, {elapsed:.0f}s")
    assert submodular_ok
    assert direct_ok and core_ok and cross_ok
    assert flagged_small > 0 and len(flagged) > 0
    assert elapsed < 60


def test_criterion_10_decompositions():
    t0 = time.time()
    rng = random.Random(1010)

    def draw_pair():
        n = rng.randint(4, 11)
        pairs = list(itertools.combinations(range(n), 2))
        host = Graph.build([e for e in pairs if rng.random() < 0.35], n=n)
        kept = [e for e in host.edges if rng.random() < 0.45]
        verts = {w for e in kept for w in e}
        verts |= {v for v in host.vertices if rng.random() < 0.25}
        verts |= set(isolated(host))
        return Graph.build(kept, vertices=verts), host

    plain_ok = True
    for _ in range(10_000):
        h, s = draw_pair()
        dec = decompose_plain(h, s)
        t_expected = len(leaves(s) - h.vertex_set) + excess(s) - excess(h)
        plain_ok &= sorted(dec.all_edges()) == sorted(s.edge_set - h.edge_set)
        plain_ok &= dec.path_count == t_expected
        if not plain_ok:
            break

    revised_ok = True
    for _ in range(10_000):
        h, s = draw_pair()
        dec = decompose_revised(h, s)
        revised_ok &= sorted(dec.all_edges()) == sorted(s.edge_set - h.edge_set)
        indep = set()
        for mm in range(3, s.n_vertices + 1):
            indep |= {c.edge_set for c in independent_cycles(s, mm)}
        revised_ok &= all(c.edge_set in indep for c in dec.cycles)
        bound = 5 * (len(leaves(s) - h.vertex_set) + excess(s) - excess(h))
        revised_ok &= dec.path_count <= bound
        if not revised_ok:
            break
    elapsed = time.time() - t0
    ok = plain_ok and revised_ok and elapsed < 60
    report(10, "cycle/path decompositions", ok, f"2x10^4 pairs, {elapsed:.0f}s")
    assert plain_ok
    assert revised_ok
    assert elapsed < 60


def test_criterion_11_color_coding_unbiased():
    t0 = time.time()
    params = ModelParams(n=12, lam=2.0, k=2, eps=0.3, s=0.8)
    rng = trial_generator(11, 0, 0, 0)
    host, _ = sample_null(params, rng)
    x = CenteredMatrix.from_graph(host, params)
    gen = np.random.default_rng(1111)
    all_ok = True
    details = []
    for aleph in (1, 2, 3):
        for shape in enumerate_trees(aleph):
            target = w_exact(shape, x)
            samples = w_color_coding(shape, x, 10_000, gen, return_samples=True)
            se = samples.std(ddof=1) / math.sqrt(len(samples))
            gap = abs(samples.mean() - target)
            all_ok &= gap <= 3 * se
            details.append(f"{gap/max(se,1e-12):.1f}se")
    elapsed = time.time() - t0
    ok = all_ok and elapsed < 60
    report(11, "color-coding unbiasedness", ok,
           f"gaps {details}, {elapsed:.0f}s")
    assert all_ok
    assert elapsed < 60


def test_criterion_12_phase_separation_sweep():
    t0 = time.time()
    cfg = SweepConfig(n=3000, lam=1.2, k=2, eps=0.3,
                      s_grid=(0.3, 0.4, 0.5, 0.58, 0.65, 0.75, 0.85, 0.9),
                      aleph=8, trials=200, seed=12, method="sparse",
                      C=0.5, workers=2)
    result = sweep(cfg)
    zs = [row.z_separation for row in result.rows]
    z_low, z_high = zs[0], zs[-1]
    rho = spearmanr(cfg.s_grid, zs).statistic
    elapsed = time.time() - t0
    null_normalized = ((result.rows[-1].mean_P - result.rows[-1].mean_Q)
                       / result.rows[-1].sd_Q)
    ok = z_high >= 2 and z_low <= 0.5 and rho >= 0.8 and elapsed < 1800
    report(12, "phase-separation sweep", ok,
           f"z(0.9)={z_high:.2f} [null-normalized {null_normalized:.2f}], "
           f"z(0.3)={z_low:.3f}, spearman={rho:.3f}, {elapsed:.0f}s; "
           f"z-grid {['%.2f' % z for z in zs]}")
    assert z_low <= 0.5
    assert rho >= 0.8
    assert elapsed < 1800
    # Known-red at this scale: the planted second moment is far from its
    # asymptotic size, so sd_P inflates the denominator (see the decisions
    # ledger for the full analysis; the null-normalized separation exceeds 2).
    assert z_high >= 2
