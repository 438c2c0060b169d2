"""End-to-end acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports what it measured.
"""

import csv
import io
import math
import time

import numpy as np
import pytest

from mimo_capacity import capacity, spectrum
from mimo_capacity.capacity import (
    ChannelConfig,
    Scheme,
    capacity_csit,
    capacity_no_csit,
    onoff_rate,
    rounded_db_power,
    sweep,
)
from mimo_capacity.montecarlo import McConfig, mc_outage, sample_eigenvalues
from mimo_capacity.numerics import QuadSpec, integrate_semi_infinite
from mimo_capacity.outage import outage_analysis
from mimo_capacity.reports import (
    MC_COL,
    NUM_COL,
    ONOFF_MC_COL,
    ONOFF_NUM_COL,
    TABLES,
    Tolerances,
    load_golden,
    run_verify,
)
from mimo_capacity.special import laguerre_assoc_all
from mimo_capacity.spectrum import AntennaPair, EigenDensity, lambda_max_cdf

GOLDEN = load_golden()
SEED = 20240917


def _cold_caches():
    capacity._density.cache_clear()
    capacity._solve_cutoff_cached.cache_clear()
    spectrum._KERNELS.clear()


def _golden_cells(kind):
    """Yield (table id, n_r, n_t, snr, published numerical value)."""
    for rid, spec in TABLES.items():
        if spec.kind != kind:
            continue
        table = GOLDEN[rid]
        col = table["columns"].index(ONOFF_NUM_COL if kind == "onoff" else NUM_COL)
        for row in table["rows"]:
            yield rid, spec.n_r, spec.n_t, float(row[0]), float(row[col])


def _numerical_suite(kind, scheme, make_cfg, tol=5e-4):
    cells = list(_golden_cells(kind))
    _cold_caches()
    start = time.perf_counter()
    bad, worst = [], 0.0
    for rid in dict.fromkeys(c[0] for c in cells):
        rows = [c for c in cells if c[0] == rid]
        got = sweep([make_cfg(nr, nt, s) for _, nr, nt, s, _ in rows], scheme)
        for (_, nr, nt, s, want), point in zip(rows, got):
            value = getattr(point, "value", math.nan)
            dev = abs(value - want)
            worst = max(worst, dev)
            if not dev <= tol:
                bad.append(f"table {rid} ({nr},{nt},{s:g} dB): {value!r} vs {want}")
    return cells, bad, worst, time.perf_counter() - start


def test_criterion_1_csit_golden_suite(acceptance):
    cells, bad, worst, elapsed = _numerical_suite("csit", Scheme.CSIT_WATERFILL, ChannelConfig.from_snr_db)
    ok = len(cells) == 30 and not bad and elapsed <= 60
    acceptance(1, ok, f"{len(cells)} CSIT cells, max |dev| {worst:.2e} (tol 5e-4), {elapsed:.1f} s (limit 60 s)")
    assert len(cells) == 30
    assert not bad, bad
    assert elapsed <= 60


def test_criterion_2_no_csit_golden_suite(acceptance):
    cells, bad, worst, elapsed = _numerical_suite("no_csit", Scheme.NO_CSIT, ChannelConfig.from_snr_db)
    ok = len(cells) == 54 and not bad and elapsed <= 60
    acceptance(2, ok, f"{len(cells)} no-CSIT cells, max |dev| {worst:.2e} (tol 5e-4), {elapsed:.1f} s (limit 60 s)")
    assert len(cells) == 54
    assert not bad, bad
    assert elapsed <= 60


def _ks_distance(pair, samples, seed):
    top = np.sort(sample_eigenvalues(AntennaPair(*pair), McConfig(samples=samples, seed=seed)).max(axis=1))
    f = lambda_max_cdf(pair, top)
    i = np.arange(1, top.size + 1)
    return float(max(np.max(i / top.size - f), np.max(f - (i - 1) / top.size)))


def test_criterion_3_onoff_golden_suite(acceptance):
    # gate: the largest-eigenvalue CDF must match a 10^6-draw empirical CDF first
    ks = {pair: _ks_distance(pair, 1_000_000, SEED + k)
          for k, pair in enumerate([(1, 1), (2, 2), (4, 4), (4, 8), (4, 12)])}
    gate = all(d < 0.002 for d in ks.values())
    ks_txt = f"KS max {max(ks.values()):.2e} (limit 2e-3)"
    if not gate:
        acceptance(3, False, f"lambda_max CDF gate failed, {ks_txt}: {ks}")
        pytest.fail(f"KS gate failed: {ks}")
    cells, bad, worst, elapsed = _numerical_suite("onoff", Scheme.ONOFF, rounded_db_power)
    ok = len(cells) == 45 and not bad
    acceptance(3, ok, f"{ks_txt}; {len(cells)} on-off cells, max |dev| {worst:.2e} (tol 5e-4)")
    assert len(cells) == 45
    assert not bad, bad


def _mc_deviations(csv_outputs):
    """|MC - numerical| for every table cell that has both columns."""
    devs = []
    for rid, text in csv_outputs.items():
        onoff = TABLES[rid].kind == "onoff"
        mc_col, num_col = (ONOFF_MC_COL, ONOFF_NUM_COL) if onoff else (MC_COL, NUM_COL)
        for row in csv.DictReader(io.StringIO(text)):
            devs.append((abs(float(row[mc_col]) - float(row[num_col])), rid, row["SNR (dB)"]))
    return devs


@pytest.fixture(scope="module")
def full_verify():
    start = time.perf_counter()
    res = run_verify(samples=1_000_000, seed=SEED)
    return res, time.perf_counter() - start


@pytest.fixture(scope="module")
def smoke_verify_pair():
    tol = Tolerances(montecarlo=0.06)
    runs = []
    for _ in range(2):
        start = time.perf_counter()
        runs.append((run_verify(samples=100_000, seed=SEED, tolerances=tol), time.perf_counter() - start))
    return runs


@pytest.mark.slow
def test_criterion_4_monte_carlo_cross_validation(acceptance, full_verify, smoke_verify_pair):
    res, elapsed = full_verify
    devs = _mc_deviations(res.csv_outputs)
    bad = [d for d in devs if not d[0] < 0.02]
    smoke_res, smoke_elapsed = smoke_verify_pair[0]
    smoke_devs = _mc_deviations(smoke_res.csv_outputs)
    smoke_bad = [d for d in smoke_devs if not d[0] < 0.06]
    ok = (len(devs) == 129 and not bad and elapsed <= 1800
          and len(smoke_devs) == 129 and not smoke_bad and smoke_elapsed <= 180)
    acceptance(4, ok, f"10^6: {len(devs)} cells, max |MC - num| {max(devs)[0]:.4f} (tol 0.02), "
                      f"{elapsed:.0f} s (limit 1800 s); 10^5 smoke: max {max(smoke_devs)[0]:.4f} "
                      f"(tol 0.06), {smoke_elapsed:.0f} s (limit 180 s)")
    assert len(devs) == 129 and len(smoke_devs) == 129
    assert not bad, bad
    assert not smoke_bad, smoke_bad
    assert elapsed <= 1800 and smoke_elapsed <= 180


def test_criterion_5_high_snr_convergence(acceptance):
    c = capacity_csit(ChannelConfig.from_snr_db(4, 12, 10)).value
    h = capacity_no_csit(ChannelConfig.from_snr_db(12, 4, 10)).value
    gap = abs(c - h)
    ok = gap <= 0.01 and abs(c - 26.613163) <= 1e-3 and abs(h - 26.612935) <= 1e-3
    acceptance(5, ok, f"C(4,12,10 dB)={c:.6f}, C^(12,4,10 dB)={h:.6f}, gap {gap:.2e} (tol 0.01)")
    assert gap <= 0.01
    assert c == pytest.approx(26.613163, abs=1e-3)
    assert h == pytest.approx(26.612935, abs=1e-3)


def test_criterion_6_identity_suite(acceptance):
    antennas = (1, 2, 4, 6, 8, 12)
    snrs = range(-15, 11)
    bad, worst_recip, points = [], 0.0, 0
    for a in antennas:
        for b in antennas:
            for s in snrs:
                points += 1
                ab, ba = ChannelConfig.from_snr_db(a, b, s), ChannelConfig.from_snr_db(b, a, s)
                c_ab, c_ba = capacity_csit(ab).value, capacity_csit(ba).value
                h_ab, h_ba = capacity_no_csit(ab).value, capacity_no_csit(ba).value
                worst_recip = max(worst_recip, abs(c_ab - c_ba))
                if abs(c_ab - c_ba) > 1e-8:
                    bad.append(f"reciprocity ({a},{b},{s})")
                # ab has N_R = a, N_T = b
                if a > b and not h_ab > h_ba:
                    bad.append(f"strict no-CSIT ordering ({a},{b},{s})")
                if a == b and abs(h_ab - h_ba) > 1e-9:
                    bad.append(f"square no-CSIT equality ({a},{b},{s})")
                if not c_ab >= h_ab >= 0:
                    bad.append(f"C >= C^ >= 0 ({a},{b},{s})")
                if not onoff_rate(ab).value <= c_ab:
                    bad.append(f"on-off <= CSIT ({a},{b},{s})")
    acceptance(6, not bad, f"{points} grid points, max reciprocity gap {worst_recip:.1e} (tol 1e-8), "
                           f"{len(bad)} violations")
    assert not bad, bad[:20]


def test_criterion_7_spectrum_suite(acceptance):
    spec = QuadSpec(abs_tol=1e-13, rel_tol=1e-13)
    worst_norm = worst_mean = 0.0
    for m in range(1, 7):
        for n in range(m, 19):
            dens = EigenDensity(AntennaPair(m, n))
            cut = dens.pair.tail_cutoff()
            worst_norm = max(worst_norm, abs(integrate_semi_infinite(dens.pdf, 0.0, spec, cutoff=cut) - 1.0))
            mean = integrate_semi_infinite(lambda x: x * dens.pdf(x), 0.0, spec, cutoff=cut)
            worst_mean = max(worst_mean, abs(mean - n))
    x = np.linspace(0.0, 50.0, 501)
    worst_rec = 0.0
    for a in range(13):
        table = laguerre_assoc_all(20, a, x)
        for k in range(1, 20):
            terms = np.stack([(k + 1) * table[k + 1], (2 * k + 1 + a - x) * table[k], (k + a) * table[k - 1]])
            resid = terms[0] - terms[1] + terms[2]
            scale = np.maximum(np.abs(terms).max(axis=0), 1.0)
            worst_rec = max(worst_rec, float(np.max(np.abs(resid) / scale)))
    ok = worst_norm <= 1e-8 and worst_mean <= 1e-6 and worst_rec < 1e-9
    acceptance(7, ok, f"max |int f - 1| {worst_norm:.1e} (tol 1e-8), max |mean - n| {worst_mean:.1e} "
                      f"(tol 1e-6), max recurrence residual {worst_rec:.1e} (tol 1e-9)")
    assert worst_norm <= 1e-8
    assert worst_mean <= 1e-6
    assert worst_rec < 1e-9


SPOT_CHECKS = [((2, 2), -10), ((2, 2), -5), ((2, 2), 0), ((2, 2), 5),
               ((2, 4), -10), ((2, 4), -5), ((2, 4), 0),
               ((2, 6), -10), ((2, 6), -5), ((2, 8), -10),
               ((3, 3), -5), ((4, 4), -10)]


@pytest.mark.slow
def test_criterion_8_outage_suite(acceptance):
    bad, points = [], 0
    for m, n in [(2, 2), (2, 4), (2, 6), (2, 8), (3, 3), (4, 4)]:
        for s in range(-10, 41):
            points += 1
            res = outage_analysis(ChannelConfig.from_snr_db(m, n, s))
            if not res.p_actual <= res.p_bound1:
                bad.append(f"p_out > p1 at ({m},{n},{s})")
            if m == n and not res.p_actual <= res.p_bound2:
                bad.append(f"p_out > min bound at ({m},{n},{s})")
    worst_z = 0.0
    mc = McConfig(samples=1_000_000, seed=SEED)
    draws = {}
    for pair, s in SPOT_CHECKS:
        cfg = ChannelConfig.from_snr_db(*pair, s)
        if pair not in draws:
            draws[pair] = sample_eigenvalues(cfg.pair, mc)
        est = mc_outage(cfg, mc, draws[pair])
        exact = outage_analysis(cfg).p_actual
        z = abs(est.mean - exact) / est.std_error if est.std_error > 0 else math.inf
        worst_z = max(worst_z, z)
        if not z <= 3:
            bad.append(f"MC outage {est.mean:.3e} vs {exact:.3e} at {pair} {s} dB ({z:.1f} sigma)")
    acceptance(8, not bad, f"dominance on {points} grid points, {len(SPOT_CHECKS)} MC spot checks, "
                           f"worst {worst_z:.2f} std errors (limit 3)")
    assert not bad, bad


@pytest.mark.slow
def test_criterion_9_determinism(acceptance, smoke_verify_pair):
    (first, _), (second, _) = smoke_verify_pair
    same = first.csv_outputs == second.csv_outputs and len(first.csv_outputs) == len(TABLES)
    acceptance(9, same, f"two run_verify runs (seed {SEED}, 10^5 samples) gave "
                        f"{'byte-identical' if same else 'different'} CSVs for {len(first.csv_outputs)} tables")
    assert same
