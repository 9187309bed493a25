"""Acceptance suite: one test and one reported PASS/FAIL line per criterion.

Tolerances are fixed constants taken from the acceptance criteria; nothing here
is relaxed to make a result pass.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from trissm.adaptive import constellations_for, optimize_improved, optimize_si
from trissm.analysis import (
    PairContext,
    abep_union_bound,
    estimate_diversity_slope,
    kappa_bar,
    upep_asymptotic,
    upep_eb,
    upep_quadrature,
    upep_vb,
)
from trissm.channel import REFERENCE_H_2X2
from trissm.cli import main
from trissm.constellation import make_constellation
from trissm.core import SystemConfig
from trissm.montecarlo import CHUNK_TRIALS, StopRule, simulate_ber, simulate_fixed_channel_ber
from trissm.presets import PRESETS

pytestmark = pytest.mark.acceptance

UPEP_GRID = list(itertools.product([0.1, 1, 4, 16, 100], [1, 0.1, 0.01], [1, 2, 4]))


def test_c01_vb_eb_identity(report):
    t0 = time.perf_counter()
    err = max(abs(upep_vb(PairContext.at_n0(d, n0, nr)) - upep_eb(PairContext.at_n0(d, n0, nr))) for d, n0, nr in UPEP_GRID)
    dt = time.perf_counter() - t0
    ok = err <= 1e-9 and dt < 1.0
    assert report("1", ok, f"max|vb-eb| = {err:.2e} (<= 1e-9) over {len(UPEP_GRID)} points in {dt:.3f} s (< 1 s)")


def test_c02_quadrature_oracle(report):
    t0 = time.perf_counter()
    err = max(abs(upep_eb(c) - upep_quadrature(c)) for c in (PairContext.at_n0(d, n0, nr) for d, n0, nr in UPEP_GRID))
    single = 0.0
    for x in np.geomspace(1e-3, 1e5, 41):
        closed = 0.5 * (1 - math.sqrt(x / (4 + x)))
        single = max(single, abs(closed - upep_quadrature(PairContext.at_n0(x, 1.0, 1))))
    dt = time.perf_counter() - t0
    ok = err <= 1e-8 and single <= 1e-10 and dt < 10.0
    assert report(
        "2", ok, f"max|eb-quad| = {err:.2e} (<= 1e-8); single-Rx closed form vs quad {single:.2e} (<= 1e-10); {dt:.2f} s"
    )


@pytest.mark.slow
def test_c03_column_keying_equality_case(report):
    stop = StopRule(min_bit_errors=4000, max_bits=10**7)
    grid = np.arange(10.0, 38.0, 2.0)
    worst, checked, sims = 0.0, 0, {}
    fails = []
    for ln in (2, 4):
        cfg = SystemConfig(2, ln, 1, 1, snr_grid_db=tuple(grid))
        sims[ln] = simulate_ber(cfg, stop=stop, seed=2024)
        for r in sims[ln]:
            p = abep_union_bound(cfg, rho=10 ** (r.snr_db / 10))
            if not 1e-4 <= p <= 1e-2:
                continue
            checked += 1
            tol = max(0.05 * p, 3 * r.ci95_half_width)
            worst = max(worst, abs(r.ber - p) / tol)
            if abs(r.ber - p) > tol:
                fails.append((ln, r.snr_db))
    below_mc = all(
        a.ber < b.ber for a, b in zip(sims[4], sims[2]) if 1e-4 <= b.ber <= 1e-2
    )
    below_an = bool(
        np.all(abep_union_bound(SystemConfig(2, 4, 1, 1), rho=10 ** (grid / 10)) < abep_union_bound(SystemConfig(2, 2, 1, 1), rho=10 ** (grid / 10)))
    )
    ok = not fails and checked > 0 and below_mc and below_an
    assert report(
        "3", ok,
        f"{checked} points in [1e-4, 1e-2], worst |MC-ABEP|/tol = {worst:.2f} (<= 1); "
        f"L_N=4 below L_N=2: simulated {below_mc}, analytical {below_an}",
    )


@pytest.mark.slow
def test_c04_union_bound_behaviour(report):
    cfg = SystemConfig(4, 4, 4, 2, snr_grid_db=tuple(np.arange(-10.0, 11.0, 2.0)))
    sims = simulate_ber(cfg, stop=StopRule(min_bit_errors=500, max_bits=10**8), seed=77)
    bound = abep_union_bound(cfg, rho=10 ** (np.array(cfg.snr_grid_db) / 10))
    upper = all(r.ber <= b + 3 * r.ci95_half_width for r, b in zip(sims, bound))
    ratios = [b / r.ber if r.ber > 0 else math.inf for r, b in zip(sims, bound) if r.snr_db >= -5]
    ok = upper and max(ratios) <= 1.5
    assert report("4", ok, f"bound >= MC (3-sigma slack) at all points: {upper}; max bound/MC for SNR >= -5 dB = {max(ratios):.3f} (<= 1.5)")


def test_c05_asymptotic_convergence(report):
    parts, ok = [], True
    for nr in (1, 2, 4):
        ratios = []
        for x in np.geomspace(1.0, 1e12, 400):
            ctx = PairContext.at_n0(x, 1.0, nr)
            p = upep_eb(ctx)
            if p <= 1e-5:
                ratios.append(upep_asymptotic(ctx) / p)
        lo, hi = min(ratios), max(ratios)
        ok &= 0.95 <= lo and hi <= 1.05
        parts.append(f"N_r={nr}: [{lo:.4f}, {hi:.4f}]")
    assert report("5", ok, "asy/eb where eb <= 1e-5 must lie in [0.95, 1.05]; " + ", ".join(parts))


def test_c06_diversity(report):
    parts, ok = [], True
    snr = np.arange(30.0, 40.5, 1.0)
    for nr in (1, 2, 4):
        cfg = SystemConfig(4, 4, nr, 2)
        abep = abep_union_bound(cfg, rho=10 ** (snr / 10))
        d = estimate_diversity_slope(list(zip(snr, abep)))
        ok &= abs(d - nr) <= 0.1 * nr
        parts.append(f"N_r={nr}: {d:.4f}")
    assert report("6", ok, "fitted diversity over 30-40 dB within 10% of N_r; " + ", ".join(parts))


def _snr_at(cfg, c, target=1e-6):
    f = lambda s: math.log10(abep_union_bound(cfg, c, 10 ** (s / 10))) - math.log10(target)
    return brentq(f, -10, 60, xtol=1e-10)


def test_c07_modulation_gaps(report):
    snr = {}
    for name, M, kind in (("QPSK", 4, "psk"), ("8PSK", 8, "psk"), ("16QAM", 16, "qam")):
        snr[name] = _snr_at(SystemConfig(4, 4, 4, M, kind), make_constellation(M, kind))
    g8 = snr["8PSK"] - snr["QPSK"]
    g16 = snr["16QAM"] - snr["QPSK"]
    ok = abs(g8 - 3) <= 0.5 and abs(g16 - 7) <= 1
    assert report("7", ok, f"at ABEP 1e-6: 8PSK-QPSK = {g8:.2f} dB (3 +/- 0.5), 16QAM-QPSK = {g16:.2f} dB (7 +/- 1)")


def test_c08_kappa_bar_sampling(report):
    rng = np.random.default_rng(8)
    n = 10**6
    parts, ok = [], True
    for ln in (1, 4):
        for same, (s, sh) in ((True, (1.0, -1.0)), (False, (np.exp(1j * np.pi / 4), np.exp(3j * np.pi / 4)))):
            g = (rng.standard_normal((2, n, ln)) + 1j * rng.standard_normal((2, n, ln))) / math.sqrt(2)
            hn = g[0].sum(axis=1)
            hm = hn if same else g[1].sum(axis=1)
            est = float(np.mean(np.abs(hn * s - hm * sh) ** 2))
            k = kappa_bar(s, sh, same, ln)
            rel = abs(est / k - 1)
            ok &= rel <= 0.01
            parts.append(f"L_N={ln} {'same' if same else 'cross'}: {rel:.2%}")
    assert report("8", ok, "MC mean of |h_n s - h_nhat s_hat|^2 vs kappa_bar within 1%; " + ", ".join(parts))


def test_c09a_improved_selects_bpsk_8qam(report):
    alloc, rep = optimize_improved(REFERENCE_H_2X2, 3, (2, 4, 8))
    names = sorted(c.name for c in constellations_for(alloc))
    ok = names == ["8QAM", "BPSK"]
    assert report("9a", ok, f"reference 2x2 H, 3 bpcu: selected {alloc.per_column_orders} {names} with d_min^2 = {rep.d_min_sq:.4f}; expected {{BPSK, 8QAM}}")


@pytest.mark.slow
def test_c09b_improved_below_uniform(report):
    grid = [float(s) for s in range(-10, 21, 2)]
    stop = StopRule(min_bit_errors=200, max_bits=2 * 10**7)
    alloc, _ = optimize_improved(REFERENCE_H_2X2, 3, (2, 4, 8))
    improved = simulate_fixed_channel_ber(REFERENCE_H_2X2, constellations_for(alloc), grid, stop, seed=7)
    uniform = simulate_fixed_channel_ber(REFERENCE_H_2X2, constellations_for((4, 4)), grid, stop, seed=7)
    # points above the stop-rule floor for both curves
    valid = [k for k in range(len(grid)) if improved[k].bit_errors > 0 and uniform[k].bit_errors > 0]
    last = valid[-2:]
    ok = len(last) == 2 and all(improved[k].ber < uniform[k].ber for k in last)
    detail = ", ".join(f"{grid[k]:.0f} dB: {improved[k].ber:.3e} vs {uniform[k].ber:.3e}" for k in last)
    assert report("9b", ok, f"improved {alloc.per_column_orders} vs uniform (4, 4), last two resolved points: {detail}")


def test_c09c_remark2_psk_agreement(report):
    rng = np.random.default_rng(2)
    agree = 0
    for _ in range(100):
        h = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
        a, _ = optimize_improved(h, 3, (2, 4, 8), family="psk")
        b, _ = optimize_si(h, 3, (2, 4, 8), family="psk")
        agree += a == b
    assert report("9c", agree == 100, f"PSK-only candidates: SI and improved agree on {agree}/100 random channels")


@pytest.mark.slow
def test_c10_cli_determinism(report, tmp_path):
    flags = ["--min-errors", "200", "--max-trials", str(2 * CHUNK_TRIALS), "--seed", "99"]
    mismatched = []
    t0 = time.perf_counter()
    for name, preset in PRESETS.items():
        runs = {}
        for tag, workers in (("a", "1"), ("b", "1"), ("c", "8")):
            out = tmp_path / f"{name}_{tag}"
            assert main([preset["mode"], "--preset", name, "--out", str(out), "--workers", workers] + flags) == 0
            runs[tag] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
        if not (runs["a"] == runs["b"] == runs["c"]) or not runs["a"]:
            mismatched.append(name)
    dt = time.perf_counter() - t0
    ok = not mismatched
    assert report("10", ok, f"{len(PRESETS)} presets x (twice, 1 vs 8 workers): byte-identical = {ok} {mismatched or ''} ({dt:.0f} s)")
