"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
from oracles import peak_frequencies, shift_by_bisection

from conftest import C_KITTEL, C_MS1, C_MS2
from magnonlab import data
from magnonlab.cli.table import load_table
from magnonlab.dispersive import dispersive_shifts
from magnonlab.fitting import fit_shift_power, synthetic_shift_data
from magnonlab.params import (
    CavityParams,
    MagnonModeParams,
    ProbeParams,
    cooperativity,
    dbm_to_watts,
    probe_photon_number,
)
from magnonlab.spectra import SystemConfig, drive_sweep_family, drive_sweep_response, s21
from magnonlab.steady import limit_shift, real_cubic_roots, solve_resonant_steady_state, solve_shift_cubic

CAVITY = CavityParams(10.1003e9, 0.7175e6, 0.7175e6, 1.435e6)
KITTEL = MagnonModeParams(9.5503e9, 24.3e6, 42e6, kerr_K=1e-8, drive_c=C_KITTEL)
PROBE_F = 10.1035e9
DRIVE_GRID = np.linspace(9.50e9, 9.70e9, 401)
FIT_POWERS = np.geomspace(1e-4, 15e-3, 20)
SETS = {"kittel": (24.3e6, C_KITTEL), "ms1": (15e6, C_MS1), "ms2": (30e6, C_MS2)}


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_01_cooperativity(criterion):
    C = cooperativity(CAVITY, KITTEL)
    ok = abs(C - 101.2) <= 0.5
    criterion(1, ok, f"C = {C:.4f} (target 101.2 +- 0.5)")
    assert ok


def test_02_static_pull(criterion):
    pull = dispersive_shifts(CAVITY, KITTEL).cavity_pull_static
    ok = abs(pull - 3.21e6) <= 0.01e6
    criterion(2, ok, f"g^2/Delta = {pull / 1e6:.5f} MHz (target 3.21 +- 0.01)")
    assert ok


def test_03_probe_photons(criterion):
    probe = ProbeParams(PROBE_F, dbm_to_watts(-129))
    n = probe_photon_number(probe, CAVITY, f_c=PROBE_F)
    ok = abs(n - 1.04) <= 0.01
    criterion(3, ok, f"n = {n:.5f} at -129 dBm on resonance (target 1.04 +- 0.01)")
    assert ok


def test_04_cubic_vs_bisection(criterion):
    rng = np.random.default_rng(4)
    n = 10_000
    g = 10 ** rng.uniform(5, 9, n)
    c = 10 ** rng.uniform(20, 30, n)
    p = 10 ** rng.uniform(-9, 2, n)
    with Timer() as t:
        x = solve_shift_cubic(g, c, p)
        ref = np.array([shift_by_bisection(*args) for args in zip(g, c, p)])
        rel = np.max(np.abs(x / ref - 1))
        q = c * p / (2 * math.pi) ** 3
        counts = [len(real_cubic_roots(0.0, (gi / 2) ** 2, -qi)) for gi, qi in zip(g, q)]
    unique = all(k == 1 for k in counts)
    ok = rel < 1e-10 and unique and t.elapsed < 1.0
    criterion(4, ok, f"max rel err {rel:.2e} on {n} triples, unique root: {unique}, {t.elapsed:.2f} s")
    assert ok


def test_05_limit_laws(criterion):
    g, c = KITTEL.gamma_m, KITTEL.drive_c
    with Timer() as t:
        power = np.geomspace(1e-8, 1e3, 1101)
        x = solve_shift_cubic(g, c, power)
        dev_small = np.abs(x / limit_shift(g, c, power, "small") - 1)
        dev_large = np.abs(x / limit_shift(g, c, power, "large") - 1)
    small_ok = np.all(dev_small[power <= 10e-6] < 0.01)
    large_ok = np.all(dev_large[power >= 10.0] < 0.01)
    monotone = np.all(np.diff(dev_small) > 0) and np.all(np.diff(dev_large) < 0)
    ok = small_ok and large_ok and monotone and t.elapsed < 1.0
    criterion(
        5, ok,
        f"small-law dev at 10 uW {dev_small[power <= 10e-6].max():.2e}, "
        f"large-law dev at 10 W {dev_large[power >= 10.0].max():.2e}, monotone: {monotone}",
    )
    assert ok


def _fitted_kittel_c():
    table = load_table(data.path(data.KITTEL_SHIFT))
    res = fit_shift_power(
        np.column_stack([table.si("power_mw"), table.si("shift_mhz")]),
        {"gamma_m": KITTEL.gamma_m, "drive_c": KITTEL.drive_c},
    )
    return res["drive_c"]


def test_06_drive_sweep_dip(criterion):
    with Timer() as t:
        c_fit = _fitted_kittel_c()
        mode = MagnonModeParams(KITTEL.f_m, KITTEL.gamma_m, KITTEL.g, kerr_K=KITTEL.kerr_K, drive_c=c_fit)
        system = SystemConfig(CAVITY, (mode,))
        power = dbm_to_watts(11)
        up = drive_sweep_response(DRIVE_GRID, power, system, PROBE_F, "kittel", "up")
        down = drive_sweep_response(DRIVE_GRID, power, system, PROBE_F, "kittel", "down")
    dip = up.dip_center()
    ok = abs(dip - 9.590e9) <= 2e6 and t.elapsed < 5.0
    criterion(
        6, ok,
        f"dip at {dip / 1e9:.4f} GHz up-sweep, {down.dip_center() / 1e9:.4f} GHz down-sweep "
        f"(target 9.590 +- 0.002), fitted c/(2pi)^3 = {c_fit / (2 * math.pi) ** 3:.3e}",
    )
    assert ok


def test_07_dip_moves_and_deepens(criterion):
    system = SystemConfig(CAVITY, (KITTEL,))
    dbm = np.arange(-5.0, 10.5, 1.0)
    with Timer() as t:
        sweeps = drive_sweep_family([dbm_to_watts(p) for p in dbm], DRIVE_GRID, system, PROBE_F, "kittel", "down")
    centers = np.array([s.dip_center() for s in sweeps])
    depths = np.array([s.dip_depth() for s in sweeps])
    monotone = bool(np.all(np.diff(centers) > 0) and np.all(np.diff(depths) > 0))
    ok = monotone and t.elapsed < 10.0
    criterion(
        7, ok,
        f"{len(dbm)} powers -5..10 dBm: centers {centers[0] / 1e9:.4f}->{centers[-1] / 1e9:.4f} GHz, "
        f"depths {depths[0]:.2e}->{depths[-1]:.2e}, strictly increasing: {monotone}, {t.elapsed:.2f} s",
    )
    assert ok


def test_08_splitting(criterion):
    mode = MagnonModeParams(CAVITY.f_c_bare, KITTEL.gamma_m, KITTEL.g)
    with Timer() as t:
        f = np.arange(CAVITY.f_c_bare - 100e6, CAVITY.f_c_bare + 100e6, 1e3)
        lo, hi = peak_frequencies(f, np.abs(s21(f, SystemConfig(CAVITY, (mode,)))))
    split = hi - lo
    ok = abs(split - 84e6) <= 1e6 and t.elapsed < 1.0
    criterion(8, ok, f"splitting {split / 1e6:.3f} MHz (target 84 +- 1)")
    assert ok


def test_09_full_vs_reduced(criterion):
    power = np.geomspace(1e-4, 30e-3, 40)
    with Timer() as t:
        full = np.array([KITTEL.kerr_K * solve_resonant_steady_state(CAVITY, KITTEL, power=p)[0].occupation
                         for p in power])
        reduced = solve_shift_cubic(KITTEL.gamma_m, KITTEL.drive_c, power)
    worst = float(np.max(np.abs(full / reduced - 1)))
    ok = worst < 0.01 and t.elapsed < 1.0
    criterion(9, ok, f"max relative difference {worst:.2e} over 0.1-30 mW, {t.elapsed:.2f} s")
    assert ok


@pytest.mark.parametrize("label", list(SETS))
def test_10_fit_roundtrips(criterion, label):
    g, c = SETS[label]
    with Timer() as t:
        p, y = synthetic_shift_data(g, c, FIT_POWERS)
        clean = fit_shift_power(np.column_stack([p, y]), {"gamma_m": 1.3 * g, "drive_c": 0.6 * c})
        err_g, err_c = [], []
        for seed in range(100):
            p, y = synthetic_shift_data(g, c, FIT_POWERS, 0.02, seed=seed)
            res = fit_shift_power(np.column_stack([p, y]), {"gamma_m": g, "drive_c": c}, seed=seed)
            err_g.append(abs(res["gamma_m"] / g - 1))
            err_c.append(abs(res["drive_c"] / c - 1))
    clean_err = max(abs(clean["gamma_m"] / g - 1), abs(clean["drive_c"] / c - 1))
    p95_g, p95_c = np.percentile(err_g, 95), np.percentile(err_c, 95)
    ok = clean_err < 1e-6 and p95_g < 0.05 and p95_c < 0.05 and t.elapsed < 60.0 / len(SETS)
    criterion(
        10, ok,
        f"{label}: noiseless err {clean_err:.1e}, 2% noise P95 gamma {p95_g:.2%} c {p95_c:.2%}, {t.elapsed:.1f} s",
    )
    assert ok
