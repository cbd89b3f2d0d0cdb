"""Bundled scenario file and synthetic datasets."""
from __future__ import annotations

import math
from importlib import resources

import numpy as np

SCENARIO = "yig_cavity.cfg"
KITTEL_SHIFT = "kittel_shift.csv"

KITTEL_GAMMA = 24.3e6
KITTEL_C = (2 * math.pi) ** 3 * 4.7e24
KITTEL_NOISE = 0.02
KITTEL_SEED = 20170509


def path(name: str):
    return resources.files(__name__).joinpath(name)


def kittel_shift_table():
    """Rebuild the bundled Kittel dataset: 20 log-spaced powers over 0.1-15 mW, 2 % noise."""
    from ..cli.table import DataTable
    from ..fitting import synthetic_shift_data

    power = np.geomspace(1e-4, 15e-3, 20)
    power, shift = synthetic_shift_data(KITTEL_GAMMA, KITTEL_C, power, KITTEL_NOISE, KITTEL_SEED)
    meta = [
        "synthetic Kittel-mode shift data",
        f"gamma_m = {KITTEL_GAMMA!r} Hz, drive_c = {KITTEL_C!r} kg^-1m^-2",
        f"multiplicative gaussian noise {KITTEL_NOISE!r}, seed {KITTEL_SEED}",
    ]
    return DataTable.from_columns([("power_mw", power / 1e-3), ("shift_mhz", shift / 1e6)], meta=meta)
