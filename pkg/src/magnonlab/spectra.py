"""
Input-output transmission of the cavity coupled to lumped magnon modes.

    S21(f) = sqrt(k1 k2) / [ i (f_c - f) + k/2 + sum_j g_j^2 / (i (f_j - f) + gamma_j/2) ]

Linewidths are stored as FWHM and enter the Lorentzians as half widths.
The global phase is a convention of the probe rotating frame; only |S21| is
meant to be compared with data.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Mapping, Optional, Sequence

import numpy as np

from .dispersive import detuning, dispersive_shifts, dispersive_validity
from .errors import DomainError
from .params import CavityParams, DriveParams, MagnonModeParams, MaterialParams
from .steady import hysteresis_sweep

THREADS_ENV = "MAGNONLAB_THREADS"


def worker_count(requested: Optional[int] = None) -> int:
    """Worker pool size: ``requested``, capped by ``$MAGNONLAB_THREADS``."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass(frozen=True)
class SystemConfig:
    """
    Cavity plus its magnon modes.

    ``bias_to_frequency`` maps a mode label to ``(slope Hz/T, offset Hz)``;
    modes without an entry keep their fixed ``f_m`` when the bias is swept.
    """

    cavity: CavityParams
    modes: tuple[MagnonModeParams, ...]
    material: Optional[MaterialParams] = None
    bias_to_frequency: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise DomainError(f"mode labels must be unique, got {labels}")
        for m in self.modes:
            if m.g <= 0:
                raise DomainError(f"mode {m.label!r}: coupling must be positive")
        unknown = set(self.bias_to_frequency) - set(labels)
        if unknown:
            raise DomainError(f"bias map for unknown modes {sorted(unknown)}")

    def mode(self, label: str) -> MagnonModeParams:
        for m in self.modes:
            if m.label == label:
                return m
        raise KeyError(f"no mode labelled {label!r}")

    def mode_frequency(self, label: str, bias: float) -> float:
        if label in self.bias_to_frequency:
            slope, offset = self.bias_to_frequency[label]
            return slope * bias + offset
        return self.mode(label).f_m

    def at_bias(self, bias: float) -> "SystemConfig":
        modes = tuple(replace(m, f_m=self.mode_frequency(m.label, bias)) for m in self.modes)
        return replace(self, modes=modes)


@dataclass(frozen=True)
class SpectrumGrid:
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for ax in (self.axis1, self.axis2):
            if len(ax) > 1 and not np.all(np.diff(ax) > 0):
                raise DomainError("spectrum axes must be strictly increasing")
        if self.values.shape != (len(self.axis1), len(self.axis2)):
            raise DomainError("value matrix does not match the axes")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def _pulled_poles(config: SystemConfig, pulls: Optional[Mapping[str, float]]):
    f_c = config.cavity.f_c_bare
    poles = []
    for m in config.modes:
        f_j = m.f_m
        n = (pulls or {}).get(m.label, 0.0)
        if n:
            sh = dispersive_shifts(config.cavity, m, n)
            delta = detuning(config.cavity, m)
            f_j += sh.magnon_pull_kerr
            # moving the pole already re-dresses the cavity by g^2/(Delta - D_m) - g^2/Delta;
            # remove that so the net cavity pull is exactly the dispersive one
            f_c += sh.cavity_pull_kerr - (m.g**2 / (delta - sh.magnon_pull_kerr) - m.g**2 / delta)
        poles.append((f_j, m.g, m.gamma_m))
    return f_c, poles


def _s21_kernel(f, cavity: CavityParams, f_c, poles):
    f = np.asarray(f, dtype=float)
    denom = 1j * (f_c - f) + cavity.kappa / 2.0
    for f_j, g, gamma in poles:
        denom = denom + g**2 / (1j * (f_j - f) + gamma / 2.0)
    return np.sqrt(cavity.kappa1 * cavity.kappa2) / denom


def s21(f_p, config: SystemConfig, pulls: Optional[Mapping[str, float]] = None):
    """
    Complex transmission at probe frequency ``f_p`` (scalar or array, Hz).

    ``pulls`` maps mode labels to mean-field occupations; a pulled mode
    shifts by its Kerr magnon pull and the cavity by the Kerr cavity pull.
    """
    f_c, poles = _pulled_poles(config, pulls)
    out = _s21_kernel(f_p, config.cavity, f_c, poles)
    return out.item() if np.ndim(out) == 0 else out


def _map_rows(bias_chunk, probe, config):
    rows = np.empty((len(bias_chunk), len(probe)), dtype=complex)
    for i, b in enumerate(bias_chunk):
        rows[i] = s21(probe, config.at_bias(b))
    return rows


def avoided_crossing_map(
    bias_grid: Sequence[float],
    probe_grid: Sequence[float],
    config: SystemConfig,
    workers: Optional[int] = None,
) -> SpectrumGrid:
    """S21 on a (bias field, probe frequency) grid with no drive applied."""
    bias = np.asarray(bias_grid, dtype=float)
    probe = np.asarray(probe_grid, dtype=float)
    n = worker_count(workers)
    chunks = [c for c in np.array_split(bias, n) if len(c)]
    if n == 1 or len(chunks) == 1:
        values = _map_rows(bias, probe, config)
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            values = np.vstack(list(pool.map(partial(_map_rows, probe=probe, config=config), chunks)))
    return SpectrumGrid(axis1=bias, axis2=probe, values=values)


@dataclass(frozen=True)
class DriveSweep:
    """Drive-frequency trace at a fixed probe, in increasing ``f_d``."""

    f_d: np.ndarray
    s21_mag: np.ndarray
    magnon_shift: np.ndarray
    cavity_shift: np.ndarray
    n_roots: np.ndarray
    baseline: float
    power: float

    def rows(self):
        return list(zip(self.f_d, self.s21_mag, self.magnon_shift, self.cavity_shift))

    def dip_index(self) -> int:
        return int(np.argmin(self.s21_mag))

    def dip_center(self) -> float:
        """Drive frequency of the |S21| minimum, refined by a parabola through its neighbours."""
        i = self.dip_index()
        if 0 < i < len(self.f_d) - 1:
            y0, y1, y2 = self.s21_mag[i - 1 : i + 2]
            curv = y0 - 2 * y1 + y2
            if curv > 0:
                step = (self.f_d[i + 1] - self.f_d[i - 1]) / 2.0
                offset = 0.5 * (y0 - y2) / curv
                return float(self.f_d[i] + np.clip(offset, -0.5, 0.5) * step)
        return float(self.f_d[i])

    def dip_depth(self) -> float:
        return float(self.baseline - self.s21_mag.min())


def drive_sweep_response(
    drive_grid: Sequence[float],
    power: float,
    config: SystemConfig,
    f_p: float,
    driven_mode: str,
    direction: str = "up",
    attenuation_db: float = 0.0,
) -> DriveSweep:
    """
    Transmission at fixed probe ``f_p`` while the drive frequency is swept.

    At each drive frequency the driven mode's steady state is found by
    continuation along the sweep direction; its occupation sets the Kerr
    pulls, which move the cavity Lorentzian under the fixed probe.  Only the
    driven mode is pumped; the others stay at zero occupation.
    """
    mode = config.mode(driven_mode)
    if not dispersive_validity(config.cavity, mode).dispersive:
        raise DomainError(f"mode {driven_mode!r} is not dispersively coupled; drive sweep undefined")
    fd = np.sort(np.asarray(drive_grid, dtype=float))
    drives = [DriveParams(f_d=float(f), power_source=power, attenuation_db=attenuation_db) for f in fd]
    curve = hysteresis_sweep(config.cavity, mode, drives, direction)
    mags = np.array(
        [abs(s21(f_p, config, {driven_mode: p.state.occupation})) for p in curve.points]
    )
    return DriveSweep(
        f_d=fd,
        s21_mag=mags,
        magnon_shift=curve.shifts,
        cavity_shift=np.array([p.cavity_shift for p in curve.points]),
        n_roots=curve.n_roots,
        baseline=abs(s21(f_p, config)),
        power=drives[0].power if drives else 0.0,
    )


def drive_sweep_family(
    powers: Sequence[float],
    drive_grid: Sequence[float],
    config: SystemConfig,
    f_p: float,
    driven_mode: str,
    direction: str = "up",
    workers: Optional[int] = None,
    attenuation_db: float = 0.0,
) -> list[DriveSweep]:
    """Independent drive sweeps at several powers, run in a process pool."""
    task = partial(
        _sweep_at_power,
        drive_grid=tuple(drive_grid),
        config=config,
        f_p=f_p,
        driven_mode=driven_mode,
        direction=direction,
        attenuation_db=attenuation_db,
    )
    n = min(worker_count(workers), len(powers))
    if n <= 1:
        return [task(p) for p in powers]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(task, powers))


def _sweep_at_power(power, drive_grid, config, f_p, driven_mode, direction, attenuation_db):
    return drive_sweep_response(drive_grid, power, config, f_p, driven_mode, direction, attenuation_db)
