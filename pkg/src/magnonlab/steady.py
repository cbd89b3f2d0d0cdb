"""
Mean-field steady states of the driven cavity-magnon system.

Two levels of description are provided:

* the reduced shift-power relation ``(D^2 + (gamma_m/2)^2) D = c P`` for the
  Kerr shift ``D`` of a resonantly pumped mode, with its small- and
  large-power limits;
* the full steady state of the coupled amplitude equations for an arbitrary
  drive frequency, obtained by eliminating the cavity amplitude
  ``A = -i g B / (i delta_c + kappa/2)``.  Writing ``y = 2 K |B|^2`` the
  magnon equation becomes the real cubic

      y [(delta_0 + y)^2 + (Gamma/2)^2] = 2 K Omega^2

  with ``delta_0 = f_m - f_d - g^2 delta_c / |i delta_c + kappa/2|^2`` and
  ``Gamma = gamma_m + g^2 kappa / |i delta_c + kappa/2|^2``.  The
  single-excitation ``+K`` correction to the Kerr term is neglected.

Solver tolerances: 1e-3 Hz absolute on frequencies, 1e-10 relative on
residuals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .dispersive import detuning, dispersive_shifts
from .errors import DegenerateError, DomainError
from .params import (
    TWO_PI,
    CavityParams,
    DriveParams,
    MagnonModeParams,
    drive_constant_hz,
    drive_rabi,
    power_from_rabi,
    rabi_from_power,
)

__all__ = [
    "SteadyState",
    "SweepPoint",
    "ShiftCurve",
    "solve_shift_cubic",
    "limit_shift",
    "rabi_from_power",
    "power_from_rabi",
    "real_cubic_roots",
    "solve_full_steady_state",
    "solve_resonant_steady_state",
    "steady_state_residuals",
    "hysteresis_sweep",
]

FREQ_ATOL = 1e-3
RESIDUAL_RTOL = 1e-10


# ---------------------------------------------------------------------------
# reduced shift-power cubic
# ---------------------------------------------------------------------------

def _unit_cubic_root(r):
    """Real root of ``t^3 + t = r`` (vectorized, cancellation free).

    Cardano gives ``t = u - v`` with ``u^3 - v^3 = r`` and ``u v = 1/3``;
    rewriting ``u - v = r / (u^2 + u v + v^2)`` keeps every term positive.
    """
    r = np.asarray(r, dtype=float)
    a = np.abs(r)
    u = np.cbrt(a / 2.0 + np.hypot(a / 2.0, 1.0 / math.sqrt(27.0)))
    v = 1.0 / (3.0 * u)
    t = a / (u * u + 1.0 / 3.0 + v * v)
    # one Newton step; f' = 3 t^2 + 1 >= 1 so the step is always well defined
    t = t - (t**3 + t - a) / (3.0 * t * t + 1.0)
    return np.sign(r) * t


def solve_shift_cubic(gamma_m, drive_c, power):
    """
    Kerr shift ``D`` (Hz) solving ``[D^2 + (gamma_m/2)^2] D - c P = 0``.

    The cubic is strictly increasing for ``gamma_m > 0``, so the real root is
    unique, and it is non-negative for ``P >= 0``.  Accepts scalars or arrays
    (broadcast together).

    Parameters
    ----------
    gamma_m : float or array
        FWHM linewidth of the mode, Hz.
    drive_c : float or array
        Drive constant in kg^-1 m^-2.
    power : float or array
        Delivered drive power, W.
    """
    gamma_m, drive_c, power = np.broadcast_arrays(
        np.asarray(gamma_m, float), np.asarray(drive_c, float), np.asarray(power, float)
    )
    if np.any(gamma_m <= 0):
        raise DomainError("gamma_m must be positive")
    if np.any(power < 0):
        raise DomainError("power must be >= 0")
    half = gamma_m / 2.0
    q = drive_constant_hz(drive_c) * power
    shift = half * _unit_cubic_root(q / half**3)
    return shift.item() if shift.ndim == 0 else shift


def limit_shift(gamma_m, drive_c, power, regime: str):
    """Small-power ``cP/(gamma_m/2)^2`` or large-power ``(cP)^(1/3)`` law, Hz."""
    q = drive_constant_hz(np.asarray(drive_c, float)) * np.asarray(power, float)
    if np.any(q < 0):
        raise DomainError("power must be >= 0")
    if regime == "small":
        out = q / (np.asarray(gamma_m, float) / 2.0) ** 2
    elif regime == "large":
        out = np.cbrt(q)
    else:
        raise ValueError(f"regime must be 'small' or 'large', got {regime!r}")
    out = np.asarray(out)
    return out.item() if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# general real cubic
# ---------------------------------------------------------------------------

def _polish(coeffs, x, steps=3):
    b, c, d = coeffs
    for _ in range(steps):
        f = ((x + b) * x + c) * x + d
        df = (3.0 * x + 2.0 * b) * x + c
        if df == 0:
            break
        x_new = x - f / df
        f_new = ((x_new + b) * x_new + c) * x_new + d
        if abs(f_new) >= abs(f):
            break
        x = x_new
    return x


def real_cubic_roots(b: float, c: float, d: float) -> list[float]:
    """
    Sorted real roots of ``x^3 + b x^2 + c x + d``.

    Closed form on the depressed cubic (Cardano for one real root, the
    trigonometric form for three), then a guarded Newton polish on the
    original polynomial.  Coefficients should be pre-scaled to order one.
    """
    shift = -b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        s = math.sqrt(disc)
        big = -q / 2.0 - math.copysign(s, q)
        u = np.cbrt(big)
        t = [u - p / (3.0 * u) if u != 0 else 0.0]
    elif p == 0:
        t = [0.0]
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        t = [m * math.cos(theta - k * TWO_PI / 3.0) for k in range(3)]
    roots = sorted(float(_polish((b, c, d), ti + shift)) for ti in t)
    return roots


# ---------------------------------------------------------------------------
# full steady state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteadyState:
    """Mean-field fixed point; amplitudes are dimensionless, ``kerr_shift = K |B|^2`` in Hz."""

    b_amp: complex
    a_amp: complex
    occupation: float
    stable: bool
    branch: int
    kerr_shift: float = 0.0


def _dressing(cavity: CavityParams, mode: MagnonModeParams, f_d: float):
    """Detuning ``delta_0`` and total damping ``Gamma`` after cavity elimination (Hz)."""
    delta_m = mode.f_m - f_d
    delta_c = cavity.f_c_bare - f_d
    denom = delta_c**2 + (cavity.kappa / 2.0) ** 2
    delta_0 = delta_m - mode.g**2 * delta_c / denom
    gamma_eff = mode.gamma_m + mode.g**2 * cavity.kappa / denom
    return delta_0, gamma_eff, delta_c


def _is_stable(b_amp: complex, delta_0: float, gamma_eff: float, nonlin: float) -> bool:
    # dB/dt = -(i delta_0 + Gamma/2) B - i N |B|^2 B - i Omega,  N = 2K
    jz = -(1j * delta_0 + gamma_eff / 2.0) - 2j * nonlin * abs(b_amp) ** 2
    jzb = -1j * nonlin * b_amp**2
    s, d = jz + jzb, jz - jzb
    jac = np.array([[s.real, -d.imag], [s.imag, d.real]])
    return bool(np.all(np.linalg.eigvals(jac).real < 0))


def _make_state(cavity, mode, f_d, omega, occupation_guess, delta_0, gamma_eff, delta_c, branch):
    nonlin = 2.0 * mode.kerr_K
    delta_eff = delta_0 + nonlin * occupation_guess
    b_amp = -1j * omega / (1j * delta_eff + gamma_eff / 2.0)
    a_amp = -1j * mode.g * b_amp / (1j * delta_c + cavity.kappa / 2.0)
    occ = abs(b_amp) ** 2
    return SteadyState(
        b_amp=complex(b_amp),
        a_amp=complex(a_amp),
        occupation=occ,
        stable=_is_stable(b_amp, delta_0, gamma_eff, nonlin),
        branch=branch,
        kerr_shift=mode.kerr_K * occ,
    )


def solve_full_steady_state(
    cavity: CavityParams, mode: MagnonModeParams, drive: DriveParams
) -> list[SteadyState]:
    """
    All steady states of the driven mode at drive frequency ``drive.f_d``.

    Returns one state per real positive root of the occupation cubic,
    ordered by occupation (``branch`` 0 is the lowest).  Zero drive gives the
    single trivial state.
    """
    if detuning(cavity, mode) == 0:
        raise DegenerateError("mode is degenerate with the cavity")
    omega = drive_rabi(drive, mode) / TWO_PI
    delta_0, gamma_eff, delta_c = _dressing(cavity, mode, drive.f_d)

    def make(x, k):
        return _make_state(cavity, mode, drive.f_d, omega, x, delta_0, gamma_eff, delta_c, k)

    if omega == 0:
        return [make(0.0, 0)]
    if mode.kerr_K == 0:
        return [make(omega**2 / (delta_0**2 + gamma_eff**2 / 4.0), 0)]

    nonlin = 2.0 * mode.kerr_K
    half = gamma_eff / 2.0
    rhs = nonlin * omega**2
    scale = max(half, abs(delta_0), abs(rhs) ** (1.0 / 3.0))
    d0, h = delta_0 / scale, half / scale
    roots = real_cubic_roots(2.0 * d0, d0 * d0 + h * h, -rhs / scale**3)
    ys = [u * scale for u in roots if u * rhs > 0]
    occs = sorted(y / nonlin for y in ys)
    return [make(x, k) for k, x in enumerate(occs)]


def steady_state_residuals(
    cavity: CavityParams, mode: MagnonModeParams, drive: DriveParams, state: SteadyState
) -> tuple[float, float]:
    """Relative residuals of the cavity and magnon amplitude equations at ``state``."""
    omega = drive_rabi(drive, mode) / TWO_PI
    delta_c = cavity.f_c_bare - drive.f_d
    delta_m = mode.f_m - drive.f_d
    a, b = state.a_amp, state.b_amp
    g = mode.g
    r_cav = -1j * delta_c * a - 1j * g * b - cavity.kappa / 2.0 * a
    r_mag = (
        -1j * delta_m * b
        - 2j * mode.kerr_K * abs(b) ** 2 * b
        - 1j * g * a
        - 1j * omega
        - mode.gamma_m / 2.0 * b
    )
    cav_scale = max(abs(g * b), abs(delta_c * a), 1e-300)
    mag_scale = max(omega, abs(delta_m * b), abs(mode.gamma_m * b), 1e-300)
    return abs(r_cav) / cav_scale, abs(r_mag) / mag_scale


def solve_resonant_steady_state(
    cavity: CavityParams,
    mode: MagnonModeParams,
    power: Optional[float] = None,
    rabi: Optional[float] = None,
) -> tuple[SteadyState, float]:
    """
    Steady state with the drive locked to the dressed, Kerr-shifted magnon.

    The drive frequency satisfies
    ``f_d = f_m - g^2/Delta + (1 - 2 g^2/Delta^2) K |B|^2`` self-consistently.
    Returns ``(state, f_d)``.  Requires ``K > 0``.
    """
    if mode.kerr_K <= 0:
        raise DomainError("resonant tracking needs a positive Kerr coefficient")
    if rabi is None:
        rabi = rabi_from_power(power if power is not None else 0.0, mode.drive_c, mode.kerr_K)
    omega = rabi / TWO_PI
    target = mode.kerr_K * omega**2
    base = dispersive_shifts(cavity, mode, 0.0)
    ratio = 2.0 * mode.g**2 / detuning(cavity, mode) ** 2

    def f_drive(y):
        return mode.f_m - base.cavity_pull_static + (1.0 - ratio) * y

    if target == 0:
        fd = f_drive(0.0)
        return solve_full_steady_state(cavity, mode, DriveParams(f_d=fd, rabi=rabi))[0], fd

    def residual(y):
        delta_0, gamma_eff, _ = _dressing(cavity, mode, f_drive(y))
        return y * ((delta_0 + 2.0 * y) ** 2 + gamma_eff**2 / 4.0) - target

    hi = max(target ** (1.0 / 3.0), target / (mode.gamma_m / 2.0) ** 2)
    while residual(hi) < 0:
        hi *= 2.0
    y = brentq(residual, 0.0, hi, xtol=FREQ_ATOL * 1e-3, rtol=4 * np.finfo(float).eps, maxiter=500)
    fd = f_drive(y)
    states = solve_full_steady_state(cavity, mode, DriveParams(f_d=fd, rabi=rabi))
    best = min(states, key=lambda s: abs(s.kerr_shift - y))
    return best, fd


# ---------------------------------------------------------------------------
# continuation sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    drive: DriveParams
    state: SteadyState
    n_roots: int
    shift: float
    cavity_shift: float

    @property
    def power(self) -> float:
        return self.drive.power

    @property
    def branch(self) -> int:
        return self.state.branch


@dataclass(frozen=True)
class ShiftCurve:
    """Continuation result, stored in increasing order of the swept variable."""

    points: tuple[SweepPoint, ...]
    variable: str
    direction: str

    def values(self) -> np.ndarray:
        return np.array([_swept_value(p.drive, self.variable) for p in self.points])

    @property
    def powers(self) -> np.ndarray:
        return np.array([p.power for p in self.points])

    @property
    def shifts(self) -> np.ndarray:
        return np.array([p.shift for p in self.points])

    @property
    def occupations(self) -> np.ndarray:
        return np.array([p.state.occupation for p in self.points])

    @property
    def n_roots(self) -> np.ndarray:
        return np.array([p.n_roots for p in self.points])


def _swept_value(drive: DriveParams, variable: str) -> float:
    if variable == "f_d":
        return drive.f_d
    if variable == "rabi":
        return drive.rabi
    return drive.power


def _swept_variable(grid: Sequence[DriveParams]) -> str:
    if len({d.f_d for d in grid}) > 1:
        return "f_d"
    if all(d.rabi is not None for d in grid):
        return "rabi"
    return "power"


def hysteresis_sweep(
    cavity: CavityParams,
    mode: MagnonModeParams,
    drive_grid: Sequence[DriveParams],
    direction: str = "up",
) -> ShiftCurve:
    """
    Follow one steady-state branch along a drive grid.

    The grid may vary either the drive frequency or the drive strength, and
    must be strictly monotone in it.  The sweep starts on the lowest stable
    branch and then picks, at every point, the stable state whose occupation
    is nearest the previously selected one.  Points are returned in
    increasing order of the swept variable regardless of ``direction``.
    """
    if len(drive_grid) == 0:
        raise DomainError("empty drive grid")
    if direction not in ("up", "down"):
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    variable = _swept_variable(drive_grid)
    values = np.array([_swept_value(d, variable) for d in drive_grid], dtype=float)
    steps = np.diff(values)
    if len(values) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError(f"drive grid is not strictly monotone in {variable}")
    ordered = sorted(drive_grid, key=lambda d: _swept_value(d, variable))
    walk = ordered if direction == "up" else ordered[::-1]

    points = []
    previous = None
    for drive in walk:
        states = solve_full_steady_state(cavity, mode, drive)
        candidates = [s for s in states if s.stable] or states
        if previous is None:
            chosen = candidates[0]
        else:
            chosen = min(candidates, key=lambda s: abs(s.occupation - previous))
        previous = chosen.occupation
        shifts = dispersive_shifts(cavity, mode, chosen.occupation)
        points.append(
            SweepPoint(
                drive=drive,
                state=chosen,
                n_roots=len(states),
                shift=shifts.magnon_pull_kerr,
                cavity_shift=shifts.cavity_pull_kerr,
            )
        )
    if direction == "down":
        points.reverse()
    return ShiftCurve(points=tuple(points), variable=variable, direction=direction)
