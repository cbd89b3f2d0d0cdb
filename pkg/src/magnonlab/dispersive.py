"""
Dispersive-regime effective model: Kerr-induced frequency pulls of the
cavity and magnon, the corrected Rabi frequency, and the second-order
Frohlich-Nakajima generator coefficients.

All frequencies are ordinary frequencies (Hz).  ``occupation`` is the
mean-field magnon number, a real number >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateError, DomainError
from .params import TWO_PI, CavityParams, DriveParams, MagnonModeParams, drive_rabi

#: |Delta| must exceed this multiple of g to count as dispersive
DISPERSIVE_RATIO = 10.0


@dataclass(frozen=True)
class ShiftReport:
    cavity_pull_static: float
    cavity_pull_kerr: float
    magnon_pull_kerr: float
    pulled_f_c: float
    pulled_f_m: float
    #: the common approximation Delta_m ~ K n, without the (1 - 2 g^2/Delta^2) factor
    magnon_pull_kerr_approx: float


@dataclass(frozen=True)
class FnTransform:
    lambda1: float
    lambda2: float
    valid: bool


@dataclass(frozen=True)
class DispersiveReport:
    ratio: float
    dispersive: bool


def detuning(cavity: CavityParams, mode: MagnonModeParams) -> float:
    """Cavity-magnon detuning ``f_c - f_m`` (Hz, bare frequencies)."""
    return cavity.f_c_bare - mode.f_m


def _checked_detuning(cavity, mode) -> float:
    delta = detuning(cavity, mode)
    if delta == 0:
        raise DegenerateError(
            f"mode {mode.label!r} is degenerate with the cavity; the dispersive model is undefined"
        )
    return delta


def dispersive_shifts(
    cavity: CavityParams, mode: MagnonModeParams, occupation: float = 0.0
) -> ShiftReport:
    if occupation < 0:
        raise DomainError("occupation must be >= 0")
    delta = _checked_detuning(cavity, mode)
    static = mode.g**2 / delta
    ratio = 2.0 * mode.g**2 / delta**2
    kn = mode.kerr_K * occupation
    cav = ratio * kn
    mag = (1.0 - ratio) * kn
    return ShiftReport(
        cavity_pull_static=static,
        cavity_pull_kerr=cav,
        magnon_pull_kerr=mag,
        pulled_f_c=cavity.f_c_bare + static + cav,
        pulled_f_m=mode.f_m - static + mag,
        magnon_pull_kerr_approx=kn,
    )


def fn_coefficients(
    cavity: CavityParams,
    mode: MagnonModeParams,
    drive: DriveParams,
    occupation: float = 0.0,
) -> FnTransform:
    """
    Coefficients of the generator ``V = l1 (a+ b - a b+) + l2 (a+ - a)``.

    ``l1 = -g / (Delta - 2 K n)`` and ``l2 = (Omega_d / delta_c) l1`` where
    ``delta_c = f_c - f_d``.  ``valid`` reports the small-parameter condition
    ``|l1| < 1``.
    """
    denom = detuning(cavity, mode) - 2.0 * mode.kerr_K * occupation
    if denom == 0:
        raise DegenerateError("Delta - 2 K n vanishes")
    delta_c = cavity.f_c_bare - drive.f_d
    if delta_c == 0:
        raise DegenerateError("drive is resonant with the bare cavity")
    lam1 = -mode.g / denom
    lam2 = drive_rabi(drive, mode) / (TWO_PI * delta_c) * lam1
    return FnTransform(lambda1=lam1, lambda2=lam2, valid=abs(lam1) < 1.0)


def effective_rabi(
    cavity: CavityParams,
    mode: MagnonModeParams,
    drive: DriveParams,
    occupation: float = 0.0,
) -> float:
    """Drive strength (rad/s) after the dispersive transformation."""
    delta_c = cavity.f_c_bare - drive.f_d
    if delta_c == 0:
        raise DegenerateError("drive is resonant with the bare cavity")
    shifts = dispersive_shifts(cavity, mode, occupation)
    pull = shifts.cavity_pull_static + shifts.cavity_pull_kerr
    return (1.0 - pull / (2.0 * delta_c)) * drive_rabi(drive, mode)


def dispersive_validity(cavity: CavityParams, mode: MagnonModeParams) -> DispersiveReport:
    if mode.g <= 0:
        raise DomainError("dispersive validity needs g > 0")
    delta = detuning(cavity, mode)
    # strict: |Delta| == 10 g is flagged as non-dispersive
    return DispersiveReport(ratio=abs(delta) / mode.g, dispersive=abs(delta) > DISPERSIVE_RATIO * mode.g)
