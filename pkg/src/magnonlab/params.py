"""
Parameter types, unit conventions and closed-form derived quantities.

Unit convention
---------------
Every stored frequency and linewidth is an *ordinary* frequency in Hz, and
every linewidth is a full width at half maximum.  Formula kernels that need
angular rates multiply by ``TWO_PI`` locally.  Powers are watts; dBm only
appears at I/O boundaries.

The drive-coupling constant ``drive_c`` is stored in SI units
(kg^-1 m^-2, i.e. rad^3 s^-3 W^-1).  :func:`drive_constant_hz` is the single
place where it is converted to the Hz^3/W form used by the cubic solvers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy import constants

from .errors import DomainError

TWO_PI = 2.0 * math.pi
HBAR = constants.hbar
MU0 = constants.mu_0
#: gyromagnetic ratio of YIG as an ordinary frequency per tesla
GYRO_HZ_PER_T = 28e9


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class CavityParams:
    """Bare cavity mode with its three FWHM loss channels (all Hz)."""

    f_c_bare: float
    kappa1: float
    kappa2: float
    kappa_int: float

    def __post_init__(self):
        _require(self.f_c_bare > 0, "f_c_bare must be positive")
        for name in ("kappa1", "kappa2", "kappa_int"):
            _require(getattr(self, name) >= 0, f"{name} must be >= 0")
        _require(self.kappa > 0, "total cavity linewidth must be positive")

    @property
    def kappa(self) -> float:
        return self.kappa1 + self.kappa2 + self.kappa_int


@dataclass(frozen=True)
class MagnonModeParams:
    """
    One lumped magnon mode.

    Parameters
    ----------
    f_m : float
        Mode frequency, Hz.
    gamma_m : float
        FWHM linewidth, Hz.
    g : float
        Photon coupling, Hz.
    kerr_K : float
        Kerr coefficient, Hz per excitation. Zero disables the nonlinearity.
    drive_c : float
        Drive-coupling constant in kg^-1 m^-2, so that ``K * Omega_d**2 = c * P``
        in angular units.
    label : str
        Mode name, unique inside a :class:`~magnonlab.spectra.SystemConfig`.
    """

    f_m: float
    gamma_m: float
    g: float
    kerr_K: float = 0.0
    drive_c: float = 0.0
    label: str = "kittel"

    def __post_init__(self):
        _require(self.gamma_m > 0, f"mode {self.label!r}: gamma_m must be positive")
        _require(self.g >= 0, f"mode {self.label!r}: g must be >= 0")
        _require(self.drive_c >= 0, f"mode {self.label!r}: drive_c must be >= 0")


@dataclass(frozen=True)
class MaterialParams:
    """
    Magnetic constants of the sample, the source of ``K`` and ``f_m``.

    ``gyro`` is an ordinary frequency per tesla (28 GHz/T for YIG).  When
    ``diameter`` is given the sample is a sphere and ``V_m`` must equal
    ``pi d^3 / 6`` (to 0.1 %).
    """

    K_an: float
    M_sat: float
    V_m: float
    S_total: float
    gyro: float = GYRO_HZ_PER_T
    mu0: float = MU0
    diameter: Optional[float] = None

    def __post_init__(self):
        _require(self.V_m > 0, "V_m must be positive")
        _require(self.M_sat > 0, "M_sat must be positive")
        _require(self.S_total > 0, "S_total must be positive")
        if self.diameter is not None:
            expected = sphere_volume(self.diameter)
            _require(
                math.isclose(self.V_m, expected, rel_tol=1e-3),
                f"V_m={self.V_m:g} m^3 does not match a sphere of diameter {self.diameter:g} m",
            )

    @classmethod
    def sphere(cls, diameter: float, **kwargs) -> "MaterialParams":
        return cls(V_m=sphere_volume(diameter), diameter=diameter, **kwargs)


@dataclass(frozen=True)
class DriveParams:
    """Pump tone applied to the magnon. ``rabi`` is angular (rad/s) when given."""

    f_d: float
    power_source: float = 0.0
    attenuation_db: float = 0.0
    rabi: Optional[float] = None

    def __post_init__(self):
        _require(self.power_source >= 0, "drive power must be >= 0")
        _require(self.attenuation_db >= 0, "attenuation must be >= 0 dB")
        if self.rabi is not None:
            _require(self.rabi >= 0, "rabi frequency must be >= 0")

    @property
    def power(self) -> float:
        """Power delivered to the sample, W."""
        return delivered_power(self)


@dataclass(frozen=True)
class ProbeParams:
    f_p: float
    power: float

    def __post_init__(self):
        _require(self.power >= 0, "probe power must be >= 0")


def sphere_volume(diameter: float) -> float:
    return math.pi * diameter**3 / 6.0


def drive_constant_hz(drive_c: float) -> float:
    """Convert ``c`` from kg^-1 m^-2 (rad^3 s^-3 / W) to Hz^3 / W."""
    return drive_c / TWO_PI**3


def kerr_coefficient(material: MaterialParams) -> float:
    """
    Kerr coefficient ``mu0 K_an gamma^2 / (M^2 V_m)`` as an ordinary frequency.

    The gyromagnetic ratio enters in angular units; the angular result is
    divided by 2 pi.  The sign follows ``K_an``.
    """
    _require(material.V_m > 0 and material.M_sat > 0, "volume and magnetization must be positive")
    gyro_ang = TWO_PI * material.gyro
    k_ang = material.mu0 * material.K_an * gyro_ang**2 / (material.M_sat**2 * material.V_m)
    return k_ang / TWO_PI


def kittel_frequency(
    material: Optional[MaterialParams],
    B0: float,
    anisotropy_offset: Optional[float] = None,
) -> float:
    """
    Magnon mode frequency ``gyro * B0 - 2 K S`` in Hz.

    The anisotropy offset ``2 K S`` is computed from ``material`` unless
    ``anisotropy_offset`` (Hz) is passed directly; with no material the
    gyromagnetic ratio defaults to 28 GHz/T.
    """
    _require(B0 >= 0, "B0 must be >= 0")
    gyro = material.gyro if material is not None else GYRO_HZ_PER_T
    if anisotropy_offset is None:
        anisotropy_offset = 0.0 if material is None else 2.0 * material.S_total * kerr_coefficient(material)
    return gyro * B0 - anisotropy_offset


def cooperativity(cavity: CavityParams, mode: MagnonModeParams) -> float:
    # homogeneous of degree zero in the rates, so Hz works as well as rad/s
    return 4.0 * mode.g**2 / (cavity.kappa * mode.gamma_m)


def probe_photon_number(
    probe: ProbeParams, cavity: CavityParams, f_c: Optional[float] = None
) -> float:
    """
    Mean intracavity photon number created by the probe tone.

    ``f_c`` is the cavity frequency the probe detuning is measured from; it
    defaults to the bare frequency but normally should be the dressed one.
    """
    if f_c is None:
        f_c = cavity.f_c_bare
    w_p = TWO_PI * probe.f_p
    det = TWO_PI * (probe.f_p - f_c)
    k1 = TWO_PI * cavity.kappa1
    k = TWO_PI * cavity.kappa
    return k1 * probe.power / (HBAR * w_p * (det**2 + (k / 2.0) ** 2))


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    _require(p_w > 0, "power must be positive to express in dBm")
    return 10.0 * math.log10(p_w) + 30.0


def delivered_power(drive: DriveParams) -> float:
    return drive.power_source * 10.0 ** (-drive.attenuation_db / 10.0)


def rabi_from_power(power: float, drive_c: float, kerr_K: float) -> float:
    """
    Angular Rabi frequency from drive power through ``K Omega_d^2 = c P``.

    ``kerr_K`` is in Hz and ``drive_c`` in kg^-1 m^-2; the result is rad/s.
    """
    _require(kerr_K > 0, "rabi_from_power needs a positive Kerr coefficient")
    _require(power >= 0, "power must be >= 0")
    return math.sqrt(drive_c * power / (TWO_PI * kerr_K))


def power_from_rabi(rabi: float, drive_c: float, kerr_K: float) -> float:
    _require(kerr_K > 0, "power_from_rabi needs a positive Kerr coefficient")
    _require(drive_c > 0, "power_from_rabi needs a positive drive constant")
    return TWO_PI * kerr_K * rabi**2 / drive_c


def drive_rabi(drive: DriveParams, mode: MagnonModeParams) -> float:
    """Rabi frequency (rad/s) of ``drive`` on ``mode``: explicit value, else from power."""
    if drive.rabi is not None:
        return drive.rabi
    if drive.power == 0:
        return 0.0
    return rabi_from_power(drive.power, mode.drive_c, mode.kerr_K)
