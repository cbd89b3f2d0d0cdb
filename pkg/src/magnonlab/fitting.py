"""
Least-squares parameter recovery with a bounded, restarted Nelder-Mead simplex.

Positive parameters are optimized in log coordinates; the rest in linear
coordinates divided by a per-parameter scale.  Restarts begin from seeded
jitters of the initial point, so a fit is a pure function of
``(data, init, bounds, seed)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError
from .spectra import SystemConfig, s21, worker_count
from .steady import solve_shift_cubic

DEFAULT_SEED = 20170509
SIMPLEX_RTOL = 1e-9


@dataclass(frozen=True)
class FitResult:
    values: dict[str, float]
    residual: float
    iterations: int
    converged: bool
    seed: int
    best_restart: int = 0
    n_restarts: int = 1
    message: str = ""
    trace: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    def __getitem__(self, name: str) -> float:
        return self.values[name]


@dataclass(frozen=True)
class _Run:
    index: int
    x: np.ndarray
    fun: float
    nit: int
    success: bool
    spread: float
    trace: tuple


class _Transform:
    def __init__(self, log, scale):
        self.log = np.asarray(log, bool)
        self.scale = np.asarray(scale, float)

    def to_internal(self, x):
        x = np.asarray(x, float)
        # a zero lower bound in log coordinates is -inf
        with np.errstate(divide="ignore", invalid="ignore"):
            logged = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
        return np.where(self.log, logged, x / self.scale)

    def to_external(self, z):
        z = np.asarray(z, float)
        out = z * self.scale
        out[self.log] = np.exp(z[self.log])
        return out


def _run_nelder_mead(index, fun, z0, zbounds, maxiter, xatol):
    trace = []
    n = len(z0)
    simplex = np.vstack([z0] + [z0 + 0.05 * np.eye(n)[i] for i in range(n)])
    lo, hi = zbounds[:, 0], zbounds[:, 1]
    # reflect initial vertices that leave the box back inside it
    simplex = np.where(simplex > hi, z0 - 0.05, simplex)
    simplex = np.clip(simplex, lo, hi)
    res = minimize(
        fun,
        z0,
        method="Nelder-Mead",
        bounds=list(map(tuple, zbounds)),
        callback=lambda zk: trace.append(tuple(np.asarray(zk, float))),
        options={
            "initial_simplex": simplex,
            "xatol": xatol,
            # convergence is judged on simplex size alone
            "fatol": math.inf,
            "maxiter": maxiter,
            "maxfev": 4 * maxiter,
        },
    )
    verts = res.final_simplex[0]
    spread = float(np.max(np.abs(verts - verts[0])))
    return _Run(index, np.asarray(res.x), float(res.fun), int(res.nit), bool(spread <= xatol * 10), spread, tuple(trace))


def optimizer(
    objective: Callable[[np.ndarray], float],
    init: Sequence[float],
    bounds: Sequence[tuple[float, float]],
    seed: int = DEFAULT_SEED,
    *,
    names: Optional[Sequence[str]] = None,
    log: Optional[Sequence[bool]] = None,
    scale: Optional[Sequence[float]] = None,
    restarts: int = 4,
    jitter: float = 0.1,
    maxiter: Optional[int] = None,
    xatol: float = SIMPLEX_RTOL / 10,
    workers: Optional[int] = 1,
) -> FitResult:
    """
    Minimize ``objective`` over a box with restarted Nelder-Mead.

    Restart 0 starts at ``init``; restarts ``1..restarts-1`` start from
    seeded jitters of it (``jitter`` is the standard deviation in internal
    coordinates).  A final polishing run restarts from the best point found.
    The best result wins, ties broken by restart index.

    ``log`` selects log coordinates per parameter (default: wherever both
    bounds are positive); linear coordinates are divided by ``scale``
    (default ``max(|init|, 1)``).  ``converged`` means the final simplex is
    smaller than ``xatol`` in internal coordinates, i.e. about 1e-9 relative.

    Raises
    ------
    ConvergenceError
        If the objective is non-finite at every start point.
    """
    x0 = np.asarray(init, float)
    n = len(x0)
    bnds = np.asarray(bounds, float).reshape(n, 2)
    if np.any(x0 < bnds[:, 0]) or np.any(x0 > bnds[:, 1]):
        raise DomainError("initial values must lie inside the bounds")
    if log is None:
        log = bnds[:, 0] > 0
    if np.any(np.asarray(log, bool) & (x0 <= 0)):
        raise DomainError("log-coordinate parameters need positive initial values")
    if scale is None:
        scale = np.maximum(np.abs(x0), 1.0)
    tf = _Transform(log, scale)
    zb = np.column_stack([tf.to_internal(bnds[:, 0]), tf.to_internal(bnds[:, 1])])
    z_init = tf.to_internal(x0)
    maxiter = maxiter or 2000 * n

    def fun(z):
        val = objective(tf.to_external(z))
        return float(val) if np.isfinite(val) else math.inf

    rng = np.random.default_rng(seed)
    starts = [z_init] + [
        np.clip(z_init + jitter * rng.standard_normal(n), zb[:, 0], zb[:, 1]) for _ in range(max(restarts, 1) - 1)
    ]
    starts = [(i, z) for i, z in enumerate(starts) if np.isfinite(fun(z))]
    if not starts:
        raise ConvergenceError("objective is non-finite at every start point")

    def run(item):
        i, z = item
        return _run_nelder_mead(i, fun, z, zb, maxiter, xatol)

    nw = min(worker_count(workers), len(starts))
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(s) for s in starts]
    best = min(runs, key=lambda r: (r.fun, r.index))
    polish = _run_nelder_mead(len(starts), fun, best.x, zb, maxiter, xatol)
    runs.append(polish)
    best = min(runs, key=lambda r: (r.fun, r.index))

    names = list(names) if names is not None else [f"x{i}" for i in range(n)]
    x_best = tf.to_external(best.x)
    converged = best.success and math.isfinite(best.fun)
    return FitResult(
        values={k: float(v) for k, v in zip(names, x_best)},
        residual=best.fun,
        iterations=sum(r.nit for r in runs),
        converged=converged,
        seed=seed,
        best_restart=best.index,
        n_restarts=len(runs),
        message="converged" if converged else f"simplex spread {best.spread:.3g} above tolerance",
        trace=tuple(tuple(tf.to_external(np.array(z))) for z in best.trace),
    )


def _default_bounds(init: Mapping[str, float], bounds: Optional[Mapping[str, tuple[float, float]]]):
    bounds = dict(bounds or {})
    return [bounds.get(k, (v * 1e-3, v * 1e3)) for k, v in init.items()]


def _check_problem(n_obs: int, n_free: int):
    if n_free == 0:
        raise DomainError("no free parameters")
    if n_obs < 2 * n_free:
        raise DomainError(f"{n_obs} observations are too few for {n_free} free parameters (need >= {2 * n_free})")


# ---------------------------------------------------------------------------
# shift versus power
# ---------------------------------------------------------------------------

def fit_shift_power(
    data,
    init: Mapping[str, float],
    fixed_gamma: Optional[float] = None,
    seed: int = DEFAULT_SEED,
    bounds: Optional[Mapping[str, tuple[float, float]]] = None,
    restarts: int = 4,
    workers: Optional[int] = 1,
    maxiter: Optional[int] = None,
) -> FitResult:
    """
    Fit ``(gamma_m, drive_c)`` to measured Kerr shifts.

    Parameters
    ----------
    data : sequence of (power W, shift Hz) pairs, or a (2, N) array
    init : mapping with ``drive_c`` and, unless ``fixed_gamma`` is given, ``gamma_m``
    fixed_gamma : float, optional
        Hold the linewidth at this value (Hz) and fit ``drive_c`` alone.

    The forward model is :func:`~magnonlab.steady.solve_shift_cubic` and the
    loss is the plain sum of squared shift residuals, reported in Hz^2.
    """
    power, shift = _as_columns(data)
    free = {"drive_c": float(init["drive_c"])}
    if fixed_gamma is None:
        free = {"gamma_m": float(init["gamma_m"]), **free}
    _check_problem(len(power), len(free))
    names = list(free)
    norm = float(np.sum(shift**2)) or 1.0

    def model(x):
        p = dict(zip(names, x))
        gamma = p.get("gamma_m", fixed_gamma)
        return solve_shift_cubic(gamma, p["drive_c"], power)

    def objective(x):
        return float(np.sum((model(x) - shift) ** 2)) / norm

    res = optimizer(
        objective,
        list(free.values()),
        _default_bounds(free, bounds),
        seed,
        names=names,
        restarts=restarts,
        workers=workers,
        maxiter=maxiter,
    )
    if fixed_gamma is not None:
        res = replace(res, values={"gamma_m": float(fixed_gamma), **res.values})
    return replace(res, residual=res.residual * norm)


def shift_power_model(power, gamma_m: float, drive_c: float):
    return solve_shift_cubic(gamma_m, drive_c, np.asarray(power, float))


def synthetic_shift_data(gamma_m, drive_c, power, noise: float = 0.0, seed: int = DEFAULT_SEED):
    """Shifts from the forward model with multiplicative Gaussian noise of relative size ``noise``."""
    power = np.asarray(power, float)
    shift = solve_shift_cubic(gamma_m, drive_c, power)
    if noise:
        rng = np.random.default_rng(seed)
        shift = shift * (1.0 + noise * rng.standard_normal(shift.shape))
    return power, shift


def _as_columns(data):
    arr = np.asarray(data, float)
    if arr.ndim != 2:
        raise DomainError("data must be a table of (x, y) pairs")
    if arr.shape[1] == 2 and arr.shape[0] != 2:
        arr = arr.T
    elif arr.shape[0] != 2:
        raise DomainError("data must have exactly two columns")
    return arr[0], arr[1]


# ---------------------------------------------------------------------------
# transmission spectra
# ---------------------------------------------------------------------------

CAVITY_FIELDS = ("f_c", "kappa1", "kappa2", "kappa_int")
MODE_FIELDS = ("f_m", "gamma_m", "g")


def spectrum_parameter(config: SystemConfig, name: str) -> float:
    """Read a fit parameter (``f_c``, ``kappa1``, ... or ``g:<label>`` style) from ``config``."""
    if name in CAVITY_FIELDS:
        return getattr(config.cavity, "f_c_bare" if name == "f_c" else name)
    fld, _, label = name.partition(":")
    if fld not in MODE_FIELDS or not label:
        raise KeyError(f"unknown spectrum parameter {name!r}")
    return getattr(config.mode(label), fld)


def apply_spectrum_parameters(config: SystemConfig, values: Mapping[str, float]) -> SystemConfig:
    cav = {}
    modes = {m.label: {} for m in config.modes}
    for name, v in values.items():
        if name in CAVITY_FIELDS:
            cav["f_c_bare" if name == "f_c" else name] = float(v)
        else:
            fld, _, label = name.partition(":")
            if fld not in MODE_FIELDS or label not in modes:
                raise KeyError(f"unknown spectrum parameter {name!r}")
            modes[label][fld] = float(v)
    new_modes = tuple(replace(m, **modes[m.label]) for m in config.modes)
    return replace(config, cavity=replace(config.cavity, **cav), modes=new_modes)


def fit_spectrum(
    data,
    config: SystemConfig,
    free: Sequence[str],
    init: Optional[Mapping[str, float]] = None,
    loss: str = "linear",
    seed: int = DEFAULT_SEED,
    bounds: Optional[Mapping[str, tuple[float, float]]] = None,
    restarts: int = 4,
    workers: Optional[int] = 1,
    maxiter: Optional[int] = None,
) -> FitResult:
    """
    Fit ``|S21|`` to a magnitude trace.

    ``free`` names the parameters to vary (``f_c``, ``kappa1``, ``kappa2``,
    ``kappa_int`` and ``f_m:<label>``, ``gamma_m:<label>``, ``g:<label>``);
    all others keep their ``config`` values, which also supply the initial
    values unless ``init`` overrides them.  ``loss="log"`` compares
    ``log|S21|`` instead, which weights deep dips more.
    """
    if loss not in ("linear", "log"):
        raise ValueError(f"loss must be 'linear' or 'log', got {loss!r}")
    freq, mag = _as_columns(data)
    start = {k: float((init or {}).get(k, spectrum_parameter(config, k))) for k in free}
    _check_problem(len(freq), len(start))
    names = list(start)
    width = config.cavity.kappa + sum(m.gamma_m for m in config.modes)
    is_freq = [k == "f_c" or k.startswith("f_m:") for k in names]
    log = [not f for f in is_freq]
    scale = [width if f else 1.0 for f in is_freq]
    target = np.log(np.maximum(mag, 1e-300)) if loss == "log" else mag

    def objective(x):
        try:
            cfg = apply_spectrum_parameters(config, dict(zip(names, x)))
        except DomainError:
            return math.inf
        model = np.abs(s21(freq, cfg))
        if loss == "log":
            model = np.log(np.maximum(model, 1e-300))
        return float(np.sum((model - target) ** 2))

    bnds = _default_bounds(start, bounds)
    return optimizer(
        objective, list(start.values()), bnds, seed, names=names, log=log, scale=scale,
        restarts=restarts, workers=workers, maxiter=maxiter,
    )


def synthetic_spectrum(freq, config: SystemConfig, noise: float = 0.0, seed: int = DEFAULT_SEED):
    """``|S21|`` over ``freq`` plus additive Gaussian noise of ``noise`` times the peak magnitude."""
    freq = np.asarray(freq, float)
    mag = np.abs(s21(freq, config))
    if noise:
        rng = np.random.default_rng(seed)
        mag = mag + noise * mag.max() * rng.standard_normal(mag.shape)
    return freq, mag
