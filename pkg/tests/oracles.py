"""Independent reference computations used to check the solvers."""
import math

import numpy as np
from scipy.signal import find_peaks


def shift_by_bisection(gamma_m, drive_c, power, rtol=1e-14):
    """Root of (x^2 + (gamma/2)^2) x = cP / (2 pi)^3 by bisection on [0, 2 (cP)^(1/3)]."""
    q = drive_c * power / (2 * math.pi) ** 3
    if q == 0:
        return 0.0
    h2 = (gamma_m / 2) ** 2
    lo, hi = 0.0, 2.0 * q ** (1 / 3)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if (mid * mid + h2) * mid - q > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def sign_changes(coeffs, lo, hi, n=20001):
    """Real roots of a polynomial on [lo, hi], counted by sign changes on a fine grid."""
    x = np.linspace(lo, hi, n)
    v = np.polyval(coeffs, x)
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))


def peak_frequencies(freq, mag, count=2):
    """The ``count`` tallest local maxima of ``mag``, as frequencies in increasing order."""
    idx, props = find_peaks(mag, height=0)
    top = idx[np.argsort(props["peak_heights"])[::-1][:count]]
    return np.sort(freq[top])


def parabolic_argmax(x, y):
    i = int(np.argmax(y))
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    offset = 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)
    return x[i] + offset * (x[1] - x[0])
