import pytest
from hypothesis import given
from hypothesis import strategies as st

from magnonlab.dispersive import (
    DISPERSIVE_RATIO,
    detuning,
    dispersive_shifts,
    dispersive_validity,
    effective_rabi,
    fn_coefficients,
)
from magnonlab.errors import DegenerateError, DomainError
from magnonlab.params import TWO_PI, CavityParams, DriveParams, MagnonModeParams


def mode_at(cavity, delta, g=42e6, K=1e-8):
    return MagnonModeParams(cavity.f_c_bare - delta, 24.3e6, g, kerr_K=K)


modes = st.builds(
    lambda d, g, K: (d, g, K),
    st.floats(50e6, 2e9),
    st.floats(1e6, 4e6),
    st.floats(1e-10, 1e-6),
)


class TestShifts:
    def test_static_pull(self, cavity, kittel):
        r = dispersive_shifts(cavity, kittel)
        assert r.cavity_pull_static == pytest.approx(3.2073e6, abs=1e2)
        assert r.pulled_f_c == pytest.approx(10.1035e9, abs=0.1e6)
        assert r.cavity_pull_kerr == 0.0 and r.magnon_pull_kerr == 0.0

    def test_zero_kerr(self, cavity):
        m = mode_at(cavity, 550e6, K=0.0)
        r = dispersive_shifts(cavity, m, 1e15)
        assert r.cavity_pull_kerr == 0.0 and r.magnon_pull_kerr == 0.0

    def test_reference_ratio(self, cavity, kittel):
        r = dispersive_shifts(cavity, kittel, 3e15)
        assert r.cavity_pull_kerr / r.magnon_pull_kerr == pytest.approx(0.011663 / 0.98834, rel=1e-4)
        assert r.cavity_pull_kerr / r.magnon_pull_kerr == pytest.approx(0.0118, abs=1e-4)

    def test_approximate_magnon_pull(self, cavity, kittel):
        r = dispersive_shifts(cavity, kittel, 2e15)
        assert r.magnon_pull_kerr_approx == kittel.kerr_K * 2e15

    def test_degenerate(self, cavity):
        with pytest.raises(DegenerateError):
            dispersive_shifts(cavity, mode_at(cavity, 0.0))

    def test_negative_occupation(self, cavity, kittel):
        with pytest.raises(DomainError):
            dispersive_shifts(cavity, kittel, -1.0)

    @given(modes, st.floats(1.0, 1e16))
    def test_exact_ratio_law(self, cavity, m, n):
        d, g, K = m
        r = dispersive_shifts(cavity, mode_at(cavity, d, g, K), n)
        x = 2 * g**2 / d**2
        assert r.cavity_pull_kerr == pytest.approx(x / (1 - x) * r.magnon_pull_kerr, rel=1e-12)

    @given(modes, st.floats(1.0, 1e16))
    def test_blue_shifts(self, cavity, m, n):
        d, g, K = m
        r = dispersive_shifts(cavity, mode_at(cavity, d, g, K), n)
        assert r.cavity_pull_kerr > 0 and r.magnon_pull_kerr > 0

    @given(modes, st.floats(0.0, 1e16), st.floats(0.0, 1e16))
    def test_no_kerr_no_occupation_dependence(self, cavity, m, n1, n2):
        d, g, _ = m
        mode = mode_at(cavity, d, g, 0.0)
        a, b = dispersive_shifts(cavity, mode, n1), dispersive_shifts(cavity, mode, n2)
        assert (a.pulled_f_c, a.pulled_f_m) == (b.pulled_f_c, b.pulled_f_m)


class TestFn:
    def test_lambda1(self, cavity, kittel):
        fn = fn_coefficients(cavity, kittel, DriveParams(9.55e9, rabi=0.0))
        assert fn.lambda1 == pytest.approx(-0.07636, abs=1e-5)
        assert fn.lambda2 == 0.0
        assert fn.valid

    @given(st.floats(1e3, 1e9), st.floats(-500e6, 500e6).filter(lambda x: abs(x) > 1e3))
    def test_ratio_identity(self, cavity, kittel, omega, det):
        drive = DriveParams(cavity.f_c_bare - det, rabi=omega)
        fn = fn_coefficients(cavity, kittel, drive, 1e14)
        delta_c = cavity.f_c_bare - drive.f_d
        assert fn.lambda2 / fn.lambda1 == pytest.approx(omega / (TWO_PI * delta_c), rel=1e-12)

    @given(modes)
    def test_lambda1_at_zero_kerr_occupation(self, cavity, m):
        d, g, K = m
        fn = fn_coefficients(cavity, mode_at(cavity, d, g, K), DriveParams(1e9, rabi=1.0))
        assert fn.lambda1 == pytest.approx(-g / d, rel=1e-12)

    def test_degenerate_denominators(self, cavity, kittel):
        with pytest.raises(DegenerateError):
            fn_coefficients(cavity, kittel, DriveParams(cavity.f_c_bare, rabi=1.0))
        n_bad = detuning(cavity, kittel) / (2 * kittel.kerr_K)
        with pytest.raises(DegenerateError):
            fn_coefficients(cavity, kittel, DriveParams(9.5e9, rabi=1.0), n_bad)


class TestEffectiveRabi:
    def test_no_coupling(self, cavity):
        m = mode_at(cavity, 550e6, g=0.0)
        assert effective_rabi(cavity, m, DriveParams(9.5e9, rabi=7.0)) == 7.0

    def test_reference_factor(self, cavity, kittel):
        drive = DriveParams(cavity.f_c_bare - 550e6, rabi=1.0)
        assert effective_rabi(cavity, kittel, drive) == pytest.approx(1 - 3.2073 / 1100, abs=1e-6)
        assert effective_rabi(cavity, kittel, drive) == pytest.approx(0.99708, abs=1e-5)

    def test_decreases_with_occupation(self, cavity, kittel):
        drive = DriveParams(cavity.f_c_bare - 550e6, rabi=1.0)
        vals = [effective_rabi(cavity, kittel, drive, n) for n in (0, 1e14, 1e15, 1e16)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_degenerate(self, cavity, kittel):
        with pytest.raises(DegenerateError):
            effective_rabi(cavity, kittel, DriveParams(cavity.f_c_bare, rabi=1.0))


class TestValidity:
    def test_reference_values(self, cavity, kittel):
        r = dispersive_validity(cavity, kittel)
        assert r.ratio == pytest.approx(13.095, abs=1e-3) and r.dispersive

    def test_not_dispersive(self, cavity):
        assert not dispersive_validity(cavity, mode_at(cavity, 100e6)).dispersive

    def test_boundary_is_strict(self):
        cav = CavityParams(10e9, 1e6, 1e6, 1e6)
        m = MagnonModeParams(10e9 - 420e6, 24e6, 42e6)
        r = dispersive_validity(cav, m)
        assert r.ratio == pytest.approx(DISPERSIVE_RATIO, rel=1e-12)
        assert not r.dispersive

    def test_needs_coupling(self, cavity):
        with pytest.raises(DomainError):
            dispersive_validity(cavity, mode_at(cavity, 550e6, g=0.0))
