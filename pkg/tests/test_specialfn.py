import numpy as np
import pytest
from scipy import integrate

from potscat.specialfn import (
    DomainError,
    SectorPoint,
    cylinder_bessel,
    green_kernel,
    green_kernel_gradient,
    hankel0_sector,
    in_sector,
    kernel_disc_average,
)

# frozen reference values, generated by the series oracles below
J0_AT_1 = 0.7651976865579666
Y0_AT_1 = 0.0882569642156769
KERNEL2D_AT_1_1 = -0.0220642410539192 + 0.1912994215394916j  # (i/4) H0(1)


def series_j0(x, terms=40):
    """Ascending power series sum_k (-x^2/4)^k / (k!)^2 (independent oracle)."""
    total, term = 0.0, 1.0
    for k in range(terms):
        total += term
        term *= -(x * x) / 4.0 / (k + 1) ** 2
    return total


def series_y0(x, terms=40):
    """Neumann series Y0 = (2/pi)[(ln(x/2)+gamma) J0 + sum h_k (x^2/4)^k ...]."""
    gamma = 0.5772156649015328606
    total = 0.0
    term = 1.0
    h = 0.0
    for k in range(1, terms):
        term *= -(x * x) / 4.0 / k**2
        h += 1.0 / k
        total += -term * h
    return (2.0 / np.pi) * ((np.log(x / 2.0) + gamma) * series_j0(x) + total)


class TestCylinderBessel:
    def test_frozen_values_match_series_oracle(self):
        assert series_j0(1.0) == pytest.approx(J0_AT_1, abs=1e-14)
        assert series_y0(1.0) == pytest.approx(Y0_AT_1, abs=1e-13)
        J, Y = cylinder_bessel(0, 1.0)
        assert J == pytest.approx(J0_AT_1, abs=1e-10)
        assert Y == pytest.approx(Y0_AT_1, abs=1e-10)

    def test_small_argument_limit(self):
        J, _ = cylinder_bessel(0, 1e-8)
        assert J == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [0, 1, 3, 11, 60, 200])
    def test_wronskian(self, n):
        x = np.logspace(-2, 3, 60)
        J, Y = cylinder_bessel(n, x)
        if n == 0:
            J1, Y1 = cylinder_bessel(1, x)
        else:
            # Z' = Z_{n-1} - (n/x) Z_n keeps orders within the supported range
            J1, Y1 = cylinder_bessel(n - 1, x)
        # high orders over/underflow double precision at small x; assert
        # wherever the factors are representable
        ok = (np.isfinite(Y) & np.isfinite(Y1) & (np.abs(J) > 0) & (np.abs(J1) > 0))
        assert ok.sum() >= 20
        x, J, Y, J1, Y1 = x[ok], J[ok], Y[ok], J1[ok], Y1[ok]
        if n == 0:
            dJ, dY = -J1, -Y1
        else:
            dJ = J1 - n / x * J
            dY = Y1 - n / x * Y
        wr = J * dY - Y * dJ - 2.0 / (np.pi * x)
        assert np.max(np.abs(wr)) < 1e-10

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            cylinder_bessel(0, 0.0)
        with pytest.raises(DomainError):
            cylinder_bessel(0, -2.0)
        with pytest.raises(DomainError):
            cylinder_bessel(201, 1.0)
        with pytest.raises(DomainError):
            cylinder_bessel(-1, 1.0)


class TestSector:
    def test_membership(self):
        assert in_sector(1.0 + 0.5j)
        assert in_sector(-3.0 + 2.0j)
        assert not in_sector(1j)
        assert not in_sector(0.0)
        with pytest.raises(DomainError):
            SectorPoint(2j)
        SectorPoint(5.0 - 1.0j)

    def test_real_axis_agreement(self):
        J, Y = cylinder_bessel(0, 1.0)
        oracle = 0.25j * (J + 1j * Y)
        assert oracle == pytest.approx(KERNEL2D_AT_1_1, abs=1e-9)
        val = hankel0_sector(1.0 + 0j, 1.0)
        assert val == pytest.approx(KERNEL2D_AT_1_1, abs=1e-9)

    def test_agreement_grid(self):
        worst = 0.0
        for kappa in (1.0, 3.0, 10.0, 27.0, 50.0):
            for r in (0.1, 0.7, 2.3, 5.0):
                J, Y = cylinder_bessel(0, kappa * r)
                ref = 0.25j * (J + 1j * Y)
                worst = max(worst, abs(hankel0_sector(kappa + 0j, r) - ref) / abs(ref))
        assert worst < 1e-8

    def test_decay_envelope(self):
        lam = 2.0 + 1.0j
        rs = np.array([5.0, 10.0, 20.0])
        vals = np.abs(hankel0_sector(lam, rs))
        env = np.exp(-lam.imag * rs) * abs(lam) ** -0.5 * rs**-0.5
        c = vals[0] / env[0]
        assert np.all(vals <= 1.05 * c * env)

    def test_schwarz_reflection(self):
        for lam in (3.0 + 0.5j, 7.0 - 1.2j, 1.5 + 0.2j):
            a = hankel0_sector(lam, 1.3)
            b = hankel0_sector(-np.conj(lam), 1.3)
            assert a == pytest.approx(np.conj(b), rel=1e-12)

    def test_outside_sector_raises(self):
        with pytest.raises(DomainError):
            hankel0_sector(0.5j, 1.0)
        with pytest.raises(DomainError):
            hankel0_sector(2.0 + 0j, -1.0)


class TestGreenKernel:
    def test_3d_closed_form(self):
        val = green_kernel(3, 2.0, 0.5)
        assert val == pytest.approx(np.exp(1j) / (2.0 * np.pi), rel=1e-14)
        assert val == pytest.approx(0.08599178 + 0.13392427j, abs=1e-7)

    def test_3d_static_limit(self):
        assert green_kernel(3, 0.0, 1.0) == pytest.approx(1.0 / (4.0 * np.pi), rel=1e-15)

    def test_2d_real(self):
        assert green_kernel(2, 1.0, 1.0) == pytest.approx(KERNEL2D_AT_1_1, abs=1e-9)

    def test_singularity(self):
        with pytest.raises(DomainError):
            green_kernel(3, 1.0, 0.0)

    def test_sector_envelope_bound(self, rng):
        # |g2(lam, r)| <= C e^{-Im lam r} |lam|^{-1/2} r^{-1/2}, single fitted C
        pts = []
        for _ in range(12):
            mag = rng.uniform(1.5, 20.0)
            ang = rng.uniform(-np.pi / 4, np.pi / 4)
            pts.append(mag * np.exp(1j * ang))
        rs = rng.uniform(0.2, 3.0, size=8)
        ratios = []
        for lam in pts:
            vals = np.abs(np.atleast_1d(green_kernel(2, lam, rs)))
            env = np.exp(-lam.imag * rs) * abs(lam) ** -0.5 * rs**-0.5
            ratios.extend(vals / env)
        c = max(ratios)
        assert c < 1.0  # envelope with C = 1 already dominates on the sample

    def test_gradient_closed_form_3d(self):
        x = np.array([0.4, -0.2, 0.6])
        y = np.array([-0.1, 0.3, 0.1])
        r = np.linalg.norm(x - y)
        e = (x - y) / r
        g = green_kernel_gradient(3, 3.0, x, y)
        expected = e * (3j - 1.0 / r) * np.exp(3j * r) / (4.0 * np.pi * r)
        assert np.allclose(g, expected, rtol=1e-13)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_gradient_central_difference(self, dim, rng):
        x = rng.normal(size=dim)
        y = x + 0.7 * rng.normal(size=dim)
        kappa = 3.0
        g = green_kernel_gradient(dim, kappa, x, y)
        h = 1e-5
        for ax in range(dim):
            e = np.zeros(dim)
            e[ax] = h
            fd = (green_kernel(dim, kappa, np.linalg.norm(x + e - y))
                  - green_kernel(dim, kappa, np.linalg.norm(x - e - y))) / (2 * h)
            assert abs(g[ax] - fd) <= 1e-6 * abs(fd)

    def test_gradient_antisymmetry(self, rng):
        x = rng.normal(size=3)
        y = rng.normal(size=3)
        gx = green_kernel_gradient(3, 2.0, x, y)
        # dependence through x - y only
        gy_shift = green_kernel_gradient(3, 2.0, y, x)
        assert np.allclose(gx, -gy_shift, rtol=1e-14)

    def test_gradient_coincident(self):
        with pytest.raises(DomainError):
            green_kernel_gradient(2, 1.0, np.zeros(2), np.zeros(2))


class TestDiscAverage:
    def test_matches_quadrature_real(self):
        a = 0.05
        for kappa in (6.0, 20.0):
            ref_re = integrate.quad(lambda r: np.real(green_kernel(2, kappa, r)) * r, 0, a)[0]
            ref_im = integrate.quad(lambda r: np.imag(green_kernel(2, kappa, r)) * r, 0, a)[0]
            ref = 2.0 * np.pi * (ref_re + 1j * ref_im) / (np.pi * a * a)
            assert kernel_disc_average(kappa, a) == pytest.approx(ref, rel=1e-7)

    def test_reflection(self):
        lam = 9.0 - 0.7j
        a = kernel_disc_average(lam, 0.04)
        b = kernel_disc_average(-np.conj(lam), 0.04)
        assert a == pytest.approx(np.conj(b), rel=1e-13)
