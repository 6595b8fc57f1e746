import itertools
import math

import numpy as np
import pytest

from kdvcrit import spectral as sp
from kdvcrit.errors import DomainError, NearPole

L21 = 2 * math.pi * math.sqrt(7 / 3)


def test_roots_at_zero():
    lam = sp.roots(0.0)
    assert np.allclose(sorted(lam, key=lambda z: z.imag), [-1j, 0, 1j], atol=1e-15)


def test_root_residuals_batch():
    rng = np.random.default_rng(7)
    z = rng.uniform(-1e6, 1e6, 4000)
    lam = sp.roots(z)
    res = np.abs(lam**3 + lam + 1j * z[:, None])
    assert (res / (1 + np.abs(z))[:, None]).max() < 1e-12
    vr = sp.vieta_residuals(lam, z)
    assert (vr / (1 + np.abs(z))[:, None]).max() < 1e-12


def test_roots_near_collision():
    for dz in (0.0, 1e-12, 1e-7, 1e-4):
        z = sp.COLLISION_Z + dz
        lam = sp.roots(z)
        assert np.abs(lam**3 + lam + 1j * z).max() < 1e-12


def test_complex_z_roots():
    rng = np.random.default_rng(8)
    z = rng.uniform(-50, 50, 100) + 1j * rng.uniform(-3, 3, 100)
    lam = sp.roots(z)
    assert (np.abs(lam**3 + lam + 1j * z[:, None]) / (1 + np.abs(z))[:, None]).max() < 1e-12


def test_large_z_asymptotic_example():
    lam = sp.roots(1e6)
    target = sp.MU[2] * 100 - 1 / (3 * sp.MU[2] * 100)
    assert abs(lam[2] - target) <= 1e-8
    assert sp.MU[1] == pytest.approx(1j, abs=1e-15)  # Re lambda_2 -> 0


def test_asymptotic_orders_plain():
    zg = 1e3 * 2.0 ** np.arange(0, 10.5)
    lam = sp.roots(zg)
    e1 = np.abs(lam - sp.asymptotic_roots(zg, 1)).max(axis=1)
    e2 = np.abs(lam - sp.asymptotic_roots(zg, 2)).max(axis=1)
    s1 = np.polyfit(np.log10(zg), np.log10(e1), 1)[0]
    s2 = np.polyfit(np.log10(zg), np.log10(e2), 1)[0]
    assert abs(s1 + 1 / 3) < 0.05
    assert abs(s2 + 5 / 3) < 0.05


def test_asymptotic_orders_shifted():
    p = 0.3
    zg = 1e3 * 2.0 ** np.arange(0, 10.5)
    lamt = sp.shifted_roots(zg, p)
    slopes = []
    for order in (1, 2, 3):
        err = np.abs(lamt - sp.asymptotic_roots(zg, order, p=p, shifted=True)).max(axis=1)
        slopes.append(np.polyfit(np.log10(zg), np.log10(err), 1)[0])
    assert abs(slopes[0] + 1 / 3) < 0.05
    assert abs(slopes[1] + 2 / 3) < 0.05  # the p-linear z^{-2/3} term dominates
    assert abs(slopes[2] + 5 / 3) < 0.05


def test_asymptotic_rejects_nonpositive():
    with pytest.raises(DomainError):
        sp.asymptotic_roots(-1.0, 1)
    with pytest.raises(DomainError):
        sp.asymptotic_roots(1.0, 4)


def test_shifted_roots_are_conjugates():
    p = 0.207
    for z in (3.3, 42.0, 997.0):
        tl = sp.shifted_roots(z, p)
        ref = np.conj(sp.roots(z - p))
        assert np.abs(np.sort_complex(tl) - np.sort_complex(ref)).max() < 1e-12 * (1 + abs(z))


def test_frame_h_zero_at_critical():
    fr = sp.frame(0.0, 2 * math.pi)
    assert abs(fr.H) < 1e-13
    assert abs(fr.Xi) > 0.1
    # non-critical length: H(0) = 1 - cos L
    fr1 = sp.frame(0.0, 1.0)
    assert fr1.H == pytest.approx(1 - math.cos(1.0), rel=1e-12)


def test_gh_permutation_invariance():
    for z in (0.7, 5.0, -12.3, 300.0):
        fr = sp.frame(z, L21)
        for perm in itertools.permutations(range(3)):
            lp = fr.lam[list(perm)][None, :]
            g = sp.p_scaled(lp, L21)
            q = sp.detq_scaled(lp, L21)
            x = sp.xi(lp)[0]
            g_val = g[0][0] * np.exp(g[1][0]) / x
            h_val = q[0][0] * np.exp(q[1][0]) / x
            assert abs(g_val - fr.G) <= 1e-13 * abs(fr.G)
            assert abs(h_val - fr.H) <= 1e-13 * abs(fr.H)


def test_divided_difference_matches_quotient():
    for z in (0.9, 17.0, -250.0):
        fr = sp.frame(z, L21)
        lam = fr.lam[None, :]
        assert sp._dd2(-1.0, lam, L21)[0] == pytest.approx(fr.H, rel=1e-12)
        assert -sp._dd2(+1.0, lam, L21)[0] == pytest.approx(fr.G, rel=1e-12)


def test_gh_continuous_through_collision():
    # Xi vanishes at z = 2/(3 sqrt 3); G, H are entire so the fallback value
    # must match the limit of the raw quotient from nearby
    zc = sp.COLLISION_Z
    gm0, gs0, hm0, hs0 = sp.gh_scaled(zc, L21)
    gm1, gs1, hm1, hs1 = sp.gh_scaled(zc + 1e-7, L21)
    h_at = hm0 * np.exp(hs0)
    h_near = hm1 * np.exp(hs1)
    assert abs(h_at - h_near) < 1e-5 * abs(h_at)
    g_at = gm0 * np.exp(gs0)
    g_near = gm1 * np.exp(gs1)
    assert abs(g_at - g_near) < 1e-5 * abs(g_at)


def test_noncritical_h_no_real_zeros():
    z = np.linspace(-40, 40, 4001).astype(complex)
    _, _, hm, hs = sp.gh_scaled(z, 1.0)
    assert np.min(np.abs(hm) * np.exp(hs)) > 1e-10


def test_h_magnitude_asymptote():
    # |H| ~ exp(Re(-lambda_1) L) / (3 z^{2/3}) with the order-2 expansion
    # root; relative residual decays like z^{-2/3}
    zs = np.geomspace(1e3, 1e6, 25)
    _, _, hm, hs = sp.gh_scaled(zs.astype(complex), L21)
    lam2 = sp.asymptotic_roots(zs, 2)
    pred = (-lam2[:, 0].real) * L21 - np.log(3 * zs ** (2 / 3))
    resid = np.abs(np.exp(np.log(np.abs(hm)) + hs - pred) - 1)
    slope = np.polyfit(np.log10(zs), np.log10(resid), 1)[0]
    assert slope <= -0.6


def test_scaled_matches_unscaled_below_overflow():
    rng = np.random.default_rng(11)
    for z in rng.uniform(-1e3, 1e3, 25):
        lam = sp.roots(complex(z))
        direct = np.sum(
            (np.roll(lam, -1) - lam) * np.exp(-np.roll(lam, -2) * L21)
        )
        m, s = sp.detq_scaled(lam[None, :], L21)
        assert m[0] * np.exp(s[0]) == pytest.approx(direct, rel=1e-12)


def test_y_hat_boundary_and_linearity():
    for z in (0.9, 33.0, 812.0):
        assert abs(sp.y_hat(z, 0.0, 1.3 + 0.4j, L21)) < 1e-12
        assert abs(sp.y_hat(z, L21, 1.3 + 0.4j, L21)) < 1e-12
        assert sp.y_hat(z, 0.5 * L21, 0.0, L21) == 0.0
        one = sp.y_hat(z, 0.37 * L21, 1.0, L21)
        two = sp.y_hat(z, 0.37 * L21, -2.0 + 1.0j, L21)
        assert two == pytest.approx((-2 + 1j) * one, rel=1e-13)


def test_dx_y_hat_matches_finite_difference():
    h = 1e-5
    for z in (1.7, 54.0):
        # second-order one-sided stencil (x = 0 is the domain edge)
        fd = (
            4.0 * sp.y_hat(z, h, 1.0, L21)
            - sp.y_hat(z, 2 * h, 1.0, L21)
            - 3.0 * sp.y_hat(z, 0.0, 1.0, L21)
        ) / (2 * h)
        an = sp.dx_y_hat0(z, 1.0, L21)
        assert abs(fd - an) <= 1e-8 * max(1.0, abs(an))


def test_y_hat_near_pole_raises():
    # at a critical length det Q vanishes at z = -p (all exp(eta_j L) equal)
    p = 0.20782656212951653
    with pytest.raises(NearPole):
        sp.y_hat(-p, 1.0, 1.0, L21)


def test_paley_wiener_indicator():
    T = 2.0
    dt = 1e-3
    u = np.ones(int(T / dt) + 1)
    rep = sp.paley_wiener_check(u, dt, T, L=1.0, z_max=40.0, n_z=161)
    assert rep.bound_holds
    # C is the L^1-norm scale: |u-hat(0)| = T
    assert 0.5 * T <= rep.C_uhat <= 1.5 * T


def test_paley_wiener_zero():
    rep = sp.paley_wiener_check(np.zeros(100), 1e-2, 1.0, L=1.0, z_max=20.0, n_z=41)
    assert rep.bound_holds
    assert rep.C_uhat == 0.0
