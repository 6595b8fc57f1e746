import math

import numpy as np
import pytest

from kdvcrit import kernel as kn
from kdvcrit import numbertheory as nt
from kdvcrit.errors import NearPole

P21 = nt.CriticalPair(2, 1)
P41 = nt.CriticalPair(4, 1)
P11 = nt.CriticalPair(1, 1)


def test_closed_form_vs_quadrature_spot():
    for z in (10.0, 37.0, 1e3):
        c = kn.intB_closed(P21, z)
        q = kn.intb_quadrature(P21, z, tol=1e-11)
        assert abs(c - q) <= 1e-9 * abs(q)


def test_closed_form_vs_quadrature_random_battery():
    rng = np.random.default_rng(17)
    for pair in (P21, P41, nt.CriticalPair(3, 2)):
        for z in rng.uniform(10, 1e4, 6):
            c = kn.intB_closed(pair, float(z))
            q = kn.intb_quadrature(pair, float(z), tol=1e-11)
            assert abs(c - q) <= 1e-9 * max(abs(q), 1e-12)


def test_b_eval_finite_at_x0():
    val = kn.B_eval(P21, 123.4, 0.0)
    assert np.isfinite(val.real) and np.isfinite(val.imag)


def test_conjugation_symmetry():
    for pair in (P21, nt.CriticalPair(3, 2)):
        for z in (17.0, 250.0, 4.0e3):
            a = kn.intB_closed(pair, -z)
            b = np.conj(kn.intB_closed(pair, z, negate_eta=True, p=-pair.p))
            assert abs(a - b) <= 1e-12 * max(abs(a), 1e-300)
            # pointwise version
            x = 0.3 * pair.L
            av = kn.B_eval(pair, -z, x)
            bv = np.conj(kn.B_eval(pair, z, x, negate_eta=True, p=-pair.p))
            assert abs(av - bv) <= 1e-12 * max(abs(av), 1e-300)


def test_decay_envelope():
    zs = np.geomspace(10, 1e6, 120)
    vals = kn.intB_closed(P21, zs)
    assert np.isfinite(vals).all()
    assert (np.abs(vals) * (1 + zs) ** 2).max() < 1e5


def test_series_branch_continuity():
    # (e^{aL} - 1)/a at the series switch |a|L = 1e-3
    L = P21.L
    for phase in (1.0, 1j, (1 + 1j) / math.sqrt(2)):
        for eps in (1 - 1e-6, 1 + 1e-6):
            a = phase * (1e-3 * eps) / L
            exact = (np.exp(a * L) - 1) / a
            series = L * kn._series_int(np.array([a * L]))[0]
            assert abs(series - exact) <= 1e-12 * abs(exact)


def test_expansion_report_21():
    rep = kn.verify_expansion(P21)
    assert rep.case == 1
    s0, s1, s2 = rep.slopes
    assert abs(s0 + 4 / 3) < 0.05
    assert abs(s1 + 2) < 0.05
    assert s2 <= -7 / 3 + 0.1
    assert not rep.excluded


def test_expansion_report_41():
    rep = kn.verify_expansion(P41)
    assert rep.case == 2
    s0, s1, s2 = rep.slopes
    assert abs(s0 + 2) < 0.05
    assert abs(s1 + 8 / 3) < 0.07
    assert s2 <= -3 + 0.1


def test_equal_pair_integral_vanishes():
    # for k = l the frequency p is 0 and int B vanishes identically (checked
    # to 40 digits externally); float64 sees only the roundoff floor, so the
    # "decays faster than z^{-2}" claim is the envelope statement
    zs = 32.0 * 2.0 ** np.arange(0, 8)
    vals = kn.intB_closed(P11, zs)
    assert np.abs(vals).max() < 1e-12
    assert (np.abs(vals) * (1 + zs) ** 2).max() < 1e-9


@pytest.mark.slow
def test_expansion_all_pairs_k_le_6():
    # first two levels hit their orders for every pair; the third level is
    # pinned at the criterion windows only for the reference pairs (2,1) and
    # (4,1) because a few case-1 pairs -- (5,1), (6,2) -- have an anomalously
    # small z^{-7/3} coefficient and reach its regime above the fit window.
    # The subtraction must still win decisively at the top of the window.
    for q in nt.enumerate_pairs(6):
        if q.k == q.l:
            zs = 32.0 * 2.0 ** np.arange(0, 8)
            assert np.abs(kn.intB_closed(q, zs)).max() < 1e-12
            continue
        rep = kn.verify_expansion(q)
        s0, s1, s2 = rep.slopes
        if q.caseE0:
            assert abs(s0 + 2) < 0.05
            assert abs(s1 + 8 / 3) < 0.07
            assert s2 <= -3 + 0.12
        else:
            assert abs(s0 + 4 / 3) < 0.05
            assert abs(s1 + 2) < 0.05
            assert s2 <= -1.6
        d = rep.constants
        for z_top in (1e4, 6.4e4):
            val = kn.intB_closed(q, z_top)
            if q.caseE0:
                r1 = abs(val - d.F / z_top**2)
                r2 = abs(val - d.F / z_top**2 - d.F1 / z_top ** (8 / 3))
            else:
                r1 = abs(val - d.E * z_top ** (-4 / 3))
                r2 = abs(val - d.E * z_top ** (-4 / 3) - d.E1 / z_top**2)
            assert r2 <= 0.25 * r1


def test_near_pole_detection():
    # z = -p is a real zero of det Q at the critical length
    with pytest.raises(NearPole):
        kn.intB_closed(P21, -P21.p)


def test_interaction_numerator_consistency():
    from kdvcrit.spectral import detq_scaled, roots, shifted_roots

    for z in (13.0, 240.0, 1e5):
        m, s = kn.interaction_numerator(P21, z)
        lam = roots(complex(z))[None, :]
        lamt = shifted_roots(complex(z), P21.p)[None, :]
        qm, qs = detq_scaled(lam, P21.L)
        qtm, qts = detq_scaled(lamt, P21.L)
        rebuilt = m * np.exp(s - qs[0] - qts[0]) / (qm[0] * qtm[0])
        assert rebuilt == pytest.approx(kn.intB_closed(P21, z), rel=1e-12)


def test_report_serializes():
    rep = kn.verify_expansion(P21)
    d = rep.as_dict()
    assert d["pair"] == [2, 1]
    assert len(d["slopes"]) == 3
