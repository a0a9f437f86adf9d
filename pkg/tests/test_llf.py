import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdbound.catalog import schnakenberg, schnakenberg_llf, weinberger, weinberger_lyapunov
from rdbound.llf import (INCONCLUSIVE, REFUTED, VERIFIED, LevelSetConstants, PropertyReport,
                         candidate_from_json, check_p1, check_p2, check_p3, check_p4, check_p5,
                         compute_B_K, fan_directions, find_K, find_underbars, level_line_max,
                         level_set_extent, promote_separable, ratio_sup, verify_llf)
from rdbound.model import RTF, Term

A, B, C = 0.1, 1.0, 43.0
U2V2 = RTF((Term(1.0, 2), Term(1.0, 0, 2)))


@pytest.fixture(scope="module")
def cand():
    return verify_llf(schnakenberg_llf(C), schnakenberg(A, B))


def test_example_llf_fully_verified(cand):
    assert [r.verdict for r in cand.reports.values()] == [VERIFIED] * 5
    assert cand.verdict == VERIFIED
    assert cand.K >= max(cand.K_underbar, cand.u_underbar, cand.v_underbar)


def test_c_choice_exceeds_requirement():
    assert C > max((2 * A + 4 * B) / A, 2 * A + 4 * B) == 42.0


def test_k_underbar_within_analytic_estimate(cand):
    u_t = A + 2 * B + C / 2
    v_t = max(4 * A + 8 * B + 2 * C, (6 * A + 12 * B + C) / (A * C), (A + 2 * B) / C)
    assert u_t == pytest.approx(23.6) and v_t == pytest.approx(94.4)
    assert 0 < cand.K_underbar <= u_t + v_t


def test_refuted_reports_need_witness():
    with pytest.raises(ValueError):
        PropertyReport("P2", REFUTED, None)


# --- P2 / P3 -----------------------------------------------------------------


def test_p2_cases():
    r = check_p2(RTF((Term(1.0, 1, 1),)))
    assert r.verdict == REFUTED and r.witness is not None
    assert check_p2(U2V2).verdict == VERIFIED
    assert check_p2(schnakenberg_llf(C)).verdict == VERIFIED


def test_p3_cases():
    bounded = RTF((Term(1.0, 0, 0, 1), Term(1.0, 0, 0, 0, 1)))
    r = check_p3(bounded)
    assert r.verdict == REFUTED and r.witness is not None
    r = check_p3(RTF((Term(1.0, 1),)))
    assert r.verdict == REFUTED and r.detail["ray"] == [0.0, 1.0]
    assert check_p3(schnakenberg_llf(C)).verdict == VERIFIED


def test_fan_includes_both_axes():
    fan = fan_directions(64)
    assert len(fan) == 64 and fan[0] == (1.0, 0.0) and fan[-1] == (0.0, 1.0)


# --- P1 ------------------------------------------------------------------------


def test_p1_lyapunov_of_cubic_system_passes_but_p4_fails():
    V = weinberger_lyapunov()
    cand = verify_llf(V, weinberger(10.0))
    assert cand.verdict in (REFUTED, INCONCLUSIVE)
    assert cand.reports["P4"].verdict == REFUTED
    assert cand.reports["P4"].witness is not None


def test_p1_refutes_positive_tail():
    # W = u + v with f = u: the dot product is u > 0 everywhere
    W = RTF((Term(1.0, 1), Term(1.0, 0, 1)))
    from rdbound.model import ReactionPair
    r = check_p1(W, ReactionPair(RTF((Term(1.0, 1),)), RTF(())), extent=5.0, spacing=0.1)
    assert r.verdict == REFUTED and r.witness[0] > 0


# --- P4 / P5 -------------------------------------------------------------------


def test_p4_cases():
    W = schnakenberg_llf(C)
    r = check_p4(W, 5.56, 0.0)
    assert r.verdict == VERIFIED
    assert r.detail["sup_du_over_dv"] == pytest.approx(42.0)
    W2 = RTF((Term(1.0, 2), Term(1.0, 0, 1)))
    assert check_p4(W2, 0.01, 0.0).verdict == VERIFIED
    W3 = RTF((Term(1.0, 4), Term(1.0, 0, 2)))
    assert check_p4(W3, 0.01, 0.01).verdict == VERIFIED


def test_p5_cases():
    r = check_p5(schnakenberg_llf(C))
    assert r.verdict == VERIFIED and r.detail == {"M_u_inf": 1.0, "M_v_inf": 2.0} and not r.flags
    r = check_p5(U2V2)
    assert r.verdict == VERIFIED and r.detail["M_u_inf"] == math.inf
    r = check_p5(RTF((Term(1.0, 1), Term(1.0, 1, 0, 0, 1))))
    assert any(f.startswith("C4") for f in r.flags)


# --- underbars and K --------------------------------------------------------------


def test_underbars():
    u_, v_ = find_underbars(schnakenberg_llf(C))
    assert u_ == 5.56  # sqrt(43) - 1 = 5.5574 rounded up to the 0.01 grid
    assert u_ >= math.sqrt(C) - 1 > u_ - 0.01
    assert v_ == 0.0
    # dW/du(0, 0) = 0 is not strictly positive, so the first grid point is used
    assert find_underbars(U2V2) == (0.01, 0.01)


def test_find_K_quadratic_returns_K_underbar():
    K, info = find_K(U2V2, 1.0, 0.0, 0.0)
    assert K == 1.0 and info["validated"]
    with pytest.raises(ValueError):
        find_K(U2V2, 0.0, 0.0, 0.0)


def test_find_K_example_validates(cand):
    W = cand.W
    MK = level_line_max(W, cand.K)
    for L in np.linspace(0.0, cand.K, 21)[:-1]:
        assert level_line_max(W, L) < MK


# --- level-line maxima ---------------------------------------------------------------


def test_level_line_max_cases():
    W = schnakenberg_llf(C)
    assert level_line_max(W, 0.0) == C + 1
    for L in (0.5, 3.0, 17.0):
        assert level_line_max(U2V2, L) == pytest.approx(L * L, rel=1e-14)
    us = np.linspace(0.0, 10.0, 1_000_001)
    brute = float(np.max(W(us, 10.0 - us)))
    assert abs(level_line_max(W, 10.0) - brute) < 1e-7


def test_level_line_derivative_maxima_monotone(cand):
    consts = cand.constants()
    Ls = [1.0, 2.0, 5.0, 10.0, 50.0, 200.0]
    mu = [consts.M_u(L) for L in Ls]
    mv = [consts.M_v(L) for L in Ls]
    assert all(a < b for a, b in zip(mu, mu[1:]))
    assert all(a < b for a, b in zip(mv, mv[1:]))
    assert consts.M_u_inf == 1.0 and consts.M_v_inf == 2.0
    assert all(m < consts.M_u_inf for m in mu)
    assert all(m < consts.M_v_inf for m in mv)


def test_du_positive_beyond_underbar(cand):
    W = cand.W
    us = np.linspace(cand.u_underbar, 200.0, 300)
    vs = np.geomspace(1e-3, 1e5, 50)
    assert np.all(W.du.grid(us, vs) > 0)
    assert np.all(W.dv.grid(np.linspace(0, 200, 300), np.linspace(cand.v_underbar, 200, 300)) > 0)


# --- R and B ------------------------------------------------------------------------


def test_ratio_sup_envelope():
    W = schnakenberg_llf(C)
    for L in (0.0, 3.0, 40.0):
        r_u, _ = ratio_sup(W, L, 5.56, 0.0)
        us = np.linspace(0.0, L, 2001)
        env = float(np.max(np.abs(1 - C / (us + 1) ** 2)))
        assert r_u <= 1.05 * env * (1 + 1e-12)
        assert r_u == pytest.approx(1.05 * 42.0)  # attained at u = 0, v = 0


def test_ratio_sup_separable():
    W = RTF((Term(1.0, 2), Term(2.0, 0, 1), Term(1.0, 0, 2)))  # u^2 + 2v + v^2
    for L in (1.0, 3.0, 8.0):
        r_u, _ = ratio_sup(W, L, 0.0, 0.0)
        assert r_u == pytest.approx(1.05 * (2 * L) / 2.0, rel=1e-12)


def test_level_set_extents():
    for K in (1.0, 2.0, 7.5):
        assert compute_B_K(U2V2, K) == pytest.approx(1.05 * K * math.sqrt(2), rel=1e-6)
    line = RTF((Term(1.0, 1), Term(1.0, 0, 1)))
    assert level_set_extent(line, 3.0) == pytest.approx(3.15, rel=1e-8)


def test_example_B_K_converged_in_rays(cand):
    fine = level_set_extent(cand.W, cand.M_K, rays=2000)
    assert abs(cand.B_K - fine) <= 1e-4 * fine


def test_level_set_unbounded_raises():
    with pytest.raises(ArithmeticError):
        level_set_extent(RTF((Term(1.0, 1),)), 2.0, rays=16)


# --- separable promotion ----------------------------------------------------------------


@given(st.floats(0.1, 5), st.floats(0.1, 5))
def test_quadratic_power_sums_promote(alpha, beta):
    W = RTF((Term(alpha, 2), Term(beta, 0, 2)))
    promoted = promote_separable(W)
    assert promoted is not None
    assert all(r.verdict == VERIFIED for r in promoted)
    assert check_p5(W).verdict == VERIFIED


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.integers(2, 5), st.integers(3, 5))
def test_higher_powers_lose_strict_convexity_on_the_axis(alpha, beta, m, p):
    # d2/dv2 of v^p vanishes at v = 0 once p >= 3; strict convexity fails only there
    W = RTF((Term(alpha, m), Term(beta, 0, p)))
    r = check_p2(W)
    assert r.verdict == REFUTED and min(r.witness) == 0.0
    assert promote_separable(W) is None
    assert check_p2(W, extent=100.0).detail["failed"] in ("uu", "vv")


def test_cross_term_not_promoted():
    assert promote_separable(RTF((Term(1.0, 2), Term(1.0, 1, 1), Term(1.0, 0, 2)))) is None


def test_promotion_agrees_with_direct_checks(cand):
    p4, p5 = promote_separable(cand.W)
    assert p4.verdict == cand.reports["P4"].verdict == VERIFIED
    assert p5.verdict == cand.reports["P5"].verdict == VERIFIED


def test_candidate_json_roundtrip(cand):
    back = candidate_from_json(cand.W, cand.to_json())
    assert back.to_json() == cand.to_json()
    assert back.verdict == VERIFIED


def test_level_set_constants_swap_shares_values(cand):
    consts = LevelSetConstants(cand.W, cand.u_underbar, cand.v_underbar)
    s = consts.swapped()
    assert s.M_u(12.0) == consts.M_v(12.0)
    assert s.swapped() is consts
