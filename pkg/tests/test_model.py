import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdbound.catalog import build_example, mutualism, schnakenberg, schnakenberg_llf, weinberger
from rdbound.errors import InvalidSystemError, NumericOverflowError
from rdbound.model import (RTF, DiscretizedSystem, ReactionPair, Term, apply_diffusion, backward_diff,
                           diffusion_matrix, forward_diff, rhs, rhs_field)

finite = st.floats(-1e6, 1e6, allow_nan=False)
vectors = st.integers(2, 64).flatmap(lambda n: st.lists(finite, min_size=n, max_size=n))


def sequential_matvec(D, w):
    """Row sums accumulated left to right, the order a hand computation would use."""
    out = []
    for row in D:
        acc = 0.0
        for a, b in zip(row, w):
            acc = acc + a * b
        out.append(acc)
    return np.array(out)


# --- diffusion ---------------------------------------------------------------


def test_diffusion_small_cases():
    assert apply_diffusion([2.0, 2.0, 2.0]).tolist() == [0.0, 0.0, 0.0]
    assert apply_diffusion([1.0, 0.0]).tolist() == [-1.0, 1.0]


def test_diffusion_rejects_short_vectors():
    with pytest.raises(InvalidSystemError):
        apply_diffusion([1.0])
    with pytest.raises(InvalidSystemError):
        diffusion_matrix(1)


@given(vectors)
def test_diffusion_matches_dense_oracle_exactly(w):
    w = np.array(w)
    D = diffusion_matrix(len(w))
    assert np.array_equal(apply_diffusion(w), sequential_matvec(D, w))


@given(vectors)
def test_diffusion_conserves_mass(w):
    w = np.array(w)
    scale = max(1.0, float(np.abs(w).max()))
    assert abs(math.fsum(apply_diffusion(w))) <= 1e-13 * scale


@given(vectors)
def test_diffusion_is_negative_semidefinite(w):
    w = np.array(w)
    Dw = apply_diffusion(w)
    assert float(w @ Dw) <= 1e-9 * float(w @ w)


def test_diffusion_matrix_symmetric():
    for n in (2, 3, 17, 64):
        D = diffusion_matrix(n)
        assert np.array_equal(D, D.T)
        assert np.all(D.sum(axis=1) == 0)


def test_difference_operators():
    assert forward_diff([1.0, 3.0], 1) == 2.0
    assert forward_diff([4.0, 4.0, 4.0], 2) == 0.0
    assert backward_diff([4.0, 4.0, 4.0], 3) == 0.0
    with pytest.raises(IndexError):
        forward_diff([1.0, 2.0], 2)
    with pytest.raises(IndexError):
        backward_diff([1.0, 2.0], 1)


@given(vectors)
def test_forward_equals_shifted_backward(w):
    for i in range(1, len(w)):
        assert forward_diff(w, i) == backward_diff(w, i + 1)


# --- right-hand side ---------------------------------------------------------


def test_rhs_hand_evaluated_two_compartments():
    ex = build_example("schnakenberg")
    du, dv = rhs(ex.system(), np.array([0.8, 2.0]), np.array([0.1, 0.7]))
    # f(0.8,0.1) = -0.636, f(2,0.7) = 0.9, g = 0.936, -1.8; 1/h^2 = 4, d/h^2 = 120
    assert du == pytest.approx([-90.6, 130.2], rel=1e-13)
    assert dv == pytest.approx([212.4, -342.0], rel=1e-13)


def test_rhs_vanishes_at_uniform_equilibrium():
    a, b = 0.1, 1.0
    sys_ = DiscretizedSystem(5, 150.0, 30.0, schnakenberg(a, b))
    u = np.full(5, a + b)
    v = np.full(5, b / (a + b) ** 2)
    du, dv = rhs(sys_, u, v)
    assert np.max(np.abs(du)) < 1e-12 and np.max(np.abs(dv)) < 1e-12


@given(st.lists(st.floats(0, 100), min_size=6, max_size=6), st.floats(0.1, 10))
def test_zero_reactions_give_pure_diffusion(vals, d):
    zero = ReactionPair(RTF(()), RTF(()))
    sys_ = DiscretizedSystem(3, 2.0, d, zero)
    u, v = np.array(vals[:3]), np.array(vals[3:])
    du, dv = rhs(sys_, u, v)
    assert np.array_equal(du, 9.0 * apply_diffusion(u))
    assert np.array_equal(dv, (d * 9.0) * apply_diffusion(v))


@given(st.lists(st.floats(0, 50), min_size=8, max_size=8))
def test_list_field_agrees_with_rhs(vals):
    sys_ = DiscretizedSystem(4, 150.0, 30.0, schnakenberg())
    u, v = np.array(vals[:4]), np.array(vals[4:])
    du, dv = rhs(sys_, u, v)
    out = rhs_field(sys_)(list(vals))
    ref = np.concatenate([du, dv])
    assert np.allclose(out, ref, rtol=1e-12, atol=1e-9 * max(1.0, np.abs(ref).max()))


def test_rhs_overflow_names_compartment():
    quad = ReactionPair(RTF((Term(1.0, 2),)), RTF(()))
    sys_ = DiscretizedSystem(3, 1.0, 1.0, quad)
    with pytest.raises(NumericOverflowError) as exc, np.errstate(over="ignore"):
        rhs(sys_, np.array([1.0, 1e200, 1.0]), np.zeros(3))
    assert exc.value.index == 2


def test_system_validation():
    with pytest.raises(InvalidSystemError):
        DiscretizedSystem(1, 1.0, 1.0, schnakenberg())
    with pytest.raises(InvalidSystemError):
        DiscretizedSystem(2, 1.0, 1.0, schnakenberg(), np.array([-1.0, 0.0]))
    with pytest.raises(InvalidSystemError):
        DiscretizedSystem(2, 0.0, 1.0, schnakenberg())
    s = DiscretizedSystem(7, 1.0, 1.0, schnakenberg())
    assert s.h * s.n == 1.0


def test_quasi_positivity():
    assert schnakenberg().quasi_positive()
    assert mutualism().quasi_positive()
    assert weinberger(0.1).quasi_positive()
    assert not ReactionPair(RTF((Term(-1.0),)), RTF(())).quasi_positive()


# --- function grammar --------------------------------------------------------


def test_llf_value_and_derivative_limits():
    W = schnakenberg_llf(43.0)
    assert W(0.0, 0.0) == 44.0
    assert W.du(3.0, 7.0) == pytest.approx(1 - 43 / 16)
    assert W.du.limit_u().is_constant() and W.du.limit_u()(0.0, 0.0) == 1.0
    assert W.dv.swap().limit_u()(0.0, 0.0) == 2.0


def fd_grad(W, u, v, h=1e-5):
    return ((W(u + h, v) - W(u - h, v)) / (2 * h), (W(u, v + h) - W(u, v - h)) / (2 * h))


def close(fd, exact, tol=1e-6):
    return abs(fd - exact) <= tol * max(abs(exact), 1e-2)


def test_grad_and_hessian_against_finite_differences(rng):
    W = schnakenberg_llf(43.0)
    pts = rng.uniform(0.01, 20.0, size=(100, 2))
    for u, v in pts:
        gu, gv = W.grad(u, v)
        fu, fv = fd_grad(W, u, v)
        assert close(fu, gu) and close(fv, gv)
        huu, hvv, huv = W.hessian(u, v)
        h = 1e-5
        fuu = (W.du(u + h, v) - W.du(u - h, v)) / (2 * h)
        fvv = (W.dv(u, v + h) - W.dv(u, v - h)) / (2 * h)
        fuv = (W.du(u, v + h) - W.du(u, v - h)) / (2 * h)
        assert close(fuu, huu) and close(fvv, hvv) and abs(fuv - huv) < 1e-6


terms = st.builds(Term, st.floats(-5, 5, allow_nan=False), st.integers(0, 3), st.integers(0, 3),
                  st.integers(0, 3), st.integers(0, 3))


@given(st.lists(terms, min_size=1, max_size=5), st.floats(0.1, 5), st.floats(0.1, 5))
def test_differentiation_closure(ts, u, v):
    W = RTF(tuple(ts))
    assert isinstance(W.du, RTF) and isinstance(W.du.dv, RTF)
    fu, fv = fd_grad(W, u, v, h=1e-6)
    scale = sum(abs(t.coef) * u**t.p * v**t.q for t in ts) + 1.0
    assert abs(fu - W.du(u, v)) <= 1e-5 * scale * (1 + u + v) ** 3
    assert abs(fv - W.dv(u, v)) <= 1e-5 * scale * (1 + u + v) ** 3


def test_tails():
    t = weinberger(10.0).f.tail_u(1.0)
    assert (t.degree, t.coef) == (3, 1.0)
    t = schnakenberg().f.tail_u(0.0)
    assert t.degree == 1 and t.coef == -1.0
    assert RTF(()).tail_u(1.0).degree == -math.inf
