"""Discretized two-species reaction-diffusion systems on [0, 1].

Reactions and LLF candidates share one closed function family: finite sums of

    coef * u**p * v**q / ((u + 1)**r * (v + 1)**s)

with nonnegative integer exponents.  The family is closed under partial
differentiation and multiplication, and every member can be rewritten over the
common denominator ``(u+1)**R (v+1)**S``.  That canonical numerator is what
makes the tail limits used throughout the package exact instead of estimated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidSystemError, NumericOverflowError

# relative threshold for declaring a canonical coefficient zero
_ZERO_RTOL = 1e-12


class Term(NamedTuple):
    coef: float
    p: int = 0
    q: int = 0
    r: int = 0
    s: int = 0


class Tail(NamedTuple):
    """Leading behaviour ``coef * x**degree`` of a function as x -> infinity.

    ``degree`` is ``-inf`` when the function vanishes identically along the
    direction considered.
    """

    degree: float
    coef: float

    @property
    def limit(self) -> float:
        if self.degree > 0:
            return math.copysign(math.inf, self.coef)
        if self.degree == 0:
            return self.coef
        return 0.0

    @property
    def sign(self) -> int:
        if self.degree == -math.inf or self.coef == 0:
            return 0
        return 1 if self.coef > 0 else -1


def _binom_row(n: int) -> np.ndarray:
    return np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)


def _leading(coefs: np.ndarray, scale: np.ndarray) -> int:
    """Index of the highest coefficient that is nonzero relative to its scale."""
    for k in range(len(coefs) - 1, -1, -1):
        if abs(coefs[k]) > _ZERO_RTOL * max(scale[k], 1e-300) and coefs[k] != 0:
            return k
    return -1


@dataclass(frozen=True)
class RationalTermFunction:
    """Sum of rational terms in (u, v), closed under differentiation."""

    terms: tuple[Term, ...] = ()

    def __post_init__(self):
        merged: dict[tuple[int, int, int, int], float] = {}
        for t in self.terms:
            t = Term(*t)
            if min(t.p, t.q, t.r, t.s) < 0:
                raise ValueError(f"negative exponent in term {t}")
            key = (int(t.p), int(t.q), int(t.r), int(t.s))
            merged[key] = merged.get(key, 0.0) + float(t.coef)
        clean = tuple(
            Term(c, *k) for k, c in sorted(merged.items()) if c != 0.0
        )
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "RationalTermFunction":
        return cls(tuple(Term(float(r[0]), *(int(x) for x in r[1:])) for r in rows))

    @classmethod
    def constant(cls, c: float) -> "RationalTermFunction":
        return cls((Term(c),))

    # --- arithmetic -----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, RationalTermFunction):
            other = RationalTermFunction.constant(float(other))
        return RationalTermFunction(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalTermFunction):
            k = float(other)
            return RationalTermFunction(tuple(Term(k * t.coef, *t[1:]) for t in self.terms))
        return RationalTermFunction(tuple(
            Term(a.coef * b.coef, a.p + b.p, a.q + b.q, a.r + b.r, a.s + b.s)
            for a in self.terms for b in other.terms
        ))

    __rmul__ = __mul__

    # --- calculus -------------------------------------------------------

    @cached_property
    def du(self) -> "RationalTermFunction":
        out = []
        for c, p, q, r, s in self.terms:
            if p:
                out.append(Term(c * p, p - 1, q, r, s))
            if r:
                out.append(Term(-c * r, p, q, r + 1, s))
        return RationalTermFunction(tuple(out))

    @cached_property
    def dv(self) -> "RationalTermFunction":
        out = []
        for c, p, q, r, s in self.terms:
            if q:
                out.append(Term(c * q, p, q - 1, r, s))
            if s:
                out.append(Term(-c * s, p, q, r, s + 1))
        return RationalTermFunction(tuple(out))

    def swap(self) -> "RationalTermFunction":
        """The same function with the roles of u and v exchanged."""
        return RationalTermFunction(tuple(Term(c, q, p, s, r) for c, p, q, r, s in self.terms))

    @property
    def depends_on_u(self) -> bool:
        return any(t.p or t.r for t in self.terms)

    @property
    def depends_on_v(self) -> bool:
        return any(t.q or t.s for t in self.terms)

    # --- evaluation -----------------------------------------------------

    @cached_property
    def _fn(self) -> Callable:
        parts = []
        for c, p, q, r, s in self.terms:
            num = [repr(c)]
            if p:
                num.append("u" if p == 1 else f"u**{p}")
            if q:
                num.append("v" if q == 1 else f"v**{q}")
            expr = "*".join(num)
            den = []
            if r:
                den.append("(u+1.0)" if r == 1 else f"(u+1.0)**{r}")
            if s:
                den.append("(v+1.0)" if s == 1 else f"(v+1.0)**{s}")
            if den:
                expr += "/(" + "*".join(den) + ")"
            parts.append(expr)
        body = " + ".join(parts) if parts else "0.0*u*v"
        return eval(f"lambda u, v: {body}", {})  # noqa: S307 - generated from numeric terms only

    def __call__(self, u, v):
        out = self._fn(u, v)
        if np.ndim(out) < max(np.ndim(u), np.ndim(v)):
            out = out + np.zeros(np.broadcast(u, v).shape)
        return out

    def difference(self, a: tuple[float, float], b: tuple[float, float]) -> float:
        """F(a) - F(b) summed term by term, so terms equal at both points cancel exactly."""
        parts = []
        for c, p, q, r, s in self.terms:
            ta = a[0] ** p * a[1] ** q / ((a[0] + 1.0) ** r * (a[1] + 1.0) ** s)
            tb = b[0] ** p * b[1] ** q / ((b[0] + 1.0) ** r * (b[1] + 1.0) ** s)
            parts.append(c * (ta - tb))
        return math.fsum(parts)

    def grid(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """Evaluate on the tensor grid ``us x vs`` (rows follow u)."""
        us = np.asarray(us, dtype=float)
        vs = np.asarray(vs, dtype=float)
        out = np.zeros((us.size, vs.size))
        for c, p, q, r, s in self.terms:
            fu = c * us**p / (us + 1.0) ** r
            fv = vs**q / (vs + 1.0) ** s
            out += np.multiply.outer(fu, fv)
        return out

    def grad(self, u, v):
        return self.du(u, v), self.dv(u, v)

    def hessian(self, u, v):
        return self.du.du(u, v), self.dv.dv(u, v), self.du.dv(u, v)

    # --- exact asymptotics ----------------------------------------------

    @cached_property
    def canonical(self) -> tuple[np.ndarray, int, int]:
        """Numerator coefficients ``N[i, j]`` of ``u**i v**j`` over ``(u+1)**R (v+1)**S``."""
        R = max((t.r for t in self.terms), default=0)
        S = max((t.s for t in self.terms), default=0)
        P = max((t.p for t in self.terms), default=0) + R
        Q = max((t.q for t in self.terms), default=0) + S
        N = np.zeros((P + 1, Q + 1))
        for c, p, q, r, s in self.terms:
            bu = _binom_row(R - r)
            bv = _binom_row(S - s)
            N[p:p + bu.size, q:q + bv.size] += c * np.multiply.outer(bu, bv)
        return N, R, S

    @cached_property
    def _abs_canonical(self) -> np.ndarray:
        # magnitude reference for cancellation tests
        R = max((t.r for t in self.terms), default=0)
        S = max((t.s for t in self.terms), default=0)
        N = np.zeros_like(self.canonical[0])
        for c, p, q, r, s in self.terms:
            bu = _binom_row(R - r)
            bv = _binom_row(S - s)
            N[p:p + bu.size, q:q + bv.size] += abs(c) * np.multiply.outer(bu, bv)
        return N

    def is_zero(self) -> bool:
        N, _, _ = self.canonical
        A = self._abs_canonical
        return bool(np.all(np.abs(N) <= _ZERO_RTOL * np.maximum(A, 1e-300)))

    def tail_u(self, v: float) -> Tail:
        """Leading behaviour as u -> infinity with v held fixed."""
        N, R, S = self.canonical
        vp = float(v) ** np.arange(N.shape[1])
        a = N @ vp
        scale = self._abs_canonical @ vp
        k = _leading(a, scale)
        if k < 0:
            return Tail(-math.inf, 0.0)
        return Tail(k - R, a[k] / (float(v) + 1.0) ** S)

    def tail_v(self, u: float) -> Tail:
        """Leading behaviour as v -> infinity with u held fixed."""
        return self.swap().tail_u(u)

    def tail_ray(self, alpha: float, beta: float) -> Tail:
        """Leading behaviour along the ray (alpha t, beta t), t -> infinity."""
        N, R, S = self.canonical
        A = self._abs_canonical
        deg = N.shape[0] + N.shape[1] - 2
        coefs = np.zeros(deg + 1)
        scale = np.zeros(deg + 1)
        for i in range(N.shape[0]):
            for j in range(N.shape[1]):
                w = alpha**i * beta**j
                coefs[i + j] += N[i, j] * w
                scale[i + j] += A[i, j] * w
        k = _leading(coefs, scale)
        if k < 0:
            return Tail(-math.inf, 0.0)
        d_deg = (R if alpha > 0 else 0) + (S if beta > 0 else 0)
        d_lead = (alpha**R if alpha > 0 else 1.0) * (beta**S if beta > 0 else 1.0)
        return Tail(k - d_deg, coefs[k] / d_lead)

    def limit_u(self) -> "RationalTermFunction | None":
        """``lim_{u->inf}`` as a function of v, or None when it is not finite for generic v."""
        N, R, S = self.canonical
        A = self._abs_canonical
        rows = [i for i in range(N.shape[0])
                if np.any(np.abs(N[i]) > _ZERO_RTOL * np.maximum(A[i], 1e-300))]
        top = max(rows, default=-1)
        if top > R:
            return None
        if top < R:
            return RationalTermFunction()
        return RationalTermFunction(tuple(Term(c, 0, j, 0, S) for j, c in enumerate(N[R]) if c))

    def limit_v(self) -> "RationalTermFunction | None":
        lim = self.swap().limit_u()
        return None if lim is None else lim.swap()

    def is_constant(self) -> bool:
        return (self - self(0.0, 0.0)).is_zero()

    def as_rows(self) -> list[list]:
        return [[t.coef, t.p, t.q, t.r, t.s] for t in self.terms]

    def __repr__(self):
        return f"RationalTermFunction({self.as_rows()})"


RTF = RationalTermFunction


def separable_parts(W: RationalTermFunction):
    """Split W into (w1(u), w2(v)) if W is additively separable, else None.

    Constants go to w1.
    """
    w1, w2 = [], []
    for t in W.terms:
        on_u = bool(t.p or t.r)
        on_v = bool(t.q or t.s)
        if on_u and on_v:
            return None
        (w2 if on_v else w1).append(t)
    return RationalTermFunction(tuple(w1)), RationalTermFunction(tuple(w2))


# --- difference operators and the Neumann diffusion matrix -----------------


def forward_diff(w: Sequence[float], i: int) -> float:
    """Forward difference at 1-based index i, 1 <= i <= n-1."""
    n = len(w)
    if not 1 <= i <= n - 1:
        raise IndexError(f"forward difference index {i} outside 1..{n - 1}")
    return w[i] - w[i - 1]


def backward_diff(w: Sequence[float], i: int) -> float:
    """Backward difference at 1-based index i, 2 <= i <= n."""
    n = len(w)
    if not 2 <= i <= n:
        raise IndexError(f"backward difference index {i} outside 2..{n}")
    return w[i - 1] - w[i - 2]


def apply_diffusion(w) -> np.ndarray:
    """(Dw)_i for the centred second difference with homogeneous Neumann ends.

    Rows are summed left to right, so the result is bit-identical to a
    sequential dense matrix-vector product.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 2:
        raise InvalidSystemError(f"diffusion needs a vector of length >= 2, got shape {w.shape}")
    out = np.empty_like(w)
    out[0] = -w[0] + w[1]
    out[1:-1] = (w[:-2] - 2.0 * w[1:-1]) + w[2:]
    out[-1] = w[-2] - w[-1]
    return out


def diffusion_matrix(n: int) -> np.ndarray:
    if n < 2:
        raise InvalidSystemError(f"need n >= 2 compartments, got {n}")
    D = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    D[0, 0] = D[-1, -1] = -1.0
    return D


# --- systems ----------------------------------------------------------------


@dataclass(frozen=True)
class ReactionPair:
    f: RationalTermFunction
    g: RationalTermFunction

    def quasi_positive(self, v_cap: float = 1e6, samples: int = 10_000) -> bool:
        """f(0, v) >= 0 and g(u, 0) >= 0 on a geometric grid plus the exact tail."""
        xs = np.concatenate(([0.0], np.geomspace(1e-6, v_cap, samples - 1)))
        if np.any(self.f(0.0, xs) < -1e-12) or np.any(self.g(xs, 0.0) < -1e-12):
            return False
        return self.f.tail_v(0.0).sign >= 0 and self.g.tail_u(0.0).sign >= 0


@dataclass(frozen=True)
class StateVector:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @property
    def norms(self) -> np.ndarray:
        return self.u + self.v


@dataclass(frozen=True)
class DiscretizedSystem:
    """n equal compartments of width 1/n with Neumann ends."""

    n: int
    gamma: float
    d: float
    reactions: ReactionPair
    u0: np.ndarray = field(default=None)
    v0: np.ndarray = field(default=None)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidSystemError(f"need an integer n >= 2, got {self.n}")
        if not (self.gamma > 0 and self.d > 0):
            raise InvalidSystemError(f"gamma and d must be positive, got {self.gamma}, {self.d}")
        u0 = np.zeros(self.n) if self.u0 is None else np.asarray(self.u0, dtype=float)
        v0 = np.zeros(self.n) if self.v0 is None else np.asarray(self.v0, dtype=float)
        if u0.shape != (self.n,) or v0.shape != (self.n,):
            raise InvalidSystemError("initial vectors must have length n")
        if np.any(u0 < 0) or np.any(v0 < 0):
            raise InvalidSystemError("initial concentrations must be nonnegative")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "v0", v0)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def initial_state(self) -> StateVector:
        return StateVector(self.u0.copy(), self.v0.copy(), 0.0)


def rhs(sys: DiscretizedSystem, u: np.ndarray, v: np.ndarray):
    """Right-hand side of the semi-discrete system; 1/h**2 is taken as n**2."""
    inv_h2 = float(sys.n * sys.n)
    fu = sys.reactions.f(u, v)
    gv = sys.reactions.g(u, v)
    du = sys.gamma * fu + inv_h2 * apply_diffusion(u)
    dv = sys.gamma * gv + (sys.d * inv_h2) * apply_diffusion(v)
    if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dv))):
        bad = np.flatnonzero(~(np.isfinite(du) & np.isfinite(dv)))
        raise NumericOverflowError(int(bad[0]) + 1)
    return du, dv


def rhs_field(sys: DiscretizedSystem) -> Callable[[list], list]:
    """rhs on the stacked state [u_1..u_n, v_1..v_n] as plain float lists.

    Integration works on short vectors, where per-call array overhead would
    dominate; the arithmetic per compartment matches :func:`rhs` up to rounding
    at the right boundary.
    """
    n = sys.n
    inv_h2 = float(n * n)
    dv_scale = sys.d * inv_h2
    gamma = sys.gamma
    f, g = sys.reactions.f._fn, sys.reactions.g._fn
    last = n - 1

    def field_(y):
        out = [0.0] * (2 * n)
        for i in range(n):
            ui, vi = y[i], y[n + i]
            ul = y[i - 1] if i else ui
            ur = y[i + 1] if i < last else ui
            vl = y[n + i - 1] if i else vi
            vr = y[n + i + 1] if i < last else vi
            out[i] = gamma * f(ui, vi) + inv_h2 * ((ul - 2.0 * ui) + ur)
            out[n + i] = gamma * g(ui, vi) + dv_scale * ((vl - 2.0 * vi) + vr)
        if not math.isfinite(math.fsum(abs(x) for x in out) if n > 32 else sum(out)):
            for i in range(n):
                if not (math.isfinite(out[i]) and math.isfinite(out[n + i])):
                    raise NumericOverflowError(i + 1)
        return out

    return field_
