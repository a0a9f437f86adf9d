"""Numerical verification of Lyapunov-like function candidates and their level-set constants.

Every universally quantified property is checked on a bounded grid and, for the unbounded
part of the domain, through the exact leading-order tails of the term grammar. Only a
refutation is definitive; a grid that runs out before certifying gives ``inconclusive``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .model import RTF, ReactionPair, Tail, separable_parts

VERIFIED = "verified"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"

P1_TOL = 1e-10
SAFETY = 1.05


@dataclass(frozen=True)
class VerifySettings:
    extent: float | None = None  # None: 3(u_ + v_ + K_ + 10)
    spacing: float = 0.01
    v_cap: float = 1e6
    shape_points: int = 1025
    rays: int = 1024
    fan: int = 64
    safety: float = SAFETY


@dataclass
class PropertyReport:
    name: str
    verdict: str
    witness: tuple[float, float] | None = None
    detail: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.verdict == REFUTED and self.witness is None:
            raise ValueError(f"{self.name}: a refuted verdict needs a witness")

    def to_json(self) -> dict:
        w = None if self.witness is None else [float(self.witness[0]), float(self.witness[1])]
        return {"verdict": self.verdict, "witness": w, "detail": _jsonable(self.detail),
                "flags": list(self.flags)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def fan_directions(count: int = 64) -> list[tuple[float, float]]:
    """Unit directions spanning the closed first quadrant, both axes included."""
    out = []
    for k in range(count):
        th = k * (math.pi / 2) / (count - 1)
        out.append((0.0 if k == count - 1 else math.cos(th), 0.0 if k == 0 else math.sin(th)))
    return out


def _shape_axis(extent: float, points: int, cap: float) -> np.ndarray:
    geo = np.geomspace(1e-6, cap, 256)
    return np.unique(np.concatenate([np.linspace(0.0, extent, points), geo]))


def _tail_samples(cap: float) -> np.ndarray:
    return np.unique(np.concatenate([[0.0], np.geomspace(1e-3, cap, 61), np.arange(1.0, 11.0)]))


def _search_witness(fn, point_at, start: float, bad, limit: float = 1e15):
    """Walk outward geometrically along a one-parameter path until bad(fn(point)) is true."""
    t = max(start, 1.0)
    while t <= limit:
        u, v = point_at(t)
        val = float(fn(u, v))
        if bad(val):
            return (u, v), val
        t *= 2.0
    return None, None


# ---------------------------------------------------------------- P1


def _scan_p1(dot: RTF, i0: int, i1: int, j0: int, j1: int, h: float, worst):
    """Scan grid indices [i0,i1] x [j0,j1]; track the violator of largest norm."""
    if i1 < i0 or j1 < j0:
        return worst
    vs = h * np.arange(j0, j1 + 1)
    rows = max(1, 4_000_000 // len(vs))
    for a in range(i0, i1 + 1, rows):
        us = h * np.arange(a, min(a + rows, i1 + 1))
        vals = dot.grid(us, vs)
        bad = vals > P1_TOL
        if not bad.any():
            continue
        ii, jj = np.nonzero(bad)
        norms = (a + ii) + (j0 + jj)  # in grid units, exact integers
        k = int(np.argmax(norms))
        if worst is None or norms[k] > worst[0]:
            worst = (int(norms[k]), float(us[ii[k]]), float(vs[jj[k]]), float(vals[ii[k], jj[k]]))
    return worst


def check_p1(W: RTF, reactions: ReactionPair, extent: float | None = None, spacing: float = 0.01,
             u_underbar: float = 0.0, v_underbar: float = 0.0, v_cap: float = 1e6,
             fan: int = 64) -> PropertyReport:
    """Find the smallest grid-certified K_ beyond which grad W . (f, g) <= 0."""
    dot = W.du * reactions.f + W.dv * reactions.g
    h = spacing
    base = u_underbar + v_underbar + 10.0
    E = extent if extent is not None else 3.0 * base
    m = int(math.ceil(E / h - 1e-9))
    worst = _scan_p1(dot, 0, m, 0, m, h, None)
    passes = 1
    if extent is None:
        # grow the square to the default 3(u_ + v_ + K_ + 10) until it stops moving
        while passes < 4:
            K_ = h * (worst[0] + 1) if worst else h
            m_new = int(math.ceil(3.0 * (base + K_) / h - 1e-9))
            if m_new <= m:
                break
            worst = _scan_p1(dot, m + 1, m_new, 0, m_new, h, worst)
            worst = _scan_p1(dot, 0, m, m + 1, m_new, h, worst)
            m = m_new
            passes += 1
    E = h * m
    K_ = h * (worst[0] + 1) if worst else h
    detail = {"extent": E, "spacing": h, "passes": passes, "K_underbar": K_,
              "worst_violation": None if worst is None else list(worst[1:])}

    # symbolic tails: positive leading behaviour far out is a refutation once witnessed
    suspicious = []
    for s in _tail_samples(v_cap):
        for tail, point_at in ((dot.tail_u(s), lambda t, s=s: (t, s)),
                               (dot.tail_v(s), lambda t, s=s: (s, t))):
            if tail.sign > 0:
                suspicious.append(point_at)
    for a, b in fan_directions(fan):
        if dot.tail_ray(a, b).sign > 0:
            suspicious.append(lambda t, a=a, b=b: (a * t, b * t))
    for point_at in suspicious:
        wit, val = _search_witness(dot, point_at, 2.0 * E, lambda x: x > P1_TOL)
        if wit is not None:
            detail["tail_witness_value"] = val
            detail["K_underbar"] = K_
            return PropertyReport("P1", REFUTED, wit, detail)
    if suspicious:
        detail["reason"] = "positive leading tail without a concrete witness"
        return PropertyReport("P1", INCONCLUSIVE, None, detail)
    if K_ >= E:
        detail["reason"] = "grid extent exhausted before certification"
        return PropertyReport("P1", INCONCLUSIVE, None, detail)
    return PropertyReport("P1", VERIFIED, None, detail)


# ---------------------------------------------------------------- P2, P3


def check_p2(W: RTF, extent: float = 100.0, points: int = 1025, v_cap: float = 1e6) -> PropertyReport:
    ax = _shape_axis(extent, points, v_cap)
    checks = (("uu", W.du.du, lambda x: x <= 0.0, 1),
              ("vv", W.dv.dv, lambda x: x <= 0.0, 1),
              ("uv", W.du.dv, lambda x: x < -1e-12, 0))
    detail = {"extent": extent, "points": len(ax), "v_cap": v_cap}
    for name, fn, bad, need in checks:
        vals = fn.grid(ax, ax)
        mask = bad(vals)
        if mask.any():
            i, j = np.argwhere(mask)[0]
            detail.update(failed=name, value=float(vals[i, j]))
            return PropertyReport("P2", REFUTED, (float(ax[i]), float(ax[j])), detail)
    unsure = []
    for name, fn, bad, need in checks:
        for s in _tail_samples(v_cap):
            for tail, point_at in ((fn.tail_u(s), lambda t, s=s: (t, s)),
                                   (fn.tail_v(s), lambda t, s=s: (s, t))):
                if (need and tail.sign <= 0) or (not need and tail.sign < 0):
                    unsure.append((name, fn, bad, point_at))
    for name, fn, bad, point_at in unsure:
        wit, val = _search_witness(fn, point_at, v_cap, bad)
        if wit is not None:
            detail.update(failed=name, value=val)
            return PropertyReport("P2", REFUTED, wit, detail)
    if unsure:
        detail["reason"] = f"tail sign of d{unsure[0][0]}W not positive"
        return PropertyReport("P2", INCONCLUSIVE, None, detail)
    return PropertyReport("P2", VERIFIED, None, detail)


def check_p3(W: RTF, fan: int = 64) -> PropertyReport:
    """W diverges along every ray of the fan."""
    for a, b in fan_directions(fan):
        tail = W.tail_ray(a, b)
        if not (tail.degree > 0 and tail.coef > 0):
            t = 1e6
            return PropertyReport("P3", REFUTED, (a * t, b * t),
                                  {"ray": [a, b], "tail_degree": tail.degree, "fan": fan})
    return PropertyReport("P3", VERIFIED, None, {"fan": fan})


# ---------------------------------------------------------------- P4, P5


def _ratio_tail(num: Tail, den: Tail) -> float:
    if den.degree == -math.inf:
        return math.inf
    if num.degree > den.degree:
        return math.inf
    if num.degree == den.degree:
        return abs(num.coef / den.coef)
    return 0.0


def _strip_sup(num: RTF, den: RTF, xs: np.ndarray, y_lo: float, y_cap: float):
    """sup of |num/den| over x in xs, y in [y_lo, y_cap] plus the exact y -> inf limit.

    Returns (sup, argmax point).
    """
    span = max(float(xs.max()) if len(xs) else 0.0, 1.0)
    ys = np.unique(np.concatenate([y_lo + np.linspace(0.0, span, 129),
                                   np.geomspace(max(y_lo, 1e-6), max(y_cap, y_lo + 1.0), 400)]))
    ys = ys[ys >= y_lo]
    n = num.grid(xs, ys)
    dd = den.grid(xs, ys)
    if (dd <= 0).any():
        i, j = np.argwhere(dd <= 0)[0]
        return math.inf, (float(xs[i]), float(ys[j]))
    r = np.abs(n / dd)
    i, j = np.unravel_index(int(np.argmax(r)), r.shape)
    best, at = float(r[i, j]), (float(xs[i]), float(ys[j]))
    for x in xs:
        lim = _ratio_tail(num.tail_v(float(x)), den.tail_v(float(x)))
        if lim > best:
            best, at = lim, (float(x), float(ys[-1]))
    return best, at


def check_p4(W: RTF, u_underbar: float, v_underbar: float, extent: float = 100.0,
             points: int = 257, v_cap: float = 1e6) -> PropertyReport:
    xs = _shape_axis(extent, points, v_cap)
    sup_u, at_u = _strip_sup(W.du, W.dv, xs, v_underbar, v_cap)
    Ws = W.swap()
    sup_v, at_v = _strip_sup(Ws.du, Ws.dv, xs, u_underbar, v_cap)
    detail = {"sup_du_over_dv": sup_u, "sup_dv_over_du": sup_v, "v_cap": v_cap}
    if not math.isfinite(sup_u):
        return PropertyReport("P4", REFUTED, at_u, detail)
    if not math.isfinite(sup_v):
        return PropertyReport("P4", REFUTED, (at_v[1], at_v[0]), detail)
    return PropertyReport("P4", VERIFIED, None, detail)


def check_p5(W: RTF, v_cap: float = 1e6) -> PropertyReport:
    """Tail limits of the gradient are finite (with finite mixed limit) or diverge."""
    detail = {}
    flags = []
    for label, Wx in (("u", W), ("v", W.swap())):
        first, mixed = Wx.du, Wx.du.dv
        for s in _tail_samples(v_cap):
            t1, t2 = first.tail_u(s), mixed.tail_u(s)
            if t1.degree > 0:
                continue
            if t2.degree > 0:
                detail["direction"] = label
                wit = (1e6, s) if label == "u" else (s, 1e6)
                return PropertyReport("P5", REFUTED, wit, detail)
        lim = first.limit_u()
        if lim is None:
            detail[f"M_{label}_inf"] = math.inf
            continue
        if lim.is_constant():
            detail[f"M_{label}_inf"] = float(lim(0.0, 0.0))
            mixed_lim = mixed.limit_u()
            if mixed_lim is not None and not mixed_lim.is_zero():
                flags.append(f"C5: mixed derivative limit in {label} is not zero")
        else:
            detail[f"M_{label}_inf"] = "depends on the other variable"
            flags.append(f"C4: limit of the {label}-derivative depends on the other variable")
    return PropertyReport("P5", VERIFIED, None, detail, flags)


# ---------------------------------------------------------------- C2, C3


def _first_positive(fn1d, spacing: float, cap: float):
    """Smallest multiple of spacing at which the increasing fn1d is strictly positive."""
    if fn1d(0.0) > 0:
        return 0.0
    if fn1d(cap) <= 0:
        return None
    lo, hi = 0.0, 1.0
    while fn1d(hi) <= 0:
        lo, hi = hi, hi * 2.0
    root = bisect(fn1d, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps) if fn1d(lo) < 0 else lo
    k = int(math.floor(root / spacing))
    while fn1d(k * spacing) <= 0:
        k += 1
    return round(k * spacing, 12)


def find_underbars(W: RTF, spacing: float = 0.01, cap: float = 1e6):
    """(u_, v_) on the grid; None entries mean the search cap was reached."""
    u_ = _first_positive(lambda x: float(W.du(x, 0.0)), spacing, cap)
    v_ = _first_positive(lambda x: float(W.dv(0.0, x)), spacing, cap)
    return u_, v_


def level_line_argmax(fn: RTF, L: float, points: int = 4096) -> tuple[float, tuple[float, float]]:
    """max of fn on the segment u + v = L in the closed quadrant, and where it is attained."""
    if L <= 0:
        return float(fn(0.0, 0.0)), (0.0, 0.0)
    us = np.linspace(0.0, L, points)
    vals = fn(us, L - us)
    i = int(np.argmax(vals))
    best, at = float(vals[i]), (float(us[i]), float(L - us[i]))
    lo, hi = us[max(i - 1, 0)], us[min(i + 1, points - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -float(fn(x, L - x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, L)})
        if -float(res.fun) > best:
            best, at = -float(res.fun), (float(res.x), float(L - res.x))
    return best, at


def level_line_max(fn: RTF, L: float, points: int = 4096) -> float:
    return level_line_argmax(fn, L, points)[0]


def triangle_max(fn: RTF, L: float, levels: int = 257, points: int = 257) -> float:
    """Grid max of fn over {u, v >= 0, u + v <= L}."""
    best = -math.inf
    for ell in np.linspace(0.0, L, levels):
        us = np.linspace(0.0, ell, points)
        best = max(best, float(np.max(fn(us, ell - us))))
    return best


def _triangle_max_W(W: RTF, T: float) -> float:
    return max(triangle_max(W, T), level_line_max(W, T))


def _smallest_beyond(W: RTF, fixed_hi: float, threshold: float, start_after: float,
                     spacing: float, swap: bool, limit_pts: int = 10_000_000):
    """Smallest grid x such that min_{y in [0, fixed_hi]} W(x, y) > threshold for all x' >= x.

    The condition is monotone once x >= start_after (W increasing there), so the scan stops
    at the first success past start_after.
    """
    ys = np.linspace(0.0, fixed_hi, 257) if fixed_hi > 0 else np.array([0.0])
    Wv = W.swap() if swap else W
    last_false = -1
    chunk = 4096
    k0 = 0
    while k0 < limit_pts:
        xs = spacing * np.arange(k0, k0 + chunk)
        ok = Wv.grid(xs, ys).min(axis=1) > threshold
        bad = np.nonzero(~ok)[0]
        if len(bad):
            last_false = k0 + int(bad[-1])
        past = np.nonzero(ok & (xs >= start_after) & (np.arange(k0, k0 + chunk) > last_false))[0]
        if len(past):
            return spacing * (last_false + 1)
        k0 += chunk
    return None


def find_K(W: RTF, K_underbar: float, u_underbar: float, v_underbar: float,
           spacing: float = 0.01, samples: int = 20):
    """Construct K with M^(L) < M^(K) for L < K; returns (K, details)."""
    if not K_underbar > 0:
        raise ValueError("K_underbar must be positive")
    M_hat = _triangle_max_W(W, u_underbar + v_underbar)
    u_t = _smallest_beyond(W, v_underbar, M_hat, u_underbar, spacing, swap=False)
    v_t = _smallest_beyond(W, u_underbar, M_hat, v_underbar, spacing, swap=True)
    if u_t is None or v_t is None:
        return None, {"M_hat": M_hat, "reason": "grid exhausted"}
    K = max(K_underbar, u_t + v_t, u_underbar, v_underbar)
    MK = level_line_max(W, K)
    Ls = [K * j / samples for j in range(samples)]
    ok = all(level_line_max(W, L) < MK for L in Ls)
    return (K if ok else None), {"M_hat": M_hat, "u_tilde": u_t, "v_tilde": v_t,
                                 "validated": ok, "M_K": MK}


# ---------------------------------------------------------------- R and B


def ratio_sup(W: RTF, L: float, u_underbar: float, v_underbar: float, v_cap: float = 1e6,
              points: int = 257, safety: float = SAFETY):
    """(R_{u,L}, R_{v,L}) with the safety factor applied."""
    xs = np.linspace(0.0, L, points) if L > 0 else np.array([0.0])
    r_u, _ = _strip_sup(W.du, W.dv, xs, v_underbar, v_cap)
    Ws = W.swap()
    r_v, _ = _strip_sup(Ws.du, Ws.dv, xs, u_underbar, v_cap)
    return r_u * safety, r_v * safety


def level_set_extent(W: RTF, level: float, rays: int = 1024, safety: float = SAFETY,
                     t_limit: float = 1e200) -> float:
    """max of u + v over {W <= level}, by outermost crossings along rays, times safety."""
    s = np.linspace(0.0, 1.0, rays)
    a, b = 1.0 - s, s  # points t*(a, b) have norm t

    def excess(t):
        return W(a * t, b * t) - level

    cap = 1.0
    while True:
        with np.errstate(over="ignore", invalid="ignore"):
            ok = np.all(excess(np.full(rays, cap)) > 0)
        if ok:
            break
        cap *= 1e3
        if cap > t_limit:
            raise ArithmeticError("level set appears unbounded along some ray")
    ts = np.concatenate([[0.0], np.geomspace(cap * 1e-15, cap, 4000)])
    vals = np.stack([excess(np.full(rays, t)) for t in ts], axis=1)
    nonpos = vals <= 0
    has = nonpos.any(axis=1)
    if not has.any():
        return 0.0
    idx = np.where(has, vals.shape[1] - 1 - np.argmax(nonpos[:, ::-1], axis=1), 0)
    lo = ts[idx]
    hi = ts[np.minimum(idx + 1, len(ts) - 1)]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo) <= np.maximum(1e-8, 1e-15 * hi)):
            break
        m = excess(mid) <= 0
        lo = np.where(m, mid, lo)
        hi = np.where(m, hi, mid)
    return float(np.max(np.where(has, hi, 0.0))) * safety


def compute_B_K(W: RTF, K: float, rays: int = 1024, safety: float = SAFETY) -> float:
    return level_set_extent(W, level_line_max(W, K), rays=rays, safety=safety)


# ---------------------------------------------------------------- aggregates


class _SwapCache(dict):
    """View of a maximizer cache with the point coordinates exchanged."""

    def __init__(self, base: dict):
        super().__init__()
        self.base = base

    def __contains__(self, L):
        return L in self.base

    def __getitem__(self, L):
        val, (a, b) = self.base[L]
        return val, (b, a)

    def __setitem__(self, L, item):
        val, (a, b) = item
        self.base[L] = (val, (b, a))


class LevelSetConstants:
    """Memoized M^(L), M_u^(L), M_v^(L), R_{u,L}, R_{v,L} for one W."""

    def __init__(self, W: RTF, u_underbar: float, v_underbar: float, v_cap: float = 1e6,
                 safety: float = SAFETY):
        self.W = W
        self.u_underbar = u_underbar
        self.v_underbar = v_underbar
        self.v_cap = v_cap
        self.safety = safety
        self.M_L: dict[float, float] = {}
        self.M_u_L: dict[float, float] = {}
        self.M_v_L: dict[float, float] = {}
        self.R_L: dict[float, tuple[float, float]] = {}
        self._u_at: dict = {}
        self._v_at: dict = {}
        self._swapped = None

    def M(self, L):
        if L not in self.M_L:
            self.M_L[L] = level_line_max(self.W, L)
        return self.M_L[L]

    def M_u_at(self, L):
        """(M_u^(L), maximizer)."""
        if L not in self._u_at:
            self._u_at[L] = level_line_argmax(self.W.du, L)
            self.M_u_L[L] = self._u_at[L][0]
        return self._u_at[L]

    def M_v_at(self, L):
        if L not in self._v_at:
            self._v_at[L] = level_line_argmax(self.W.dv, L)
            self.M_v_L[L] = self._v_at[L][0]
        return self._v_at[L]

    def M_u(self, L):
        return self.M_u_at(L)[0]

    def M_v(self, L):
        return self.M_v_at(L)[0]

    def R(self, L):
        if L not in self.R_L:
            self.R_L[L] = ratio_sup(self.W, L, self.u_underbar, self.v_underbar, self.v_cap,
                                    safety=self.safety)
        return self.R_L[L]

    def R_u(self, L):
        return self.R(L)[0]

    def R_v(self, L):
        return self.R(L)[1]

    @staticmethod
    def _inf_limit(first: RTF) -> float:
        lim = first.limit_u()
        if lim is None:
            return math.inf
        return float(np.max(lim(np.zeros(64), np.geomspace(1e-3, 1e6, 64))))

    @property
    def M_u_inf(self) -> float:
        return self._inf_limit(self.W.du)

    @property
    def M_v_inf(self) -> float:
        return self._inf_limit(self.W.swap().du)

    def swapped(self) -> "LevelSetConstants":
        if self._swapped is None:
            s = LevelSetConstants(self.W.swap(), self.v_underbar, self.u_underbar, self.v_cap,
                                  self.safety)
            s.M_L = self.M_L  # M^(L) is symmetric under the swap
            s.M_u_L, s.M_v_L = self.M_v_L, self.M_u_L
            s._u_at = _SwapCache(self._v_at)
            s._v_at = _SwapCache(self._u_at)
            s._swapped = self
            self._swapped = s
        return self._swapped


@dataclass
class LLFCandidate:
    W: RTF
    K_underbar: float | None = None
    u_underbar: float | None = None
    v_underbar: float | None = None
    K: float | None = None
    reports: dict[str, PropertyReport] = field(default_factory=dict)
    M_K: float | None = None
    B_K: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        vs = [r.verdict for r in self.reports.values()]
        if REFUTED in vs:
            return REFUTED
        if len(vs) < 5 or INCONCLUSIVE in vs or self.K is None:
            return INCONCLUSIVE
        return VERIFIED

    def constants(self, v_cap: float = 1e6) -> LevelSetConstants:
        return LevelSetConstants(self.W, self.u_underbar, self.v_underbar, v_cap)

    def to_json(self) -> dict:
        return _jsonable({
            "verdict": self.verdict,
            "properties": {k: r.to_json() for k, r in self.reports.items()},
            "constants": {"K_underbar": self.K_underbar, "u_underbar": self.u_underbar,
                          "v_underbar": self.v_underbar, "K": self.K, "M_K": self.M_K,
                          "B_K": self.B_K},
            "notes": self.notes,
        })


def candidate_from_json(W: RTF, data: dict) -> LLFCandidate:
    """Inverse of :meth:`LLFCandidate.to_json` given the same W."""
    def num(x):
        return None if x is None else float(x)

    c = data["constants"]
    cand = LLFCandidate(W, num(c["K_underbar"]), num(c["u_underbar"]), num(c["v_underbar"]), num(c["K"]),
                        M_K=num(c["M_K"]), B_K=num(c["B_K"]), notes=dict(data.get("notes", {})))
    for name, r in data["properties"].items():
        w = r.get("witness")
        cand.reports[name] = PropertyReport(name, r["verdict"], None if w is None else (float(w[0]), float(w[1])),
                                            dict(r.get("detail", {})), list(r.get("flags", [])))
    return cand


def promote_separable(W: RTF, p2: PropertyReport | None = None):
    """For additively separable W passing P2, P4 and P5 follow without search.

    Returns (P4 report, P5 report) or None when W has a cross term.
    """
    parts = separable_parts(W)
    if parts is None:
        return None
    if p2 is None:
        p2 = check_p2(W)
    if p2.verdict != VERIFIED:
        return None
    why = {"reason": "additively separable with verified convexity"}
    return (PropertyReport("P4", VERIFIED, None, dict(why)),
            PropertyReport("P5", VERIFIED, None, dict(why)))


def verify_llf(W: RTF, reactions: ReactionPair, settings: VerifySettings = VerifySettings()) -> LLFCandidate:
    """Run P2, P3, the underbars, P1, P4, P5, then K, M^(K) and B^(K)."""
    cand = LLFCandidate(W)
    shape_extent = settings.extent if settings.extent is not None else 100.0
    cand.reports["P2"] = check_p2(W, shape_extent, settings.shape_points, settings.v_cap)
    cand.reports["P3"] = check_p3(W, settings.fan)
    u_, v_ = find_underbars(W, settings.spacing, settings.v_cap)
    cand.u_underbar, cand.v_underbar = u_, v_
    if u_ is None or v_ is None:
        cand.notes["underbars"] = "search cap reached"
        u_, v_ = u_ or 0.0, v_ or 0.0
    p1 = check_p1(W, reactions, settings.extent, settings.spacing, u_, v_, settings.v_cap, settings.fan)
    cand.reports["P1"] = p1
    cand.K_underbar = p1.detail["K_underbar"]
    cand.reports["P4"] = check_p4(W, u_, v_, shape_extent, 257, settings.v_cap)
    cand.reports["P5"] = check_p5(W, settings.v_cap)
    cand.reports = {k: cand.reports[k] for k in ("P1", "P2", "P3", "P4", "P5")}
    if cand.verdict == REFUTED or cand.u_underbar is None or cand.v_underbar is None:
        return cand
    K, info = find_K(W, cand.K_underbar, u_, v_, settings.spacing)
    cand.notes["find_K"] = info
    cand.K = K
    if K is not None:
        cand.M_K = level_line_max(W, K)
        try:
            cand.B_K = level_set_extent(W, cand.M_K, settings.rays, settings.safety)
        except ArithmeticError as exc:
            cand.notes["B_K"] = str(exc)
            cand.K = None
    return cand
