"""The chain of constants leading from a verified LLF to an a priori bound B."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ChainOverflow, PipelineOrderError
from .llf import SAFETY, LevelSetConstants, LLFCandidate, level_line_max, level_set_extent, triangle_max
from .model import RTF

LADDER_CAP = 40
MIN_M = 1e-6
MIN_C1 = 0.1


def rect_abs_max(fn: RTF, u_hi: float, v_hi: float, points: int = 513) -> float:
    """max |fn| over [0, u_hi] x [0, v_hi]: mixed linear/geometric grid, then coordinate refinement."""
    def axis(hi):
        if hi <= 0:
            return np.array([0.0])
        return np.unique(np.concatenate([np.linspace(0.0, hi, points),
                                         np.geomspace(min(1e-6, hi), hi, 257)]))
    us, vs = axis(u_hi), axis(v_hi)
    vals = np.abs(fn.grid(us, vs))
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[i, j])
    u0, v0 = float(us[i]), float(vs[j])
    for along_u in (True, False):
        ax, k = (us, i) if along_u else (vs, j)
        lo, hi = ax[max(k - 1, 0)], ax[min(k + 1, len(ax) - 1)]
        if hi <= lo:
            continue
        if along_u:
            obj = lambda x: -abs(float(fn(x, v0)))
        else:
            obj = lambda x: -abs(float(fn(u0, x)))
        res = minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, hi)})
        best = max(best, -float(res.fun))
    return best


@dataclass
class LedgerEntry:
    value: float
    prerequisites: tuple[str, ...]
    method: str


@dataclass
class ConstantLedger:
    """Ordered record of every bound constant with the fields it was derived from."""

    entries: dict[str, LedgerEntry] = field(default_factory=dict)
    chain_L: list[float] = field(default_factory=list)
    chain_G: list[float] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def put(self, name: str, value: float, prerequisites=(), method: str = ""):
        for p in prerequisites:
            if p not in self.entries:
                raise PipelineOrderError(f"{name} needs {p}, which has not been computed")
        v = float(value)
        if math.isnan(v):
            raise ArithmeticError(f"{name} evaluated to nan")
        self.entries[name] = LedgerEntry(v, tuple(prerequisites), method)
        return v

    def get(self, name: str) -> float:
        if name not in self.entries:
            raise PipelineOrderError(f"{name} has not been computed yet")
        return self.entries[name].value

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name):
        return self.get(name)

    def to_json(self) -> dict:
        out = {}
        for k, e in self.entries.items():
            out[k] = {"value": _num(e.value), "prerequisites": list(e.prerequisites), "method": e.method}
        out["chain"] = {"value": {"L": [_num(x) for x in self.chain_L], "G": [_num(x) for x in self.chain_G]},
                        "prerequisites": ["A", "B_K"], "method": "L_0 = B_K, L_i = L_{i-1} + G(L_{i-1})"}
        out["flags"] = {"value": list(self.flags), "prerequisites": [], "method": "ledger self-checks"}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "ConstantLedger":
        led = cls()
        for k, e in data.items():
            if k == "chain":
                led.chain_L = [float(x) for x in e["value"]["L"]]
                led.chain_G = [float(x) for x in e["value"]["G"]]
            elif k == "flags":
                led.flags = list(e["value"])
            else:
                led.entries[k] = LedgerEntry(float(e["value"]), tuple(e["prerequisites"]), e["method"])
        return led


def _num(x: float):
    return x if math.isfinite(x) else str(x)


# ---------------------------------------------------------------- F_max


def compute_F_max(llf: LLFCandidate, consts: LevelSetConstants, d: float, B_K: float | None = None):
    """(u*, v*, F_max)."""
    B_K = llf.B_K if B_K is None else B_K
    if B_K is None:
        raise PipelineOrderError("F_max needs B_K")
    W = llf.W
    R_u, R_v = consts.R(B_K)
    u_star = B_K * (1.0 + d * R_v)
    v_star = B_K * (d + R_u) / d
    du_max = rect_abs_max(W.du, B_K, v_star) * SAFETY
    dv_max = rect_abs_max(W.dv, u_star, B_K) * SAFETY
    F = B_K * (du_max + d * dv_max)
    return u_star, v_star, F


# ---------------------------------------------------------------- G_u, G_v, G


def _root_du_at_zero(W: RTF, at: tuple[float, float]) -> float:
    """u_tilde with dW/du(u_tilde, 0) = dW/du(at) (increasing in u); 0 if already above."""
    f = lambda x: W.du.difference((x, 0.0), at)
    if f(0.0) >= 0:
        return 0.0
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("no u with dW/du(u, 0) reaching the target")
    return brentq(f, 0.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def _g_axis(consts: LevelSetConstants, A: float, L: float, d: float) -> tuple[float, dict]:
    """Shared body of G_u; G_v calls it on the swapped constants with A/d and 1/d."""
    if not A > 0 or not L > 0:
        raise ValueError("G needs A > 0 and L > 0")
    W = consts.W
    M_L, at_L = consts.M_u_at(L)
    R_v = consts.R_v(L)
    dv_tri = max(triangle_max(W.dv, L), -triangle_max(-W.dv, L), level_line_max(W.dv, L)) * SAFETY
    best = None
    Lt = L
    for rung in range(1, LADDER_CAP + 1):
        Lt *= 2.0
        M_t, at_t = consts.M_u_at(Lt)
        if M_t < MIN_M:
            continue
        # 1 - M_L / M_t, with the difference taken term by term to survive cancellation
        C1 = W.du.difference(at_t, at_L) / M_t
        if not C1 > 0:
            continue
        u_t = _root_du_at_zero(W, at_t)
        C2 = (R_v + dv_tri / M_t) * L
        G = max(u_t + L, (A + d * M_t * C2) / (M_t * C1))
        info = {"L_tilde": Lt, "M_u_L": M_L, "M_u_L_tilde": M_t, "C1": C1, "C2": C2,
                "u_tilde": u_t, "R_v_L": R_v, "dv_max": dv_tri, "rung": rung}
        if C1 >= MIN_C1:
            return G, info
        if best is None or G < best[0]:
            best = (G, info)
    if best is None:
        raise ArithmeticError(f"no admissible L_tilde within {LADDER_CAP} doublings of L={L}")
    best[1]["fallback"] = "C1 never reached 0.1; smallest G over the ladder"
    return best


def compute_G_u(llf: LLFCandidate, consts: LevelSetConstants, A: float, L: float, d: float) -> float:
    return _g_axis(consts, A, L, d)[0]


def compute_G_v(llf: LLFCandidate, consts: LevelSetConstants, A: float, L: float, d: float) -> float:
    return _g_axis(consts.swapped(), A / d, L, 1.0 / d)[0]


def compute_G(llf: LLFCandidate, consts: LevelSetConstants, A: float, L: float, d: float,
              B_K: float | None = None) -> float:
    B_K = llf.B_K if B_K is None else B_K
    return max(2.0 * compute_G_u(llf, consts, A, L, d), 2.0 * compute_G_v(llf, consts, A, L, d), B_K)


def compute_C(llf: LLFCandidate, consts: LevelSetConstants, n: int, d: float, F_max: float,
              B_K: float | None = None):
    """C = B_K + sum of the chained G_i; returns (C, L list, G list)."""
    B_K = llf.B_K if B_K is None else B_K
    A = n * F_max
    Ls, Gs = [B_K], []
    for i in range(1, n):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                G = compute_G(llf, consts, A, Ls[-1], d, B_K)
        except (ArithmeticError, ValueError) as exc:
            raise ChainOverflow(i, str(exc)) from exc
        L_next = Ls[-1] + G
        if not math.isfinite(G) or not math.isfinite(L_next):
            raise ChainOverflow(i)
        Gs.append(G)
        Ls.append(L_next)
    C = math.fsum([B_K, *Gs])
    if not math.isfinite(C):
        raise ChainOverflow(n, "final sum")
    return C, Ls, Gs


def compute_C_underbar(C: float, u0, v0) -> float:
    norms = np.asarray(u0, float) + np.asarray(v0, float)
    return max(float(norms.max()) if norms.size else 0.0, C)


def compute_B(llf: LLFCandidate, C_underbar: float, n: int, rays: int = 1024) -> tuple[float, float]:
    """(M^(C_), B) with B the extent of {W <= n M^(C_)}."""
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            M_C = level_line_max(llf.W, C_underbar)
            if not math.isfinite(n * M_C):
                raise ArithmeticError(f"M^(C_) overflowed at C_={C_underbar:g}")
            return M_C, level_set_extent(llf.W, n * M_C, rays=rays)
    except ArithmeticError as exc:
        raise ChainOverflow("B", str(exc)) from exc


# ---------------------------------------------------------------- the full pipeline


def build_ledger(llf: LLFCandidate, n: int, d: float, gamma: float, u0, v0,
                 v_cap: float = 1e6) -> ConstantLedger:
    if llf.K is None or llf.B_K is None:
        raise PipelineOrderError("the LLF has not been verified (K and B_K missing)")
    led = ConstantLedger()
    consts = llf.constants(v_cap)
    led.put("n", n, (), "system")
    led.put("d", d, (), "system")
    led.put("gamma", gamma, (), "system")
    led.put("K_underbar", llf.K_underbar, (), "P1 grid certification")
    led.put("u_underbar", llf.u_underbar, (), "grid bisection on dW/du(u, 0)")
    led.put("v_underbar", llf.v_underbar, (), "grid bisection on dW/dv(0, v)")
    led.put("K", llf.K, ("K_underbar", "u_underbar", "v_underbar"), "sublevel construction with sampled validation")
    led.put("M_K", llf.M_K, ("K",), "level-line scan + golden refinement")
    led.put("B_K", llf.B_K, ("M_K",), "1024-ray outermost crossing x 1.05")
    B_K = led["B_K"]
    R_u, R_v = consts.R(B_K)
    led.put("R_u_B_K", R_u, ("B_K", "v_underbar"), "strip grid + symbolic tail x 1.05")
    led.put("R_v_B_K", R_v, ("B_K", "u_underbar"), "strip grid + symbolic tail x 1.05")
    u_star, v_star, F = compute_F_max(llf, consts, d, B_K)
    led.put("u_star", u_star, ("B_K", "R_v_B_K", "d"), "B_K (1 + d R_v)")
    led.put("v_star", v_star, ("B_K", "R_u_B_K", "d"), "B_K (d + R_u) / d")
    led.put("F_max", F, ("B_K", "u_star", "v_star", "d"), "rectangle maxima x 1.05")
    led.put("A", n * F, ("n", "F_max"), "n F_max")
    C, Ls, Gs = compute_C(llf, consts, n, d, F, B_K)
    led.chain_L, led.chain_G = Ls, Gs
    if Gs:
        G_info = _g_axis(consts, led["A"], B_K, d)[1]
        led.put("G_1", Gs[0], ("A", "B_K", "d"), f"max(2 G_u, 2 G_v, B_K); L_tilde={G_info['L_tilde']:g}")
    led.put("C", C, ("B_K", "A"), "B_K + sum G_i over a chain of length n-1")
    led.put("C_underbar", compute_C_underbar(C, u0, v0), ("C",), "max(C, initial norms)")
    M_C, B = compute_B(llf, led["C_underbar"], n)
    led.put("M_C_underbar", M_C, ("C_underbar",), "level-line scan + golden refinement")
    led.put("B", B, ("M_C_underbar", "n"), "extent of {W <= n M^(C_)} x 1.05")
    if not led["C_underbar"] > led["K"]:
        led.flags.append("C_underbar does not exceed K")
    if not led["B"] >= led["C_underbar"]:
        led.flags.append("B is below C_underbar")
    led.flags.append("safety factor 1.05 is a policy, not a proven margin")
    return led
