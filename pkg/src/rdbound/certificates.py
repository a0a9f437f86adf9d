"""Certificates that no LLF exists, and the finite-time blow-up certificate for the
symmetric two-compartment reduction of the cubic cross-activation system."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import bisect

from .catalog import weinberger
from .errors import ReductionNotApplicable
from .model import DiscretizedSystem, ReactionPair
from .sim import StepControl, integrate_field

CERTIFIED = "certified-blow-up"
NOT_CERTIFIED = "not-certified"
INAPPLICABLE = "inapplicable"

REFERENCE_THRESHOLD = 0.13
DEFAULT_SAMPLES = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0)


@dataclass(frozen=True)
class NoLLFCertificate:
    condition: str  # ratio-divergence-u | ratio-divergence-v | mutualism-ray
    witness: dict
    evidence: dict

    def to_json(self) -> dict:
        return {"condition": self.condition, "witness": self.witness, "evidence": self.evidence}


def _diverges_against(lead, other) -> bool:
    if lead.degree == -math.inf:
        return False
    return other.degree == -math.inf or lead.degree > other.degree


def no_llf_ratio_test(reactions: ReactionPair, samples=DEFAULT_SAMPLES) -> NoLLFCertificate | None:
    """liminf f > 0 with |f/g| -> inf as u -> inf for some fixed v (or the mirror in v)."""
    f, g = reactions.f, reactions.g
    for v in samples:
        tf, tg = f.tail_u(v), g.tail_u(v)
        if tf.degree >= 0 and tf.coef > 0 and _diverges_against(tf, tg):
            return NoLLFCertificate(
                "ratio-divergence-u", {"direction": "u -> inf", "v": float(v)},
                {"f_tail": [float(tf.degree), float(tf.coef)], "g_tail": [float(tg.degree), float(tg.coef)]})
    for u in samples:
        tf, tg = f.tail_v(u), g.tail_v(u)
        if tg.degree >= 0 and tg.coef > 0 and _diverges_against(tg, tf):
            return NoLLFCertificate(
                "ratio-divergence-v", {"direction": "v -> inf", "u": float(u)},
                {"f_tail": [float(tf.degree), float(tf.coef)], "g_tail": [float(tg.degree), float(tg.coef)]})
    return None


def no_llf_mutualism_test(a1, a2, b1, b2, c1, c2) -> NoLLFCertificate | None:
    """Along v = (b2/c2) u the quadratic part of grad W . (f, g) has sign b2 c1 - b1 c2."""
    if not b2 * c1 > b1 * c2:
        return None
    s = c2 + b2
    ray = [c2 / s, b2 / s] if s > 0 else [0.0, 1.0]
    return NoLLFCertificate("mutualism-ray", {"ray": ray},
                            {"b2c1": b2 * c1, "b1c2": b1 * c2,
                             "quadratic_coefficient": (c1 * b2 / c2 - b1) if c2 else math.inf})


# ---------------------------------------------------------------- blow-up


def cubic_root(tol: float = 1e-15) -> float:
    """The root of C^3 + 2C^2 - 32 in [2, 3]."""
    return bisect(lambda c: c**3 + 2 * c**2 - 32.0, 2.0, 3.0, xtol=tol, rtol=4 * np.finfo(float).eps)


def h_value(u, v, delta: float):
    return u * v * (u + v + 2.0) - (8.0 + delta)


def h_level_curve(u, delta: float, level: float):
    """The positive v with h(u, v) = level."""
    u = np.asarray(u, float)
    q = 8.0 + delta + level
    return -1.0 - u / 2.0 + np.sqrt((u + 2.0) ** 2 / 4.0 + q / u)


@dataclass(frozen=True)
class BlowupCertificate:
    delta: float
    u0: float
    v0: float
    C_root: float
    A_cert: float
    threshold_A: float
    threshold_C: float
    threshold: float
    reference_threshold: float
    h0: float
    epsilon: float
    orientation: str | None
    verdict: str
    reasons: tuple = field(default_factory=tuple)

    def to_json(self) -> dict:
        out = asdict(self)
        out["reasons"] = list(self.reasons)
        out["cubic_residual"] = self.C_root**3 + 2 * self.C_root**2 - 32.0
        return out


def blowup_certificate(delta: float, u0: float, v0: float) -> BlowupCertificate:
    C = cubic_root()
    A = 8.0 / (36.0 / ((C + 1.0) * (C + 2.0)) + 3.0)
    tA = 2.0 * A / (27.0 - 2.0 * A)
    tC = (4.0 * C - 1.0) / 27.0
    thr = min(tA, tC)
    h0 = float(h_value(u0, v0, delta))
    eps = max(0.0, min(0.9 * h0, 1.0 - delta - 1e-6))
    reasons = []
    if u0 < 0 or v0 < 0 or u0 == v0:
        verdict, orient = INAPPLICABLE, None
        reasons.append("needs nonnegative initial values with u0 != v0")
    else:
        orient = "u" if u0 > v0 else "v"
        if not delta < thr:
            reasons.append(f"delta={delta:g} is not below the threshold {thr:.6f}")
        if not h0 > 0:
            reasons.append(f"h(u0, v0)={h0:g} is not positive")
        if not (eps > 0 and delta + eps < 1.0):
            reasons.append("no epsilon > 0 with delta + epsilon < 1")
        verdict = NOT_CERTIFIED if reasons else CERTIFIED
    return BlowupCertificate(delta, float(u0), float(v0), C, A, tA, tC, thr, REFERENCE_THRESHOLD,
                             h0, eps, orient, verdict, tuple(reasons))


@dataclass(frozen=True)
class ReducedSystem:
    """u = u_1 = v_2 and v = v_1 = u_2 for two compartments with gamma = d = 1."""

    delta: float
    u0: float
    v0: float

    def field(self, y):
        u, v = y[0], y[1]
        d = self.delta
        return [u * v * (u - v) * (u + 1.0) - d * u + 4.0 * (v - u),
                u * v * (v - u) * (v + 1.0) - d * v + 4.0 * (u - v)]

    def integrate(self, t_end: float, dt: float, control: StepControl = StepControl(halving=True),
                  record_every: int = 1):
        return integrate_field(self.field, [self.u0, self.v0], t_end, dt,
                               lambda y: y[0] + y[1], control, record_every)


def reduce_symmetric(sys: DiscretizedSystem) -> ReducedSystem:
    if sys.n != 2 or sys.gamma != 1.0 or sys.d != 1.0:
        raise ReductionNotApplicable("reduction needs n = 2 and gamma = d = 1")
    u0, v0 = sys.u0, sys.v0
    if not (u0[0] == v0[1] and u0[1] == v0[0]):
        raise ReductionNotApplicable("initial values are not symmetric (u1 = v2, u2 = v1)")
    lin = [t for t in sys.reactions.f.terms if (t.p, t.q, t.r, t.s) == (1, 0, 0, 0)]
    delta = -lin[0].coef if lin else 0.0
    ref = weinberger(delta)
    if sys.reactions.f.terms != ref.f.terms or sys.reactions.g.terms != ref.g.terms:
        raise ReductionNotApplicable("reactions are not the symmetric cubic cross-activation pair")
    return ReducedSystem(delta, float(u0[0]), float(v0[0]))


@dataclass
class GronwallReport:
    holds: bool
    points: int
    min_margin: float
    min_h: float
    first_failure: float | None

    def to_json(self) -> dict:
        return asdict(self)


def verify_gronwall(times, states, cert: BlowupCertificate, epsilon: float | None = None) -> GronwallReport:
    """Check |u - v| >= |u0 - v0| e^{eps t} - 1e-8 and h > 0 at every recorded point."""
    if cert.verdict != CERTIFIED or cert.u0 == cert.v0:
        raise ValueError("Gronwall check needs a certified verdict with u0 != v0")
    eps = cert.epsilon if epsilon is None else epsilon
    sign = 1.0 if cert.orientation == "u" else -1.0
    gap0 = abs(cert.u0 - cert.v0)
    margins, hs, fail = [], [], None
    for t, y in zip(times, states):
        m = sign * (y[0] - y[1]) - (gap0 * math.exp(eps * t) - 1e-8)
        hv = float(h_value(y[0], y[1], cert.delta))
        margins.append(m)
        hs.append(hv)
        if fail is None and (m < 0 or not hv > 0):
            fail = float(t)
    return GronwallReport(fail is None, len(margins), float(min(margins)), float(min(hs)), fail)
