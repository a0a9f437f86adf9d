"""Fixed-step RK4 integration with runtime monitors of the sub-level-set decomposition."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericOverflowError, PositivityViolation
from .model import RTF, DiscretizedSystem, StateVector, apply_diffusion, rhs_field

COMPLETED = "completed"
BLOW_UP = "blow-up-detected"
POSITIVITY = "positivity-violation"
STEP_FAILURE = "step-failure"

GUARD = 1e6
CLIP_TOL = 1e-12
IDENTITY_RTOL = 1e-10
LEMMA_TOL = 1e-8


# ---------------------------------------------------------------- partitions


@dataclass(frozen=True)
class PartitionSnapshot:
    """Compartments (1-based) inside / outside the open sub-level set, and edge classes."""

    in_Y: tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.in_Y)

    @property
    def Y(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, y in enumerate(self.in_Y) if y)

    @property
    def Y_C(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, y in enumerate(self.in_Y) if not y)

    @property
    def n_t(self) -> int:
        return sum(self.in_Y)

    @property
    def n_edge(self) -> tuple[int, ...]:
        """n_i = 1_Y(i+1) - 1_Y(i) for edges i = 1..n-1."""
        y = self.in_Y
        return tuple(int(y[i + 1]) - int(y[i]) for i in range(len(y) - 1))

    @property
    def Z_bdy(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, ni in enumerate(self.n_edge) if abs(ni) == 1)

    @property
    def Z_int(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, ni in enumerate(self.n_edge) if ni == 0 and not self.in_Y[i])


def snapshot_partition(u, v, W: RTF, M_K: float) -> PartitionSnapshot:
    # strict: points on the level set itself belong to the complement
    vals = W(np.asarray(u, float), np.asarray(v, float))
    return PartitionSnapshot(tuple(bool(x) for x in (vals < M_K)))


def detect_crossings(prev: PartitionSnapshot, new: PartitionSnapshot) -> list[tuple[int, str]]:
    """(compartment, 'in' | 'out') for every membership change."""
    out = []
    for i, (a, b) in enumerate(zip(prev.in_Y, new.in_Y)):
        if a != b:
            out.append((i + 1, "in" if b else "out"))
    return out


# ---------------------------------------------------------------- flux effects


@dataclass(frozen=True)
class FluxEffects:
    F_bdy: dict[int, float]
    F_int: dict[int, float]
    W_YC_D: float
    W_YC_D_direct: float
    scale: float  # magnitude reference for relative comparisons


def flux_effects(u, v, W: RTF, partition: PartitionSnapshot, d: float) -> FluxEffects:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    Wu = np.asarray(W.du(u, v), float)
    Wv = np.asarray(W.dv(u, v), float)
    ni = partition.n_edge
    F_bdy, F_int = {}, {}
    for i in partition.Z_bdy:
        a, b = i - 1, i  # 0-based compartments joined by edge i
        j = a if ni[i - 1] == 1 else b  # the complement-side compartment
        F_bdy[i] = ni[i - 1] * (Wu[j] * (u[b] - u[a]) + d * Wv[j] * (v[b] - v[a]))
    for i in partition.Z_int:
        a, b = i - 1, i
        F_int[i] = -((Wu[b] - Wu[a]) * (u[b] - u[a]) + d * (Wv[b] - Wv[a]) * (v[b] - v[a]))
    edge = math.fsum(list(F_bdy.values()) + list(F_int.values()))
    Du, Dv = apply_diffusion(u), apply_diffusion(v)
    yc = [i - 1 for i in partition.Y_C]
    terms = [Wu[k] * Du[k] + d * Wv[k] * Dv[k] for k in yc]
    direct = math.fsum(terms)
    scale = math.fsum(abs(Wu[k] * Du[k]) + abs(d * Wv[k] * Dv[k]) for k in yc)
    scale = max(scale, math.fsum(abs(x) for x in list(F_bdy.values()) + list(F_int.values())))
    return FluxEffects(F_bdy, F_int, edge, direct, scale)


# ---------------------------------------------------------------- monitors


@dataclass(frozen=True)
class MonitorSpec:
    """What the monitors need from the verified LLF and the ledger."""

    W: RTF
    M_K: float
    C_underbar: float = math.inf
    F_max: float = math.inf

    @classmethod
    def from_ledger(cls, W: RTF, ledger) -> "MonitorSpec":
        return cls(W, ledger["M_K"], ledger["C_underbar"], ledger["F_max"])


@dataclass(frozen=True)
class MonitorFrame:
    t: float
    W_N: float
    W_YC: float
    W_YC_R: float
    W_YC_D: float
    W_YC_D_direct: float
    dW_YC_dt: float
    F_bdy: dict
    F_int: dict
    mathcal_W: float
    max_norm: float
    n_t: int
    crossings: tuple
    partition: PartitionSnapshot
    scale: float


def monitor_frame(t: float, u, v, sys: DiscretizedSystem, spec: MonitorSpec,
                  prev: PartitionSnapshot | None = None) -> MonitorFrame:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    W = spec.W
    part = snapshot_partition(u, v, W, spec.M_K)
    Wi = np.asarray(W(u, v), float)
    yc = [i - 1 for i in part.Y_C]
    fg_dot = W.du(u, v) * sys.reactions.f(u, v) + W.dv(u, v) * sys.reactions.g(u, v)
    W_YC = math.fsum(Wi[yc])
    W_YC_R = math.fsum(np.asarray(fg_dot, float)[yc])
    fx = flux_effects(u, v, W, part, sys.d)
    crossings = tuple(detect_crossings(prev, part)) if prev is not None else ()
    return MonitorFrame(
        t=float(t), W_N=math.fsum(Wi), W_YC=W_YC, W_YC_R=W_YC_R, W_YC_D=fx.W_YC_D,
        W_YC_D_direct=fx.W_YC_D_direct,
        dW_YC_dt=sys.gamma * W_YC_R + sys.n**2 * fx.W_YC_D,
        F_bdy=fx.F_bdy, F_int=fx.F_int, mathcal_W=part.n_t * spec.M_K + W_YC,
        max_norm=float(np.max(u + v)), n_t=part.n_t, crossings=crossings, partition=part,
        scale=fx.scale)


@dataclass(frozen=True)
class Violation:
    lemma: str
    t: float
    magnitude: float


def assert_lemmas(frame: MonitorFrame, spec: MonitorSpec, prev: MonitorFrame | None = None,
                  gamma: float = 1.0, n: int | None = None) -> list[Violation]:
    """Check the lemma inequalities on one frame; never raises."""
    out = []
    t = frame.t
    gap = abs(frame.W_YC_D - frame.W_YC_D_direct)
    if gap > IDENTITY_RTOL * max(1.0, frame.scale):
        out.append(Violation("decomposition", t, gap))
    excess = frame.W_N - frame.mathcal_W
    if excess > IDENTITY_RTOL * max(1.0, abs(frame.mathcal_W)):
        out.append(Violation("system-llf-bound", t, excess))
    for i, F in frame.F_bdy.items():
        if F > spec.F_max * (1 + 1e-12):
            out.append(Violation(f"F_bdy<=F_max@{i}", t, F - spec.F_max))
    for i, F in frame.F_int.items():
        if F > LEMMA_TOL * max(1.0, frame.scale):
            out.append(Violation(f"F_int<=0@{i}", t, F))
    if frame.max_norm >= spec.C_underbar:
        tol = LEMMA_TOL * max(1.0, frame.scale)
        if frame.W_YC_D > tol:
            out.append(Violation("W_YC_D<=0", t, frame.W_YC_D))
        if frame.dW_YC_dt > LEMMA_TOL * max(1.0, gamma * abs(frame.W_YC_R) + (n or 1) ** 2 * frame.scale):
            out.append(Violation("dW_YC/dt<=0", t, frame.dW_YC_dt))
        if prev is not None and prev.max_norm >= spec.C_underbar and not frame.crossings:
            rise = frame.mathcal_W - prev.mathcal_W
            if rise > LEMMA_TOL * max(1.0, abs(prev.mathcal_W)):
                out.append(Violation("mathcalW-nonincreasing", t, rise))
    return out


# ---------------------------------------------------------------- integrator


class _Stop(Exception):
    def __init__(self, status: str, y, elapsed: float, message: str = ""):
        super().__init__(message)
        self.status, self.y, self.elapsed, self.message = status, y, elapsed, message


def rk4_step(field: Callable, y: list, h: float, with_increment: bool = True):
    """One classical RK4 step on a float list.

    Returns (y_new, per-component max of h*|k_s| over the four stages, or None).
    """
    hh = 0.5 * h
    k1 = field(y)
    k2 = field([a + hh * b for a, b in zip(y, k1)])
    k3 = field([a + hh * b for a, b in zip(y, k2)])
    k4 = field([a + h * b for a, b in zip(y, k3)])
    h6 = h / 6.0
    y_new = [a + h6 * (((b1 + 2.0 * b2) + 2.0 * b3) + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
    inc = None
    if with_increment:
        inc = [h * max(abs(b1), abs(b2), abs(b3), abs(b4)) for b1, b2, b3, b4 in zip(k1, k2, k3, k4)]
    return y_new, inc


@dataclass(frozen=True)
class StepControl:
    halving: bool = False
    rel_increment: float = 0.25
    abs_floor: float = 1e-9
    max_halvings: int = 30
    guard: float = GUARD


def advance(field: Callable, y: list, dt: float, norm: Callable, ctl: StepControl) -> list:
    """Advance exactly dt, halving on request; raises _Stop on guard, negativity or failure."""
    pending = [dt]
    elapsed = 0.0
    floor_h = dt / 2**ctl.max_halvings
    rel, floor = ctl.rel_increment, ctl.abs_floor
    while pending:
        h = pending.pop()
        deepest = h <= floor_h
        try:
            y_new, inc = rk4_step(field, y, h, ctl.halving)
            finite = math.isfinite(sum(y_new))
            why = "non-finite state"
        except (NumericOverflowError, OverflowError) as exc:
            y_new, inc, finite, why = None, None, False, str(exc)
        too_big = False
        if ctl.halving and finite:
            # componentwise, so a small fast component cannot hide behind a large one
            too_big = any(i > rel * (abs(a) if abs(a) > floor else floor) for i, a in zip(inc, y))
        low = min(y_new) if finite else 0.0
        negative = low < -CLIP_TOL
        if ctl.halving and not deepest and (not finite or too_big or negative):
            pending += [0.5 * h, 0.5 * h]
            continue
        if not finite:
            raise _Stop(STEP_FAILURE, y, elapsed, why)
        if negative:
            raise _Stop(POSITIVITY, y, elapsed, f"state component {low:.3e} < 0")
        y = [x if x > 0.0 else 0.0 for x in y_new] if low < 0.0 else y_new
        elapsed += h
        if norm(y) > ctl.guard:
            raise _Stop(BLOW_UP, y, elapsed, f"max norm exceeded {ctl.guard:g}")
    return y


def steps_for(span: float, dt: float, what: str) -> int:
    k = int(round(span / dt))
    if k < 1 or abs(k * dt - span) > 1e-9 * span:
        raise ValueError(f"{what}={span!r} is not a positive integer multiple of dt={dt!r}")
    return k


@dataclass
class TrajectoryRecord:
    n: int
    times: list[float] = field(default_factory=list)
    states: list[StateVector] = field(default_factory=list)
    frames: list[MonitorFrame] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    max_norm: float = 0.0
    steps: int = 0
    message: str = ""
    threshold_frames: int = 0  # frames at or above C_underbar
    _status: str | None = None

    @property
    def status(self) -> str | None:
        return self._status

    @status.setter
    def status(self, value: str):
        if self._status is not None:
            raise RuntimeError("termination status already set")
        self._status = value

    def record(self, t: float, y: np.ndarray):
        if self.times and not t > self.times[-1]:
            return
        n = self.n
        self.times.append(float(t))
        y = np.asarray(y, dtype=float)
        self.states.append(StateVector(y[:n].copy(), y[n:].copy(), float(t)))

    def write_trajectory_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"u_{i}" for i in range(1, self.n + 1)] + [f"v_{i}" for i in range(1, self.n + 1)])
            for s in self.states:
                w.writerow([repr(float(s.t))] + [repr(float(x)) for x in s.u] + [repr(float(x)) for x in s.v])

    def write_monitors_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "W_N", "W_YC", "W_YC_R", "W_YC_D", "mathcalW", "max_norm", "n_t", "crossings"])
            if self.frames:
                for f in self.frames:
                    cross = ";".join(f"{i}:{d}" for i, d in f.crossings)
                    w.writerow([repr(f.t), repr(f.W_N), repr(f.W_YC), repr(f.W_YC_R), repr(f.W_YC_D),
                                repr(f.mathcal_W), repr(f.max_norm), f.n_t, cross])
            else:
                for s in self.states:
                    w.writerow([repr(float(s.t))] + ["nan"] * 5 + [repr(float(np.max(s.u + s.v))), "", ""])


def integrate(sys: DiscretizedSystem, t_end: float, dt: float, monitor_every: float | None = None,
              llf: MonitorSpec | None = None, control: StepControl = StepControl()) -> TrajectoryRecord:
    """Integrate the discretized system from its initial state.

    States (and monitor frames when ``llf`` is given) are recorded every
    ``monitor_every``, at the start, and where the run stops.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    nsteps = steps_for(t_end, dt, "t_end")
    every = steps_for(monitor_every, dt, "monitor_every") if monitor_every is not None else 1
    n = sys.n

    field_ = rhs_field(sys)

    def norm(y):
        return max(a + b for a, b in zip(y[:n], y[n:]))

    rec = TrajectoryRecord(n)
    y = [float(x) for x in np.concatenate([sys.u0, sys.v0])]
    rec.max_norm = norm(y)
    prev_frame = None

    def observe(t, y):
        nonlocal prev_frame
        rec.record(t, y)
        if llf is None:
            return
        y = np.asarray(y, dtype=float)
        fr = monitor_frame(t, y[:n], y[n:], sys, llf, prev_frame.partition if prev_frame else None)
        rec.frames.append(fr)
        if fr.max_norm >= llf.C_underbar:
            rec.threshold_frames += 1
        rec.violations += assert_lemmas(fr, llf, prev_frame, sys.gamma, n)
        prev_frame = fr

    observe(0.0, y)
    for k in range(1, nsteps + 1):
        try:
            y = advance(field_, y, dt, norm, control)
        except _Stop as stop:
            t_stop = (k - 1) * dt + stop.elapsed
            rec.max_norm = max(rec.max_norm, norm(stop.y))
            observe(t_stop, stop.y)
            rec.steps = k - 1
            rec.message = stop.message
            rec.status = stop.status
            return rec
        rec.max_norm = max(rec.max_norm, norm(y))
        if k % every == 0 or k == nsteps:
            observe(k * dt, y)
    rec.steps = nsteps
    rec.status = COMPLETED
    return rec


def integrate_field(field_: Callable, y0, t_end: float, dt: float, norm: Callable,
                    control: StepControl = StepControl(), record_every: int = 1):
    """Bare RK4 driver for small autonomous systems: returns (times, states, status, message)."""
    nsteps = steps_for(t_end, dt, "t_end")
    y = [float(x) for x in y0]
    times, states = [0.0], [np.array(y)]
    for k in range(1, nsteps + 1):
        try:
            y = advance(field_, y, dt, norm, control)
        except _Stop as stop:
            t_stop = (k - 1) * dt + stop.elapsed
            if t_stop > times[-1]:
                times.append(t_stop)
                states.append(np.array(stop.y, dtype=float))
            return times, states, stop.status, stop.message
        if k % record_every == 0 or k == nsteps:
            times.append(k * dt)
            states.append(np.array(y))
    return times, states, COMPLETED, ""


__all__ = [
    "COMPLETED", "BLOW_UP", "POSITIVITY", "STEP_FAILURE", "PartitionSnapshot", "snapshot_partition",
    "detect_crossings", "FluxEffects", "flux_effects", "MonitorSpec", "MonitorFrame", "monitor_frame",
    "Violation", "assert_lemmas", "StepControl", "rk4_step", "advance", "TrajectoryRecord", "integrate",
    "integrate_field", "PositivityViolation",
]
