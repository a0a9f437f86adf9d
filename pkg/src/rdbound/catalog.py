"""The three example systems with their simulation defaults."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import RTF, DiscretizedSystem, ReactionPair, Term


def schnakenberg(a: float = 0.1, b: float = 1.0) -> ReactionPair:
    f = RTF((Term(a), Term(-1.0, 1), Term(1.0, 2, 1)))
    g = RTF((Term(b), Term(-1.0, 2, 1)))
    return ReactionPair(f, g)


def schnakenberg_llf(c: float = 43.0) -> RTF:
    """u + 2v + c/(u+1) + 1/(v+1)."""
    return RTF((Term(1.0, 1), Term(2.0, 0, 1), Term(c, 0, 0, 1), Term(1.0, 0, 0, 0, 1)))


def mutualism(a1=-1.0, a2=1.0, b1=1.0, b2=2.0, c1=1.0, c2=1.0) -> ReactionPair:
    f = RTF((Term(a1, 1), Term(-b1, 2), Term(c1, 1, 1)))
    g = RTF((Term(a2, 0, 1), Term(b2, 1, 1), Term(-c2, 0, 2)))
    return ReactionPair(f, g)


def weinberger(delta: float = 10.0) -> ReactionPair:
    # uv(u-v)(u+1) - delta u, and the mirror image for g
    f = RTF((Term(1.0, 3, 1), Term(1.0, 2, 1), Term(-1.0, 2, 2), Term(-1.0, 1, 2), Term(-delta, 1)))
    return ReactionPair(f, f.swap())


def weinberger_lyapunov() -> RTF:
    """(u+1)^2 (v+1)^2, a global Lyapunov function of the reaction-only system."""
    pu = RTF((Term(1.0, 2), Term(2.0, 1), Term(1.0)))
    return pu * pu.swap()


@dataclass(frozen=True)
class Example:
    name: str
    reactions: ReactionPair
    W: RTF | None
    n: int
    gamma: float
    d: float
    u0: tuple
    v0: tuple
    t_end: float
    dt: float
    monitor_every: float
    halving: bool
    params: dict = field(default_factory=dict)

    def system(self) -> DiscretizedSystem:
        return DiscretizedSystem(self.n, self.gamma, self.d, self.reactions,
                                 np.array(self.u0, float), np.array(self.v0, float))


DEFAULT_PARAMS = {
    "schnakenberg": {"a": 0.1, "b": 1.0, "c": 43.0},
    "mutualism": {"a1": -1.0, "a2": 1.0, "b1": 1.0, "b2": 2.0, "c1": 1.0, "c2": 1.0},
    "weinberger": {"delta": 10.0},
}


def build_example(name: str, **overrides) -> Example:
    if name not in DEFAULT_PARAMS:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(DEFAULT_PARAMS)}")
    params = dict(DEFAULT_PARAMS[name])
    unknown = set(overrides) - set(params)
    if unknown:
        raise KeyError(f"unknown parameter(s) for {name}: {sorted(unknown)}")
    params.update({k: float(v) for k, v in overrides.items()})
    if name == "schnakenberg":
        return Example(name, schnakenberg(params["a"], params["b"]), schnakenberg_llf(params["c"]),
                       n=2, gamma=150.0, d=30.0, u0=(0.8, 2.0), v0=(0.1, 0.7),
                       t_end=10.0, dt=1e-4, monitor_every=1e-2, halving=False, params=params)
    if name == "mutualism":
        return Example(name, mutualism(**params), None,
                       n=2, gamma=1.0, d=1.0, u0=(3.0, 0.001), v0=(0.001, 3.0),
                       t_end=20.0, dt=1e-4, monitor_every=1e-2, halving=True, params=params)
    return Example(name, weinberger(params["delta"]), weinberger_lyapunov(),
                   n=2, gamma=1.0, d=1.0, u0=(2.0, 4.0), v0=(4.0, 2.0),
                   t_end=20.0, dt=1e-4, monitor_every=1e-2, halving=True, params=params)


EXAMPLES = tuple(DEFAULT_PARAMS)
