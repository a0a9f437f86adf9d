"""Run configuration: a flat ``key = value`` text format with dotted sections.

Reaction and LLF functions are term tables, one ``coef, p, q, r, s`` row per
repeated line::

    example = schnakenberg
    param.c = 43.0
    system.n = 2
    reaction.f = 0.1, 0, 0, 0, 0
    reaction.f = -1.0, 1, 0, 0, 0

Lines starting with ``#`` and blank lines are ignored. Unknown keys raise
:class:`ConfigError` naming the key.
"""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields

import numpy as np

from .catalog import DEFAULT_PARAMS, Example, build_example
from .errors import ConfigError
from .llf import VerifySettings
from .model import RTF, DiscretizedSystem, ReactionPair

# config key -> (RunConfig attribute, kind)
_SCALARS = {
    "example": ("example", "str"),
    "system.n": ("n", "int"),
    "system.gamma": ("gamma", "float"),
    "system.d": ("d", "float"),
    "ic.u0": ("u0", "floats"),
    "ic.v0": ("v0", "floats"),
    "integrator.t_end": ("t_end", "float"),
    "integrator.dt": ("dt", "float"),
    "integrator.monitor_every": ("monitor_every", "float"),
    "integrator.halving": ("halving", "bool"),
    "integrator.guard": ("guard", "float"),
    "verify.extent": ("extent", "float"),
    "verify.spacing": ("spacing", "float"),
    "verify.v_cap": ("v_cap", "float"),
    "verify.shape_points": ("shape_points", "int"),
    "verify.rays": ("rays", "int"),
    "verify.fan": ("fan", "int"),
    "output.dir": ("out", "str"),
}
_TABLES = {"reaction.f": "f_terms", "reaction.g": "g_terms", "llf.W": "W_terms"}


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs. ``None`` means "use the example default"."""

    example: str | None = None
    params: tuple = ()  # sorted (name, value) pairs
    f_terms: tuple = ()
    g_terms: tuple = ()
    W_terms: tuple = ()
    n: int | None = None
    gamma: float | None = None
    d: float | None = None
    u0: tuple | None = None
    v0: tuple | None = None
    t_end: float | None = None
    dt: float | None = None
    monitor_every: float | None = None
    halving: bool | None = None
    guard: float | None = None
    extent: float | None = None
    spacing: float | None = None
    v_cap: float | None = None
    shape_points: int | None = None
    rays: int | None = None
    fan: int | None = None
    out: str | None = None

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def with_params(self, **params) -> "RunConfig":
        merged = dict(self.params)
        merged.update({k: float(v) for k, v in params.items()})
        return self.replace(params=tuple(sorted(merged.items())))

    # -- resolution ---------------------------------------------------------

    def resolve(self) -> "Resolved":
        """Merge with example defaults and build the model objects."""
        ex: Example | None = None
        if self.example is not None:
            try:
                ex = build_example(self.example, **dict(self.params))
            except KeyError as exc:
                key = "example" if self.example not in DEFAULT_PARAMS else "param"
                raise ConfigError(str(exc.args[0]), key) from None
        elif self.params:
            raise ConfigError("param.* entries need an example", "param")

        def pick(name, fallback=None):
            val = getattr(self, name)
            if val is not None:
                return val
            if ex is not None and hasattr(ex, name):
                return getattr(ex, name)
            if fallback is None:
                raise ConfigError(f"missing required setting for {name!r}", name)
            return fallback

        if self.f_terms or self.g_terms:
            if not (self.f_terms and self.g_terms):
                raise ConfigError("both reaction.f and reaction.g are needed", "reaction")
            reactions = ReactionPair(RTF.from_rows(self.f_terms), RTF.from_rows(self.g_terms))
        elif ex is not None:
            reactions = ex.reactions
        else:
            raise ConfigError("no example and no reaction terms given", "example")
        W = RTF.from_rows(self.W_terms) if self.W_terms else (ex.W if ex is not None else None)

        n = int(pick("n"))
        u0 = tuple(float(x) for x in pick("u0"))
        v0 = tuple(float(x) for x in pick("v0"))
        if len(u0) != n or len(v0) != n:
            raise ConfigError(f"initial values need {n} entries each", "ic.u0" if len(u0) != n else "ic.v0")
        settings = VerifySettings(
            extent=self.extent,
            spacing=pick("spacing", VerifySettings.spacing),
            v_cap=pick("v_cap", VerifySettings.v_cap),
            shape_points=pick("shape_points", VerifySettings.shape_points),
            rays=pick("rays", VerifySettings.rays),
            fan=pick("fan", VerifySettings.fan),
        )
        return Resolved(
            config=self, reactions=reactions, W=W, n=n, gamma=float(pick("gamma")), d=float(pick("d")),
            u0=u0, v0=v0, t_end=float(pick("t_end")), dt=float(pick("dt")),
            monitor_every=float(pick("monitor_every", pick("dt"))), halving=bool(pick("halving", False)),
            guard=float(pick("guard", 1e6)), verify=settings, params=dict(ex.params) if ex else {},
        )

    def fingerprint(self, scope: str = "system") -> str:
        """Digest of the canonical text form restricted to what a stage depends on.

        ``llf`` covers the reactions, W and verification grid; ``system`` adds
        n, gamma, d and the initial values. Integrator settings and the output
        directory never count.
        """
        drop = dict(out=None, t_end=None, dt=None, monitor_every=None, halving=None, guard=None)
        if scope == "llf":
            drop.update(n=None, gamma=None, d=None, u0=None, v0=None)
        elif scope != "system":
            raise ValueError(f"unknown fingerprint scope {scope!r}")
        return hashlib.sha256(emit(self.replace(**drop)).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Resolved:
    config: RunConfig
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
    guard: float
    verify: VerifySettings
    params: dict = field(default_factory=dict)

    def system(self) -> DiscretizedSystem:
        return DiscretizedSystem(self.n, self.gamma, self.d, self.reactions,
                                 np.array(self.u0, float), np.array(self.v0, float))


# ---------------------------------------------------------------- text form


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (tuple, list)):
        return ", ".join(_fmt(v) for v in x)
    return str(x)


def _parse_value(key: str, kind: str, raw: str):
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.split(","))
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}", key) from None
    raise AssertionError(kind)


def _parse_row(key: str, raw: str) -> tuple:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 5:
        raise ConfigError(f"{key} rows need 5 fields (coef, p, q, r, s), got {raw!r}", key)
    try:
        coef = float(parts[0])
        exps = tuple(int(p) for p in parts[1:])
    except ValueError:
        raise ConfigError(f"bad term row {raw!r} for {key}", key) from None
    if min(exps) < 0:
        raise ConfigError(f"negative exponent in {raw!r}", key)
    return (coef,) + exps


def parse(text: str) -> RunConfig:
    values: dict = {}
    tables: dict = {name: [] for name in _TABLES.values()}
    params: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value", line)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in _SCALARS:
            attr, kind = _SCALARS[key]
            if attr in values:
                raise ConfigError(f"duplicate key {key}", key)
            values[attr] = _parse_value(key, kind, raw)
        elif key in _TABLES:
            tables[_TABLES[key]].append(_parse_row(key, raw))
        elif key.startswith("param.") and len(key) > 6:
            params[key[6:]] = _parse_value(key, "float", raw)
        else:
            raise ConfigError(f"unknown config key {key!r}", key)
    return RunConfig(params=tuple(sorted(params.items())),
                     **{k: tuple(v) for k, v in tables.items()}, **values)


def emit(cfg: RunConfig) -> str:
    lines = []
    for key, (attr, _) in _SCALARS.items():
        val = getattr(cfg, attr)
        if val is not None:
            lines.append(f"{key} = {_fmt(val)}")
    for name, val in cfg.params:
        lines.append(f"param.{name} = {_fmt(float(val))}")
    for key, attr in _TABLES.items():
        for row in getattr(cfg, attr):
            lines.append(f"{key} = {_fmt(float(row[0]))}, " + ", ".join(str(int(e)) for e in row[1:]))
    return "\n".join(lines) + "\n"


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def config_fields() -> list[str]:
    return [f.name for f in fields(RunConfig)]
