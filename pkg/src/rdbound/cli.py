"""Command-line front end.

Exit codes: 0 ok, 1 usage/config/pipeline error, 2 blow-up detected,
3 LLF refuted, 4 LLF inconclusive (or a bound that cannot be represented).
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from . import certificates as cert
from .bounds import build_ledger, ConstantLedger
from .catalog import EXAMPLES
from .config import RunConfig, Resolved, emit, load
from .errors import ChainOverflow, ConfigError, PipelineOrderError, ReductionNotApplicable
from .llf import INCONCLUSIVE, REFUTED, VERIFIED, candidate_from_json, verify_llf, _jsonable
from .sim import BLOW_UP, COMPLETED, MonitorSpec, StepControl, integrate

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP, EXIT_REFUTED, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
VERDICT_EXIT = {VERIFIED: EXIT_OK, REFUTED: EXIT_REFUTED, INCONCLUSIVE: EXIT_INCONCLUSIVE}


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _param(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--example", choices=EXAMPLES)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out", type=Path, help="output directory (default: out)")
    common.add_argument("--t-end", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--monitor-every", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--gamma", type=float)
    common.add_argument("--d", type=float)
    common.add_argument("--u0", type=_floats, help="comma-separated u_i(0)")
    common.add_argument("--v0", type=_floats, help="comma-separated v_i(0)")
    common.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                        help="override an example parameter (repeatable)")
    common.add_argument("--force", action="store_true", help="skip the verify-llf prerequisite check")
    common.add_argument("--dump-config", action="store_true", help="print the effective config and exit")

    p = argparse.ArgumentParser(prog="rdbound", description="Bounds and blow-up checks for "
                                "two-species reaction-diffusion compartment models.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [("simulate", "integrate the compartment system"),
                           ("verify-llf", "check a candidate Lyapunov-like function"),
                           ("bounds", "compute the constant ledger and the bound B"),
                           ("certify", "no-LLF certificates and the blow-up certificate")]:
        sub.add_parser(name, parents=[common], help=helptext)
    return p


def config_from_args(args) -> RunConfig:
    cfg = load(args.config) if args.config else RunConfig()
    if args.example:
        cfg = cfg.replace(example=args.example)
    overrides = {"t_end": args.t_end, "dt": args.dt, "monitor_every": args.monitor_every, "n": args.n,
                 "gamma": args.gamma, "d": args.d, "u0": args.u0, "v0": args.v0,
                 "out": str(args.out) if args.out else None}
    cfg = cfg.replace(**{k: v for k, v in overrides.items() if v is not None})
    if args.param:
        cfg = cfg.with_params(**dict(args.param))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data: dict):
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        return None


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig, force: bool = False) -> int:
    res = cfg.resolve()
    out = _out_dir(cfg)
    spec, bound = None, None
    ledger_doc = _read_json(out / "ledger.json")
    if (res.W is not None and ledger_doc and ledger_doc.get("status") == "ok"
            and ledger_doc.get("config_fingerprint") == cfg.fingerprint("system")):
        led = ConstantLedger.from_json(ledger_doc["ledger"])
        spec = MonitorSpec.from_ledger(res.W, led)
        bound = {"B": led["B"], "ledger_fields": ["B", "C_underbar", "M_K", "F_max"]}
    else:
        report = _read_json(out / "report.json")
        if (res.W is not None and report and report.get("verdict") == VERIFIED
                and report.get("config_fingerprint") == cfg.fingerprint("llf")):
            spec = MonitorSpec(res.W, float(report["constants"]["M_K"]))
    rec = integrate(res.system(), res.t_end, res.dt, res.monitor_every, spec,
                    StepControl(halving=res.halving, guard=res.guard))
    rec.write_trajectory_csv(out / "trajectory.csv")
    rec.write_monitors_csv(out / "monitors.csv")
    summary = {
        "status": rec.status, "message": rec.message, "t_final": rec.times[-1], "steps": rec.steps,
        "max_norm": rec.max_norm, "n": res.n, "config_fingerprint": cfg.fingerprint("system"),
        "bound": None, "monitors": None,
    }
    if bound is not None:
        bound["respected"] = bool(rec.max_norm <= bound["B"])
        summary["bound"] = bound
    if spec is not None:
        summary["monitors"] = {
            "frames": len(rec.frames), "threshold_frames": rec.threshold_frames,
            "violations": len(rec.violations),
            "by_lemma": dict(sorted(Counter(v.lemma.split("@")[0] for v in rec.violations).items())),
            "ledger_fields": ["M_K"] if bound is None else bound["ledger_fields"],
        }
    _write_json(out / "summary.json", summary)
    print(f"{rec.status}: t={rec.times[-1]:g} max norm={rec.max_norm:.6g}"
          + (f" B={bound['B']:.6g}" if bound else ""))
    if rec.status == COMPLETED:
        return EXIT_OK
    if rec.status == BLOW_UP:
        return EXIT_BLOWUP
    print(f"error: {rec.message}", file=sys.stderr)
    return EXIT_ERROR


def _verify(res: Resolved):
    if res.W is None:
        raise UsageError("no LLF candidate: give llf.W term rows in the config")
    return verify_llf(res.W, res.reactions, res.verify)


def cmd_verify_llf(cfg: RunConfig, force: bool = False) -> int:
    res = cfg.resolve()
    cand = _verify(res)
    doc = cand.to_json()
    doc["config_fingerprint"] = cfg.fingerprint("llf")
    doc["W"] = res.W.as_rows()
    _write_json(_out_dir(cfg) / "report.json", doc)
    for name, r in cand.reports.items():
        extra = f" witness={r.witness}" if r.witness is not None else ""
        print(f"{name}: {r.verdict}{extra}")
    print(f"verdict: {cand.verdict}")
    return VERDICT_EXIT[cand.verdict]


def cmd_bounds(cfg: RunConfig, force: bool = False) -> int:
    res = cfg.resolve()
    out = _out_dir(cfg)
    report = _read_json(out / "report.json")
    if report is not None and report.get("config_fingerprint") == cfg.fingerprint("llf"):
        if report["verdict"] != VERIFIED and not force:
            raise PipelineOrderError(f"report.json verdict is {report['verdict']}; bounds need a verified LLF")
        cand = candidate_from_json(res.W, report)
        if cand.K is None:
            cand = _verify(res)
    elif force:
        cand = _verify(res)
    else:
        why = "missing" if report is None else "from a different configuration"
        raise PipelineOrderError(f"{out / 'report.json'} is {why}; run verify-llf first (or pass --force)")
    if cand.K is None:
        print(f"verdict: {cand.verdict}; no K, so no ledger")
        return VERDICT_EXIT.get(cand.verdict, EXIT_INCONCLUSIVE)
    doc = {"config_fingerprint": cfg.fingerprint("system"), "llf_verdict": cand.verdict}
    try:
        led = build_ledger(cand, res.n, res.d, res.gamma, res.u0, res.v0, res.verify.v_cap)
    except ChainOverflow as exc:
        doc.update(status="chain-overflow", message=str(exc), step=exc.step, ledger=None)
        _write_json(out / "ledger.json", doc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    doc.update(status="ok", message="", ledger=led.to_json())
    _write_json(out / "ledger.json", doc)
    for name in ("K", "M_K", "B_K", "F_max", "C", "C_underbar", "B"):
        print(f"{name} = {led[name]:.6g}")
    return EXIT_OK


def cmd_certify(cfg: RunConfig, force: bool = False) -> int:
    res = cfg.resolve()
    doc: dict = {"config_fingerprint": cfg.fingerprint("system"), "no_llf": []}
    ratio = cert.no_llf_ratio_test(res.reactions)
    if ratio is not None:
        doc["no_llf"].append(ratio.to_json())
    if cfg.example == "mutualism" and not (cfg.f_terms or cfg.g_terms):
        p = res.params
        mut = cert.no_llf_mutualism_test(p["a1"], p["a2"], p["b1"], p["b2"], p["c1"], p["c2"])
        if mut is not None:
            doc["no_llf"].append(mut.to_json())
    sys_ = res.system()
    try:
        reduced = cert.reduce_symmetric(sys_)
    except ReductionNotApplicable as exc:
        doc["blow_up"] = {"verdict": cert.INAPPLICABLE, "reason": str(exc)}
    else:
        bc = cert.blowup_certificate(reduced.delta, reduced.u0, reduced.v0)
        block = bc.to_json()
        if bc.verdict == cert.CERTIFIED:
            times, states, status, message = reduced.integrate(res.t_end, res.dt, StepControl(
                halving=True, guard=res.guard))
            block["reduced_simulation"] = {"status": status, "message": message, "t_final": times[-1]}
            block["gronwall"] = cert.verify_gronwall(times, states, bc).to_json()
        rec = integrate(sys_, res.t_end, res.dt, None, None, StepControl(halving=True, guard=res.guard))
        block["full_simulation"] = {"status": rec.status, "t_final": rec.times[-1], "max_norm": rec.max_norm}
        doc["blow_up"] = block
    _write_json(_out_dir(cfg) / "certificate.json", doc)
    for c in doc["no_llf"]:
        print(f"no-LLF certificate: {c['condition']}")
    if not doc["no_llf"]:
        print("no-LLF certificate: none fired")
    bu = doc["blow_up"]
    print(f"blow-up certificate: {bu['verdict']}")
    if "gronwall" in bu:
        print(f"Gronwall bound holds: {bu['gronwall']['holds']}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify-llf": cmd_verify_llf, "bounds": cmd_bounds,
            "certify": cmd_certify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.dump_config:
            sys.stdout.write(emit(cfg))
            return EXIT_OK
        return COMMANDS[args.command](cfg, args.force)
    except ConfigError as exc:
        print(f"config error [{exc.key}]: {exc}", file=sys.stderr)
    except PipelineOrderError as exc:
        print(f"pipeline order: {exc}", file=sys.stderr)
    except (UsageError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
