"""Bounds, Lyapunov-like function checks and blow-up certificates for
two-species reaction-diffusion systems on a line of compartments."""
from .bounds import ConstantLedger, build_ledger
from .catalog import EXAMPLES, build_example
from .certificates import blowup_certificate, no_llf_mutualism_test, no_llf_ratio_test, reduce_symmetric
from .config import RunConfig, load, parse
from .llf import LLFCandidate, VerifySettings, verify_llf
from .model import RTF, DiscretizedSystem, ReactionPair, Term, apply_diffusion
from .sim import MonitorSpec, StepControl, integrate

__all__ = [
    "ConstantLedger", "build_ledger", "EXAMPLES", "build_example", "blowup_certificate",
    "no_llf_mutualism_test", "no_llf_ratio_test", "reduce_symmetric", "RunConfig", "load", "parse",
    "LLFCandidate", "VerifySettings", "verify_llf", "RTF", "DiscretizedSystem", "ReactionPair", "Term",
    "apply_diffusion", "MonitorSpec", "StepControl", "integrate",
]
