"""Run the CLI pipeline on every catalog example and print the exit codes.

    python scripts/run_examples.py [--out runs]
"""
import argparse
import json
from pathlib import Path

from rdbound.cli import main

PIPELINES = {
    "schnakenberg": [["verify-llf"], ["bounds"], ["simulate"]],
    "mutualism": [["simulate"], ["certify", "--t-end", "5"]],
    "weinberger": [["verify-llf"], ["simulate"], ["certify", "--t-end", "5"]],
}


def run(out: Path):
    for name, steps in PIPELINES.items():
        target = out / name
        for step in steps:
            code = main([step[0], "--example", name, "--out", str(target), *step[1:]])
            print(f"{name:13s} {step[0]:11s} exit {code}")
    near = out / "weinberger-delta0.1"
    code = main(["certify", "--example", "weinberger", "--param", "delta=0.1", "--u0", "4,2", "--v0", "2,4",
                 "--t-end", "5", "--out", str(near)])
    print(f"{'weinberger':13s} {'certify':11s} exit {code} (delta=0.1, reduced start (4, 2))")
    summary = json.loads((out / "schnakenberg" / "summary.json").read_text())
    print(f"schnakenberg max norm {summary['max_norm']:.6g} against B = {summary['bound']['B']:.6g}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("runs"))
    run(ap.parse_args().out)
