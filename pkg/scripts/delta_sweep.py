"""Blow-up certificate verdicts and simulated outcomes across delta.

For each delta the symmetric two-compartment system starts at (4, 2) / (2, 4);
the certificate only claims blow-up below its threshold, the simulation shows
what actually happens.

    python scripts/delta_sweep.py [--csv delta_sweep.csv] [--t-end 5]
"""
import argparse
import csv

from rdbound.certificates import ReducedSystem, blowup_certificate

DELTAS = (0.0, 0.05, 0.1, 0.13, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)


def main(path: str, t_end: float, dt: float):
    rows = []
    for delta in DELTAS:
        cert = blowup_certificate(delta, 4.0, 2.0)
        times, states, status, _ = ReducedSystem(delta, 4.0, 2.0).integrate(t_end, dt)
        end = states[-1]
        rows.append({"delta": delta, "verdict": cert.verdict, "threshold": cert.threshold,
                     "epsilon": cert.epsilon, "status": status, "t_final": times[-1],
                     "u_final": float(end[0]), "v_final": float(end[1])})
        print(f"delta={delta:<5g} {cert.verdict:18s} {status:18s} t={times[-1]:.4g}")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", default="delta_sweep.csv")
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=1e-4)
    a = ap.parse_args()
    main(a.csv, a.t_end, a.dt)
