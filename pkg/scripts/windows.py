"""Threshold curves and distributed steering along t at fixed noise (three-party protocol).

Writes two CSV files into --out-dir:
  thresholds.csv  separable, nonsteerable and d_B = 2 noise thresholds versus t
  steering.csv    distributed A'->B' steering for three settings at the chosen x
and prints the window edges.
"""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sepsteer.cli import THRESHOLD_COLUMNS, fmt_float, threshold_row
from sepsteer.optimize import AncillaPolicy, db2_window_numeric, distributed_steering, steering_window_end
from sepsteer.protocols import ProtocolParams


@dataclass
class Config:
    x: float = 0.5
    t_max: float = 1.2
    steps: int = 240
    tol: float = 1e-8
    out_dir: Path = Path("results/windows")


def steering_rows(cfg: Config):
    for t in np.linspace(cfg.t_max / cfg.steps, cfg.t_max, cfg.steps):
        opt = ProtocolParams.optimal(t, cfg.x)
        yield {
            "t": t,
            "G_optimal_separable": distributed_steering(opt, AncillaPolicy.SEPARABLE),
            "G_optimal_nonsteerable": distributed_steering(opt, AncillaPolicy.NONSTEERABLE),
            "G_dB2_separable": distributed_steering(ProtocolParams(t, cfg.x, 2.0), AncillaPolicy.SEPARABLE),
        }


def write(path: Path, columns, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt_float(row[c]) for c in columns])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x", type=float, default=Config.x)
    ap.add_argument("--t-max", type=float, default=Config.t_max)
    ap.add_argument("--steps", type=int, default=Config.steps)
    ap.add_argument("--out-dir", type=Path, default=Config.out_dir)
    cfg = Config(**{k: v for k, v in vars(ap.parse_args()).items()})
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    grid = np.linspace(cfg.t_max / cfg.steps, min(cfg.t_max, 1.5), cfg.steps)
    write(cfg.out_dir / "thresholds.csv", THRESHOLD_COLUMNS, (threshold_row(float(t), cfg.tol) for t in grid))
    write(cfg.out_dir / "steering.csv",
          ("t", "G_optimal_separable", "G_optimal_nonsteerable", "G_dB2_separable"), steering_rows(cfg))

    w = db2_window_numeric(cfg.x)
    print(f"x = {cfg.x}")
    print(f"  separable ancilla:    0 < t < {steering_window_end(cfg.x, AncillaPolicy.SEPARABLE):.4f}")
    print(f"  nonsteerable ancilla: 0 < t < {steering_window_end(cfg.x, AncillaPolicy.NONSTEERABLE):.4f}")
    print("  d_B = 2:              empty" if w.empty else f"  d_B = 2:              {w.t_lo:.4f} < t < {w.t_hi:.4f}")
    print(f"wrote {cfg.out_dir}/thresholds.csv and {cfg.out_dir}/steering.csv")


if __name__ == "__main__":
    main()
