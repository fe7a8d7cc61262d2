"""
Burgers Reduction Across Orders
===============================
With psi0 = 0 and a flat bottom the system reduces to the inviscid Burgers
equation in rescaled time s = t^beta / beta. For u0 = -x exp(-x^2) the
gradient at the origin follows -1/(1 - s) exactly, so the breaking time is

    t* = (beta * 1)^(1/beta)

which coincides with T_sharp. This script checks the detected t* against it
for several orders.

Output: analysis/results/burgers_orders.csv
"""

import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from tsunami_blowup.conformable import riccati_blowup_bounds, time_inverse_map
from tsunami_blowup.experiments import parse_config, run_refinement
from tsunami_blowup.monitor import detect_blowup

CONFIG_FILE = "configs/burgers.cfg"
OUTPUT_FILE = "analysis/results/burgers_orders.csv"
ORDERS = [0.5, 0.75, 1.0]


def main():
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

    print("=" * 60)
    print("BURGERS REDUCTION: t* = beta^(1/beta)")
    print("=" * 60)

    base = parse_config(CONFIG_FILE)
    rows = []
    for beta in ORDERS:
        # breaking at s = 1, run a little past it
        config = replace(base, beta=beta, t_end=float(time_inverse_map(1.2, beta)))
        report = detect_blowup(run_refinement(config))
        expected = riccati_blowup_bounds(-1.0, beta).t_sharp
        rel_error = abs(report.t_star_estimate - expected) / expected
        print(f"beta={beta:<5g} t*={report.t_star_estimate:.6f}  expected={expected:.6f}  rel.err={rel_error:.2e}")
        rows.append({
            'beta': beta,
            'detected': report.detected,
            't_star': report.t_star_estimate,
            't_star_uncertainty': report.t_star_uncertainty,
            't_sharp': expected,
            'rel_error': rel_error,
            'x_star': report.x_star,
        })

    Path(OUTPUT_FILE).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(OUTPUT_FILE, index=False)
    print(f"\nSaved: {OUTPUT_FILE}")


if __name__ == "__main__":
    main()
