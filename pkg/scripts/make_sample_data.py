#!/usr/bin/env python3
"""Regenerate the bundled sample price CSVs under data/.

The series are synthesized from the package's own market models (seeds
recorded in the file headers) and shifted to price-like levels; they stand
in for pre-stitched daily futures series in the real-data pipeline tests
and CLI examples.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from ntband.models import ModelSpec, simulate

OUT = Path(__file__).resolve().parent.parent / "data"

SERIES = {
    # name -> (model, seed, n_days, start_level, start_date)
    "sample_bond": (ModelSpec.linear(0.2, 0.02, 0.4), 1101, 9000, 110.0, "1990-01-01"),
    "sample_energy": (ModelSpec.stochastic_vol(0.15, 0.02, 0.9, 0.5, 0.005,
                                               coupling="tanh2"),
                      2202, 9000, 60.0, "1990-01-01"),
}


def main():
    OUT.mkdir(exist_ok=True)
    for name, (model, seed, n_days, level, start) in SERIES.items():
        path = simulate(model, n_days - 1, 1.0, seed)
        dates = pd.bdate_range(start, periods=n_days)
        df = pd.DataFrame({"date": dates.strftime("%Y-%m-%d"),
                           "price": np.round(level + path.x, 4)})
        target = OUT / f"{name}.csv"
        with open(target, "w", newline="") as f:
            f.write(f"# synthesized sample series seed={seed}\n")
            df.to_csv(f, index=False, lineterminator="\n")
        print(f"wrote {target} ({n_days} rows)")


if __name__ == "__main__":
    main()
