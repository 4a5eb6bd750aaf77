"""Write every sweep table (capacity curves and constraint curves) as CSV.

    python3 scripts/regenerate_figures.py --out results/

Each file is byte-identical between runs; QNETCAP_THREADS only changes speed.
"""

import argparse
import pathlib

from qnetcap.config import ScenarioConfig
from qnetcap.planner import sweep_csv

JOBS = {
    "fig1": "table1-setup1",
    "fig3a": "table1-setup1",
    "fig3c": "table1-setup1",
    "fig4a": "table2",
    "fig4b": "table2",
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for figure, preset in JOBS.items():
        cfg = ScenarioConfig.from_preset(preset).with_overrides([f'sweep.figure="{figure}"'])
        text = sweep_csv(cfg)
        path = out / f"{figure}.csv"
        path.write_text(text)
        bad = sum(1 for line in text.splitlines()[1:] if ",error:" in line)
        print(f"{path}: {text.count(chr(10)) - 1} rows, {bad} error rows")


if __name__ == "__main__":
    main()
