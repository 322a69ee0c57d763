"""Run one experiment config and print where the report went.

    python scripts/run_experiment.py scripts/configs/split_quality.json --out results/quality
"""

import argparse
import json
import logging
from pathlib import Path

from coalition_forge.bench import ExperimentConfig, read_records, run_config


def summarize(paths):
    for path in paths:
        if path.name == "starlink.json":
            rep = json.loads(path.read_text())
            print(f"{rep['satellites']} satellites, {rep['coalition_count']} coalitions, "
                  f"links {rep['links_before']} -> {rep['links_after']}")
        elif path.name == "trend.json":
            for sparsity, fit in json.loads(path.read_text()).items():
                print(f"sparsity {sparsity}: anneal power {fit.get('anneal_power', float('nan')):.2f}, "
                      f"exhaustive log2/var {fit.get('exhaustive_log2_per_var', float('nan')):.2f}")
        elif path.name.startswith("records."):
            recs = [r for r in read_records(path) if not r.skipped and r.exact_cost is not None]
            if recs and recs[0].study == "splitQuality":
                best = sum(abs(r.best_cost - r.exact_cost) < 1e-9 for r in recs)
                freq = sum(abs(r.most_frequent_cost - r.exact_cost) < 1e-9 for r in recs)
                print(f"lowest sample exact in {best}/{len(recs)} cells, most frequent in {freq}/{len(recs)}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default=None, help="output directory (default results/<config name>)")
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = ExperimentConfig.load(args.config)
    out = Path(args.out or Path("results") / Path(args.config).stem)
    paths = run_config(cfg, out, args.format)
    for p in paths:
        print(p)
    summarize(paths)


if __name__ == "__main__":
    main()
