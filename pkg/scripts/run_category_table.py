"""Run the 26-scene acceptance suite and write the category success table.

Outputs report.json, table.md and timings.json under --out-dir.  The report
depends only on the seeds, so reruns are byte-identical.
"""

import argparse
import json
import sys
from pathlib import Path

from carobio.batch import BatchConfig, acceptance_suite, markdown_table, run_batch, write_batch
from carobio.pipeline import PipelineConfig, sim_params_from


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="out/category_table", type=Path)
    ap.add_argument("--base-seed", type=int, default=1000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--params", type=Path, help="JSON file of simulator overrides")
    args = ap.parse_args()

    config = PipelineConfig()
    if args.params:
        config.sim = sim_params_from(json.loads(args.params.read_text()))
    report, timings = run_batch(acceptance_suite(args.base_seed), BatchConfig(pipeline=config, workers=args.workers))
    paths = write_batch(report, timings, args.out_dir)
    sys.stdout.write(markdown_table(report))
    print(f"\n{len(report['scenarios'])} scenarios in {timings['total_s']:.1f} s -> {paths['report']}")


if __name__ == "__main__":
    main()
