"""Run the full condition matrix (both tasks) on a dataset directory or a synthetic stand-in."""

import argparse
from pathlib import Path

from gaitablate.experiment import median_table, full_suite, parse_suite, run_suite
from gaitablate.mocap import LAYOUT_FILE, load_dataset
from gaitablate.synth import generate_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-root", help="ingested dataset (default: synthetic 20 x 20)")
    ap.add_argument("--out-dir", default="out/full_suite")
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    if args.data_root:
        root = Path(args.data_root)
        ds = load_dataset(root, root / LAYOUT_FILE)
    else:
        ds = generate_dataset(20, 20, seed=args.seed)
    configs = parse_suite(full_suite(args.repetitions, args.seed))
    results = run_suite(ds, configs, args.out_dir, args.threads)
    print(median_table(results))
    failed = [r.name for r in results if not r.ok]
    if failed:
        print(f"{len(failed)} condition(s) failed: {', '.join(failed)}")


if __name__ == "__main__":
    main()
