"""Command-line entry point: ``gaitablate <subcommand> ...``.

Global flags may also be set through ``GAITABLATE_<FLAG>`` environment
variables (e.g. ``GAITABLATE_DATA_ROOT``); explicit flags win.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import GaitError, InvalidComposition, InvalidSpec
from .experiment import (
    SuiteError,
    export_pld,
    load_results,
    load_suite,
    median_table,
    full_suite,
    parse_suite,
    run_suite,
    write_suite,
)
from .mocap import LAYOUT_FILE, ingest_raw, load_dataset, save_dataset
from .perturb import Pipeline, apply_pipeline

log = logging.getLogger("gaitablate")

ENV_PREFIX = "GAITABLATE_"


class UsageError(Exception):
    pass


def _env_default(name, default):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaitablate", description=__doc__.splitlines()[0])
    p.add_argument("--data-root", default=_env_default("data_root", None), help="dataset directory")
    p.add_argument("--layout", default=_env_default("layout", None), help="layout JSON (default: <data-root>/layout.json)")
    seed = _env_default("seed", None)
    p.add_argument("--seed", type=int, default=None if seed is None else int(seed),
                   help="base seed (default 0; for run, the suite's own seed)")
    p.add_argument("--out-dir", default=_env_default("out_dir", "out"))
    p.add_argument("--threads", type=int, default=int(_env_default("threads", 1)))
    p.add_argument("--log-level", default=_env_default("log_level", "WARNING"),
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="segment raw trials into single normalized strides")
    s.add_argument("--keep-going", action="store_true", help="skip unreadable trials instead of failing")
    s.add_argument("--threshold", type=float, default=20.0, help="contact threshold in N")
    s.add_argument("--frames", type=int, default=100)

    s = sub.add_parser("perturb", help="apply a perturbation pipeline to a dataset")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--pipeline", help="pipeline text, steps separated by ';'")
    g.add_argument("--pipeline-file")

    s = sub.add_parser("run", help="run an experiment suite")
    s.add_argument("--suite", help="suite YAML (default: the built-in condition matrix)")
    s.add_argument("--repetitions", type=int, help="override repetitions for every condition")

    s = sub.add_parser("report", help="print the condition x median table of a finished run")

    s = sub.add_parser("export-pld", help="write 2D point-light projections of one sample")
    s.add_argument("--sample", required=True, help="SUBJECT/SAMPLE")
    s.add_argument("--azimuth", type=float, default=45.0)
    s.add_argument("--pipeline", default="identity")
    s.add_argument("--output", help="output CSV (default: <out-dir>/pld_<subject>_<sample>.csv)")

    s = sub.add_parser("synth", help="write a synthetic dataset")
    s.add_argument("--subjects", type=int, default=20)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--noise", type=float, default=2.0, help="per-sample noise scale in mm")
    s.add_argument("--raw", action="store_true", help="write unsegmented trials with force data")
    s.add_argument("--write-suite", action="store_true", help="also write the default suite YAML")
    return p


def _data_root(args) -> Path:
    if not args.data_root:
        raise UsageError("--data-root is required for this command")
    root = Path(args.data_root)
    if not root.is_dir():
        raise UsageError(f"data root {root} does not exist")
    return root


def _layout_file(args, root: Path) -> Path:
    path = Path(args.layout) if args.layout else root / LAYOUT_FILE
    if not path.exists():
        raise UsageError(f"layout file {path} not found (pass --layout)")
    return path


def _load(args):
    root = _data_root(args)
    return load_dataset(root, _layout_file(args, root))


def cmd_ingest(args) -> int:
    root = _data_root(args)
    report = ingest_raw(root, _layout_file(args, root), args.threshold, args.frames, args.keep_going)
    for (sid, smp), st in report.strides.items():
        print(f"{sid}/{smp}: frames [{st.start}, {st.end}) via {st.method}")
    out = Path(args.out_dir)
    save_dataset(report.dataset, out)
    print(f"wrote {report.dataset.n_samples} samples to {out}")
    if report.skipped:
        print(f"skipped {len(report.skipped)} file(s):")
        for path, msg in report.skipped:
            print(f"  {path}: {msg}")
    return 0


def _pipeline(args) -> Pipeline:
    text = args.pipeline if args.pipeline is not None else Path(args.pipeline_file).read_text()
    return Pipeline.parse(text)


def cmd_perturb(args) -> int:
    pipeline = _pipeline(args)
    data = apply_pipeline(_load(args), pipeline)
    save_dataset(data, args.out_dir)
    (Path(args.out_dir) / "pipeline.txt").write_text(pipeline.to_text() + "\n")
    print(f"wrote {data.n_samples} perturbed samples to {args.out_dir}")
    return 0


def cmd_run(args) -> int:
    overrides = {} if args.seed is None else {"base_seed": args.seed}
    if args.repetitions is not None:
        overrides["repetitions"] = args.repetitions
    if args.suite:
        if not Path(args.suite).exists():
            raise UsageError(f"suite file {args.suite} not found")
        configs = load_suite(args.suite, overrides)
    else:
        configs = parse_suite(full_suite(), overrides)
    dataset = _load(args) if configs else None
    results = run_suite(dataset, configs, args.out_dir, args.threads)
    print(median_table(results))
    return 1 if any(not r.ok for r in results) else 0


def cmd_report(args) -> int:
    out = Path(args.out_dir)
    if not (out / "results").is_dir():
        raise UsageError(f"no results under {out}")
    print(median_table(load_results(out)))
    return 0


def cmd_export_pld(args) -> int:
    dataset = _load(args)
    if args.sample.count("/") != 1:
        raise UsageError("--sample must be SUBJECT/SAMPLE")
    sid, smp = args.sample.split("/")
    try:
        sample = dataset.find_sample(sid, smp)
    except KeyError:
        raise UsageError(f"unknown sample {args.sample}") from None
    pipeline = Pipeline.parse(args.pipeline)
    if pipeline.dataset_scoped:
        sample = apply_pipeline(dataset, pipeline).find_sample(sid, smp)
    else:
        sample = apply_pipeline(sample, pipeline, dataset.layout, dataset.body_part_map)
    names = dataset.layout.marker_names if sample.n_markers == dataset.layout.n_markers else None
    out = Path(args.output or Path(args.out_dir) / f"pld_{sid}_{smp}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    export_pld(sample, out, args.azimuth, names)
    print(f"wrote {out}")
    return 0


def cmd_synth(args) -> int:
    from .synth import generate_dataset, write_raw_dataset

    out = Path(args.out_dir)
    seed = args.seed or 0
    if args.raw:
        write_raw_dataset(out, args.subjects, args.samples, seed, args.noise)
    else:
        save_dataset(generate_dataset(args.subjects, args.samples, seed, noise_mm=args.noise), out)
    if args.write_suite:
        write_suite(out / "suite.yaml", full_suite(base_seed=seed))
    print(f"wrote synthetic dataset to {out}")
    return 0


COMMANDS = {"ingest": cmd_ingest, "perturb": cmd_perturb, "run": cmd_run, "report": cmd_report,
            "export-pld": cmd_export_pld, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SuiteError, InvalidSpec, InvalidComposition) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GaitError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
