"""Command-line experiment driver: synth, train, compare."""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..excitation import filter_targets, load_csv, normalize_split, save_csv, synthesize_dataset
from ..excitation.dataset import CHANNELS
from ..evaluation import (
    abs_error_distribution,
    decompose_contributions,
    dissipative_estimate,
    gnuplot_script,
    ranking,
    rmse_per_joint,
    write_boxplot_csv,
    write_decomposition_csv,
    write_dissipative_csv,
    write_ranking,
    write_rmse_csv,
)
from ..training import (
    CheckpointError,
    ConfigError,
    TrainConfig,
    append_results,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .manifest import ExperimentManifest, load_manifest

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_ORDERING = 0, 1, 2, 3
ORDERING_VARIANTS = ("rnea_mlp", "lnn_mlp", "lnn", "delan")

log = logging.getLogger("physid")


def dataset_path(out: Path) -> Path:
    return out / "dataset.csv"


def checkpoint_path(out: Path, variant: str, seed: int) -> Path:
    return out / "checkpoints" / f"{variant}_seed{seed}.json"


def report_path(out: Path, variant: str, seed: int) -> Path:
    return out / "reports" / f"{variant}_seed{seed}.json"


def _ensure_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable ({exc.strerror})") from None


# --- synth -------------------------------------------------------------------

def synthesize(manifest: ExperimentManifest):
    robot = manifest.robot()
    traj = manifest.trajectory()
    if traj.dof != robot.dof:
        raise ConfigError(f"{manifest.trajectory_path}: trajectory has {traj.dof} joints, robot has {robot.dof}")
    raw = synthesize_dataset(robot, traj, manifest.noise, manifest.seed, manifest.target)
    try:
        filtered = filter_targets(raw, manifest.cutoff_hz, traj.dt)
    except ValueError as exc:
        raise ConfigError(f"{manifest.path}: field 'cutoff_hz': {exc}") from None
    return normalize_split(filtered)


def cmd_synth(manifest: ExperimentManifest) -> int:
    ds = synthesize(manifest)
    _ensure_dir(manifest.output)
    save_csv(dataset_path(manifest.output), ds)
    print(f"samples {len(ds)}  train {ds.split}  test {len(ds) - ds.split}  target {ds.target}")
    for c in CHANNELS:
        lo, hi = ds.stats.minimum[c], ds.stats.maximum[c]
        ranges = "  ".join(f"[{a:.4g}, {b:.4g}]" for a, b in zip(lo, hi))
        print(f"{c:>4} {ranges}")
    print(f"wrote {dataset_path(manifest.output)}")
    return EXIT_OK


def _dataset(manifest: ExperimentManifest):
    path = dataset_path(manifest.output)
    if not path.exists():
        cmd_synth(manifest)
    ds = load_csv(path)
    if ds.stats is None or ds.split is None:
        raise ConfigError(f"{path}: dataset lacks split/normalization metadata; rerun synth")
    return ds


# --- train -------------------------------------------------------------------

def _train_variant(manifest: ExperimentManifest, variant: str, ds, robot, config: TrainConfig, out: Path) -> bool:
    diverged = False
    reports = []
    for seed in config.seeds:
        model, report = train(variant, ds, robot, config, seed)
        save_checkpoint(checkpoint_path(out, variant, seed), model, seed)
        report_path(out, variant, seed).write_text(report.to_json() + "\n", encoding="utf-8")
        status = "diverged" if report.diverged else "ok"
        print(f"{variant} seed {seed}: test rmse {np.round(report.test_rmse, 5).tolist()} "
              f"mean {report.mean_rmse:.5g} ({report.seconds:.1f} s, {status})", flush=True)
        reports.append(report)
        diverged |= report.diverged
    _replace_results(out / "results.csv", variant, reports)
    return diverged


def _replace_results(path: Path, variant: str, reports) -> None:
    kept = []
    if path.exists():
        lines = path.read_text(encoding="utf-8").splitlines()
        kept = [ln for ln in lines[1:] if ln.split(",", 1)[0] != variant]
        path.write_text("\n".join(lines[:1] + kept) + ("\n" if lines else ""), encoding="utf-8")
    append_results(path, reports)


def _parse_grid(items) -> list[dict]:
    axes = []
    for item in items or []:
        key, _, values = item.partition("=")
        if not values:
            raise ConfigError(f"--grid expects key=v1,v2,..., got {item!r}")
        parsed = [json.loads(v) for v in values.split(",")]
        axes.append([(key, v) for v in parsed])
    return [dict(combo) for combo in itertools.product(*axes)] if axes else [{}]


def cmd_train(manifest: ExperimentManifest, variants: list[str], grid=None) -> int:
    ds = _dataset(manifest)
    robot = manifest.robot()
    out = manifest.output
    _ensure_dir(out / "checkpoints")
    _ensure_dir(out / "reports")
    diverged = False
    for variant in variants:
        base = manifest.train_config(variant)
        combos = _parse_grid(grid)
        for combo in combos:
            config = TrainConfig.from_dict({**base.to_dict(), **combo})
            target = out
            if combo:
                tag = "_".join(f"{k}{v}" for k, v in combo.items())
                target = out / "sweep" / tag
                _ensure_dir(target / "checkpoints")
                _ensure_dir(target / "reports")
            diverged |= _train_variant(manifest, variant, ds, robot, config, target)
    return EXIT_DIVERGED if diverged else EXIT_OK


# --- compare -----------------------------------------------------------------

def _median_index(values) -> int:
    order = np.argsort(values, kind="stable")
    return int(order[(len(values) - 1) // 2])


def ordering_holds(score: dict[str, float]) -> tuple[bool, str]:
    missing = [v for v in ORDERING_VARIANTS if v not in score]
    if missing:
        raise ConfigError(f"--assert-ordering needs results for {missing}")
    r, lm, ln, dl = (score[v] for v in ORDERING_VARIANTS)
    ok = r < lm < min(ln, dl) and r <= 0.5 * ln
    text = (f"rnea_mlp {r:.5g} < lnn_mlp {lm:.5g} < min(lnn {ln:.5g}, delan {dl:.5g}) "
            f"and rnea_mlp <= 0.5 lnn: {'holds' if ok else 'violated'}")
    return ok, text


def cmd_compare(manifest: ExperimentManifest, variants: list[str], physical: bool, assert_ordering: bool) -> int:
    ds = _dataset(manifest)
    robot = manifest.robot()
    out = manifest.output
    test = ds.test_slice()
    t_test = ds.t[ds.split :]
    per_variant, chosen, scores = {}, {}, {}
    for variant in variants:
        seeds = manifest.train_config(variant).seeds
        models, rmses = [], []
        for seed in seeds:
            path = checkpoint_path(out, variant, seed)
            if not path.exists():
                raise CheckpointError(f"missing checkpoint for variant {variant!r} (seed {seed}): {path}")
            model = load_checkpoint(path, robot)
            models.append(model)
            rmses.append(rmse_per_joint(model, test, physical))
        means = [float(np.mean(r)) for r in rmses]
        k = _median_index(means)
        per_variant[variant] = rmses[k]
        chosen[variant] = models[k]
        scores[variant] = means[k]

    write_rmse_csv(out / "rmse.csv", per_variant)
    write_boxplot_csv(out / "boxplot.csv", {v: abs_error_distribution(m, test, physical) for v, m in chosen.items()})
    dissipative = {v: dissipative_estimate(m, test, robot) for v, m in chosen.items() if ds.target == "tau_u"}
    if dissipative:
        write_dissipative_csv(out / "dissipative.csv", t_test, dissipative, robot.friction.torque(test.qd))
    if ds.target == "tau_u":
        write_decomposition_csv(out / "decomposition.csv", ds.t, decompose_contributions(robot, ds, ds.y))
    ranked = ranking(per_variant)
    write_ranking(out / "ranking.txt", ranked)
    n = robot.dof
    for kind in ("rmse", "boxplot", "dissipative", "decomposition"):
        if (out / f"{kind}.csv").exists():
            (out / f"{kind}.gp").write_text(gnuplot_script(out / f"{kind}.csv", kind, n), encoding="utf-8")
    units = "physical" if physical else "normalized"
    print(f"ranking by median-seed mean test RMSE ({units} units):")
    for k, (variant, value) in enumerate(ranked):
        print(f"  {k + 1}. {variant:<9} {value:.5g}")
    if assert_ordering:
        ok, text = ordering_holds(scores)
        print(text)
        if not ok:
            return EXIT_ORDERING
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="physid", description="Physics-informed inverse-dynamics experiments.")
    parser.add_argument("--version", action="store_true", help="print version and the manifest robot's config hash")
    parser.add_argument("--manifest", help="experiment manifest JSON (default: bundled surrogate experiment)")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--manifest", default=argparse.SUPPRESS, help="experiment manifest JSON")
        p.add_argument("--seed", type=int, help="override the manifest seed")
        p.add_argument("--out", help="output directory (overrides the manifest)")

    p = sub.add_parser("synth", help="generate, filter, normalize and split the dataset")
    common(p)
    p.add_argument("--target", choices=("tau", "tau_u"), help="override the manifest target kind")

    p = sub.add_parser("train", help="train variants and write checkpoints and reports")
    common(p)
    p.add_argument("--variant", action="append", help="variant tag; repeat for several")
    p.add_argument("--all", action="store_true", help="train every variant listed in the manifest")
    p.add_argument("--grid", nargs="+", metavar="KEY=V1,V2", help="sweep training fields over a grid")

    p = sub.add_parser("compare", help="evaluate trained variants on the test slice")
    common(p)
    p.add_argument("--variant", action="append", help="variant tag; repeat for several (default: manifest list)")
    p.add_argument("--units", choices=("normalized", "physical"), default="normalized")
    p.add_argument("--assert-ordering", action="store_true",
                   help="exit with status 3 unless the physics-informed ordering holds")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        manifest = load_manifest(args.manifest)
        if args.version:
            print(f"physid {__version__} robot {manifest.robot().config_hash()}")
            return EXIT_OK
        if args.command is None:
            parser.print_help()
            return EXIT_CONFIG
        manifest = manifest.with_overrides(seed=args.seed, output=args.out, target=getattr(args, "target", None))
        if args.command == "synth":
            return cmd_synth(manifest)
        variants = args.variant or []
        if args.command == "train":
            if args.all:
                variants = manifest.variants
            if not variants:
                raise ConfigError("train needs --variant or --all")
            return cmd_train(manifest, variants, args.grid)
        return cmd_compare(manifest, variants or manifest.variants, args.units == "physical", args.assert_ordering)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())
