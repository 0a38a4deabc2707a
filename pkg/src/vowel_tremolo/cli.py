"""Command-line front end: analyze, rank, detect, synth, plot-data.

Every output is written to a temporary file in the target directory and
renamed into place, so an interrupted run never leaves a half-written file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from .config import AnalysisConfig
from .descriptors import FEATURE_NAMES, FeatureMatrix
from .events import write_control_csv, write_events_csv
from .pipeline import analyze, detect, rank_corpus
from .selection import N_GRADED, dumps_report, ranking_report
from .synth import TremoloSpec, synthesize_tremolo, write_sidecar
from .audio import write_wav

log = logging.getLogger("vowel_tremolo")

# flag dest -> AnalysisConfig field
_CONFIG_FLAGS = {
    "frame_size": "frame_size",
    "hop_size": "hop_size",
    "window": "window",
    "fmin": "fmin",
    "fmax": "fmax",
    "cutoff": "smoothing_cutoff_hz",
    "start_trim": "start_trim_s",
    "end_trim": "end_trim_s",
    "rms_floor": "rms_floor",
    "threshold_mode": "threshold_mode",
    "k": "k",
    "threshold": "threshold",
    "min_spacing": "min_spacing_s",
    "blocklist": "energy_blocklist",
    "feature": "selected_feature",
}


class CliError(Exception):
    """Reported on stderr; exit status 2."""


@contextmanager
def atomic_path(path: Path):
    """Yield a temporary path next to ``path``; rename over ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_text_atomic(path: Path, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text)


def effective_config(args) -> AnalysisConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = AnalysisConfig.from_json(args.config) if args.config else AnalysisConfig()
    overrides = {}
    for dest, field in _CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if dest == "blocklist":
            value = tuple(v for v in value.split(",") if v)
        overrides[field] = value
    return cfg.updated(**overrides)


def _stem(path) -> str:
    return Path(path).name.split(".")[0] or Path(path).stem


def _analyze_one(path: str, cfg: AnalysisConfig) -> FeatureMatrix:
    return analyze(path, cfg, _stem(path))


def _map(fn, items, cfg, jobs: int):
    """``[(item, result or exception)]`` in input order."""
    def guarded(item):
        try:
            return fn(item, cfg)
        except Exception as exc:  # reported per file by the caller
            return exc

    if jobs <= 1 or len(items) <= 1:
        return [(it, guarded(it)) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, it, cfg) for it in items]
        out = []
        for it, fut in zip(items, futures):
            try:
                out.append((it, fut.result()))
            except Exception as exc:
                out.append((it, exc))
        return out


def cmd_analyze(args, cfg: AnalysisConfig) -> int:
    failed = 0
    for path, result in _map(_analyze_one, args.inputs, cfg, args.jobs):
        if isinstance(result, Exception):
            print(f"error: {path}: {result}", file=sys.stderr)
            failed += 1
            continue
        target = Path(args.out) / f"{_stem(path)}.features.csv"
        with atomic_path(target) as tmp:
            result.to_csv(tmp)
        log.info("wrote %s (%d frames)", target, result.n_frames)
    return 1 if failed else 0


def cmd_rank(args, cfg: AnalysisConfig) -> int:
    matrices = []
    for path, result in _map(_analyze_one, args.inputs, cfg, args.jobs):
        if isinstance(result, Exception):
            print(f"warning: {path}: excluded from ranking: {result}", file=sys.stderr)
        else:
            matrices.append(result)
    if not matrices:
        print("error: no input could be analysed", file=sys.stderr)
        return 1
    result = rank_corpus(matrices, cfg)
    report = ranking_report(result.rankings, result.aggregate, result.final, _echo(cfg, args))
    target = Path(args.out) / args.report
    write_text_atomic(target, dumps_report(report))

    print(f"{'rank':>4}  {'feature':<32}{'mean weight':>12}")
    for i, (name, w) in enumerate(result.final.items()[:N_GRADED], 1):
        print(f"{i:>4}  {name:<32}{w:>12.3f}")
    for entry in report["per_file"]:
        print(f"# {entry['source_id']}: PC1+PC2 explain {entry['explained_pc1_2']:.3f}")
    log.info("wrote %s", target)
    return 0


def cmd_detect(args, cfg: AnalysisConfig) -> int:
    feature = cfg.selected_feature
    if feature != "auto" and feature not in FEATURE_NAMES:
        raise CliError(f"unknown feature {feature!r}; canonical names are: {', '.join(FEATURE_NAMES)}")
    M = _analyze_one(args.input, cfg)
    det = detect(M, feature, cfg)
    stem = _stem(args.input)
    out = Path(args.out)
    with atomic_path(out / f"{stem}.events.csv") as tmp:
        write_events_csv(tmp, det.events)
    with atomic_path(out / f"{stem}.control.csv") as tmp:
        write_control_csv(tmp, det.control)
    summary = {
        "source_id": M.source_id,
        "feature": det.feature,
        "n_events": len(det.events),
        "ioi_mean_s": det.ioi.mean if det.ioi else None,
        "ioi_stdev_s": det.ioi.stdev if det.ioi else None,
        "rate_hz": det.ioi.rate_hz if det.ioi else None,
        "config": _echo(cfg, args),
    }
    write_text_atomic(out / f"{stem}.rhythm.json", json.dumps(summary, indent=2) + "\n")
    if len(det.events) == 0:
        print(f"warning: {args.input}: no events detected in {det.feature}", file=sys.stderr)
    elif det.ioi is None:
        print(f"warning: {args.input}: one event only, no rhythm estimate", file=sys.stderr)
    else:
        print(f"{det.feature}: {len(det.events)} events, rate {det.ioi.rate_hz:.3f} Hz, "
              f"IOI {det.ioi.mean:.4f} +- {det.ioi.stdev:.4f} s")
    return 0


def cmd_synth(args, cfg: AnalysisConfig) -> int:
    raw = json.loads(Path(args.spec).read_text())
    entries = raw if isinstance(raw, list) else [raw]
    out = Path(args.out)
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise CliError(f"spec entry {i}: expected a JSON object")
        entry = dict(entry)
        original = dict(entry)
        name = entry.pop("name", None)
        sample_rate = int(entry.get("sample_rate", 44100))
        if args.seed is not None:
            entry["seed"] = args.seed
        try:
            spec = TremoloSpec.from_dict(entry)
            spec.validate(sample_rate, cfg.hop_size)
        except (TypeError, ValueError) as exc:
            raise CliError(f"invalid spec{'' if len(entries) == 1 else f' entry {i}'}: {exc}") from None
        if name is None:
            name = args.name or (_stem(args.spec) if len(entries) == 1 else f"{_stem(args.spec)}_{i:02d}")
        buf = synthesize_tremolo(spec, sample_rate)
        wav = out / f"{name}.wav"
        with atomic_path(wav) as tmp:
            write_wav(tmp, buf)
        with atomic_path(out / f"{name}.truth.json") as tmp:
            write_sidecar(tmp, spec, sample_rate, original)
        log.info("wrote %s", wav)
    return 0


def cmd_plot_data(args, cfg: AnalysisConfig) -> int:
    src = Path(args.input)
    out = Path(args.out)
    if src.suffix == ".json":
        report = json.loads(src.read_text())
        if "per_file" not in report:
            raise CliError(f"{src}: not a ranking report")
        target = out / f"{_stem(src)}.loadings.csv"
        with atomic_path(target) as tmp, open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("source_id", "feature", "l1", "l2", "modulus"))
            for entry in report["per_file"]:
                for row in entry.get("loadings", []):
                    w.writerow((entry["source_id"], row["name"], repr(row["l1"]),
                                repr(row["l2"]), repr(row["modulus"])))
        return 0

    columns = [c for c in (args.columns or "").split(",") if c]
    if not columns:
        raise CliError("plot-data needs at least one column (--columns a,b,...)")
    M = FeatureMatrix.from_csv(src)
    unknown = [c for c in columns if c not in M.names]
    if unknown:
        raise CliError(f"unknown column(s) {', '.join(unknown)}; available: {', '.join(M.names)}")
    target = out / f"{_stem(src)}.long.csv"
    with atomic_path(target) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("time_s", "feature", "value"))
        for c in columns:
            for t, v in zip(M.timestamps, M.column(c)):
                w.writerow((repr(float(t)), c, repr(float(v))))
    return 0


def _echo(cfg: AnalysisConfig, args) -> dict:
    d = cfg.to_dict()
    d["seed"] = args.seed
    return d


def _add_config_flags(p: argparse.ArgumentParser, detection: bool = False) -> None:
    g = p.add_argument_group("analysis overrides (take precedence over --config)")
    g.add_argument("--frame-size", type=int)
    g.add_argument("--hop-size", type=int)
    g.add_argument("--window", choices=("hann", "hamming", "rectangular"))
    g.add_argument("--fmin", type=float)
    g.add_argument("--fmax", type=float)
    g.add_argument("--cutoff", type=float, help="trajectory low-pass cutoff in Hz")
    g.add_argument("--blocklist", help="comma-separated features removed from the final ranking")
    if detection:
        g.add_argument("--start-trim", type=float)
        g.add_argument("--end-trim", type=float)
        g.add_argument("--rms-floor", type=float)
        g.add_argument("--threshold-mode", choices=("adaptive", "fixed"))
        g.add_argument("--k", type=float)
        g.add_argument("--threshold", type=float)
        g.add_argument("--min-spacing", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vowel-tremolo", description=__doc__.splitlines()[0])
    parser.add_argument("--config", metavar="PATH", help="flat JSON file of analysis settings")
    parser.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    parser.add_argument("--seed", type=int, default=None, metavar="N")
    parser.add_argument("--out", default=".", metavar="DIR", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="write a feature CSV per input")
    p.add_argument("inputs", nargs="+")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rank", help="rank features over a corpus")
    p.add_argument("inputs", nargs="+", help="WAV files or feature CSVs")
    p.add_argument("--report", default="ranking.json", help="report file name inside --out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("detect", help="detect tremolo events in one file")
    p.add_argument("input")
    p.add_argument("--feature", help='descriptor name or "auto"')
    _add_config_flags(p, detection=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="synthesise tremolo test files from a JSON spec")
    p.add_argument("spec")
    p.add_argument("--name", help="output stem for a single spec")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot-data", help="long-format plot data from features or a report")
    p.add_argument("input", help="feature CSV or ranking report JSON")
    p.add_argument("--columns", help="comma-separated feature names")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        cfg = effective_config(args)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
