"""Command-line front door: track, eval, synth, diagnose, compare.

Every command writes its declared outputs first and then a JSON run
manifest (atomically, temp file + rename), so a zero exit status means
every named output exists.  Reruns on identical inputs produce
byte-identical outputs; manifests differ only in their timing block.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import (
    ConfigError,
    DecodeError,
    DimensionError,
    FormatError,
    OutOfBoundsError,
    SpecError,
)
from .evaluation import compare, evaluate, read_truth, write_report, write_truth
from .imaging import BBox, decode_file, encode_pgm, extract_patch, load_sequence
from .matching import Template, diff_histogram, diff_map, sad_score, smr_score
from .synth import generate, parse_spec
from .tracker import TrackerConfig, read_results, track_sequence, write_results

CONFIG_KEYS = ("k", "search_radius", "alpha0", "alpha_min", "beta", "metric")


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such input file: {p}")
    return p


def _read_config_file(path) -> dict:
    values: dict = {}
    for number, raw in enumerate(_require_file(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in CONFIG_KEYS:
            raise ConfigError(f"{Path(path).name}:{number}: expected one of {CONFIG_KEYS}, got {raw!r}")
        try:
            if key == "metric":
                values[key] = value
            elif key == "search_radius":
                values[key] = int(value)
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"{Path(path).name}:{number}: {exc}") from exc
    return values


def _resolve_config(args) -> TrackerConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    overrides = {
        "k": args.k,
        "search_radius": args.radius,
        "alpha0": args.alpha0,
        "alpha_min": args.alpha_min,
        "beta": args.beta,
        "metric": args.metric,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrackerConfig(**values)


def _resolve_init_box(args) -> BBox:
    if args.init is not None:
        x, y, w, h = args.init
    else:
        text = _require_file(args.init_file).read_text().split()
        if len(text) != 4:
            raise ConfigError(f"init file must hold four integers 'x y w h', got {text!r}")
        x, y, w, h = (int(v) for v in text)
    try:
        return BBox(x, y, w, h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _config_dict(config: TrackerConfig) -> dict:
    return {key: getattr(config, key) for key in CONFIG_KEYS}


def _write_manifest(path, command: str, config: dict, inputs, outputs, started: float) -> None:
    outputs = [str(p) for p in outputs]
    missing = [p for p in outputs if not Path(p).exists()]
    if missing:
        raise RuntimeError(f"declared outputs missing: {missing}")
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": outputs,
        "timing": {"elapsed_seconds": round(time.perf_counter() - started, 6)},
    }
    tmp = Path(f"{path}.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def cmd_track(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    box = _resolve_init_box(args)
    frames = load_sequence(args.frames_dir)
    results = track_sequence(frames, box, config)
    out = Path(args.out)
    write_results(out, results)
    manifest = out.with_suffix(".manifest.json")
    _write_manifest(
        manifest,
        "track",
        _config_dict(config),
        [args.frames_dir] + ([args.config] if args.config else []),
        [out],
        started,
    )
    print(f"tracked {len(results)} frames -> {out}")
    return 0


def cmd_eval(args) -> int:
    started = time.perf_counter()
    results = read_results(_require_file(args.results))
    truth = read_truth(_require_file(args.truth))
    report = evaluate(results, truth, args.iou_threshold)
    out = Path(args.out) if args.out else Path(args.results).with_suffix(".eval.csv")
    write_report(out, report)
    _write_manifest(
        out.with_suffix(".manifest.json"),
        "eval",
        {"iou_threshold": args.iou_threshold},
        [args.results, args.truth],
        [out],
        started,
    )
    print(f"correct: {report.correctly_tracked} / {report.total_evaluated} ({report.criterion})")
    return 0


def cmd_synth(args) -> int:
    started = time.perf_counter()
    spec = parse_spec(_require_file(args.spec).read_text())
    frames, truth = generate(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for index, frame in enumerate(frames):
        path = out_dir / f"{index + 1:05d}.pgm"
        path.write_bytes(encode_pgm(frame))
        outputs.append(path)
    truth_path = out_dir / "truth.csv"
    write_truth(truth_path, truth)
    outputs.append(truth_path)
    _write_manifest(out_dir / "manifest.json", "synth", {}, [args.spec], outputs, started)
    print(f"wrote {len(frames)} frames + truth.csv -> {out_dir}")
    return 0


def cmd_diagnose(args) -> int:
    started = time.perf_counter()
    frame = decode_file(_require_file(args.frame))
    template_frame = decode_file(_require_file(args.template_frame))
    template = Template(extract_patch(template_frame, BBox(*args.template_box)))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    score_rows = []
    for label, coords in (("a", args.box_a), ("b", args.box_b)):
        box = BBox(*coords)
        patch = extract_patch(frame, box)
        mapped = diff_map(patch, template)
        map_path = out_dir / f"diff_{label}.pgm"
        map_path.write_bytes(encode_pgm(mapped))
        hist_path = out_dir / f"hist_{label}.csv"
        with open(hist_path, "w", newline="") as fh:
            for lower, count in diff_histogram(mapped, args.bin_width):
                fh.write(f"{lower},{count}\n")
        smr = smr_score(patch, template, args.alpha, args.beta)
        sad = sad_score(patch, template)
        score_rows.append((label, smr, sad))
        outputs.extend([map_path, hist_path])
        print(f"box_{label}: smr={smr:.6f} sad={sad}")
    scores_path = out_dir / "scores.csv"
    with open(scores_path, "w", newline="") as fh:
        fh.write("box,smr,sad\n")
        for label, smr, sad in score_rows:
            fh.write(f"{label},{smr:.6f},{sad}\n")
    outputs.append(scores_path)
    _write_manifest(
        out_dir / "manifest.json",
        "diagnose",
        {"alpha": args.alpha, "beta": args.beta, "bin_width": args.bin_width},
        [args.frame, args.template_frame],
        outputs,
        started,
    )
    return 0


def cmd_compare(args) -> int:
    started = time.perf_counter()
    entries = []
    inputs = []
    for tracker, sequence, results_path, truth_path in args.cell:
        results = read_results(_require_file(results_path))
        truth = read_truth(_require_file(truth_path))
        entries.append((tracker, sequence, evaluate(results, truth, args.iou_threshold)))
        inputs.extend([results_path, truth_path])
    table = compare(entries)
    print(table.to_text())
    outputs = []
    if args.out:
        Path(args.out).write_text(table.to_csv())
        outputs.append(args.out)
        _write_manifest(
            Path(args.out).with_suffix(".manifest.json"),
            "compare",
            {"iou_threshold": args.iou_threshold},
            inputs,
            outputs,
            started,
        )
    return 0


def _add_box_flag(parser, name, help_text, required=True):
    parser.add_argument(
        name, type=int, nargs=4, metavar=("X", "Y", "W", "H"), required=required, help=help_text
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smrtrack",
        description="Similarity-matching-ratio template tracker and its evaluation tools.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    track = sub.add_parser("track", help="track one target through a frame directory")
    track.add_argument("frames_dir", help="directory of numbered .pgm/.png frames")
    group = track.add_mutually_exclusive_group(required=True)
    group.add_argument("--init", type=int, nargs=4, metavar=("X", "Y", "W", "H"),
                       help="target box on the first frame")
    group.add_argument("--init-file", help="file holding one line 'x y w h'")
    track.add_argument("--out", required=True, help="results CSV path")
    track.add_argument("--config", help="key=value config file")
    track.add_argument("--k", type=float, help="dynamic threshold factor")
    track.add_argument("--radius", type=int, help="search radius in pixels")
    track.add_argument("--alpha0", type=float, help="initial threshold")
    track.add_argument("--alpha-min", type=float, dest="alpha_min", help="threshold floor")
    track.add_argument("--beta", type=float, help="exponential scale of the SMR score")
    track.add_argument("--metric", choices=("smr", "sad"), help="similarity metric")
    track.set_defaults(func=cmd_track)

    ev = sub.add_parser("eval", help="score a results CSV against ground truth")
    ev.add_argument("results", help="results CSV from 'track'")
    ev.add_argument("truth", help="ground-truth CSV")
    ev.add_argument("--iou-threshold", type=float, default=0.5, dest="iou_threshold")
    ev.add_argument("--out", help="per-frame IoU CSV (default: alongside results)")
    ev.set_defaults(func=cmd_eval)

    synth = sub.add_parser("synth", help="render a synthetic sequence from a spec file")
    synth.add_argument("spec", help="flat key=value scene description")
    synth.add_argument("out_dir", help="output directory for frames and truth.csv")
    synth.set_defaults(func=cmd_synth)

    diag = sub.add_parser("diagnose", help="difference maps and histograms for two candidate boxes")
    diag.add_argument("frame", help="frame to score candidates on")
    diag.add_argument("--template-frame", required=True, help="frame the template is cut from")
    _add_box_flag(diag, "--template-box", "template box on the template frame")
    _add_box_flag(diag, "--box-a", "first candidate box")
    _add_box_flag(diag, "--box-b", "second candidate box")
    diag.add_argument("--alpha", type=float, default=63.75, help="SMR threshold")
    diag.add_argument("--beta", type=float, default=1.0)
    diag.add_argument("--bin-width", type=int, default=8, dest="bin_width")
    diag.add_argument("--out-dir", required=True, dest="out_dir")
    diag.set_defaults(func=cmd_diagnose)

    comp = sub.add_parser("compare", help="correctly-tracked table across trackers and sequences")
    comp.add_argument(
        "--cell",
        action="append",
        nargs=4,
        metavar=("TRACKER", "SEQUENCE", "RESULTS", "TRUTH"),
        required=True,
        help="one table cell; repeat per tracker/sequence pair",
    )
    comp.add_argument("--iou-threshold", type=float, default=0.5, dest="iou_threshold")
    comp.add_argument("--out", help="comparison CSV path")
    comp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DecodeError as exc:
        return _fail(f"decode error: {exc}")
    except OutOfBoundsError as exc:
        return _fail(f"bounds error: {exc}")
    except ConfigError as exc:
        return _fail(f"config error: {exc}")
    except FormatError as exc:
        return _fail(f"format error: {exc}")
    except SpecError as exc:
        return _fail(f"spec error: {exc}")
    except DimensionError as exc:
        return _fail(f"dimension error: {exc}")
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except ValueError as exc:
        return _fail(f"error: {exc}")


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return 1
