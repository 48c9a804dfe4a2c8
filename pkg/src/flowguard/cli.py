"""Command-line entry point: ``synth``, ``run`` and ``annotate``."""
from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from .annotate import render_overlay
from .config import load_config
from .errors import FlowguardError, ParseError, SceneExpiredError
from .netpbm import load_image, save_rgb
from .pipeline import Pipeline
from .simulator import SyntheticScene, generate_sequence

log = logging.getLogger("flowguard")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FRAME = 4

FRAME_SUFFIXES = (".pgm", ".ppm")


def _fail(code: int, msg: str) -> int:
    print(f"flowguard: {msg}", file=sys.stderr)
    return code


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        where = ".".join(str(p) for p in e["loc"]) or "<root>"
        parts.append(f"{where}: {e['msg']}")
    return "invalid config: " + "; ".join(parts)


def list_frames(source: str) -> list[Path]:
    """Frames named by a directory or a glob pattern, in lexicographic order."""
    p = Path(source)
    if p.is_dir():
        found = [q for q in p.iterdir() if q.suffix.lower() in FRAME_SUFFIXES]
    else:
        found = [Path(q) for q in glob.glob(source)]
    return sorted(found, key=lambda q: q.name)


def cmd_synth(scene_path, n: int, out_dir, seed: int | None = None) -> int:
    try:
        with open(scene_path) as fh:
            data = json.load(fh)
    except OSError as e:
        return _fail(EXIT_CONFIG, f"cannot read scene config: {e}")
    except json.JSONDecodeError as e:
        return _fail(EXIT_CONFIG, f"scene config is not valid JSON: {e}")
    if seed is not None and isinstance(data, dict):
        data["seed"] = seed
    try:
        scene = SyntheticScene.model_validate(data)
    except ValidationError as e:
        return _fail(EXIT_CONFIG, _describe(e))
    if n < 1:
        return _fail(EXIT_CONFIG, "--n must be at least 1")
    try:
        generate_sequence(scene, n, out_dir)
    except SceneExpiredError as e:
        return _fail(EXIT_CONFIG, str(e))
    except OSError as e:
        return _fail(EXIT_IO, f"cannot write sequence: {e}")
    print(os.fspath(Path(out_dir) / "manifest.json"))
    return EXIT_OK


def _write_overlay(frame, record, path: Path):
    save_rgb(render_overlay(frame, record), path)


def cmd_run(frames, config_path=None, out=None, annotate_dir=None, fps=None,
            timing: bool = False) -> int:
    try:
        cfg = load_config(config_path, fps=fps)
    except ValidationError as e:
        return _fail(EXIT_CONFIG, _describe(e))
    except (OSError, ValueError) as e:
        return _fail(EXIT_CONFIG, f"cannot load config: {e}")
    paths = list_frames(frames)
    if len(paths) < 2:
        return _fail(EXIT_CONFIG, f"need at least 2 frames, found {len(paths)} in {frames!r}")

    pipe = Pipeline(cfg, record_timing=timing)
    ann = Path(annotate_dir) if annotate_dir else None
    try:
        if ann is not None:
            ann.mkdir(parents=True, exist_ok=True)
        sink = open(out, "w") if out else sys.stdout
    except OSError as e:
        return _fail(EXIT_IO, f"cannot open output: {e}")
    try:
        for path in paths:
            try:
                img = load_image(path)
            except (OSError, ParseError, FlowguardError) as e:
                return _fail(EXIT_FRAME, f"unreadable frame {path}: {e}")
            try:
                rec = pipe.feed(img, path.name)
            except ValueError as e:
                return _fail(EXIT_FRAME, f"frame {path}: {e}")
            if rec is None:
                continue
            d = rec.to_dict()
            sink.write(json.dumps(d, allow_nan=False) + "\n")
            sink.flush()
            log.info("%s: %s (delta %.3f)", path.name, d["decision"], d["delta"])
            if ann is not None:
                _write_overlay(img, d, ann / (path.stem + ".ppm"))
    except OSError as e:
        return _fail(EXIT_IO, f"write failed: {e}")
    finally:
        if sink is not sys.stdout:
            sink.close()
    return EXIT_OK


def cmd_annotate_only(jsonl, frames, out_dir) -> int:
    try:
        with open(jsonl) as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except OSError as e:
        return _fail(EXIT_CONFIG, f"cannot read {jsonl}: {e}")
    except json.JSONDecodeError as e:
        return _fail(EXIT_CONFIG, f"{jsonl} is not valid JSONL: {e}")
    if not records:
        return _fail(EXIT_CONFIG, f"{jsonl} holds no records")
    paths = list_frames(frames)
    if len(paths) != len(records) + 1:
        return _fail(EXIT_CONFIG, f"{len(records)} records need {len(records) + 1} frames, "
                                  f"found {len(paths)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, rec in zip(paths[1:], records):
            try:
                img = load_image(path)
            except (ParseError, FlowguardError) as e:
                return _fail(EXIT_FRAME, f"unreadable frame {path}: {e}")
            _write_overlay(img, rec, out / (path.stem + ".ppm"))
    except OSError as e:
        return _fail(EXIT_IO, f"I/O failure: {e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowguard", description="Optical-flow obstacle avoidance.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic approach sequence")
    s.add_argument("scene", help="scene JSON file")
    s.add_argument("--n", type=int, required=True, help="number of frames")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override the scene seed")

    r = sub.add_parser("run", help="run the pipeline over a frame sequence")
    r.add_argument("frames", help="frame directory or glob pattern")
    r.add_argument("--config", help="PipelineConfig JSON file")
    r.add_argument("--out", help="JSONL output path (default: stdout)")
    r.add_argument("--annotate", help="write PPM overlays into this directory")
    r.add_argument("--fps", type=float, help="frame rate; adds ttc_means_s in seconds")
    r.add_argument("--timing", action="store_true", help="record per-stage timings")

    a = sub.add_parser("annotate", help="re-render overlays from a JSONL file")
    a.add_argument("jsonl")
    a.add_argument("frames")
    a.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("FLOWGUARD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        return cmd_synth(args.scene, args.n, args.out, args.seed)
    if args.command == "run":
        return cmd_run(args.frames, args.config, args.out, args.annotate, args.fps, args.timing)
    return cmd_annotate_only(args.jsonl, args.frames, args.out)


if __name__ == "__main__":
    sys.exit(main())
