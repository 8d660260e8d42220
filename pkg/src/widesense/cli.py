"""Command-line front end.

``widesense run`` executes a registered experiment from a JSON config and
writes (or prints) its result table; ``widesense frame`` runs one complete
sensing frame; ``widesense list`` names the experiments;
``widesense calibrate-lambda`` fits the energy-detection threshold to a
false-alarm target.  Config errors exit 1, runtime failures exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from .engine import DetectorConfig, FrameConfig, calibrate_lambda, run_frame, uniform_bands
from .errors import InvalidSpecError, ParameterError
from .experiments import EXPERIMENT_NAMES, ExperimentConfig, load_config, run_experiment
from .signals import GridSpectrumSpec, WidebandSignalSpec
from .validation import HaltingConfig


class _Parser(argparse.ArgumentParser):
    # bad invocations exit 1 with usage on stderr, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="widesense", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run_p = sub.add_parser("run", help="run a registered experiment")
    run_p.add_argument("config", help="experiment config JSON file")
    run_p.add_argument("--trials", type=int, help="override trial count")
    run_p.add_argument("--seed", type=int, help="override master seed")
    run_p.add_argument("--out", help="output file (overrides config output_path)")
    run_p.add_argument("--format", choices=("csv", "json"), help="output format")
    run_p.add_argument("--workers", type=int, help="trial pool size")

    frame_p = sub.add_parser("frame", help="run one sensing frame")
    frame_p.add_argument("config", help="frame config JSON file")
    frame_p.add_argument("--seed", type=int, help="override master seed")
    frame_p.add_argument("--out", help="write the outcome JSON here")

    sub.add_parser("list", help="list experiment names")

    cal_p = sub.add_parser("calibrate-lambda", help="fit the detection threshold")
    cal_p.add_argument("config", help="calibration config JSON file")
    cal_p.add_argument("--trials", type=int, help="override noise-frame count")
    cal_p.add_argument("--seed", type=int, help="override master seed")
    return parser


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InvalidSpecError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidSpecError(f"config {path} must hold a JSON object")
    return raw


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _signal_from_dict(raw: dict):
    if "tones" in raw:
        return GridSpectrumSpec.from_json(json.dumps(raw))
    return WidebandSignalSpec.from_json(json.dumps(raw))


def _frame_pieces(raw: dict):
    for key in ("frame", "halting"):
        if key not in raw:
            raise InvalidSpecError(f"frame config is missing the {key!r} section")
    frame = FrameConfig.from_dict(raw["frame"])
    halting = HaltingConfig.from_dict(raw["halting"])
    return frame, halting


def _cmd_run(args) -> int:
    fields = load_config(args.config).to_dict()
    for key, value in (("trials", args.trials), ("master_seed", args.seed),
                       ("output_path", args.out), ("workers", args.workers)):
        if value is not None:
            fields[key] = value
    out = fields.pop("output_path", None)
    cfg = ExperimentConfig.from_dict(fields)
    table = run_experiment(cfg)
    if out:
        fmt = args.format or ("json" if out.endswith(".json") else "csv")
        table.write(out, fmt)
        print(f"{cfg.name}: {len(table)} rows -> {out}")
    else:
        text = table.to_json_text() if args.format == "json" else table.to_csv_text()
        sys.stdout.write(text)
    return 0


def _cmd_frame(args) -> int:
    raw = _read_json(args.config)
    frame, halting = _frame_pieces(raw)
    if "signal" not in raw:
        raise InvalidSpecError("frame config is missing the 'signal' section")
    spec = _signal_from_dict(raw["signal"])
    if "detector" in raw:
        detector = DetectorConfig.from_dict(raw["detector"])
    else:
        detector = DetectorConfig(
            bands=uniform_bands(frame.nyquist_rate / 2.0, 4), threshold=1.0
        )
    seed = args.seed if args.seed is not None else int(raw.get("master_seed", 0))
    outcome = run_frame(spec, frame, halting, detector, seed)
    text = outcome.to_json()
    if args.out:
        _atomic_write(args.out, text + "\n")
        print(f"frame outcome -> {args.out}")
    else:
        print(text)
    return 0


def _cmd_list(_args) -> int:
    for name in EXPERIMENT_NAMES:
        print(name)
    return 0


def _cmd_calibrate(args) -> int:
    raw = _read_json(args.config)
    frame, halting = _frame_pieces(raw)
    if "bands" in raw:
        bands = tuple((float(lo), float(hi)) for lo, hi in raw["bands"])
    else:
        bands = uniform_bands(frame.nyquist_rate / 2.0, int(raw.get("band_count", 4)))
    false_alarm = float(raw.get("false_alarm", 0.05))
    trials = args.trials if args.trials is not None else int(raw.get("trials", 50))
    seed = args.seed if args.seed is not None else int(raw.get("master_seed", 0))
    threshold = calibrate_lambda(frame, halting, bands, false_alarm, trials, seed)
    print(repr(float(threshold)))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "frame": _cmd_frame,
    "list": _cmd_list,
    "calibrate-lambda": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (InvalidSpecError, ParameterError) as exc:
        print(f"widesense: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"widesense: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
