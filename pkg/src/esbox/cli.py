"""Command-line front end.

    esbox verify --box teleport
    esbox report --box twirled-teleport --format json --out report.json
    esbox export --box random4 --seed 7 --out random4.json

Exit codes: 0 all pass, 1 verification failure, 2 input error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import boxes
from .comm import Tolerances, build_report
from .qcore import TOL_ALGEBRA, TOL_OPT

log = logging.getLogger("esbox")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3
BOX_CHOICES = ("teleport", "twirled-teleport", "random4", "random8", "ghz", "bell-from-ghz")
DEFAULT_SEED = 42


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    box: str | None = None
    box_file: str | None = None
    seed: int = DEFAULT_SEED
    trials: int = 1000
    restarts: int = 200
    iters: int = 300
    tol_algebra: float = TOL_ALGEBRA
    tol_opt: float = TOL_OPT
    format: str = "text"
    out: str | None = None
    figures: str | None = None


def make_box(config: RunConfig):
    """Return (box, box_id) for the selector or box file."""
    if config.box_file:
        try:
            box = boxes.load_box(config.box_file)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read box file {config.box_file}: {exc}") from exc
        return box, Path(config.box_file).stem
    name = config.box
    if name == "teleport":
        return boxes.teleportation_box(), name
    if name == "twirled-teleport":
        return boxes.twirled_box(boxes.teleportation_box()), name
    if name in ("random4", "random8"):
        return boxes.random_es_box(int(name[-1]), config.seed), name
    if name == "ghz":
        return boxes.ghz_box(), name
    if name == "bell-from-ghz":
        return boxes.bell_from_ghz_box(), name
    raise InputError(f"unknown box selector {name!r}")


def num(x):
    """Round to 12 significant digits for serialization."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    return float(f"{float(x):.12g}")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _table(rows: list[dict], title: str) -> str:
    cols = list(rows[0])
    cells = [[_cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[k]) for row in cells)) for k, c in enumerate(cols)]
    line = "  ".join(c.ljust(w) for c, w in zip(cols, widths))
    out = [title, line, "-" * len(line)]
    out += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


# ---------------------------------------------------------------------------
# commands


def cmd_verify(config: RunConfig) -> int:
    box, box_id = make_box(config)
    report = boxes.validate(box, config.tol_algebra)
    rows = [{"check": c.name, "pass": c.passed, "residual": num(c.residual)} for c in report.checks]
    if config.format == "json":
        doc = {"box_id": box_id, "passed": report.passed, "checks": rows}
        text = json.dumps(doc, indent=2) + "\n"
    elif config.format == "csv":
        text = _csv(rows)
    else:
        text = _table(rows, f"validation of {box_id}: {'PASS' if report.passed else 'FAIL'}")
    _emit(text, config.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def report_document(report) -> dict:
    return {
        "box_id": report.box_id,
        "seed": report.seed,
        "claims": [
            {
                "id": c.id,
                "name": c.name,
                "value": num(c.value),
                "bound": num(c.bound),
                "residual": num(c.residual),
                "pass": c.passed,
                "status": c.status,
            }
            for c in report.verdicts
        ],
        "outcome_entropy_bits": num(report.outcome_entropy_bits),
        "cc_lower_bound_bits": num(report.cc_lower_bound_bits),
        "cv_lower_bound_bits": num(report.cv_lower_bound_bits),
        "capacity_upper_bound_bits": num(report.capacity_upper_bound_bits),
        "nonsignaling": {
            d: {"signaling": v["signaling"], "residual": num(v["residual"])} for d, v in report.nonsignaling.items()
        },
        "informational": {k: num(v) for k, v in report.informational.items()},
    }


def cmd_report(config: RunConfig) -> int:
    box, box_id = make_box(config)
    tol = Tolerances(algebra=config.tol_algebra, optimizer=config.tol_opt)
    report = build_report(box, box_id, config.seed, config.trials, config.restarts, config.iters, tol)
    doc = report_document(report)
    if config.format == "json":
        text = json.dumps(doc, indent=2) + "\n"
    elif config.format == "csv":
        text = _csv(
            [{"box_id": box_id, "seed": config.seed, **{k: v for k, v in c.items()}} for c in doc["claims"]]
        )
    else:
        rows = [{k: c[k] for k in ("id", "name", "value", "bound", "residual", "status")} for c in doc["claims"]]
        text = _table(rows, f"report for {box_id} (seed {config.seed})")
        for d, v in doc["nonsignaling"].items():
            text += f"{d}: signaling={v['signaling']} residual={v['residual']:.12g}\n"
        for k, v in doc["informational"].items():
            text += f"{k}: {v}\n"
    _emit(text, config.out)
    if config.figures:
        from .plotting import write_report_figures

        for path in write_report_figures(report, config.figures):
            log.info("wrote %s", path)
    if not all(c.passed or c.status == "inconclusive" for c in report.verdicts):
        return EXIT_FAIL
    return EXIT_INCONCLUSIVE if report.inconclusive else EXIT_OK


def cmd_export(config: RunConfig) -> int:
    box, _ = make_box(config)
    text = json.dumps(boxes.box_to_dict(box), indent=2) + "\n"
    _emit(text, config.out)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "report": cmd_report, "export": cmd_export}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esbox", description="Entanglement-swapping box verifier")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify", "validate a box's standard form"),
        ("report", "run the communication analysis"),
        ("export", "write a box as JSON"),
    ):
        p = sub.add_parser(name, help=help_)
        sel = p.add_mutually_exclusive_group(required=True)
        sel.add_argument("--box", choices=BOX_CHOICES)
        sel.add_argument("--box-file")
        p.add_argument("--seed", type=int, default=None, help="default: $ESBOX_SEED or 42")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--out")
        p.add_argument("--tol-algebra", type=float, default=TOL_ALGEBRA)
        if name == "report":
            p.add_argument("--trials", type=int, default=1000)
            p.add_argument("--restarts", type=int, default=200)
            p.add_argument("--iters", type=int, default=300)
            p.add_argument("--tol-opt", type=float, default=TOL_OPT)
            p.add_argument("--figures", help="directory for PNG figures")
    return parser


def _resolve_seed(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("ESBOX_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"ESBOX_SEED={env!r} is not an integer") from None
    return DEFAULT_SEED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    try:
        fields["seed"] = _resolve_seed(args.seed)
        config = RunConfig(**fields)
        if config.command == "report" and config.restarts < 1:
            raise InputError("--restarts must be >= 1")
        return COMMANDS[config.command](config)
    except (InputError, boxes.BoxError) as exc:
        print(f"esbox: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
