"""Command-line driver.

    fragchain run <config>        execute a workflow, write artifacts + manifest
    fragchain scan <config>       sweep config parameters, collect a table
    fragchain validate <config>   parse and validate without running
    fragchain list-workflows      show workflow kinds and shipped presets

<config> is a path, or the name of a shipped preset (see list-workflows).
Outputs land in [run] output, else $FRAGCHAIN_OUTPUT_ROOT/<workflow>, else
./fragchain_out/<workflow>.  Exit codes: 0 success, 2 config/schema error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import importlib.resources
import os
import sys

import numpy as np

from .config import ConfigError, ParsedConfig, parse_config, parse_config_text
from .evolution import ToleranceError
from .exports import write_manifest
from .workflows import WORKFLOWS, run_scan, run_workflow, validate_config, workflow_names

OUTPUT_ENV = "FRAGCHAIN_OUTPUT_ROOT"


def _preset_names() -> list[str]:
    root = importlib.resources.files("fragchain") / "presets"
    return sorted(p.name[: -len(".cfg")] for p in root.iterdir() if p.name.endswith(".cfg"))


def _load_config(target: str) -> ParsedConfig:
    if os.path.exists(target):
        return parse_config(target)
    if target in _preset_names():
        text = (importlib.resources.files("fragchain") / "presets" / f"{target}.cfg").read_text()
        return parse_config_text(text, path=f"preset:{target}")
    raise ConfigError(f"no such config file or preset: {target}")


def _outdir(cfg: ParsedConfig, name: str) -> str:
    explicit = cfg.string("run", "output", None)
    if explicit:
        return explicit
    root = os.environ.get(OUTPUT_ENV, "fragchain_out")
    return os.path.join(root, name)


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    name = validate_config(cfg)
    outdir = args.output or _outdir(cfg, name)
    os.makedirs(outdir, exist_ok=True)
    name, (files, summary) = run_workflow(cfg, outdir)
    manifest = write_manifest(outdir, name, cfg.text, cfg.integer("run", "seed", 0), files)
    print(f"workflow {name}: {len(files)} artifacts in {outdir}")
    for k in sorted(summary):
        print(f"  {k} = {summary[k]}")
    print(f"manifest: {manifest}")
    return 0


def _cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    validate_config(cfg)
    name = cfg.string("run", "workflow")
    outdir = args.output or _outdir(cfg, f"scan_{name}")
    files, rows = run_scan(cfg, outdir)
    manifest = write_manifest(outdir, f"scan:{name}", cfg.text, cfg.integer("run", "seed", 0), files)
    print(f"scan over {len(rows)} points -> {outdir}/scan_table.csv")
    print(f"manifest: {manifest}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    name = validate_config(cfg)
    print(f"OK: workflow {name!r}")
    return 0


def _cmd_list(_args) -> int:
    print("workflows:")
    for name in workflow_names():
        print(f"  {name:26s} {WORKFLOWS[name][2]}")
    print("presets (usable as the <config> argument):")
    for name in _preset_names():
        print(f"  {name}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fragchain", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, fn in (("run", _cmd_run), ("scan", _cmd_scan), ("validate", _cmd_validate)):
        p = sub.add_parser(cmd)
        p.add_argument("config", help="config file path or preset name")
        p.add_argument("--output", help="artifact directory override")
        p.set_defaults(func=fn)
    p = sub.add_parser("list-workflows")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ToleranceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
