"""Command line entry point ``fhn-levy``.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
3 runtime diagnostic (step size, overflow, blow-up, horizon).
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, defaults_text, load_config, validate
from .errors import ConfigError, FhnLevyError, StepSizeError
from .experiments import RUNNERS

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fhn-levy", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", nargs="?", choices=[*RUNNERS, "all"])
    ap.add_argument("--config", type=Path, help="experiment config file")
    ap.add_argument("--out", type=Path, help="output directory (overrides config)")
    ap.add_argument("--seeds", type=_seed_list, help="comma separated seeds, e.g. 1,2,3")
    ap.add_argument("--print-defaults", action="store_true",
                    help="print the default config and exit")
    return ap


def _fail(status: str, detail, code: int) -> int:
    print(json.dumps({"status": status, "detail": detail}, indent=2), file=sys.stderr)
    return code


def run(cfg: ExperimentConfig, names: list[str], out: Path) -> int:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail("config-error", f"cannot create output dir: {exc}", EXIT_CONFIG)
    manifest = {
        "config_sha256": cfg.digest(),
        "seeds": list(cfg.seeds),
        "versions": {
            "fhn_levy": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "runs": [],
    }
    failed = []
    code = EXIT_OK
    for name in names:
        t0 = time.perf_counter()
        entry = {"subcommand": name}
        try:
            checks = RUNNERS[name](cfg, out)
        except StepSizeError as exc:
            entry.update(error=str(exc), suggested_dt=exc.suggested_dt)
            code = EXIT_RUNTIME
        except (FhnLevyError, FloatingPointError) as exc:
            entry.update(error=f"{type(exc).__name__}: {exc}")
            code = EXIT_RUNTIME
        else:
            entry["checks"] = [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks
            ]
            bad = [c.name for c in checks if not c.passed]
            entry["passed"] = not bad
            failed += [f"{name}:{b}" for b in bad]
        entry["seconds"] = round(time.perf_counter() - t0, 3)
        manifest["runs"].append(entry)
        print(f"{name}: {'error' if 'error' in entry else ('pass' if entry['passed'] else 'FAIL')}"
              f" ({entry['seconds']}s)")
        if code == EXIT_RUNTIME:
            break
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if code == EXIT_RUNTIME:
        return _fail("runtime-diagnostic", manifest["runs"][-1], code)
    if failed:
        return _fail("check-failed", failed, EXIT_CHECK)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(defaults_text())
        return EXIT_OK
    if args.subcommand is None:
        return _fail("config-error", "a subcommand is required", EXIT_CONFIG)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seeds:
            cfg = cfg.with_seeds(args.seeds)
        validate(cfg)
    except ConfigError as exc:
        return _fail("config-error", str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("config-error", f"cannot read config: {exc}", EXIT_CONFIG)
    out = args.out or Path(cfg.out_dir)
    names = list(RUNNERS) if args.subcommand == "all" else [args.subcommand]
    return run(cfg, names, out)


if __name__ == "__main__":
    raise SystemExit(main())
