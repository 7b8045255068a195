"""Command line interface.

Exit codes: 0 success, 1 validation or input error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import (ConfigError, ConfigValidationError, echo_config, parse_config,
                     with_overrides)
from .experiment import (paris_fit, read_records_csv, run_experiment, run_sweep,
                         write_records_csv)

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2
SWEEP_AXES = {"p_H2": "load.p_H2", "R": "load.R", "f": "load.f", "delta_K": "load.delta_K"}


def _parse_axis(spec: str):
    """``name=v1,v2,...`` -> (config key, values)."""
    try:
        name, values = spec.split("=", 1)
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad axis spec {spec!r}; expected name=v1,v2,...") from None
    if name not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {name!r}; choose from {sorted(SWEEP_AXES)}")
    if not vals:
        raise ConfigError(f"axis {name!r} has no values")
    return name, SWEEP_AXES[name], vals


def _summary(records, window=None) -> list[dict]:
    out = []
    for rec in records:
        d = {"run_id": rec.run_id, "status": rec.status, "points": 0}
        k, r = rec.paris_points()
        d["points"] = int(len(r))
        if len(r):
            d["dadN_median"] = float(np.median(r))
        try:
            C, m = paris_fit(k, r, window)
            d.update(C=C, m=m)
        except ValueError:
            pass
        out.append(d)
    return out


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    out = Path(args.out or cfg.output.directory)
    echo_config(cfg, out)
    rec = run_experiment(cfg, out)
    path = out / f"{cfg.output.run_id}.csv"
    write_records_csv(path, [rec], f"coefficient_set={cfg.solver.coefficient_set}")
    print(json.dumps(_summary([rec])[0]))
    return EXIT_OK if rec.status in ("ok", "separated") else EXIT_SOLVER


def cmd_sweep(args) -> int:
    base = parse_config(args.config)
    out = Path(args.out or base.output.directory)
    axes = [_parse_axis(s) for s in args.axis]
    configs = []
    for combo in itertools.product(*[a[2] for a in axes]):
        tag = "_".join(f"{a[0]}{v:g}" for a, v in zip(axes, combo))
        over = {a[1]: v for a, v in zip(axes, combo)}
        over["output.run_id"] = f"{base.output.run_id}_{tag}"
        cfg = with_overrides(base, over)
        echo_config(cfg, out)
        configs.append(cfg)
    records = run_sweep(configs, out, args.workers)
    for cfg, rec in zip(configs, records):
        write_records_csv(out / f"{cfg.output.run_id}.csv", [rec],
                          f"coefficient_set={cfg.solver.coefficient_set}")
    write_records_csv(out / f"{base.output.run_id}_sweep.csv", records,
                      f"coefficient_set={base.solver.coefficient_set}")
    for row in _summary(records):
        print(json.dumps(row))
    return EXIT_OK if all(r.status in ("ok", "separated") for r in records) else EXIT_SOLVER


def cmd_postprocess(args) -> int:
    path = Path(args.record)
    if not path.exists():
        raise FileNotFoundError(path)
    records = read_records_csv(path)
    window = tuple(args.fit_window) if args.fit_window else None
    for row in _summary(records, window):
        print(json.dumps(row))
    return EXIT_OK


def cmd_export_mesh(args) -> int:
    from .mesh import generate_ct_half_mesh, write_vtk

    cfg = parse_config(args.config)
    mesh = generate_ct_half_mesh(cfg.geometry, cfg.material.ell)
    out = Path(args.out or Path(cfg.output.directory) / f"{cfg.output.run_id}_mesh.vtk")
    out.parent.mkdir(parents=True, exist_ok=True)
    band = mesh.band.astype(float)
    write_vtk(out, mesh, None, {"band": band})
    print(json.dumps({"path": str(out), "elements": mesh.n_elements, "nodes": mesh.n_nodes}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="h2fatigue",
                                description="Virtual hydrogen-assisted fatigue experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("config")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run experiments over one or more axes")
    s.add_argument("config")
    s.add_argument("axis", nargs="+", help="name=v1,v2,... with name in p_H2, R, f, delta_K")
    s.add_argument("--out")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    q = sub.add_parser("postprocess", help="Paris fit of a record CSV")
    q.add_argument("record")
    q.add_argument("--fit-window", nargs=2, type=float, metavar=("LO", "HI"))
    q.set_defaults(func=cmd_postprocess)

    e = sub.add_parser("export-mesh", help="write the CT mesh as legacy VTK")
    e.add_argument("config")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_mesh)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ConfigValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # solver or numerical failure
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
