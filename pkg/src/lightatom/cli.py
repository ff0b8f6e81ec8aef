"""Command line entry point: ``lightatom {run,sweep,validate,limits,preset-list}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from . import config as cfg
from . import sensitivity as sens
from .interferometer import lcc_out

EXIT_ERROR = 2
EXIT_FAIL = 1

BASELINE_NOTES = {
    "pre_loss": "n_ph counted after RP1, before loss and dephasing",
    "post_loss": "n_ph counted after loss and dephasing, before RP2",
}


def fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _error_record(exc: BaseException) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def _load(args) -> cfg.Document:
    if bool(args.config) == bool(args.preset):
        raise cfg.ConfigError("give exactly one of --config or --preset")
    return cfg.load_path(args.config) if args.config else cfg.load_preset(args.preset)


def _open_out(path):
    if path is None:
        return sys.stdout
    return open(path, "w", newline="")


# run -------------------------------------------------------------------------

def cmd_run(args) -> int:
    doc = _load(args)
    report = sens.delta_phi(doc.config, doc.baseline)
    out = _open_out(args.out)
    try:
        if args.format == "json":
            payload = cfg.dump_document(doc.config, doc.baseline, report=report.as_dict())
            out.write(json.dumps(payload, indent=2) + "\n")
        else:
            for key, value in report.as_dict().items():
                out.write(f"{key},{fmt(value)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# sweep -----------------------------------------------------------------------

def _point(task):
    """One sweep row: (axis value, {output: value or None}, [error strings])."""
    spec, baseline, value = task
    row: dict = {name: None for name in spec.outputs}
    errors: list[str] = []
    try:
        config = cfg.config_at(spec, value)
        if spec.optimize:
            best = sens.optimize(config, spec.optimize)
            config = sens.apply_parameters(config, best.argmin)
    except Exception as exc:  # noqa: BLE001 - every point failure goes to the error log
        return value, row, [f"config: {type(exc).__name__}: {exc}"]

    def attempt(name, fn):
        if name not in row:
            return
        try:
            row[name] = float(fn())
        except Exception as exc:  # noqa: BLE001
            errors.append(f"{name}: {type(exc).__name__}: {exc}")

    n_ph = None
    try:
        n_ph = sens.probe_number(config, baseline)
    except Exception as exc:  # noqa: BLE001
        errors.append(f"n_ph: {type(exc).__name__}: {exc}")
    if n_ph is not None:
        attempt("n_ph", lambda: n_ph)
        attempt("sql", lambda: sens.limits(n_ph)[0])
        attempt("hl", lambda: sens.limits(n_ph)[1])
    attempt("delta_phi", lambda: sens.delta_phi(config, baseline).delta_phi)
    attempt("var_X", lambda: sens.engine_variance(config))
    attempt("slope", lambda: sens.analytic_slope(config))
    attempt("lcc", lambda: lcc_out(config))
    return value, row, errors


def sweep_rows(spec: cfg.SweepSpec, baseline: str, workers: int = 1):
    tasks = [(spec, baseline, float(v)) for v in spec.values()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point, tasks))
    return [_point(t) for t in tasks]


def sweep_metadata(doc: cfg.Document, spec: cfg.SweepSpec, seed: int) -> list[str]:
    lines = [
        f"schema: {cfg.SCHEMA}",
        f"preset: {doc.name or '-'}",
        f"baseline: {doc.baseline} ({BASELINE_NOTES[doc.baseline]})",
        f"axis: {spec.axis} ({spec.scale}, {spec.points} points, {fmt(spec.start)} to {fmt(spec.stop)})",
        f"seed: {seed}",
    ]
    if spec.axis == "n_ph_target":
        lines.append(f"convention: {cfg.N_PH_CONVENTION}")
    if spec.optimize:
        lines.append(f"optimize: {','.join(spec.optimize)}")
    return lines


def render_csv(spec: cfg.SweepSpec, rows, metadata: list[str]) -> str:
    buf = io.StringIO()
    for line in metadata:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([spec.axis, *spec.outputs])
    for value, row, _ in rows:
        writer.writerow([fmt(value)] + ["" if row[k] is None else fmt(row[k]) for k in spec.outputs])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    doc = _load(args)
    outputs = tuple(args.outputs.split(",")) if args.outputs else None
    spec = doc.sweep_spec(axis=args.axis, start=args.start, stop=args.stop,
                          points=args.points, scale=args.scale, outputs=outputs)
    rows = sweep_rows(spec, doc.baseline, args.workers)
    metadata = sweep_metadata(doc, spec, args.seed)
    if args.format == "json":
        text = json.dumps({
            "metadata": metadata,
            "rows": [{spec.axis: v, **row} for v, row, _ in rows],
        }, indent=2) + "\n"
    else:
        text = render_csv(spec, rows, metadata)
    out = _open_out(args.out)
    try:
        out.write(text)
    finally:
        if out is not sys.stdout:
            out.close()

    failures = [(i, v, e) for i, (v, _, errs) in enumerate(rows) for e in errs]
    if failures:
        if args.out:
            with open(f"{args.out}.errors.log", "w") as log:
                for i, v, e in failures:
                    log.write(f"{i},{fmt(v)},{e}\n")
        else:
            for i, v, e in failures:
                sys.stderr.write(f"# point {i} ({spec.axis}={fmt(v)}): {e}\n")
    return 0


# validate --------------------------------------------------------------------

def cmd_validate(args) -> int:
    from . import validation

    results = validation.validate(args.regime, seed=args.seed, n_engine=args.n_engine,
                                  n_oracle=args.n_oracle, permits=args.workers)
    out = _open_out(args.out)
    try:
        if args.format == "json":
            out.write(json.dumps([{**r.__dict__, "status": r.status} for r in results], indent=2) + "\n")
        else:
            out.write("check,worst,tol,count,inconclusive,status\n")
            for r in results:
                out.write(f"{r.name},{fmt(float(r.worst))},{fmt(r.tol)},{r.count},{r.inconclusive},{r.status}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_FAIL if any(r.status == "fail" for r in results) else 0


# limits ----------------------------------------------------------------------

def cmd_limits(args) -> int:
    if args.n_ph is not None:
        sql, hl = sens.limits(args.n_ph)
        record = {"n_ph": args.n_ph, "sql": sql, "hl": hl}
    else:
        doc = _load(args)
        report = sens.delta_phi(doc.config, doc.baseline)
        record = {
            "n_ph": report.n_ph, "sql": report.sql, "hl": report.hl,
            "delta_phi": report.delta_phi,
            "sql_ratio": report.delta_phi / report.sql,
            "hl_ratio": report.delta_phi * report.n_ph,
        }
    if args.format == "json":
        sys.stdout.write(json.dumps(record, indent=2) + "\n")
    else:
        for key, value in record.items():
            sys.stdout.write(f"{key},{fmt(float(value))}\n")
    return 0


def cmd_preset_list(args) -> int:
    for name in cfg.preset_names():
        sys.stdout.write(f"{name}\t{cfg.load_preset(name).description}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lightatom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, source=True):
        if source:
            p.add_argument("--config", help="YAML or JSON config file")
            p.add_argument("--preset", help="name of a shipped preset")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("run", help="sensitivity report at one operating point")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="tabulate outputs along one parameter axis")
    common(p)
    p.add_argument("--axis", choices=cfg.AXES)
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--scale", choices=("linear", "log"))
    p.add_argument("--outputs", help=f"comma-separated subset of {','.join(cfg.OUTPUTS)}")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="cross-check engine, closed form and Fock oracle")
    common(p, source=False)
    p.add_argument("--regime", choices=("fast", "full"), default="fast")
    p.add_argument("--n-engine", type=int, default=1000)
    p.add_argument("--n-oracle", type=int, default=200)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("limits", help="SQL and HL baselines")
    common(p)
    p.add_argument("--n-ph", type=float)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("preset-list", help="list shipped presets")
    p.set_defaults(func=cmd_preset_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(_error_record(exc) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
