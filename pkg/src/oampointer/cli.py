"""Command-line front end: parameter sweeps, field exports, validation, figure presets.

Output is data only (CSV plus JSON sidecars); plotting is left to external
tools.  All floats are written with 17 significant digits so identical
configurations produce byte-identical files.

Exit codes: 0 success, 1 usage/config error, 2 validation failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import closedform as cf
from . import oracle as orc
from .closedform import DegenerateShiftError, UndefinedCorrelationError, VarianceCollapseError
from .fock import GridSpec, default_cutoff
from .measurement import MeasurementParams, weak_value

__all__ = ["main"]

_FMT = "{:.17g}"

SWEEP_QUANTITIES = ("Q1", "Q2", "g2", "chi", "fidelity", "lambda", "weak_value")
SWEEP_AXES = ("Gamma", "alpha", "gamma", "phi", "delta")
FIGURES = (
    "fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b",
    "fig5", "fig6a", "fig6b", "fig6c", "fig7a", "fig7b",
)
DEFAULT_WHITELIST = ("published:*", "chi[x2=operator]")


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    return _FMT.format(float(x))


def _read_config(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, val = line.split("=", 1)
                out[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return out


def _parse_grid(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise ConfigError(f"grid must be xmin,xmax,ymin,ymax,nx,ny, got {text!r}")
    try:
        xmin, xmax, ymin, ymax = (float(p) for p in parts[:4])
        nx, ny = int(parts[4]), int(parts[5])
        return GridSpec(xmin, xmax, ymin, ymax, nx, ny)
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


DEFAULT_GRID = GridSpec(-6.0, 6.0, -6.0, 6.0, 241, 241)


def _params_from(ns) -> MeasurementParams:
    try:
        return MeasurementParams(
            Gamma=ns.Gamma, alpha=ns.alpha, delta=ns.delta,
            phi=ns.phi, gamma=ns.gamma, sigma=ns.sigma,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _evaluate(quantity: str, params: MeasurementParams, engine: str, na=None):
    """One scalar in the requested engine; (None, reason) when undefined."""
    try:
        if quantity == "weak_value":
            return weak_value(params.alpha, params.delta).value.real
        if engine == "closedform":
            if quantity == "lambda":
                return cf.lambda_norm(params)
            if quantity == "Q1":
                return cf.squeezing(params)[0]
            if quantity == "Q2":
                return cf.squeezing(params)[1]
            if quantity == "g2":
                return cf.g2_cross(params)
            if quantity == "chi":
                return cf.snr_ratio(params, 1)[0]
            if quantity == "fidelity":
                return cf.fidelity(params)
        elif engine == "oracle":
            rec = orc.oracle_quantities(params, na=na)
            val = {
                "lambda": rec.lam, "Q1": rec.q1, "Q2": rec.q2,
                "g2": rec.g2 if rec.g2 is not None else (None, rec.g2_reason),
                "chi": rec.chi if rec.chi is not None else (None, rec.chi_reason),
                "fidelity": rec.fidelity,
            }.get(quantity)
            if val is None and quantity not in ("g2", "chi"):
                raise ConfigError(f"unknown quantity {quantity!r}")
            return val
        else:
            raise ConfigError(f"unknown engine {engine!r}")
        raise ConfigError(f"unknown quantity {quantity!r}")
    except (UndefinedCorrelationError, DegenerateShiftError, VarianceCollapseError) as exc:
        return (None, str(exc))


def _sweep_rows(quantity, axis, values, base: MeasurementParams, engine, na=None, workers=None):
    def one(v):
        p = replace(base, **{axis: float(v)})
        res = _evaluate(quantity, p, engine, na=na)
        if isinstance(res, tuple):
            value, reason = "", res[1]
        else:
            value, reason = _fmt(res), ""
        return [
            _fmt(v), quantity, value, reason, engine,
            _fmt(p.Gamma), _fmt(p.alpha), _fmt(p.delta), _fmt(p.phi), _fmt(p.gamma), _fmt(p.sigma),
        ]

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, values))
    return [one(v) for v in values]


SWEEP_HEADER = "axis_value,quantity,value,reason,engine,Gamma,alpha,delta,phi,gamma,sigma"


def _write_rows(path, header, rows, fmt):
    if fmt == "csv":
        text = header + "\n" + "\n".join(",".join(r) for r in rows) + "\n"
    elif fmt == "json":
        keys = header.split(",")
        text = json.dumps([dict(zip(keys, r)) for r in rows], indent=0, sort_keys=True) + "\n"
    else:
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_sweep(ns) -> int:
    if ns.quantity not in SWEEP_QUANTITIES:
        raise ConfigError(f"quantity must be one of {SWEEP_QUANTITIES}, got {ns.quantity!r}")
    if ns.axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}, got {ns.axis!r}")
    if ns.start is None or ns.stop is None or ns.steps is None:
        raise ConfigError("sweep needs start, stop and steps (flags or config)")
    if ns.steps < 2:
        raise ConfigError(f"steps must be >= 2, got {ns.steps}")
    base = _params_from(ns)
    values = np.linspace(ns.start, ns.stop, ns.steps)
    # fail early if any axis value leaves the legal domain
    try:
        for v in values:
            replace(base, **{ns.axis: float(v)})
    except ValueError as exc:
        raise ConfigError(f"axis leaves the legal domain: {exc}") from exc
    rows = _sweep_rows(ns.quantity, ns.axis, values, base, ns.engine, na=ns.cutoff, workers=ns.workers)
    _write_rows(ns.out, SWEEP_HEADER, rows, ns.format)
    print(f"wrote {ns.out} ({len(rows)} rows)")
    return 0


def _field(kind, params, grid, engine, na=None):
    if engine == "closedform":
        return cf.intensity_field(params, grid) if kind == "intensity" else cf.wigner_field(params, grid)
    if engine == "oracle":
        _, _, psi, _ = orc.oracle_states(params, na)
        return orc.oracle_intensity(psi, grid) if kind == "intensity" else orc.oracle_wigner(psi, grid)
    raise ConfigError(f"unknown engine {engine!r}")


def cmd_field(ns) -> int:
    if ns.kind not in ("intensity", "wigner"):
        raise ConfigError(f"kind must be intensity or wigner, got {ns.kind!r}")
    params = _params_from(ns)
    grid = ns.grid or DEFAULT_GRID
    fld = _field(ns.kind, params, grid, ns.engine, na=ns.cutoff)
    xs, ys = grid.xs(), grid.ys()
    rows = [
        [_fmt(xs[i]), _fmt(ys[j]), _fmt(fld.values[i, j])]
        for i in range(grid.nx)
        for j in range(grid.ny)
    ]
    _write_rows(ns.out, "x,y_or_p,value", rows, ns.format)
    sidecar = {
        "kind": ns.kind,
        "engine": ns.engine,
        "params": {
            "Gamma": params.Gamma, "alpha": params.alpha, "delta": params.delta,
            "phi": params.phi, "gamma": params.gamma, "sigma": params.sigma,
        },
        "grid": [grid.x_min, grid.x_max, grid.y_min, grid.y_max, grid.nx, grid.ny],
        "integral": fld.integral(),
        "min": float(fld.values.real.min()),
        "max": float(fld.values.real.max()),
    }
    with open(ns.out + ".meta.json", "w", newline="\n") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {ns.out} and {ns.out}.meta.json")
    return 0


def _field_check_points():
    """Ten varied points for the field cross-validation."""
    pts = [
        MeasurementParams(Gamma=1.0, alpha=8 * math.pi / 9, delta=0.0, phi=0.0, gamma=1.0),
        MeasurementParams(Gamma=0.0, alpha=0.0, delta=0.0, phi=0.0, gamma=0.0),
        MeasurementParams(Gamma=0.0, alpha=2.0, delta=0.0, phi=math.pi / 2, gamma=1.0),
        MeasurementParams(Gamma=0.3, alpha=8 * math.pi / 9, delta=0.0, phi=0.0, gamma=1.0),
        MeasurementParams(Gamma=0.5, alpha=math.pi / 2, delta=math.pi / 2, phi=math.pi / 2, gamma=1.0),
        MeasurementParams(Gamma=1.0, alpha=11 * math.pi / 12, delta=0.0, phi=0.0, gamma=1.0),
        MeasurementParams(Gamma=1.5, alpha=2.0, delta=0.0, phi=1.0, gamma=2.0),
        MeasurementParams(Gamma=2.0, alpha=0.5, delta=math.pi / 2, phi=0.0, gamma=0.5),
        MeasurementParams(Gamma=0.7, alpha=2.2, delta=0.0, phi=math.pi / 2, gamma=1.3),
        MeasurementParams(Gamma=1.0, alpha=0.0, delta=0.0, phi=0.0, gamma=1.0),
    ]
    return pts


def cmd_validate(ns) -> int:
    whitelist = tuple(w for w in (ns.whitelist or "").split(",") if w) or DEFAULT_WHITELIST
    params_set = orc.validation_params()
    # cutoff-doubling self-check on the most demanding point first
    worst = max(params_set, key=lambda p: p.Gamma)
    na0 = ns.cutoff or default_cutoff(worst.Gamma)
    r1 = orc.oracle_quantities(worst, na=na0)
    r2 = orc.oracle_quantities(worst, na=2 * na0)
    drift = max(
        abs(r1.lam - r2.lam), abs(r1.q1 - r2.q1), abs(r1.q2 - r2.q2),
        abs(r1.fidelity - r2.fidelity),
        abs((r1.g2 or 0) - (r2.g2 or 0)), abs((r1.chi or 0) - (r2.chi or 0)),
    )
    if drift > 1e-9:
        print(f"cutoff self-check FAILED: doubling Na moved results by {drift:.3e}", file=sys.stderr)
        return 2
    print(f"cutoff self-check ok (doubling drift {drift:.3e})")
    report = orc.compare(
        params_set,
        abs_tol=ns.abs_tol,
        rel_tol=ns.rel_tol,
        na=ns.cutoff,
        field_params=_field_check_points(),
        field_grid=GridSpec(-6.0, 6.0, -6.0, 6.0, 61, 61),
        workers=ns.workers,
    )
    with open(ns.out, "w", newline="\n") as fh:
        fh.write(report.to_json(indent=2))
        fh.write("\n")
    summary = report.summary()
    for q in sorted(summary):
        s = summary[q]
        print(f"  {q:38s} pass={s['pass']:4d} fail={s['fail']:4d} undefined={s['undefined']:4d} "
              f"max|d|={s['max_abs_delta']:.3e}")
    bad = report.failures(whitelist=whitelist)
    if bad:
        print(f"validation FAILED: {len(bad)} non-whitelisted failures (see {ns.out})", file=sys.stderr)
        return 2
    print(f"validation ok; report at {ns.out}")
    return 0


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------

_W_SMALL = 2 * math.atan(0.132)      # alpha giving weak value 0.132
_W_LARGE = 11 * math.pi / 12         # alpha giving weak value 7.596
_ALPHA_MAIN = 8 * math.pi / 9        # alpha giving weak value 5.671

_STUB_TEXT = (
    "# This preset plots against the radial coordinate r = sqrt(x^2 + y^2) in its\n"
    "# source figure, but none of the closed-form quantities depends on x or y;\n"
    "# the r dependence is not derivable from the available expressions, so no\n"
    "# r sweep is emitted.  A fallback sweep over the superposition weight gamma\n"
    "# accompanies this stub.\n"
)


def _figure_jobs(name: str):
    """Returns (sweeps, fields, stubs): sweep jobs (fname, quantity, axis, values, bases),
    field jobs (fname, kind, params), stub file names."""
    aline = np.linspace(0.0, 0.95 * math.pi, 191)
    gline = np.linspace(0.0, 2.0, 201)
    cline = np.linspace(0.0, 2.0, 201)
    gammas3 = (0.0, 0.3, 1.0)
    alphas3 = (math.pi / 4, math.pi / 2, _ALPHA_MAIN)
    base_q = MeasurementParams(Gamma=0.0, alpha=_ALPHA_MAIN, delta=0.0, phi=math.pi / 2, gamma=1.0)
    sweeps, fields, stubs = [], [], []
    if name == "fig2":
        for i, G in enumerate(gammas3):
            for j, al in enumerate((_W_SMALL, _W_LARGE)):
                fields.append((
                    f"{name}_r{i + 1}c{j + 1}.csv", "intensity",
                    MeasurementParams(Gamma=G, alpha=al, delta=0.0, phi=0.0, gamma=1.0),
                ))
    elif name in ("fig3a", "fig3c"):
        q = "Q1" if name == "fig3a" else "Q2"
        stubs.append(f"{name}_r_axis.stub.txt")
        sweeps.append((f"{name}_fallback_gamma.csv", q, "gamma", cline,
                       [replace(base_q, Gamma=G) for G in gammas3]))
    elif name in ("fig3b", "fig3d"):
        q = "Q1" if name == "fig3b" else "Q2"
        sweeps.append((f"{name}.csv", q, "alpha", aline,
                       [replace(base_q, Gamma=G) for G in gammas3]))
    elif name == "fig4a":
        stubs.append(f"{name}_r_axis.stub.txt")
        sweeps.append((f"{name}_fallback_gamma.csv", "g2", "gamma", cline,
                       [replace(base_q, Gamma=G) for G in gammas3]))
    elif name == "fig4b":
        sweeps.append((f"{name}.csv", "g2", "alpha", aline,
                       [replace(base_q, Gamma=G) for G in gammas3]))
    elif name == "fig5":
        for i, G in enumerate(gammas3):
            fields.append((
                f"{name}_c{i + 1}.csv", "wigner",
                MeasurementParams(Gamma=G, alpha=_ALPHA_MAIN, delta=0.0, phi=0.0, gamma=1.0),
            ))
    elif name == "fig6a":
        sweeps.append((f"{name}.csv", "chi", "Gamma", gline,
                       [replace(base_q, alpha=al) for al in alphas3]))
    elif name in ("fig6b", "fig6c"):
        stubs.append(f"{name}_r_axis.stub.txt")
        bases = [replace(base_q, Gamma=0.2, alpha=al) for al in alphas3] if name == "fig6b" \
            else [replace(base_q, Gamma=G, alpha=_ALPHA_MAIN) for G in (0.2, 0.5, 1.0)]
        sweeps.append((f"{name}_fallback_gamma.csv", "chi", "gamma", cline, bases))
    elif name == "fig7a":
        sweeps.append((f"{name}.csv", "fidelity", "Gamma", gline,
                       [replace(base_q, alpha=al) for al in alphas3]))
    elif name == "fig7b":
        sweeps.append((f"{name}.csv", "fidelity", "alpha", aline,
                       [replace(base_q, Gamma=G) for G in gammas3]))
    else:
        raise ConfigError(f"unknown figure {name!r}; valid names: {', '.join(FIGURES)}")
    return sweeps, fields, stubs


def cmd_figure(ns) -> int:
    grid = ns.grid or DEFAULT_GRID
    sweeps, fields, stubs = _figure_jobs(ns.name)
    os.makedirs(ns.outdir, exist_ok=True)
    written = []
    for fname, quantity, axis, values, bases in sweeps:
        rows = []
        for base in bases:
            rows.extend(_sweep_rows(quantity, axis, values, base, ns.engine,
                                    na=ns.cutoff, workers=ns.workers))
        path = os.path.join(ns.outdir, fname)
        _write_rows(path, SWEEP_HEADER, rows, "csv")
        written.append(path)
    for fname, kind, params in fields:
        path = os.path.join(ns.outdir, fname)
        sub = argparse.Namespace(
            kind=kind, out=path, engine=ns.engine, format="csv", grid=grid, cutoff=ns.cutoff,
            Gamma=params.Gamma, alpha=params.alpha, delta=params.delta,
            phi=params.phi, gamma=params.gamma, sigma=params.sigma,
        )
        cmd_field(sub)
        written.append(path)
    for fname in stubs:
        path = os.path.join(ns.outdir, fname)
        with open(path, "w", newline="\n") as fh:
            fh.write(_STUB_TEXT)
        written.append(path)
    print(f"figure {ns.name}: wrote {len(written)} file(s) under {ns.outdir}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_param_args(p):
    p.add_argument("--Gamma", type=float, default=0.0, help="coupling strength")
    p.add_argument("--alpha", type=float, default=0.0, help="preselection polar angle")
    p.add_argument("--delta", type=float, default=0.0, help="preselection phase")
    p.add_argument("--phi", type=float, default=0.0, help="superposition phase")
    p.add_argument("--gamma", type=float, default=1.0, help="superposition weight")
    p.add_argument("--sigma", type=float, default=1.0, help="beam waist")


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--out", default=None, help="output path")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--engine", default="closedform", choices=("closedform", "oracle"))
    p.add_argument("--cutoff", type=int, default=None, help="a-mode Fock cutoff override")
    p.add_argument("--grid", type=_parse_grid, default=None, help="xmin,xmax,ymin,ymax,nx,ny")
    p.add_argument("--workers", type=int, default=None, help="parallel evaluation workers")


def _build_parser():
    ap = _Parser(prog="oampointer", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="sweep one quantity along one parameter axis")
    p.add_argument("--quantity", default=None)
    p.add_argument("--axis", default=None)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    _add_param_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep, default_out="sweep.csv")

    p = sub.add_parser("field", help="export an intensity or Wigner field")
    p.add_argument("--kind", default=None)
    _add_param_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_field, default_out="field.csv")

    p = sub.add_parser("validate", help="closed-form vs oracle validation run")
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=1e-10)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-8)
    p.add_argument("--whitelist", default=None,
                   help="comma-separated quantity names (or prefix*) allowed to fail")
    _add_common(p)
    p.set_defaults(func=cmd_validate, default_out="validation_report.json")

    p = sub.add_parser("figure", help="emit the data behind one preset figure")
    p.add_argument("--name", default=None)
    p.add_argument("--outdir", default="figures")
    _add_common(p)
    p.set_defaults(func=cmd_figure, default_out=None)
    return ap


_CONFIG_TYPES = {
    "quantity": str, "axis": str, "kind": str, "name": str, "engine": str,
    "format": str, "out": str, "outdir": str, "whitelist": str,
    "start": float, "stop": float, "Gamma": float, "alpha": float, "delta": float,
    "phi": float, "gamma": float, "sigma": float, "abs_tol": float, "rel_tol": float,
    "steps": int, "cutoff": int, "workers": int,
    "grid": _parse_grid,
}

# argparse defaults live on the subparsers, so flag-vs-config precedence needs
# its own table; a flag passed with exactly its default value is
# indistinguishable from an omitted one and the config wins there
_CONFIG_DEFAULTS = {
    "quantity": None, "axis": None, "kind": None, "name": None,
    "engine": "closedform", "format": "csv", "out": None, "outdir": "figures",
    "whitelist": None, "start": None, "stop": None, "steps": None,
    "Gamma": 0.0, "alpha": 0.0, "delta": 0.0, "phi": 0.0, "gamma": 1.0,
    "sigma": 1.0, "abs_tol": 1e-10, "rel_tol": 1e-8,
    "cutoff": None, "workers": None, "grid": None,
}


def _apply_config(ns):
    """Merge config-file values; explicitly set flags win over the file."""
    if not getattr(ns, "config", None):
        return ns
    conf = _read_config(ns.config)
    for key, raw in conf.items():
        if key not in _CONFIG_TYPES or not hasattr(ns, key):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(ns, key) != _CONFIG_DEFAULTS[key]:
            continue
        try:
            setattr(ns, key, _CONFIG_TYPES[key](raw))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return ns


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        ns = _apply_config(ns)
        if getattr(ns, "out", None) is None and ns.default_out is not None:
            ns.out = ns.default_out
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
