"""Command-line entry point: ``artifact <command> [--config FILE] [--out DIR] ...``.

Every command reads an optional JSON config, merges it over built-in
defaults, applies flag overrides, validates the result and writes its
artifacts to ``--out``. JSON outputs embed the resolved config and are
byte-identical for identical inputs; timings go to ``run.log``.

Exit codes: 0 success, 2 configuration error, 3 solver did not converge
(artifacts are still written), 4 certificate failed.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import barrier, convex, liouville, solver
from .discrete import Grid, ScalarField, read_field_csv, write_field_csv
from .energy import EnergyModel
from .errors import ArtifactError, NotConverged

__all__ = ["main", "DEFAULTS", "resolve_config"]

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_CERTIFICATE = 0, 2, 3, 4

logger = logging.getLogger(__name__)

_ORACLE_SOURCE = {
    "type": "oracle1d",
    "model": {"b": 1.0, "p": 2.0},
    "grid": {"lower": [-1.0], "upper": [1.0], "extents": [1024]},
    "f": -1.0,
    "anchor_flux": 0.0,
    "u_left": 0.0,
}

DEFAULTS: dict = {
    "solve": {
        "model": {"b": 1.0, "p": 2.0, "variant": "standard", "anisotropy": None},
        "grid": {"lower": [-1.0], "upper": [1.0], "extents": [256]},
        "f": -1.0,
        "dirichlet": {"type": "oracle1d", "u_left": 0.0, "u_right": 0.5},
        "options": {"tol_primal": 1e-6, "tol_residual": 1e-6},
    },
    "oracle1d": {
        "model": {"b": 1.0, "p": 2.0},
        "grid": {"lower": [-1.0], "upper": [1.0], "extents": [1024]},
        "f": -1.0,
        "anchor_flux": 0.0,
        "u_left": 0.0,
        "u_right": None,
    },
    "facet": {"source": _ORACLE_SOURCE, "tol": None},
    "blowup": {
        "source": _ORACLE_SOURCE,
        "x0": [0.0],
        "scales": None,
        "window_radius": 1.0,
        "window_points": 201,
    },
    "barrier": {
        "variant": "exponential",
        "context": {"b": 1.0, "p": 2.0, "c": [1.0, 0.0], "m": 1.0, "R": 1.0, "center": None,
                    "anisotropy": None},
        "alpha": None,
        "samples": 10_000,
        "seed": 0,
    },
    "certify": {
        "candidate": {"kind": "type2", "t1": 1.0, "t2": 1.0, "l0": 1.0, "n": 2},
        "model": {"b": 1.0, "p": 2.0, "variant": "standard", "anisotropy": None},
        "d": None,
        "crosscheck_resolution": None,
    },
}


class ConfigError(Exception):
    """Invalid or unreadable configuration."""


# --- config handling ---------------------------------------------------------------------


def _merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _set_model_param(cfg: dict, key: str, value) -> None:
    for section in ("model", "context"):
        if section in cfg:
            cfg[section][key] = value
    if "source" in cfg and "model" in cfg["source"]:
        cfg["source"]["model"][key] = value


def resolve_config(command: str, path: str | None, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then command-line overrides."""
    cfg = copy.deepcopy(DEFAULTS[command])
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data.pop("command", None)
        unknown = set(data) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg = _merge(cfg, data)
    for key in ("b", "p"):
        if getattr(args, key, None) is not None:
            _set_model_param(cfg, key, getattr(args, key))
    for key in ("t1", "t2", "l0"):
        if getattr(args, key, None) is not None and "candidate" in cfg:
            cfg["candidate"][key] = getattr(args, key)
    if args.R is not None and "context" in cfg:
        cfg["context"]["R"] = args.R
    if args.d is not None and "d" in cfg:
        cfg["d"] = args.d
    if args.samples is not None and "samples" in cfg:
        cfg["samples"] = args.samples
    if args.seed is not None and "seed" in cfg:
        cfg["seed"] = args.seed
    if args.alpha is not None and "alpha" in cfg:
        cfg["alpha"] = args.alpha
    if args.variant is not None and "variant" in cfg:
        cfg["variant"] = args.variant
    if args.kind is not None and "candidate" in cfg:
        cfg["candidate"]["kind"] = args.kind
    return cfg


def _model(spec: dict) -> EnergyModel:
    if spec.get("variant", "standard") == "generalized":
        return EnergyModel.generalized(spec["b"], spec["p"], np.asarray(spec["anisotropy"], float))
    return EnergyModel(float(spec["b"]), float(spec["p"]))


def _grid(spec: dict) -> Grid:
    """Grid from ``{lower, upper, extents}`` or ``{extents, spacing, origin}``."""
    if "spacing" in spec:
        return Grid.from_dict(spec)
    return Grid.on_box(spec["lower"], spec["upper"], spec["extents"])


def _node_table(grid: Grid, spec) -> np.ndarray:
    """Node values from a constant, ``{"values": nested list}`` or ``{"csv": path}``."""
    if isinstance(spec, (int, float)):
        return np.full(grid.shape, float(spec))
    if isinstance(spec, dict) and "values" in spec:
        vals = np.asarray(spec["values"], float)
        if vals.shape != grid.shape:
            raise ConfigError(f"value table of shape {vals.shape} does not fit grid nodes {grid.shape}")
        return vals
    if isinstance(spec, dict) and "csv" in spec:
        field = read_field_csv(spec["csv"])
        if not isinstance(field, ScalarField) or field.grid != grid:
            raise ConfigError("CSV table must be a scalar field on the configured grid")
        return field.values
    raise ConfigError(f"cannot interpret node table {spec!r}")


def _source_f(grid: Grid, value) -> ScalarField:
    return ScalarField(grid, _node_table(grid, value))


def _oracle(spec: dict) -> solver.OracleSolution:
    model, grid = _model(spec["model"]), _grid(spec["grid"])
    if grid.dim != 1:
        raise ConfigError("oracle problems are one-dimensional")
    if not isinstance(spec["f"], (int, float)):
        raise ConfigError("oracle problems take a constant source f")
    f = float(spec["f"])

    def fun(x):
        return np.full_like(x, f)

    if spec.get("u_right") is not None:
        return solver.oracle_dirichlet_1d(model, grid, fun, spec["u_left"], spec["u_right"])
    return solver.oracle_solve_1d(model, grid, fun, spec["anchor_flux"], spec.get("u_left", 0.0))


def _field_source(spec: dict) -> ScalarField:
    if spec["type"] == "oracle1d":
        return _oracle(spec).u
    if spec["type"] == "csv":
        field = read_field_csv(spec["path"])
        if not isinstance(field, ScalarField):
            raise ConfigError("source CSV must hold a scalar field")
        return field
    raise ConfigError(f"unknown source type {spec['type']!r}")


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --- commands --------------------------------------------------------------------------------


def _prepare_solve(cfg: dict):
    model, grid = _model(cfg["model"]), _grid(cfg["grid"])
    f = _source_f(grid, cfg["f"])
    bc = cfg["dirichlet"]
    oracle = None
    if bc["type"] == "oracle1d":
        oracle = _oracle({"model": cfg["model"], "grid": cfg["grid"], "f": cfg["f"],
                          "u_left": bc["u_left"], "u_right": bc["u_right"]})
        data = oracle.u
    elif bc["type"] == "affine":
        slope = np.asarray(bc["slope"], float)
        if slope.shape != (grid.dim,):
            raise ConfigError("affine slope needs one entry per axis")
        coords = grid.coords()
        data = ScalarField(grid, np.tensordot(slope, coords, axes=1) + float(bc.get("offset", 0.0)))
    elif bc["type"] == "table":
        data = ScalarField(grid, _node_table(grid, bc["table"]))
    else:
        raise ConfigError(f"unknown dirichlet type {bc['type']!r}")
    opts = solver.SolveOptions.from_dict(cfg["options"])
    return solver.ProblemInstance(model, grid, f, data), opts, oracle


def cmd_solve(cfg: dict, out: Path) -> int:
    instance, opts, oracle = _prepare_solve(cfg)
    pair = solver.solve(instance, opts)
    write_field_csv(pair.u, out / "u.csv")
    write_field_csv(pair.Z, out / "z.csv")
    payload = {
        "config": cfg,
        "converged": pair.converged,
        "iterations": pair.iterations,
        "levels": pair.levels,
        "residual": pair.residual_report.to_dict(),
        "weak_residual_max": pair.residual_report.weak_residual_max,
    }
    if oracle is not None:
        payload["max_error_vs_oracle"] = float(np.abs(pair.u.values - oracle.u.values).max())
    _dump(out / "residual.json", _jsonable(payload))
    return EXIT_OK if pair.converged else EXIT_NOT_CONVERGED


def cmd_oracle1d(cfg: dict, out: Path) -> int:
    orc = _oracle(cfg)
    write_field_csv(orc.u, out / "u.csv")
    write_field_csv(orc.Z, out / "z.csv")
    model, grid = _model(cfg["model"]), orc.grid
    instance = solver.ProblemInstance(model, grid, _source_f(grid, cfg["f"]), orc.u)
    report = solver.weak_residual(orc, instance)
    facet = orc.facet_interval()
    _dump(out / "oracle.json", _jsonable({
        "config": cfg,
        "anchor_flux": orc.anchor_flux,
        "facet_interval": None if facet is None else list(facet),
        "residual": report.to_dict(),
    }))
    return EXIT_OK


def cmd_facet(cfg: dict, out: Path) -> int:
    u = _field_source(cfg["source"])
    report = convex.facet_detect(u, cfg["tol"])
    write_field_csv(ScalarField(u.grid, report.facet_mask.astype(float)), out / "facet_mask.csv")
    _dump(out / "facet.json", _jsonable({"config": cfg, "facet": report.to_dict()}))
    return EXIT_OK


def cmd_blowup(cfg: dict, out: Path) -> int:
    u = _field_source(cfg["source"])
    seq = convex.blow_up(u, cfg["x0"], cfg["scales"], cfg["window_radius"], cfg["window_points"])
    rows = np.column_stack([np.arange(seq.deviations.size), seq.scales[:-1], seq.scales[1:], seq.deviations])
    np.savetxt(out / "deviations.csv", rows, fmt="%.17g", delimiter=",",
               header="index,scale,next_scale,deviation", comments="")
    _dump(out / "blowup.json", _jsonable({"config": cfg, "blowup": seq.to_dict()}))
    return EXIT_OK


def cmd_barrier(cfg: dict, out: Path) -> int:
    ctx_cfg = cfg["context"]
    model = None
    if ctx_cfg.get("anisotropy") is not None:
        model = EnergyModel.generalized(ctx_cfg["b"], ctx_cfg["p"], np.asarray(ctx_cfg["anisotropy"], float))
    ctx = barrier.BarrierContext(ctx_cfg["b"], ctx_cfg["p"], ctx_cfg["c"], ctx_cfg["m"], ctx_cfg["R"],
                                 ctx_cfg.get("center"), model)
    if cfg["variant"] in ("exponential", "exp"):
        spec = barrier.construct_exponential(ctx)
    elif cfg["variant"] == "power":
        spec = barrier.construct_power(ctx)
    else:
        raise ConfigError(f"unknown barrier variant {cfg['variant']!r}")
    if cfg["alpha"] is not None:
        spec = spec.with_alpha(cfg["alpha"])
    cert = barrier.verify_barrier(spec, int(cfg["samples"]), int(cfg["seed"]))
    _dump(out / "certificate.json", _jsonable({"config": cfg, **cert.to_dict()}))
    return EXIT_OK if cert.passed else EXIT_CERTIFICATE


def cmd_certify(cfg: dict, out: Path) -> int:
    c = cfg["candidate"]
    cand = liouville.PLCandidate(c["kind"], float(c["t1"]), float(c.get("t2", 1.0)),
                                 float(c.get("l0", 1.0)), int(c.get("n", 2)))
    cert = liouville.certify(cand, _model(cfg["model"]), cfg["d"], cfg["crosscheck_resolution"])
    _dump(out / "certificate.json", _jsonable({"config": cfg, **cert.to_dict()}))
    return EXIT_OK if cert.verdict == "not_weak_solution" else EXIT_CERTIFICATE


COMMANDS = {
    "solve": cmd_solve,
    "oracle1d": cmd_oracle1d,
    "facet": cmd_facet,
    "blowup": cmd_blowup,
    "barrier": cmd_barrier,
    "certify": cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, help="seed for sampling")
    parser.add_argument("--samples", type=int, help="barrier sample count")
    for name in ("b", "p", "t1", "t2", "l0", "R", "d", "alpha"):
        parser.add_argument(f"--{name}", type=float)
    parser.add_argument("--variant", help="barrier variant: exponential or power")
    parser.add_argument("--kind", help="candidate kind: type1, type2 or type3")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = resolve_config(args.command, args.config, args)
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        code = COMMANDS[args.command](cfg, out)
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ConfigError, ArtifactError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    elapsed = time.perf_counter() - start
    with open(out / "run.log", "a") as log:
        log.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {args.command} exit={code} elapsed={elapsed:.3f}s\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
