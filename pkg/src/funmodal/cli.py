"""Command line pipeline: simulate, reconstruct, scan, cluster.

Exit status is 0 on success, 2 for unusable input (missing or malformed files,
bad configuration) and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .density import make_model
from .errors import FunModalError, InputFormatError, NumericalError
from .flow import AscentOptions, modal_clustering
from .grid import CurveSample, Grid
from .io import read_curve_csv, write_curve_csv, write_labels_csv
from .kernels import KERNELS
from .reconstruction import Observations, SmootherSpec, default_bandwidth, phi_plugin, reconstruct_sample
from .significance import ThresholdInputs, classify, resolve_M, scan_h
from .simgen import Component, MixtureSpec, observe_noisy, sample_mixture, sin_basis, two_component_spec

log = logging.getLogger("funmodal")

DEFAULTS = {
    "input": None,
    "output_dir": ".",
    "kernel": "exponential",
    "h": None,
    "h_grid": None,
    "alpha": 0.05,
    "M": None,
    "covering": 1.0,
    "phi_m": None,
    "c_phi": None,
    "c_b": 1.0,
    "boundary": "renormalize",
    "eval_m": None,
    "method": "mean_shift",
    "step": None,
    "tol_grad": None,
    "tol_step": 1e-9,
    "max_iter": 10_000,
    "backtrack": True,
    "merge_radius": None,
    "seed": 0,
    "n": 200,
    "m": 101,
    "separation": 2.0,
    "std": 0.15,
    "components": None,
    "sigma": None,
}


class ConfigError(InputFormatError):
    pass


def load_config(path=None, overrides=None) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object of key/value pairs")
        unknown = sorted(set(raw) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        cfg.update(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg["kernel"] not in KERNELS:
        raise ConfigError(f"kernel must be one of {sorted(KERNELS)}, got {cfg['kernel']!r}")
    for key in ("h", "alpha", "M", "phi_m", "c_phi", "c_b", "step", "tol_grad", "tol_step",
                "merge_radius", "sigma", "separation", "std", "covering"):
        val = cfg[key]
        if val is None:
            continue
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ConfigError(f"{key} must be a finite number, got {val!r}")
    if cfg["h_grid"] is not None:
        grid = cfg["h_grid"]
        if isinstance(grid, str):
            try:
                grid = [float(v) for v in grid.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"h_grid must be a comma separated list of numbers") from None
        if not isinstance(grid, list) or not grid:
            raise ConfigError("h_grid must be a nonempty list of numbers")
        if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in grid):
            raise ConfigError("h_grid must hold numbers only")
        if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("h_grid must be positive and strictly increasing")
        cfg["h_grid"] = [float(v) for v in grid]
    for key in ("seed", "n", "m", "max_iter"):
        if isinstance(cfg[key], bool) or not isinstance(cfg[key], int):
            raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}")


def _ascent_options(cfg: dict) -> AscentOptions:
    try:
        return AscentOptions(method=cfg["method"], step=cfg["step"], tol_grad=cfg["tol_grad"],
                             tol_step=cfg["tol_step"], max_iter=cfg["max_iter"],
                             backtrack=bool(cfg["backtrack"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_sample(cfg: dict) -> CurveSample:
    if not cfg["input"]:
        raise ConfigError("an --input file is required")
    grid, values, ids, _ = read_curve_csv(cfg["input"])
    return CurveSample(grid, values, ids=ids).shifted()


def _phi_m(cfg: dict, m: int):
    if cfg["phi_m"] is not None:
        return float(cfg["phi_m"]), "given"
    if cfg["c_phi"] is not None:
        return phi_plugin(m, cfg["c_phi"]), "plugin"
    return None, None


def _threshold_inputs(cfg: dict, sample: CurveSample, constants) -> tuple:
    M, provenance = resolve_M(sample, cfg["M"])
    if M <= 0:
        # all curves identically zero after the shift
        M = 1e-12
    phi, phi_source = _phi_m(cfg, sample.grid.m)
    inputs = ThresholdInputs(sample.n, M, float(cfg["alpha"]), constants, phi_m=phi,
                             covering=float(cfg["covering"]))
    return inputs, provenance, phi_source


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_cluster(cfg: dict) -> int:
    sample = _load_sample(cfg)
    if cfg["h"] is None:
        raise ConfigError("cluster needs a bandwidth h (run 'scan' to choose one)")
    model = make_model(sample, cfg["kernel"], float(cfg["h"]))
    clustering = modal_clustering(model, _ascent_options(cfg), cfg["merge_radius"])
    inputs, provenance, phi_source = _threshold_inputs(cfg, sample, model.constants)
    report = classify(clustering.modeset, inputs)
    out = _out_dir(cfg)
    write_labels_csv(out / "labels.csv", sample.ids, clustering.labels)
    modes = clustering.modeset
    write_curve_csv(out / "modes.csv", sample.grid,
                    np.array([c.values for c in modes.curves]).reshape(len(modes), sample.grid.m),
                    ids=[f"mode_{i}" for i in range(len(modes))])
    payload = report.to_dict()
    payload.update({
        "command": "cluster",
        "config": cfg,
        "kernel": model.kernel.name,
        "m": sample.grid.m,
        "h": model.h,
        "M_provenance": provenance,
        "phi_m_provenance": phi_source,
        "merge_radius": modes.merge_radius,
        "n_modes": len(modes),
        "n_significant": report.n_significant,
        "non_max_critical_points": len(modes.non_max),
        "unconverged": [sample.ids[i] for i in clustering.unconverged],
        "cluster_sizes": np.bincount(clustering.labels, minlength=len(modes)).tolist(),
    })
    _write_json(out / "report.json", payload)
    print(f"{len(modes)} mode(s), {report.n_significant} significant; "
          f"threshold {report.threshold:.4g}; wrote {out}")
    return 0


def cmd_scan(cfg: dict) -> int:
    sample = _load_sample(cfg)
    h_grid = cfg["h_grid"] or ([float(cfg["h"])] if cfg["h"] is not None else None)
    if not h_grid:
        raise ConfigError("scan needs h_grid (or a single h)")
    first = make_model(sample, cfg["kernel"], h_grid[0])
    inputs, provenance, phi_source = _threshold_inputs(cfg, sample, first.constants)
    table = scan_h(sample, cfg["kernel"], h_grid, inputs, _ascent_options(cfg))
    out = _out_dir(cfg)
    lines = ["h,modes,significant,recommended"]
    for r in table.rows:
        lines.append(f"{r.h!r},{r.n_modes},{r.n_significant},{int(r.recommended)}")
    (out / "scan.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "scan.json", {
        "command": "scan",
        "config": cfg,
        "n": sample.n,
        "m": sample.grid.m,
        "alpha": inputs.alpha,
        "M": inputs.M,
        "M_provenance": provenance,
        "phi_m": inputs.phi_m,
        "phi_m_provenance": phi_source,
        "recommended_h": table.recommended_h,
        "rule": table.rule,
        "rows": [
            {"h": r.h, "modes": r.n_modes, "significant": r.n_significant,
             "threshold": r.threshold, "densities": list(r.densities),
             "deltas": list(r.deltas), "recommended": r.recommended}
            for r in table.rows
        ],
    })
    print(f"recommended h = {table.recommended_h:.6g} ({table.rule}); wrote {out}")
    return 0


def _mixture_spec(cfg: dict, grid: Grid) -> MixtureSpec:
    comps = cfg["components"]
    if comps is None:
        return two_component_spec(grid, cfg["separation"], cfg["std"], cfg["seed"])
    try:
        parsed = tuple(Component(tuple(c["mean"]), tuple(c["std"]), float(c["weight"]))
                       for c in comps)
        return MixtureSpec(sin_basis(len(parsed[0].mean), grid), parsed, cfg["seed"])
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"bad mixture components: {exc}") from None


def cmd_simulate(cfg: dict) -> int:
    grid = Grid(cfg["m"])
    spec = _mixture_spec(cfg, grid)
    sim = sample_mixture(spec, cfg["n"])
    sigma = cfg["sigma"]
    if sigma is None:
        print("notice: sigma not set, observations are noise-free (sigma = 0)", file=sys.stderr)
        sigma = 0.0
    noise_seed = cfg["seed"] + 1
    obs = observe_noisy(sim.sample, sigma, noise_seed)
    header = [f"seed={cfg['seed']}", f"noise_seed={noise_seed}", f"sigma={sigma!r}"]
    out = _out_dir(cfg)
    write_curve_csv(out / "curves.csv", grid, sim.sample.values, sim.sample.ids, header)
    write_curve_csv(out / "observations.csv", grid, obs.values, obs.ids, header)
    write_curve_csv(out / "means.csv", grid, np.array([c.values for c in sim.mean_curves]),
                    [f"mean_{k}" for k in range(len(sim.mean_curves))], header)
    write_labels_csv(out / "labels.csv", sim.sample.ids, sim.labels, header)
    print(f"simulated {cfg['n']} curves on m={cfg['m']}; wrote {out}")
    return 0


def cmd_reconstruct(cfg: dict) -> int:
    if not cfg["input"]:
        raise ConfigError("an --input file is required")
    grid, values, ids, _ = read_curve_csv(cfg["input"])
    obs = Observations(grid, values, sigma=cfg["sigma"], ids=ids)
    b = default_bandwidth(grid.m, cfg["c_b"])
    try:
        spec = SmootherSpec(b=b, boundary=cfg["boundary"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    eval_grid = Grid(cfg["eval_m"]) if cfg["eval_m"] else grid
    rec = reconstruct_sample(obs, spec, eval_grid)
    out = _out_dir(cfg)
    write_curve_csv(out / "reconstructed.csv", eval_grid, rec.values, rec.ids,
                    [f"b={b!r}", f"boundary={spec.boundary}"])
    print(f"reconstructed {obs.n} curves with b={b:.4g}; wrote {out}")
    return 0


COMMANDS = {
    "cluster": cmd_cluster,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funmodal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file of key/value settings")
        p.add_argument("--input")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--kernel", choices=sorted(KERNELS))
        p.add_argument("--h", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--M", type=float)
        p.add_argument("--seed", type=int)
        if name == "scan":
            p.add_argument("--h-grid", dest="h_grid", help="comma separated increasing bandwidths")
        if name == "simulate":
            p.add_argument("--n", type=int)
            p.add_argument("--m", type=int)
            p.add_argument("--sigma", type=float)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FunModalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
