"""Command-line front end: ``wavesieve <command> --config cfg.json [--out path]``.

Exit codes: 0 success, 1 numerical or check failure, 2 configuration error.
Reports are JSON, tables are CSV with 17 significant digits; progress and
summaries go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("wavesieve")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


# ----------------------------------------------------------------------------- config helpers

_NUM = (int, float)


def _validate(cfg, required: dict, optional: dict | None = None, where: str = "config") -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be a JSON object")
    optional = optional or {}
    unknown = set(cfg) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = set(required) - set(cfg)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")
    for key, typ in {**required, **optional}.items():
        if key in cfg and typ is not None:
            val = cfg[key]
            allowed = typ if isinstance(typ, tuple) else (typ,)
            if (isinstance(val, bool) and bool not in allowed) or not isinstance(val, typ):
                raise ConfigError(f"{where}.{key} has the wrong type")
    return cfg


def _point(v, where) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, _NUM) for t in v):
        if v[1] <= 0:
            raise ConfigError(f"{where}: points need s > 0")
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: points are [x, s] pairs")


def _points(cfg, key="points") -> np.ndarray:
    pts = cfg[key]
    if not isinstance(pts, list) or not pts:
        raise ConfigError(f"{key} must be a nonempty list of [x, s] pairs")
    return np.array([_point(p, key) for p in pts])


def _wavelet(obj, where="wavelet"):
    from .wavelets import WaveletIndex
    _validate(obj, {"n": int, "alpha": _NUM}, where=where)
    try:
        return WaveletIndex(obj["n"], obj["alpha"])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _grid(obj):
    from .hyperbolic import make_grid
    try:
        return make_grid(obj)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _primitives(items):
    from .hyperbolic import primitive_from_json
    if not isinstance(items, list):
        raise ConfigError("region must be a list of primitives")
    try:
        return [primitive_from_json(p) for p in items]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"region: {exc}") from exc


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(path, header_comment: str, columns, rows):
    buf = io.StringIO()
    buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _emit(path, buf.getvalue())


def _emit(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "x") and hasattr(obj, "s"):
        return [float(obj.x), float(obj.s)]
    return obj


def _write_json(path, report):
    # repr-based floats round-trip exactly (at most 17 significant digits)
    _emit(path, json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------- commands


def cmd_coeff(cfg, args):
    from .wavelets import basis_coeff
    _validate(cfg, {"n": int, "m": int, "alpha": _NUM, "points": list})
    if cfg["n"] < 0 or cfg["m"] < 0 or not cfg["alpha"] > 0:
        raise ConfigError("need n, m >= 0 and alpha > 0")
    z = _points(cfg)
    v = basis_coeff(cfg["n"], cfg["m"], float(cfg["alpha"]), z)
    _write_csv(args.out, f"W_psi_n psi_m at z: n={cfg['n']} m={cfg['m']} alpha={_fmt(cfg['alpha'])}",
               ["x", "s", "re", "im"], [(p.real, p.imag, c.real, c.imag) for p, c in zip(z, np.atleast_1d(v))])
    return EXIT_OK


def cmd_kernel(cfg, args):
    from .wavelets import kernel
    _validate(cfg, {"n": int, "alpha": _NUM, "points": list}, {"z": list})
    w = _wavelet({"n": cfg["n"], "alpha": cfg["alpha"]})
    u = _points(cfg)
    if "z" in cfg:
        z = _point(cfg["z"], "z")
        vals = kernel(w, z, u)
        note = f"K(z, u) with z=({_fmt(z.real)}, {_fmt(z.imag)})"
    else:
        vals = np.array([kernel(w, p, p) for p in u])
        note = "K(u, u)"
    _write_csv(args.out, f"{note}: n={w.n} alpha={_fmt(w.alpha)}", ["x", "s", "re", "im"],
               [(p.real, p.imag, c.real, c.imag) for p, c in zip(u, np.atleast_1d(vals))])
    return EXIT_OK


def _signal(cfg, base: Path):
    from .transform import FreqSignal, atom_combination
    if "file" in cfg:
        _validate(cfg, {"file": str}, where="signal")
        return FreqSignal.load(base / cfg["file"])
    _validate(cfg, {"alpha": _NUM, "atoms": list}, {"xi_max": _NUM, "count": int}, where="signal")
    coeffs, atoms = [], []
    for k, a in enumerate(cfg["atoms"]):
        _validate(a, {"m": int}, {"location": list, "coeff": (list, int, float)}, where=f"signal.atoms[{k}]")
        loc = _point(a.get("location", [0.0, 1.0]), f"signal.atoms[{k}].location")
        c = a.get("coeff", 1.0)
        coeffs.append(complex(*c) if isinstance(c, list) else complex(c))
        atoms.append((loc, a["m"]))
    kw = {k: cfg[k] for k in ("xi_max", "count") if k in cfg}
    return atom_combination(coeffs, atoms, float(cfg["alpha"]), **kw)


def cmd_cwt(cfg, args):
    from .transform import forward_cwt
    _validate(cfg, {"wavelet": dict, "signal": dict}, {"grid": dict})
    if args.out is None:
        raise ConfigError("cwt writes a field container; pass --out")
    w = _wavelet(cfg["wavelet"])
    grid = _grid(cfg.get("grid"))
    f = _signal(cfg["signal"], args.config_dir)
    field = forward_cwt(f, w, grid, threads=args.threads)
    path = field.save(args.out)
    log.info("wrote %s (tail fraction %.3e)", path, field.tail_fraction)
    return EXIT_OK


def _mask(cfg, base: Path):
    from .hyperbolic import load_mask, mask_from_primitives
    if "mask_file" in cfg:
        return load_mask(base / cfg["mask_file"])
    return mask_from_primitives(_grid(cfg.get("grid")), _primitives(cfg.get("region", [])))


def cmd_sieve_cert(cfg, args):
    from .sieve import DEFAULT_R_SCAN, certificate
    _validate(cfg, {"wavelet": dict}, {"grid": dict, "region": list, "mask_file": str, "p": _NUM, "R_scan": list,
                                      "bisection_rounds": int})
    w = _wavelet(cfg["wavelet"])
    if not w.alpha > 1:
        raise ConfigError("certificates need alpha > 1")
    p = float(cfg.get("p", 1.0))
    if p < 1:
        raise ConfigError("p must be at least 1")
    R_scan = cfg.get("R_scan", list(DEFAULT_R_SCAN))
    if not R_scan or not all(isinstance(r, _NUM) and 0 < r < 1 for r in R_scan):
        raise ConfigError("R_scan must be a nonempty list of radii in (0, 1)")
    mask = _mask(cfg, args.config_dir)
    cert = certificate(mask, w, p, R_scan, cfg.get("bisection_rounds", 3))
    log.info("bound %.6g at R* = %.4g (kernel-refined %.6g), %s", cert.bound, cert.R_star, cert.d_refined,
             "sound" if cert.sound else "advisory")
    _write_json(args.out, cert.to_json())
    return EXIT_OK


def cmd_bounds(cfg, args):
    from .sieve import (general_lieb_bound, lieb_constant, local_lieb_bound, ramos_tilli_bound,
                        uncertainty_min_measure)
    _validate(cfg, {"alpha": _NUM, "p": _NUM}, {"measure": _NUM, "epsilon": _NUM, "general": dict})
    a, p = float(cfg["alpha"]), float(cfg["p"])
    if not a > 1 or not p > 1:
        raise ConfigError("need alpha > 1 and p > 1")
    out = {"alpha": a, "p": p}
    if "measure" in cfg:
        if cfg["measure"] < 0:
            raise ConfigError("measure must be nonnegative")
        out["measure"] = float(cfg["measure"])
        out["ramos_tilli"] = ramos_tilli_bound(out["measure"], a, p)
        if p >= 2:
            out["local_lieb"] = local_lieb_bound(out["measure"], a, p)
    if p >= 2:
        out["lieb_constant"] = lieb_constant(a, p)
    if "epsilon" in cfg:
        if not 0 < cfg["epsilon"] < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        out["uncertainty_min_measure"] = uncertainty_min_measure(float(cfg["epsilon"]), a, p)
    if "general" in cfg:
        g = _validate(cfg["general"], {"n": int}, {"alpha": _NUM, "ref_alpha": _NUM}, where="general")
        if p < 2:
            raise ConfigError("the general Lieb bound needs p >= 2")
        w = _wavelet({"n": g["n"], "alpha": g.get("alpha", a)}, where="general")
        res = general_lieb_bound(w, float(g.get("ref_alpha", a)), p)
        out["general_lieb"] = {"bound": res.bound, "l1_wavelet_side": res.l1_wavelet_side,
                               "l1_reference_side": res.l1_reference_side, "ring_fraction": res.ring_fraction}
    _write_json(args.out, out)
    return EXIT_OK


def cmd_orth_check(cfg, args):
    from .orthogonality import C_nm, double_orthogonality_residual
    from .wavelets import cross_level_orthogonality_check
    _validate(cfg, {}, {"local": list, "cross_level": list, "tolerance": _NUM})
    tol = float(cfg.get("tolerance", 1e-7)) * args.tolerance_scale
    rows, ok = [], True
    for k, item in enumerate(cfg.get("local", [])):
        _validate(item, {"n": int, "m": int, "k": int, "alpha": _NUM, "R": _NUM}, where=f"local[{k}]")
        if not 0 < item["R"] < 1 or not item["alpha"] > 0 or min(item["n"], item["m"], item["k"]) < 0:
            raise ConfigError(f"local[{k}]: need R in (0, 1), alpha > 0 and nonnegative indices")
        n, m, kk, a, R = item["n"], item["m"], item["k"], float(item["alpha"]), float(item["R"])
        res = double_orthogonality_residual(n, m, kk, a, R)
        scale = math.sqrt(C_nm(n, m, a, R) * C_nm(n, kk, a, R))
        passed = res <= tol * scale
        ok &= passed
        rows.append({**item, "C_nm": C_nm(n, m, a, R) if m == kk else 0.0, "residual": res, "passed": passed})
    cross = []
    for k, item in enumerate(cfg.get("cross_level", [])):
        _validate(item, {"B": _NUM, "n": int, "m": int, "k": int, "l": int}, where=f"cross_level[{k}]")
        try:
            r = cross_level_orthogonality_check(float(item["B"]), item["n"], item["m"], item["k"], item["l"])
        except ValueError as exc:
            raise ConfigError(f"cross_level[{k}]: {exc}") from exc
        diag = item["n"] == item["m"] and item["k"] == item["l"]
        passed = r.conclusive and (r.matched is not None if diag else abs(r.value) <= 1e-4 * args.tolerance_scale)
        ok &= passed
        cross.append({**item, "value": r.value, "tail_fraction": r.tail_fraction, "conclusive": r.conclusive,
                      "candidates": r.candidates, "matched": r.matched, "passed": passed})
    _write_json(args.out, {"local": rows, "cross_level": cross, "tolerance": tol, "passed": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_recover(cfg, args):
    from .recovery import RecoveryError, field_error, l1_recover, problem_from_json, synthesize
    try:
        problem, truth = problem_from_json(cfg, base_dir=args.config_dir)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"problem: {exc}") from exc
    try:
        res = l1_recover(problem)
    except RecoveryError as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    report = res.to_json()
    report["atoms"] = len(problem.dictionary)
    if truth is not None:
        report["field_error"] = field_error(res.coeffs, truth, problem)
        report["truth_objective"] = float(np.sum(np.abs(synthesize(truth, problem).values) * problem.grid.weights))
    if args.out is not None:
        out = Path(args.out)
        synthesize(res.coeffs, problem).save(out.with_name(out.stem + "_field"))
    _write_json(args.out, report)
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_selftest(cfg, args):
    from . import selftest
    _validate(cfg, {}, {"criteria": list})
    nums = cfg.get("criteria") or sorted(selftest.CHECKS)
    bad = [k for k in nums if k not in selftest.CHECKS]
    if bad:
        raise ConfigError(f"unknown criteria {bad}")
    results = []
    for k in nums:
        r = selftest.run_check(k, args.tolerance_scale)
        log.info("%s", r.line())
        results.append(r.to_json())
    ok = all(r["passed"] for r in results)
    _write_json(args.out, {"passed": ok, "results": results})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "coeff": cmd_coeff, "kernel": cmd_kernel, "cwt": cmd_cwt, "sieve-cert": cmd_sieve_cert,
    "bounds": cmd_bounds, "orth-check": cmd_orth_check, "recover": cmd_recover, "selftest": cmd_selftest,
}

# commands that run without a config file
_CONFIG_OPTIONAL = {"selftest"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavesieve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=name not in _CONFIG_OPTIONAL)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--tolerance-scale", type=float, default=1.0)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _set_threads(n: int):
    import warnings

    import numba
    # numba falls back from an old TBB on its own; the notice is noise on a CLI
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if not args.tolerance_scale > 0:
            raise ConfigError("--tolerance-scale must be positive")
        if args.config is None:
            cfg, args.config_dir = {}, Path.cwd()
        else:
            try:
                cfg = json.loads(args.config.read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed JSON in {args.config}: {exc}") from exc
            args.config_dir = args.config.parent
        _set_threads(args.threads)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # numerical failures of any kind map to exit code 1
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
