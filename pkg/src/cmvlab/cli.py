"""Command line entry point: ``cmvlab <subcommand> --config FILE --seed N --out DIR``.

Each run writes ``<name>.csv`` (data) and ``<name>.json`` (metadata: config
echo and hash, seed, versions, runtime, summary values).  Data files depend
only on the config and seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .cocycle import lyapunov_grid
from .config import COMMANDS, ConfigError, build_sampling, build_system, load_config
from .conformal import arc_length_of_side, fit_arc_params, map_table, side_endpoints, TriangleMapParams
from .dynamics import BernoulliShift, SubstitutionSubshift, boshernitzan_index, orbit_sample
from .perturbation import op_norm_bound_check
from .schur import m_gamma_sides
from .spectral import ArcSet, dos_estimate, kotani_zero_measure, spectrum_arcs, thouless_check
from .verblunsky import DomainError, VerblunskySequence, assemble_extended, assemble_standard

RECORD_ERRORS = (ValueError, ArithmeticError, RuntimeError)


class Result:
    def __init__(self, header, rows, meta=None, failed=0, extra=None):
        self.header = header
        self.rows = rows
        self.meta = meta or {}
        self.failed = failed
        self.extra = extra or {}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _world(cfg):
    system = build_system(cfg.system)
    return system, build_sampling(cfg.sampling, system)


# -- subcommands ------------------------------------------------------------


def run_assemble(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    n = p.get("n", 6)
    kind = p.get("kind", "extended")
    rng = np.random.default_rng(cfg.seed)
    if kind == "standard":
        (omega,) = system.random_points(rng, 1, (0, n))
        seq = orbit_sample(system, omega, f, (0, n))
        br = p.get("boundary_right")
        w = assemble_standard(seq, n, br)
    elif kind == "extended":
        first = p.get("first", 0)
        (omega,) = system.random_points(rng, 1, (first - 1, first + n))
        seq = orbit_sample(system, omega, f, (first - 1, first + n))
        w = assemble_extended(seq, (first, first + n - 1), (p.get("boundary_left", 1.0), p.get("boundary_right", 1.0)))
    else:
        raise ConfigError(f"unknown kind {kind!r}; expected extended or standard")
    rows = []
    for i in range(w.size):
        for j in range(max(0, i - 2), min(w.size, i + 3)):
            v = w.entry(i, j)
            rows.append((w.first + i, w.first + j, v.real, v.imag))
    meta = {"size": w.size, "sites": list(w.sites), "decoupled": w.decoupled}
    if w.decoupled:
        meta["unitarity_defect"] = w.unitarity_defect()
    return Result(["row", "col", "re", "im"], rows, meta)


def run_lyapunov(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    grid = p.get("grid", 64)
    radii = p.get("radii", [1.0])
    conv = p.get("convention", "A")
    ang = 2.0 * np.pi * np.arange(grid) / grid
    zs = np.concatenate([r * np.exp(1j * ang) for r in radii])
    res = lyapunov_grid(system, f, zs, p.get("steps", 10**4), p.get("samples", 4), conv, cfg.seed, threads)
    rows = [(r.z.real, r.z.imag, r.gamma, r.stderr, r.error) for r in res]
    failed = sum(1 for r in res if r.error)
    return Result(["z_re", "z_im", "gamma", "stderr", "error"], rows, {"convention": conv, "points": len(rows)}, failed)


def run_dos(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    est = dos_estimate(system, f, p.get("n", 1000), p.get("samples", 10), p.get("bins", 256), cfg.seed)
    h = est.histogram
    rows = list(zip(h.edges[:-1], h.edges[1:], h.masses))
    return Result(["left", "right", "mass"], rows, {"rho_inf": est.rho_inf, "count": h.count})


def run_thouless(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    rows, failed = [], 0
    for z in p.get("z", [1.5 + 0j]):
        try:
            c = thouless_check(system, f, z, p.get("n_dos", 1000), p.get("n_cocycle", 10**5),
                               p.get("dos_samples", 1), p.get("cocycle_samples", 4), p.get("bins", 4096), cfg.seed)
            rows.append((z.real, z.imag, c.gamma, c.gamma_stderr, c.rhs, c.residual, ""))
        except RECORD_ERRORS as exc:
            failed += 1
            rows.append((z.real, z.imag, math.nan, math.nan, math.nan, math.nan, str(exc)))
    return Result(["z_re", "z_im", "gamma", "stderr", "rhs", "residual", "error"], rows, {}, failed)


def run_spectrum(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    n = p.get("n", 1000)
    eps = p.get("eps", 10.0 / n)
    arcs = spectrum_arcs(system, f, n, p.get("samples", 1), eps, cfg.seed)
    return Result(["start", "end"], list(arcs.arcs), {"measure": arcs.measure, "eps": eps, "arcs": len(arcs.arcs)})


def _arc_from(p):
    if "arc_start" in p or "arc_end" in p:
        if "arc_start" not in p or "arc_end" not in p:
            raise ConfigError("give both arc_start and arc_end")
        return ArcSet.from_pairs([(p["arc_start"], p["arc_end"])])
    return ArcSet.full()


def run_kotani(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    est = kotani_zero_measure(system, f, _arc_from(p), p.get("grid", 256), p.get("steps", 10**4), p.get("tau"),
                              p.get("samples", 2), cfg.seed, threads)
    rows = list(zip(est.angles, est.widths, est.gammas, est.stderrs, est.mask))
    failed = int(np.sum(~np.isfinite(est.gammas)))
    return Result(["angle", "width", "gamma", "stderr", "below"], rows, {"measure": est.measure, "tau": est.tau},
                  failed)


def run_mfun(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    rows, failed = [], 0
    for z in p.get("z", [0.5 + 0j]):
        try:
            c = m_gamma_sides(system, f, z, p.get("depth", 400), p.get("samples", 10**4), steps=p.get("steps", 10**5),
                              seed=cfg.seed)
            rows.append((z.real, z.imag, c.mean_log_m, c.log_z_minus_gamma, c.gamma, c.residual, ""))
        except RECORD_ERRORS as exc:
            failed += 1
            rows.append((z.real, z.imag, math.nan, math.nan, math.nan, math.nan, str(exc)))
    return Result(["z_re", "z_im", "mean_log_m", "log_z_minus_gamma", "gamma", "residual", "error"], rows, {}, failed)


def _perturbed(rng, values, delta):
    if delta == 0:
        return values.copy()
    d = delta * np.sqrt(rng.uniform(0, 1, values.size)) * np.exp(2j * np.pi * rng.uniform(0, 1, values.size))
    out = values + d
    bad = np.abs(out) >= 0.999
    out[bad] = values[bad] + d[bad] * 0.5 * (0.999 - np.abs(values[bad])) / np.abs(d[bad])
    return out


def run_perturb(cfg, threads):
    system, f = _world(cfg)
    p = cfg.params
    delta = p.get("delta", 0.1)
    if delta < 0:
        raise ConfigError("'delta' must be non-negative")
    rows, records, failed = [], [], 0
    for n in p.get("n", [50]):
        for t in range(p.get("trials", 10)):
            rng = np.random.default_rng([cfg.seed, n, t])
            (omega,) = system.random_points(rng, 1, (0, n))
            a = orbit_sample(system, omega, f, (0, n)).values
            b = _perturbed(rng, a, delta)
            try:
                r = op_norm_bound_check(VerblunskySequence(0, a), VerblunskySequence(0, b), (0, n - 1), spectra=True)
            except RECORD_ERRORS as exc:
                failed += 1
                rows.append((n, t, math.nan, math.nan, math.nan, math.nan, 0, str(exc)))
                continue
            rows.append((n, t, r.sup_distance, r.op_norm, r.bound, r.hausdorff, r.holds and r.spectral_holds, ""))
            records.append(r.to_json())
    header = ["n", "trial", "sup_distance", "op_norm", "bound", "hausdorff", "holds", "error"]
    violations = sum(1 for r in rows if not r[6] and not r[7])
    return Result(header, rows, {"violations": violations}, failed, {"jsonl": "\n".join(records) + "\n"})


def run_scmap(cfg, threads):
    p = cfg.params
    if "arc_start" in p or "arc_end" in p:
        if "ell" in p:
            raise ConfigError("give either ell or an arc, not both")
        params = fit_arc_params((p.get("arc_start", 0.0), p.get("arc_end", 0.0)))
    else:
        params = TriangleMapParams(p.get("ell", 1.0))
    k = p.get("points", 64)
    theta = 2.0 * np.pi * (np.arange(k) + 0.5) / k
    table = map_table(params, np.concatenate([[0.0], np.exp(1j * theta)]))
    rows = [(c[0].real, c[0].imag, c[1].real, c[1].imag, c[2].real, c[2].imag) for c in table]
    e1, e2 = side_endpoints(params)
    meta = {"ell": params.ell, "theta_prime": params.theta_prime,
            "endpoints": [[e1.real, e1.imag], [e2.real, e2.imag]],
            "arc_length": arc_length_of_side(params.ell), "arc_length_over_pi": arc_length_of_side(params.ell) / np.pi}
    return Result(["zeta_re", "zeta_im", "w_re", "w_im", "z_re", "z_im"], rows, meta)


def run_boshernitzan(cfg, threads):
    system, _ = _world(cfg)
    if not isinstance(system, (SubstitutionSubshift, BernoulliShift)):
        raise ConfigError("boshernitzan needs a symbolic system")
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for n in p.get("n", [1, 2, 3, 5, 8]):
        rows.append((n, boshernitzan_index(system, n, p.get("length"), rng)))
    return Result(["n", "index"], rows, {})


RUNNERS = {
    "assemble": run_assemble,
    "lyapunov": run_lyapunov,
    "dos": run_dos,
    "thouless": run_thouless,
    "spectrum": run_spectrum,
    "kotani": run_kotani,
    "mfun": run_mfun,
    "perturb": run_perturb,
    "scmap": run_scmap,
    "boshernitzan": run_boshernitzan,
}


def versions() -> dict:
    import scipy

    try:
        from importlib.metadata import version

        own = version("cmvlab")
    except Exception:
        own = "unknown"
    return {"cmvlab": own, "kernel_backend": kernels.BACKEND, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def run(cfg, out_dir, threads: int = 1) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = RUNNERS[cfg.command](cfg, threads)
    elapsed = time.perf_counter() - t0
    stem = cfg.name
    files = {"data": f"{stem}.csv"}
    with open(out / files["data"], "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(res.header, res.rows))
    if "jsonl" in res.extra:
        files["records"] = f"{stem}.jsonl"
        with open(out / files["records"], "w", encoding="utf-8", newline="") as fh:
            fh.write(res.extra["jsonl"])
    sidecar = {
        "config": cfg.echo(),
        "config_sha256": cfg.digest,
        "seed": cfg.seed,
        "threads": threads,
        "versions": versions(),
        "runtime_seconds": elapsed,
        "files": files,
        "records": len(res.rows),
        "failed_records": res.failed,
        "results": _jsonable(res.meta),
    }
    with open(out / f"{stem}.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + "\n")
    if res.rows and res.failed >= len(res.rows):
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cmvlab", description="Numerical experiments with extended CMV matrices.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI experiment config")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for grid experiments")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.command, args.seed)
        return run(cfg, args.out, args.threads)
    except (ConfigError, DomainError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RECORD_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
