"""Command-line entry point ``dumbbell-spectra``.

Subcommands share one JSON config.  Reports are JSON with ``"schema": 1``,
traces are CSV, figures are SVG.  Exit codes: 0 ok, 2 config error,
3 numeric failure, 4 theorem violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (REPORTED_FIGURES, RectMode, find_mode, predict_limit_indices,
                       predict_nodal_counts, rect_spectrum)
from .asymptotics import (CSV_COLUMNS, eigfn_error_ratios, fit_slope, sl_targets,
                          track_branches, verdict)
from .cache import Cache, atomic_write, cache_dir, cache_key
from .config import RunConfig, load_config
from .eigen import classify_symmetry, m_orthogonality, smallest_eigenpairs
from .errors import ConfigError, DumbbellError, InsufficientData, TheoremViolation
from .fem import FeField, assemble_mass, assemble_stiffness
from .mesh import generate, refine_uniform, write_mesh
from .nodal import count_nodal_domains, deficiency, eigen_index, stability_check
from .sturm import SLGrid, analyze, branch_order, dirichlet_spectrum
from .svg import export_svg

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_THEOREM = 0, 2, 3, 4
COMMANDS = ("mesh", "solve", "sl", "predict", "sweep", "verify", "nodal")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _json_bytes(report: dict) -> bytes:
    body = {"schema": SCHEMA, **_plain(report)}
    return (json.dumps(body, indent=2, sort_keys=True) + "\n").encode()


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in _plain(list(r))])
    return buf.getvalue().encode()


# ------------------------------------------------------------------ helpers

def _target(cfg: RunConfig, need_mode: bool = False):
    """``(mu, mode)``; ``mode`` is a :class:`RectMode` or None."""
    t = cfg.target
    b = cfg.geometry.bulk
    if t.mode is None and t.mu is None:
        raise ConfigError("a target mode or mu is required for this command", "/target")
    if t.mode is not None:
        if b.kind != "rectangle":
            raise ConfigError("mode targets need a rectangle bulk", "/target/mode")
        mode = RectMode(t.mode[0], t.mode[1], b.width, b.height)
        return mode.lam, mode
    mode = None
    if b.kind == "rectangle":
        for m in rect_spectrum(b.width, b.height, 400):
            if abs(m.lam - t.mu) <= 1e-9 * max(1.0, t.mu):
                mode = m
                break
    if need_mode and mode is None:
        raise ConfigError("mu does not match a rectangle mode; give target.mode", "/target/mu")
    return float(t.mu), mode


def _mesh(cfg: RunConfig):
    spec = cfg.spec()
    m = generate(spec, cfg.mesh.h_bulk, cfg.mesh.neck_layers, seed=cfg.solver.seed)
    for _ in range(cfg.mesh.refinements):
        m = refine_uniform(m)
    return spec, m


def _solve(cfg: RunConfig, mesh, k=None):
    K = assemble_stiffness(mesh)
    M = assemble_mass(mesh)
    s = cfg.solver
    pairs = smallest_eigenpairs(K, M, min(k or s.k_eigs, mesh.n_vertices), tol=s.tol,
                                max_krylov=s.max_krylov, seed=s.seed)
    return classify_symmetry(pairs, mesh.mirror, M, K=K), K, M


# ------------------------------------------------------------------ commands

def cmd_mesh(cfg: RunConfig) -> dict:
    _, m = _mesh(cfg)
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "mesh.dbmesh"
        write_mesh(m, p)
        data = p.read_bytes()
    report = {"command": "mesh", "vertices": m.n_vertices, "triangles": m.n_triangles,
              "marked_edges": len(m.edges), "area": m.area(), "max_edge": m.max_edge_length(),
              "euler_characteristic": m.euler_characteristic(), "problems": m.problems(),
              "info": m.info}
    return {"mesh.json": _json_bytes(report), "mesh.dbmesh": data}


def cmd_solve(cfg: RunConfig) -> dict:
    _, m = _mesh(cfg)
    pairs, _, M = _solve(cfg, m)
    rows = [(p.index_1based, p.lam, p.label, p.residual, p.sym_defect) for p in pairs]
    report = {"command": "solve", "vertices": m.n_vertices,
              "eigenpairs": [{"index": r[0], "lambda": r[1], "symmetry": r[2], "residual": r[3],
                              "sym_defect": r[4]} for r in rows],
              "m_orthogonality": m_orthogonality(pairs, M)}
    files = {"solve.json": _json_bytes(report)}
    if cfg.output.emit_csv:
        files["eigenvalues.csv"] = _csv_bytes(("index", "lambda", "symmetry", "residual",
                                               "sym_defect"), rows)
    return files


def cmd_sl(cfg: RunConfig) -> dict:
    spec = cfg.spec()
    grid = SLGrid.build(spec.neck, cfg.sl.nodes)
    taus = dirichlet_spectrum(grid, min(10, grid.n // 4))
    report = {"command": "sl", "length": spec.length, "nodes": grid.n, "taus": taus}
    if cfg.target.mode is not None or cfg.target.mu is not None:
        mu, mode = _target(cfg)
        if mode is not None:
            an = sl_targets(spec, mu, mode, cfg.sl.nodes, cfg.sl.guard)
        else:
            an = analyze(grid, mu, guard=cfg.sl.guard, profile=spec.neck)
        report["analysis"] = an.as_dict()
    return {"sl.json": _json_bytes(report)}


def _prediction(cfg: RunConfig):
    spec = cfg.spec()
    mu, mode = _target(cfg, need_mode=True)
    an = sl_targets(spec, mu, mode, cfg.sl.nodes, cfg.sl.guard)
    _, modes = find_mode(mode.M, mode.H, mode.j, mode.n)
    pred = predict_limit_indices(mu, [x.lam for x in modes], an.taus)
    return spec, mu, mode, an, pred


def cmd_predict(cfg: RunConfig) -> dict:
    _, mu, mode, an, pred = _prediction(cfg)
    counts = predict_nodal_counts(mode, an.k)
    report = {"command": "predict", "mu": mu, "mode": [mode.j, mode.n], "k": an.k,
              "order": branch_order(an).value, "indices": {"even": pred.even, "odd": pred.odd},
              "index_in_bulk": pred.index_in_bulk, "counts": counts.as_dict(),
              "theta": {"even": an.theta_even, "odd": an.theta_odd}, "a": an.a,
              "taus": an.taus}
    return {"predict.json": _json_bytes(report)}


def _trace(cfg: RunConfig):
    spec, mu, mode, an, pred = _prediction(cfg)
    tr = track_branches(spec, mu, cfg.sweep.epsilons, cfg.mesh.h_bulk, cfg.mesh.neck_layers,
                        cfg.solver.k_eigs, mode=mode, prediction=pred, sl=an, tol=cfg.solver.tol,
                        seed=cfg.solver.seed, max_krylov=cfg.solver.max_krylov,
                        threshold=cfg.nodal.threshold, workers=cfg.sweep.workers)
    return spec, mu, mode, an, tr


def _trace_files(cfg, tr) -> dict:
    if not cfg.output.emit_csv:
        return {}
    return {"trace.csv": _csv_bytes(CSV_COLUMNS, tr.rows())}


def cmd_sweep(cfg: RunConfig) -> dict:
    _, mu, mode, an, tr = _trace(cfg)
    try:
        fit = fit_slope(tr)
    except InsufficientData as exc:
        fit = {"error": str(exc)}
    report = {"command": "sweep", "mu": mu, "mode": [mode.j, mode.n], "trace": tr.as_dict(),
              "slope_fit": fit, "eigfn_ratios": eigfn_error_ratios(tr)}
    return {"sweep.json": _json_bytes(report), **_trace_files(cfg, tr)}


def _reference(mode: RectMode):
    if (mode.j, mode.n) == (1, 2):
        return REPORTED_FIGURES["mu2"]
    return None


def cmd_verify(cfg: RunConfig) -> dict:
    spec, mu, mode, an, tr = _trace(cfg)
    rep = verdict(spec, mu, tr, an, mode, reference=_reference(mode))
    report = {"command": "verify", **rep.as_dict()}
    return {"verify.json": _json_bytes(report), **_trace_files(cfg, tr)}


def cmd_nodal(cfg: RunConfig) -> dict:
    _, m = _mesh(cfg)
    pairs, _, _ = _solve(cfg, m)
    fine = refine_uniform(m)
    fine_pairs, _, _ = _solve(cfg, fine, len(pairs))
    lams = [p.lam for p in pairs]
    parts, stable, idx = [], [], []
    files = {}
    for p, q in zip(pairs, fine_pairs):
        u = FeField(m, p.vector)
        part = count_nodal_domains(u, cfg.nodal.threshold)
        st = stability_check(u, FeField(fine, q.vector), cfg.nodal.threshold)
        parts.append(part)
        stable.append(st["stable"])
        idx.append(eigen_index(lams, p.index_1based))
        if cfg.output.emit_svg:
            files[f"eig{p.index_1based:03d}.svg"] = export_svg(
                m, part, p.vector, title=f"eigenpair {p.index_1based}").encode()
    recs = deficiency(idx, parts, stable)
    report = {"command": "nodal", "threshold": cfg.nodal.threshold,
              "eigenpairs": [{"position": p.index_1based, "lambda": p.lam, "symmetry": p.label,
                              **r.as_dict()} for p, r in zip(pairs, recs)],
              "courant_bound_holds": all(not r.negative for r in recs)}
    files["nodal.json"] = _json_bytes(report)
    return files


HANDLERS = {"mesh": cmd_mesh, "solve": cmd_solve, "sl": cmd_sl, "predict": cmd_predict,
            "sweep": cmd_sweep, "verify": cmd_verify, "nodal": cmd_nodal}
CACHED = {"mesh", "solve", "sweep", "verify", "nodal"}


# ------------------------------------------------------------------ driver

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dumbbell-spectra",
        description="Neumann spectra, branch asymptotics and nodal counts of planar dumbbells.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {"mesh": "generate and write the mesh", "solve": "smallest eigenpairs",
             "sl": "neck Sturm-Liouville analysis", "predict": "index and order predictions",
             "sweep": "epsilon sweep of both branches", "verify": "sweep plus full verdict",
             "nodal": "nodal counts and deficiencies"}
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None, help="overrides solver.seed")
        p.add_argument("--no-cache", action="store_true", help="always recompute")
    return parser


def run(command: str, cfg: RunConfig, out_dir: Path, use_cache: bool = True) -> dict:
    """Execute ``command`` and write its files; returns ``{name: bytes}``."""
    key = cache_key(cfg.to_dict(), command)
    cache = Cache(cache_dir(out_dir))
    files = None
    if use_cache and command in CACHED:
        manifest = cache.get(key, "manifest")
        if manifest is not None:
            names = json.loads(manifest)
            blobs = {n: cache.get(key, n) for n in names}
            if all(b is not None for b in blobs.values()):
                files = blobs
    if files is None:
        files = HANDLERS[command](cfg)
        if use_cache and command in CACHED:
            for name, data in files.items():
                cache.put(key, name, data)
            cache.put(key, "manifest", json.dumps(sorted(files)).encode())
    for name, data in files.items():
        atomic_write(out_dir / name, data)
    return files


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace_seed(args.seed)
        out_dir = Path(args.out if args.out is not None else cfg.output.dir)
        files = run(args.command, cfg, out_dir, use_cache=not args.no_cache)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TheoremViolation as exc:
        out_dir.mkdir(parents=True, exist_ok=True)
        atomic_write(out_dir / "violation.json",
                     _json_bytes({"violation": str(exc), "evidence": exc.evidence}))
        print(f"theorem violation: {exc}", file=sys.stderr)
        return EXIT_THEOREM
    except (DumbbellError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in sorted(files):
        print(os.fspath(out_dir / name))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
