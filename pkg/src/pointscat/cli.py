"""Command-line entry point: scenario-driven runs with file artifacts.

Every subcommand writes a manifest.json plus CSV tables into --out-dir (one
directory per run) and plot-ready two-column text under plots/. Exit codes:
0 success, 2 validation/usage failure, 3 numerical non-convergence. Thread
count only sizes the worker pool; reductions are ordered by task index, so
numerical output is identical for any --threads value.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import _pool_map, run_suite, CRITERIA
from .forms import gamma_limsup_gap
from .grids import make_grid, grid_points
from .measures import (Riesz, Zeta0TimesXi, continuum_pair_integral,
                       pair_sum, riesz_energy)
from .report import (add_oracle, add_result, add_timing, manifest_write,
                     new_manifest, write_csv, write_plot_data)
from .resolvent import GridField, resolvent_convergence_gap
from .sampling import load_cloud, sample_points, save_cloud
from .scenario import load_scenario, validate
from .spectra import convergence_study, point_spectrum
from .xi import assemble_xi, min_eigenvalue_scaled, offdiag_hs_norm_scaled

__all__ = ["main"]


def _ints(text: str):
    return [int(v) for v in text.split(",") if v]


def _floats(text: str):
    return [float(v) for v in text.split(",") if v]


def _add_common(p: argparse.ArgumentParser, out_default: str):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--slow", action="store_true",
                   help="allow slow exploratory paths (harmonic Krein)")
    p.add_argument("--out-dir", default=out_default)


def _load_validated(args, man_sub: str):
    """Scenario + fresh manifest, or (None, manifest, exit 2) on violations."""
    scn = load_scenario(args.scenario)
    flags = {k: v for k, v in vars(args).items()
             if k not in ("func", "scenario")}
    man = new_manifest(man_sub, scn, flags)
    rep = validate(scn)
    if not rep.ok:
        for assumption, msg in rep.violations:
            print(f"assumption {assumption}: {msg}", file=sys.stderr)
        add_result(man, "violations", rep.violations)
        manifest_write(man, args.out_dir)
        return None, man
    return scn, man


def _cmd_validate(args) -> int:
    scn, man = _load_validated(args, "validate")
    if scn is None:
        return 2
    add_result(man, "violations", [])
    manifest_write(man, args.out_dir)
    print("scenario OK")
    return 0


def _cmd_sample(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "sample")
    if scn is None:
        return 2
    cloud = sample_points(scn, args.n, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_cloud(cloud, out / "cloud.csv")
    add_result(man, "N", cloud.N)
    add_result(man, "min_pair_distance", cloud.min_pair_distance)
    add_timing(man, "sample", time.time() - t0)
    manifest_write(man, out)
    print(f"wrote {out / 'cloud.csv'} ({cloud.N} points)")
    return 0


def _cmd_xi_scan(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "xi-scan")
    if scn is None:
        return 2
    cloud = sample_points(scn, args.n, args.seed)
    s0 = scn.lambda0 ** 2

    def one(lam):
        xi = assemble_xi(cloud, scn.background, lam * lam, s0)
        return (lam, cloud.N, min_eigenvalue_scaled(xi),
                offdiag_hs_norm_scaled(xi))

    rows = _pool_map(one, args.lambdas, args.threads)
    out = Path(args.out_dir)
    write_csv(out / "xi_scan.csv",
              ["lambda", "N", "min_eig_scaled", "offdiag_hs_scaled"], rows)
    write_plot_data(out / "plots" / "min_eig.txt",
                    [r[0] for r in rows], [r[2] for r in rows])
    add_result(man, "rows", rows)
    add_timing(man, "xi_scan", time.time() - t0)
    manifest_write(man, out)
    for lam, N, me, hs in rows:
        print(f"lambda={lam:g} N={N}: min_eig={me:.6f} hs={hs:.6f}")
    return 0


def _cmd_spectrum(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "spectrum")
    if scn is None:
        return 2
    if args.cloud:
        cloud = load_cloud(args.cloud)
    else:
        cloud = sample_points(scn, args.n, args.seed)
    tol = args.tol if args.tol is not None else 1e-8
    rep = point_spectrum(cloud, scn.background, args.emin, args.emax,
                         n_scan=args.n_scan, tol=tol, s0=scn.lambda0 ** 2)
    out = Path(args.out_dir)
    write_csv(out / "spectrum.csv", ["k", "E", "bracket_width"],
              [(k, E, rep.bracket_width)
               for k, E in enumerate(rep.eigenvalues)])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spectrum.json", "w") as fh:
        json.dump(rep.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    add_result(man, "eigenvalues", list(rep.eigenvalues))
    add_timing(man, "spectrum", time.time() - t0)
    manifest_write(man, out)
    for k, E in enumerate(rep.eigenvalues):
        print(f"E_{k} = {E:.12g}")
    if not rep.eigenvalues:
        print("no eigenvalues in the window")
    return 0


def _cmd_converge(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "converge")
    if scn is None:
        return 2
    L, h = args.grid
    tol = args.tol if args.tol is not None else 1e-6
    table = convergence_study(scn, args.n_list, args.seeds, grid=(L, h),
                              E_window=tuple(args.window), tol=tol)
    out = Path(args.out_dir)
    write_csv(out / "convergence.csv", ["N", "seed", "E1_HN", "E1_Hinf",
                                        "gap"],
              [(r.N, r.seed, r.E1_HN, r.E1_Hinf, r.gap) for r in table.rows])
    means = [(N, table.mean_gap(N)) for N in sorted(set(args.n_list))]
    write_plot_data(out / "plots" / "mean_gap.txt",
                    [m[0] for m in means], [m[1] for m in means])
    add_result(man, "E1_Hinf", table.E1_Hinf)
    add_result(man, "mean_gaps", means)
    add_result(man, "flagged", sum(1 for r in table.rows if r.flagged))
    add_timing(man, "converge", time.time() - t0)
    manifest_write(man, out)
    for N, g in means:
        print(f"N={N}: mean |E1(H_N) - E1(H_inf)| = {g:.6g}")
    return 0


def _gaussian(grid, center, sigma) -> GridField:
    pts = grid_points(grid)
    c = np.zeros(grid.d) + np.asarray(center, dtype=float)[:grid.d]
    v = np.exp(-np.sum((pts - c) ** 2, axis=1) / (2.0 * sigma * sigma))
    return GridField(grid=grid, values=v)


def _cmd_gamma(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "gamma")
    if scn is None:
        return 2
    L, h = args.grid
    grid = make_grid(scn.d, L, h)
    psi = _gaussian(grid, np.zeros(scn.d), args.psi_sigma)
    rows = gamma_limsup_gap(scn, psi, args.n_list, args.seeds, args.lam)
    out = Path(args.out_dir)
    write_csv(out / "gamma.csv", ["N", "seed", "QN", "Qinf", "gap"],
              [(r.N, r.seed, r.QN, r.Qinf, r.gap) for r in rows])
    Ns = sorted(set(args.n_list))
    dists = [float(np.mean([r.psi_dist for r in rows if r.N == N]))
             for N in Ns]
    gaps = [float(np.mean([r.gap for r in rows if r.N == N])) for N in Ns]
    write_plot_data(out / "plots" / "gamma_dist.txt", Ns, dists)
    write_plot_data(out / "plots" / "gamma_gap.txt", Ns, gaps)
    add_result(man, "mean_gap", list(zip(Ns, gaps)))
    add_result(man, "mean_psi_dist", list(zip(Ns, dists)))
    add_timing(man, "gamma", time.time() - t0)
    manifest_write(man, out)
    for N, g, dd in zip(Ns, gaps, dists):
        print(f"N={N}: |QN - Qinf| = {g:.6g}, |psi_N - psi_inf| = {dd:.6g}")
    return 0


def _cmd_resolvent_gap(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "resolvent-gap")
    if scn is None:
        return 2
    L, h = args.grid
    grid = make_grid(scn.d, L, h)
    fields = [("g1", _gaussian(grid, (0.0, 0.0, 0.0), 0.30)),
              ("g2", _gaussian(grid, (0.4, 0.2, -0.1), 0.40)),
              ("g3", _gaussian(grid, (-0.3, 0.5, 0.2), 0.25))]
    tol = args.tol if args.tol is not None else 1e-8
    rows = resolvent_convergence_gap(scn, args.n_list, args.seeds, args.lam,
                                     fields, (L, h), tol=tol)
    out = Path(args.out_dir)
    write_csv(out / "resolvent_gap.csv", ["N", "seed", "f_id", "gap"], rows)
    Ns = sorted(set(args.n_list))
    means = [float(np.mean([g for N, _, _, g in rows if N == nn]))
             for nn in Ns]
    write_plot_data(out / "plots" / "mean_gap.txt", Ns, means)
    add_result(man, "mean_gaps", list(zip(Ns, means)))
    add_timing(man, "resolvent_gap", time.time() - t0)
    manifest_write(man, out)
    for nn, g in zip(Ns, means):
        print(f"N={nn}: mean ||R_N f - R_inf f|| = {g:.6g}")
    return 0


def _cmd_measures(args) -> int:
    t0 = time.time()
    scn, man = _load_validated(args, "measures")
    if scn is None:
        return 2
    tol = args.tol if args.tol is not None else 1e-8
    riesz_ref = continuum_pair_integral(scn, Riesz(args.s_exp), 1.0, tol)
    zeta_ref = continuum_pair_integral(scn, Zeta0TimesXi(), 1.0, tol)
    add_oracle(man, f"riesz_s{args.s_exp:g}_integral", riesz_ref,
               "radial quadrature against the pair-distance density")
    add_oracle(man, "zeta0_pair_integral", zeta_ref,
               "radial quadrature against the pair-distance density")

    def one(task):
        N, seed = task
        cloud = sample_points(scn, N, seed)
        ones = np.ones(N)
        rv = riesz_energy(cloud, args.s_exp)
        zv = pair_sum(cloud, ones, Zeta0TimesXi())
        return [(N, seed, f"riesz_s{args.s_exp:g}", rv, riesz_ref,
                 abs(rv - riesz_ref)),
                (N, seed, "zeta0_pair", zv, zeta_ref, abs(zv - zeta_ref))]

    tasks = [(N, seed) for N in sorted(args.n_list)
             for seed in range(args.seeds)]
    rows = [r for chunk in _pool_map(one, tasks, args.threads)
            for r in chunk]
    out = Path(args.out_dir)
    write_csv(out / "measures.csv",
              ["N", "seed", "quantity", "value", "oracle", "gap"], rows)
    Ns = sorted(set(args.n_list))
    zmeans = [float(np.mean([r[5] for r in rows
                             if r[0] == nn and r[2] == "zeta0_pair"]))
              for nn in Ns]
    write_plot_data(out / "plots" / "zeta0_gap.txt", Ns, zmeans)
    add_result(man, "zeta0_mean_gaps", list(zip(Ns, zmeans)))
    add_timing(man, "measures", time.time() - t0)
    manifest_write(man, out)
    for nn, g in zip(Ns, zmeans):
        print(f"N={nn}: mean zeta0 pair gap = {g:.6g}")
    return 0


def _cmd_verify(args) -> int:
    criteria = args.criteria if args.criteria else sorted(CRITERIA)
    out = Path(args.out_dir)
    man = new_manifest("verify", None, {"criteria": criteria,
                                        "threads": args.threads})
    all_ok = True
    print(f"{'crit':>4}  {'name':<32} {'status':<7} runtime")
    for cid in criteria:
        res = CRITERIA[cid](threads=args.threads)
        all_ok &= res.passed
        cdir = out / f"criterion_{cid}"
        for name, (header, rows) in res.tables.items():
            write_csv(cdir / f"{name}.csv", header, rows)
        for name, (xs, ys) in res.plots.items():
            write_plot_data(cdir / "plots" / f"{name}.txt", xs, ys)
        for name, value, provenance in res.oracles:
            add_oracle(man, f"criterion_{cid}/{name}", value, provenance)
        add_result(man, f"criterion_{cid}",
                   {"name": res.name, "passed": res.passed,
                    "details": res.details})
        add_timing(man, f"criterion_{cid}", res.runtime_s)
        status = "PASS" if res.passed else "FAIL"
        print(f"{cid:>4}  {res.name:<32} {status:<7} {res.runtime_s:.1f}s")
    manifest_write(man, out)
    print("all criteria passed" if all_ok else "FAILURES present",
          file=sys.stdout if all_ok else sys.stderr)
    return 0 if all_ok else 1


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pointscat",
        description="Zero-range scatterer operators and their "
                    "homogenization limit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    _add_common(p, "runs/validate")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sample", help="draw a scatterer cloud")
    p.add_argument("scenario")
    p.add_argument("--n", type=int, required=True)
    _add_common(p, "runs/sample")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("xi-scan", help="min eigenvalue and HS norm over "
                                       "a lambda grid")
    p.add_argument("scenario")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambdas", type=_floats, default=[1.0, 2.0, 4.0, 8.0])
    _add_common(p, "runs/xi-scan")
    p.set_defaults(func=_cmd_xi_scan)

    p = sub.add_parser("spectrum", help="point spectrum of a cloud")
    p.add_argument("scenario")
    p.add_argument("--cloud", help="cloud CSV (overrides --n/--seed)")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--n-scan", type=int, default=64)
    _add_common(p, "runs/spectrum")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("converge", help="ground-state gap study")
    p.add_argument("scenario")
    p.add_argument("--n-list", type=_ints, default=[128, 1024])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--grid", type=_floats, default=[8.0, 0.1],
                   help="L,h of the reference box")
    p.add_argument("--window", type=_floats, default=[-0.9, -0.05])
    _add_common(p, "runs/converge")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("gamma", help="recovery-sequence form gaps")
    p.add_argument("scenario")
    p.add_argument("--n-list", type=_ints, default=[128, 512, 1024])
    p.add_argument("--seeds", type=int, default=2)
    p.add_argument("--lam", type=float, default=8.0)
    p.add_argument("--grid", type=_floats, default=[4.0, 0.1])
    p.add_argument("--psi-sigma", type=float,
                   default=math.sqrt(0.5))
    _add_common(p, "runs/gamma")
    p.set_defaults(func=_cmd_gamma)

    p = sub.add_parser("resolvent-gap", help="Krein vs limit resolvent")
    p.add_argument("scenario")
    p.add_argument("--n-list", type=_ints, default=[128, 1024])
    p.add_argument("--seeds", type=int, default=2)
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--grid", type=_floats, default=[4.0, 0.1])
    _add_common(p, "runs/resolvent-gap")
    p.set_defaults(func=_cmd_resolvent_gap)

    p = sub.add_parser("measures", help="Riesz energies and pair sums")
    p.add_argument("scenario")
    p.add_argument("--n-list", type=_ints, default=[128, 512, 2048])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--s-exp", type=float, default=1.0)
    _add_common(p, "runs/measures")
    p.set_defaults(func=_cmd_measures)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--criteria", type=_ints, default=None)
    _add_common(p, "runs/verify")
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
