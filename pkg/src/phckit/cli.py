"""Command-line front end: simulate, resonances, modevolume, bands, cqed,
fit-fano, sweep, optimize.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 budget or
convergence flag.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import bands as bands_mod
from . import cqed, fano, fdtd, iofmt, modal, pipeline
from .geometry import GeometryError, LatticeSpec, NAMED_DESIGNS, enumerate_holes
from .neldermead import nelder_mead_maximize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4


class CliConfigError(Exception):
    pass


def _load_job_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliConfigError(f"config file not found: {path}")
    with open(p) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise CliConfigError("job config must be a mapping")
    return doc


def _resolve_design(ref):
    """A named design (l3, l3_s1, l3_sr1, l3_sr3, l4..l9) or a design file."""
    if ref is None:
        raise CliConfigError("no design given (use --design)")
    key = str(ref).lower().replace("-", "_")
    if key in NAMED_DESIGNS:
        return LatticeSpec(), NAMED_DESIGNS[key]()
    p = Path(ref)
    if not p.exists():
        raise CliConfigError(f"design file not found: {ref}")
    try:
        return iofmt.read_design(p)
    except (iofmt.FormatError, GeometryError, yaml.YAMLError) as exc:
        raise CliConfigError(f"bad design file {ref}: {exc}") from exc


def _settings_from(args, cfg):
    sim = cfg.get("simulation", {})
    red_cfg = cfg.get("two_d_reduction", {})
    reduction = pipeline.TwoDReduction(
        slab_thickness_m=float(red_cfg.get("slab_thickness_nm", 240.0)) * 1e-9,
        wavelength_m=float(red_cfg.get("wavelength_nm", 1100.0)) * 1e-9,
    )
    return pipeline.CavityRunSettings(
        resolution=int(args.resolution or cfg.get("resolution", 16)),
        smoothing=bool(cfg.get("smoothing", True)),
        courant_factor=float(sim.get("courant_factor", 0.5)),
        pml_layers=int(sim.get("pml_layers", 10)),
        broadband_steps=int(args.steps or sim.get("broadband_steps", 16384)),
        narrowband_steps=int(sim.get("narrowband_steps", 20480)),
        reduction=reduction,
    )


def _outdir(args) -> Path:
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _job_doc(args, lattice, design, extra=None):
    doc = {
        "command": args.command,
        "design": iofmt.design_to_dict(lattice, design),
        "resolution": args.resolution,
        "seed": args.seed,
    }
    if extra:
        doc.update(extra)
    return doc


def _workers(args) -> int:
    if args.workers:
        return int(args.workers)
    return int(os.environ.get("PHC_WORKERS", "1"))


# ------------------------------------------------------------- subcommands

def cmd_simulate(args):
    cfg = _load_job_config(args.config)
    lattice, design = _resolve_design(args.design or cfg.get("design"))
    settings = _settings_from(args, cfg)
    out = _outdir(args)
    t0 = time.perf_counter()

    grid, n_eff = pipeline.build_grid(lattice, design, settings)
    gap = pipeline.band_gap(lattice, n_eff)
    if gap is None:
        print("error: no TE band gap at the effective index", file=sys.stderr)
        return EXIT_NUMERICAL
    modes, result = pipeline.find_resonances(grid, (gap[0], gap[1]), settings)

    iofmt.write_grid(grid, out / "grid.phcgrid")
    steps, times, values = result.probes["probe"]
    iofmt.write_probe_csv(steps, times, values, out / "probe.csv")
    modal.export_resonances_csv(modes, out / "resonances.csv")
    iofmt.write_manifest(
        out / "manifest.json",
        config=_job_doc(args, lattice, design,
                        {"effective_index": n_eff, "gap": list(gap)}),
        seed=args.seed,
        timings={"total_s": time.perf_counter() - t0,
                 "fdtd_s": result.wall_time_seconds},
    )
    print(f"wrote {out}/grid.phcgrid, probe.csv, resonances.csv, manifest.json")
    for m in modes:
        print(f"  f={m.frequency:.6f} a/lambda  Q={m.Q:.1f}  amp={abs(m.complex_amplitude):.3g}")
    return EXIT_OK


def _analyze(args, want_volume):
    cfg = _load_job_config(args.config)
    lattice, design = _resolve_design(args.design or cfg.get("design"))
    settings = _settings_from(args, cfg)
    out = _outdir(args)
    t0 = time.perf_counter()
    res = pipeline.analyze_cavity(lattice, design, settings)

    modal.export_resonances_csv(res.resonances, out / "resonances.csv")
    lines = [
        "cavity analysis report",
        f"effective_index: {res.effective_index:.6f}",
        f"band_gap_a_over_lambda: {res.gap[0]:.6f} .. {res.gap[1]:.6f}",
    ]
    if res.dominant is not None:
        lines += [
            f"dominant_frequency_a_over_lambda: {res.dominant.frequency:.6f}",
            f"dominant_Q: {res.dominant.Q:.1f}",
            f"ringdown_Q: {res.ringdown_q if res.ringdown_q else 'n/a'}",
            f"symmetry_residual_x: {res.symmetry_residual[0]:.3e}",
            f"symmetry_residual_y: {res.symmetry_residual[1]:.3e}",
        ]
    if want_volume and res.mode_volume is not None:
        lines += [
            f"mode_area_a2: {res.mode_volume.volume_physical:.6f}",
            f"mode_area_lambda_over_n_2: {res.mode_volume.volume_normalized:.6f}",
        ]
    report = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(report)
    iofmt.write_manifest(out / "manifest.json",
                         config=_job_doc(args, lattice, design),
                         seed=args.seed,
                         timings={"total_s": time.perf_counter() - t0})
    print(report, end="")
    return EXIT_OK


def cmd_resonances(args):
    return _analyze(args, want_volume=False)


def cmd_modevolume(args):
    return _analyze(args, want_volume=True)


def cmd_bands(args):
    cfg = _load_job_config(args.config)
    lattice, design = _resolve_design(args.design or cfg.get("design") or "l3")
    out = _outdir(args)
    red = pipeline.TwoDReduction()
    n_eff = red.effective_index(lattice.slab_index_n, lattice.background_index)
    bs = bands_mod.pwe_te_bands(lattice, num_plane_waves=args.plane_waves,
                                effective_index=n_eff)
    bands_mod.export_bands_csv(bs, out / "bands.csv")
    gap = bands_mod.find_gap(bs)
    if gap is None:
        print("no TE gap between bands 1 and 2")
    else:
        print(f"TE gap: {gap[0]:.6f} .. {gap[1]:.6f} a/lambda "
              f"(gap/midgap {gap[2]:.4f})")
        if args.units:
            a_nm = float(args.units)
            lo_nm, hi_nm = a_nm / gap[1], a_nm / gap[0]
            print(f"  at a={a_nm} nm: {lo_nm:.1f} .. {hi_nm:.1f} nm "
                  f"(span {hi_nm - lo_nm:.1f} nm)")
    print(f"wrote {out}/bands.csv")
    return EXIT_OK


def cmd_cqed(args):
    db = cqed.load_emitter_database(args.emitter_db)
    name = args.emitter
    if name not in db:
        print(f"error: unknown emitter {name!r}; have {sorted(db)}", file=sys.stderr)
        return EXIT_CONFIG
    em = db[name]
    lam = (args.wavelength_nm or em.zpl_wavelength * 1e9) * 1e-9
    cav = cqed.CavityFigures(Q=args.Q, V_normalized=args.V,
                             resonance_wavelength=lam,
                             dipole_overlap_xi=args.xi)
    fp = cqed.purcell(cav)
    ind = cqed.indistinguishability(fp, em.dephasing_gamma_tot, em.gamma_0)
    beta = cqed.beta_factor(fp, em.debye_waller)
    budget = cqed.rates_from_purcell(fp, em.gamma_0)
    q_star = cqed.strong_coupling_threshold_Q(args.V, em, lam)
    fp_star = cqed.purcell(cqed.CavityFigures(Q=q_star, V_normalized=args.V,
                                              resonance_wavelength=lam,
                                              dipole_overlap_xi=args.xi))
    near_threshold = cav.Q >= 0.9 * q_star

    lines = [
        "cavity-QED report",
        f"emitter: {em.name} (tau={em.lifetime_tau * 1e9:.1f} ns, "
        f"DW={em.debye_waller}, gamma_tot={em.dephasing_gamma_tot / 1e9:.3f} GHz)",
        f"cavity: Q={cav.Q:g}, V={cav.V_normalized:g} (lambda/n)^3, "
        f"lambda={lam * 1e9:.1f} nm, xi={cav.dipole_overlap_xi}",
        f"purcell_factor: {fp:.1f}",
        f"indistinguishability: {ind:.3f}",
        f"beta_factor: {beta:.3f}",
    ]
    for other_name, other in sorted(db.items()):
        if other_name == name:
            continue
        ind_o = cqed.indistinguishability(fp, other.dephasing_gamma_tot,
                                          other.gamma_0)
        lines.append(f"indistinguishability[{other_name}]: {ind_o:.3f}")
    lines += [
        f"Gamma_cav_hz: {budget.Gamma_cav:.6g}",
        f"Gamma_off_hz: {budget.Gamma_off:.6g}",
        f"cavity_linewidth_nm: {lam * 1e9 / cav.Q:.4f}",
        f"strong_coupling_threshold_Q: {q_star:.0f}",
        f"purcell_at_threshold: {fp_star:.1f}",
    ]
    if near_threshold:
        lines.append("note: cavity Q is at or beyond the strong-coupling onset; "
                     "the perturbative expressions above stop applying there")
    report = "\n".join(lines) + "\n"
    if args.out:
        out = _outdir(args)
        (out / "cqed_report.txt").write_text(report)
        rows = cqed.threshold_curve(np.geomspace(0.3, 10.0, 25), em, lam)
        with open(out / "threshold_curve.csv", "w") as fh:
            fh.write("V_lambda_over_n_3,Q_threshold\n")
            for v, q in rows:
                fh.write(f"{float(v)!r},{float(q)!r}\n")
    print(report, end="")
    return EXIT_OK


def cmd_fit_fano(args):
    path = Path(args.infile)
    if not path.exists():
        print(f"error: spectrum file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = fano.load_spectrum(path)
    except fano.SpectrumFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        fit = fano.fit_fano(spec)
    except fano.FitConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    report = (
        "fano fit report\n"
        f"lambda_0_nm: {fit.lambda_0:.6f}\n"
        f"fwhm_nm: {fit.fwhm:.6f}\n"
        f"q_fano: {fit.q_fano:.6f}\n"
        f"amplitude: {fit.amplitude:.6g}\n"
        f"offset: {fit.offset:.6g}\n"
        f"Q: {fit.Q:.1f}\n"
        f"residual_rms: {fit.residual_rms:.3e}\n"
    )
    if args.out:
        out = _outdir(args)
        (out / "fano_report.txt").write_text(report)
        fano.write_fit_curve_csv(spec, fit, out / "fano_curve.csv")
    print(report, end="")
    return EXIT_OK


def _sweep_one(job):
    name, settings = job
    lattice, design = _resolve_design(name)
    try:
        res = pipeline.analyze_cavity(lattice, design, settings)
        if res.dominant is None:
            return (name, "no-mode", None, None, None)
        return (name, "ok", res.dominant.frequency, res.dominant.Q,
                res.mode_volume.volume_normalized if res.mode_volume else None)
    except Exception as exc:  # per-point failures recorded, sweep continues
        return (name, f"error: {exc}", None, None, None)


def cmd_sweep(args):
    cfg = _load_job_config(args.config)
    names = [n.strip() for n in (args.designs or cfg.get("designs", "")).split(",") if n.strip()]
    out = _outdir(args)
    settings = _settings_from(args, cfg)
    jobs = [(n, settings) for n in names]

    nw = _workers(args)
    if nw > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]

    with open(out / "sweep.csv", "w") as fh:
        fh.write("design,status,frequency,Q,V_normalized\n")
        for name, status, f, q, v in rows:
            fh.write(f"{name},{status},"
                     f"{'' if f is None else repr(f)},"
                     f"{'' if q is None else repr(q)},"
                     f"{'' if v is None else repr(v)}\n")
    iofmt.write_manifest(out / "manifest.json",
                         config={"command": "sweep", "designs": names,
                                 "resolution": settings.resolution,
                                 "steps": settings.broadband_steps},
                         seed=args.seed,
                         timings={})
    print(f"wrote {out}/sweep.csv ({len(rows)} rows)")
    return EXIT_OK


def cmd_optimize(args):
    cfg = _load_job_config(args.config)
    out = _outdir(args)
    resolution = int(args.resolution or cfg.get("resolution", 12))
    steps = int(args.steps or cfg.get("simulation", {}).get("broadband_steps", 8192))
    budget = int(args.budget)
    if budget < 10:
        print("error: budget must be >= 10", file=sys.stderr)
        return EXIT_CONFIG

    x0 = [float(v) for v in args.initial.split(",")] if args.initial else \
        [0.3482, 0.2476, 0.0573, 0.098, 0.0882, 0.0927, 0.2553]
    if len(x0) != 7:
        print("error: design vector is (ds1,ds2,ds3,dr1,dr2,dr3,r_over_a)",
              file=sys.stderr)
        return EXIT_CONFIG
    bounds = [(0.0, 0.45)] * 3 + [(0.0, 0.2)] * 3 + [(0.15, 0.35)]

    from .geometry import CavityDesign, HoleModification

    def objective(x):
        ds1, ds2, ds3, dr1, dr2, dr3, r = x
        if min(r - dr1, r - dr2, r - dr3) <= 0.01:
            return -1.0  # infeasible radii
        lattice = LatticeSpec(hole_radius_ratio=r)
        design = CavityDesign(
            defect_length_x=3,
            modifications=(
                HoleModification(1, ds1, dr1),
                HoleModification(2, ds2, dr2),
                HoleModification(3, ds3, dr3),
            ),
        )
        settings = pipeline.CavityRunSettings(
            resolution=resolution, broadband_steps=steps,
            narrowband_steps=steps)
        try:
            grid, n_eff = pipeline.build_grid(lattice, design, settings)
            gap = pipeline.band_gap(lattice, n_eff)
            if gap is None:
                return -1.0
            modes, _ = pipeline.find_resonances(grid, (gap[0], gap[1]), settings)
        except Exception:
            return -1.0
        if not modes:
            return 0.0
        return modes[0].Q

    result = nelder_mead_maximize(objective, x0, bounds, budget=budget,
                                  trace_path=out / "optimize_trace.jsonl")
    doc = {
        "best_design_vector": result.best_x,
        "best_Q": result.best_value,
        "evaluations": result.evaluations,
        "budget_exhausted": result.budget_exhausted,
        "converged": result.converged,
    }
    (out / "optimize_result.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(json.dumps(doc, indent=2))
    return EXIT_BUDGET if result.budget_exhausted else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="phckit",
        description="photonic crystal cavity design and analysis toolkit")
    p.add_argument("--config", help="job config file (YAML)")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=0, help="random seed, recorded in outputs")
    p.add_argument("--workers", type=int,
                   help="parallel workers (default: $PHC_WORKERS or 1)")
    p.add_argument("--units", help="lattice constant a in nm for physical-unit output")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--design", help="named design (l3, l3_s1, l3_sr1, l3_sr3, "
                                         "l4..l9) or design file")
        sp.add_argument("--resolution", type=int, help="cells per lattice constant")
        sp.add_argument("--steps", type=int, help="FDTD steps for the broadband pass")

    sp = sub.add_parser("simulate", help="run geometry -> rasterize -> FDTD")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("resonances", help="extract resonances and Q")
    common(sp)
    sp.set_defaults(func=cmd_resonances)

    sp = sub.add_parser("modevolume", help="resonances plus mode volume")
    common(sp)
    sp.set_defaults(func=cmd_modevolume)

    sp = sub.add_parser("bands", help="TE band structure and gap")
    common(sp)
    sp.add_argument("--plane-waves", type=int, default=121)
    sp.set_defaults(func=cmd_bands)

    sp = sub.add_parser("cqed", help="Purcell, indistinguishability, beta, thresholds")
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--V", type=float, required=True, help="mode volume in (lambda/n)^3")
    sp.add_argument("--emitter", default="divacancy-3c")
    sp.add_argument("--emitter-db", help="emitter database file (YAML)")
    sp.add_argument("--wavelength-nm", type=float)
    sp.add_argument("--xi", type=float, default=1.0, help="dipole overlap in [0,1]")
    sp.set_defaults(func=cmd_cqed)

    sp = sub.add_parser("fit-fano", help="fit a Fano lineshape to a spectrum CSV")
    sp.add_argument("--in", dest="infile", required=True)
    sp.set_defaults(func=cmd_fit_fano)

    sp = sub.add_parser("sweep", help="run a grid of designs")
    common(sp)
    sp.add_argument("--designs", help="comma-separated design names")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("optimize", help="Nelder-Mead over the L3 design vector")
    common(sp)
    sp.add_argument("--budget", type=int, default=50)
    sp.add_argument("--initial", help="ds1,ds2,ds3,dr1,dr2,dr3,r_over_a")
    sp.set_defaults(func=cmd_optimize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliConfigError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (fdtd.FdtdConfigError, GeometryError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (fdtd.FdtdInstabilityError, modal.SignalError,
            bands_mod.BandSolveError, np.linalg.LinAlgError) as exc:
        print(f"error [numerical]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
