"""Command-line laboratory.

Every subcommand writes report.json style output plus CSV tables into the
output directory, and renders matching PNG figures beside them unless
--no-plots is given.  Exit codes: 0 all declared tolerances met, 2 a
tolerance was violated, 3 an enumeration hit its budget cap.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import mpmath

from . import __version__
from .circle import uniform_partition, refine_partition
from .geometry import Foliation, MappingClass, TeichPoint, cross_ratio, four_distance_sum
from .measures import bin_to_arcs, conformality_check, ps_approximant
from .schottky import BudgetExceeded, enumerate_ball, group_to_json
from .experiments import (
    ExperimentConfig,
    axis_gromov_property,
    check,
    equidistribution_experiment,
    exponent_coherence_experiment,
    geodesic_count_experiment,
    lattice_calibration_experiment,
    orbit_growth_experiment,
    report_criteria_pass,
    write_report,
    write_table_csv,
)

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_BUDGET = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teichlab",
        description="Desk-scale counting laboratory for convex cocompact groups "
        "in the punctured-torus model.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    commands = [
        ("verify-group", "verify the ping-pong certificate and echo it"),
        ("orbit-count", "orbit ball counts and growth normalization"),
        ("exponent", "orbit, series and geodesic growth exponents"),
        ("ps-measure", "boundary measure of an orbit ball on an arc partition"),
        ("conformality", "conformal-density deviation along the s-ladder"),
        ("bm-grid", "product-measure grid over an arc partition"),
        ("mixing", "correlation decay of the quotient flow"),
        ("geodesic-count", "primitive class counts and normalized table"),
        ("equidistribution", "orbit-pair directions against the product measure"),
        ("cross-ratio", "boundary cross-ratio identities at given foliations"),
        ("tt-dilatation", "train-track action spectrum and stretch factor"),
        ("nonarith", "bounded multiplicative-independence verdict"),
        ("lattice", "full-lattice calibration sieve"),
    ]
    for name, help_text in commands:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="experiment config JSON")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        p.add_argument("--out", default="reports", help="output directory")
        p.add_argument("--budget", type=int, default=None, help="node cap override")
        p.add_argument("--precision", type=int, default=50, help="digits for exact modes")
        p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
        if name == "tt-dilatation":
            p.add_argument("--track", default=None, help="track JSON file")
            p.add_argument("--action", default=None, help="branch matrix JSON file")
        if name == "nonarith":
            p.add_argument("--matrices", default=None, help="JSON [[a,b,c,d],[a,b,c,d]]")
            p.add_argument("--height", type=int, default=10**6)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget is not None:
        cfg.node_cap = args.budget
    return cfg


def _finish(report: dict, args, name: str, timings: dict) -> int:
    write_report(report, args.out, name)
    with open(os.path.join(args.out, f"{name}.timing.json"), "w") as fh:
        json.dump(timings, fh, indent=1)
        fh.write("\n")
    ok = report_criteria_pass(report)
    for c in report.get("criteria", []):
        status = "pass" if c["pass"] else "FAIL"
        print(f"[{status}] {c['name']}: value {c['value']:.6g} vs tolerance {c['tolerance']}")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_verify_group(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    group = cfg.group()
    report = {
        "experiment": "verify_group",
        "group": group_to_json(group),
        "criteria": [check("certificate_verified", 1.0, 1.0, True)],
    }
    print("certificate arcs:")
    for k, arc in enumerate(group.certificate_arcs()):
        print(f"  arc {k}: [{arc.lo}, {arc.hi})")
    return _finish(report, args, "verify_group", {"seconds": time.time() - t0})


def cmd_orbit_count(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    report = orbit_growth_experiment(cfg)
    write_table_csv(report["normalized_table"], args.out, "orbit_counts")
    if not args.no_plots:
        from . import plots

        plots.plot_growth(report, args.out)
    return _finish(report, args, "orbit_growth", {"seconds": time.time() - t0})


def cmd_exponent(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    report = exponent_coherence_experiment(cfg)
    rows = [
        {"estimator": "orbit", "h": report["h_orbit"]},
        {"estimator": "poincare", "h": report["h_poincare"]},
        {"estimator": "geodesic", "h": report["h_geodesic_slope"]},
    ]
    write_table_csv(rows, args.out, "exponents")
    if not args.no_plots:
        from . import plots

        plots.plot_exponent_coherence(report, args.out)
    return _finish(report, args, "exponent_coherence", {"seconds": time.time() - t0})


def cmd_ps_measure(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    group = cfg.group()
    x = cfg.x
    orbit = orbit_growth_experiment(cfg, group)
    s = orbit["h"] + cfg.s_offsets[-1]
    nu = ps_approximant(group, x, s, cfg.measure_cutoff)
    partition = uniform_partition(cfg.arc_partition)
    arcs = bin_to_arcs(nu, partition)
    arcs.to_csv(os.path.join(args.out, "ps_measure.csv"), getattr(arcs, "atom_counts", None))
    report = {
        "experiment": "ps_measure",
        "s": s,
        "cutoff": cfg.measure_cutoff,
        "total_mass": arcs.total_mass,
        "dropped_mass": arcs.dropped_mass,
        "criteria": [check("measure_total", arcs.total_mass + arcs.dropped_mass, 1.0, True)],
    }
    if not args.no_plots:
        from . import plots

        plots.plot_arc_measure(partition, arcs.masses, args.out, "ps_measure")
    return _finish(report, args, "ps_measure", {"seconds": time.time() - t0})


def cmd_conformality(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    group = cfg.group()
    x = cfg.x
    y = TeichPoint(0, 2)
    orbit = orbit_growth_experiment(cfg, group)
    ball = enumerate_ball(group, x, x, cfg.measure_cutoff, node_cap=cfg.node_cap)
    partition = uniform_partition(cfg.arc_partition)
    devs = {}
    for off in cfg.s_offsets:
        devs[off] = conformality_check(
            group, x, y, orbit["h"] + off, partition, cfg.measure_cutoff, ball=ball
        )
    ladder = [devs[off] for off in cfg.s_offsets]
    monotone = all(a >= b for a, b in zip(ladder, ladder[1:]))
    report = {
        "experiment": "conformality",
        "h": orbit["h"],
        "offsets": cfg.s_offsets,
        "deviations": ladder,
        "criteria": [
            check("conformality_deviation", ladder[-1], 0.15, ladder[-1] < 0.15),
            check("conformality_monotone", 0.0, 0.0, monotone),
        ],
    }
    write_table_csv(
        [{"s_offset": o, "deviation": d} for o, d in devs.items()], args.out, "conformality"
    )
    if not args.no_plots:
        from . import plots

        plots.plot_conformality(devs, args.out)
    return _finish(report, args, "conformality", {"seconds": time.time() - t0})


def _bm_setup(cfg):
    from .bmflow import SuspensionFlow, bm_grid

    group = cfg.group()
    x = cfg.x
    orbit = orbit_growth_experiment(cfg, group)
    h = orbit["h"]
    s = h + cfg.s_offsets[-1]
    ball = enumerate_ball(group, x, x, 16.0, node_cap=cfg.node_cap)
    nu = ps_approximant(group, x, s, 16.0, ball=ball)
    part = uniform_partition(cfg.arc_partition)
    arc_nu = bin_to_arcs(nu, part)
    grid = bm_grid(arc_nu, x, h)
    return group, x, h, s, nu, arc_nu, grid, SuspensionFlow(group, x)


def cmd_bm_grid(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    from .bmflow import FlowBox, bm_mass, horospherical_consistency, holonomy_invariance

    group, x, h, s, nu, arc_nu, grid, flow = _bm_setup(cfg)
    grid.to_csv(os.path.join(args.out, "bm_grid.csv"))
    mass, err = bm_mass(grid, group)
    nu_fine = bin_to_arcs(nu, refine_partition(arc_nu.partition, 4))
    box = FlowBox(group.repelling[1], group.attracting[0], 0.0, 1.0)
    horo = horospherical_consistency(grid, box, nu_fine)
    z1 = group.attracting[0].midpoint()
    z2 = float(group.attracting[0].split(3)[0].midpoint())
    holo = holonomy_invariance(
        z1, z2, [group.attracting[1], group.repelling[1]], arc_nu, x, h
    )
    from .bmflow import flow_transport_drift

    drift = flow_transport_drift(group, flow, box, 3.0, s, 14.0, nu.atoms)
    report = {
        "experiment": "bm_grid",
        "delta": h,
        "total_weight": grid.total_weight(),
        "masked_mass": grid.masked_mass(),
        "bm_mass": mass,
        "bm_mass_error": err,
        "horospherical_deviation": horo,
        "holonomy_deviation": holo,
        "flow_transport_drift": drift,
        "criteria": [
            check("horospherical_consistency", horo, 0.05, horo < 0.05),
            check("holonomy_invariance", holo, 0.1, holo < 0.1),
            check("flow_transport_drift", drift, 0.01, drift < 0.01),
        ],
    }
    if not args.no_plots:
        from . import plots

        plots.plot_grid_heatmap(grid, args.out)
    return _finish(report, args, "bm_grid", {"seconds": time.time() - t0})


def cmd_mixing(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    from .bmflow import CylinderObs, correlation_to_csv, mixing_correlation_cylinders

    group, x, h, s, nu, arc_nu, grid, flow = _bm_setup(cfg)
    ball20 = enumerate_ball(group, x, x, 20.0, node_cap=cfg.node_cap)
    nu20 = ps_approximant(group, x, s, 20.0, ball=ball20)
    all_arcs = tuple(group.certificate_arcs())
    cyl_a = CylinderObs(all_arcs, (group.attracting[0], group.repelling[0]))
    cyl_b = CylinderObs(all_arcs, (group.attracting[1], group.repelling[1]))
    rows = mixing_correlation_cylinders(
        grid,
        flow,
        cyl_a,
        cyl_b,
        cfg.mixing_times,
        nu20.atoms,
        samples=cfg.mixing_samples,
        seed=cfg.seed,
    )
    correlation_to_csv(rows, os.path.join(args.out, "mixing.csv"))
    gaps = [abs(r.correlation - r.product) / r.product for r in rows]
    decreasing = all(a >= b for a, b in zip(gaps, gaps[1:]))
    report = {
        "experiment": "mixing",
        "times": list(cfg.mixing_times),
        "correlations": [r.correlation for r in rows],
        "products": [r.product for r in rows],
        "stderr": [r.stderr for r in rows],
        "gaps": gaps,
        "criteria": [
            check("mixing_final_gap", gaps[-1], 0.10, gaps[-1] < 0.10),
            check("mixing_decreasing", 0.0, 0.0, decreasing),
        ],
    }
    if not args.no_plots:
        from . import plots

        plots.plot_correlations(rows, args.out)
    return _finish(report, args, "mixing", {"seconds": time.time() - t0})


def cmd_geodesic_count(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    report = geodesic_count_experiment(cfg)
    write_table_csv(report["table"], args.out, "geodesic_counts")
    if not args.no_plots:
        from . import plots

        plots.plot_geodesic_counts(report, args.out)
    axis = axis_gromov_property(cfg)
    write_table_csv(axis["rows"], args.out, "axis_gromov")
    report["criteria"] = report["criteria"] + axis["criteria"]
    report["axis_worst_slack"] = axis["worst_slack"]
    return _finish(report, args, "geodesic_count", {"seconds": time.time() - t0})


def cmd_equidistribution(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    report = equidistribution_experiment(cfg)
    write_table_csv(report["cells"], args.out, "equidistribution_cells")
    if not args.no_plots:
        from . import plots

        plots.plot_equidistribution(report, args.out)
    return _finish(report, args, "equidistribution", {"seconds": time.time() - t0})


def cmd_cross_ratio(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    fs = [Foliation(1, 0), Foliation(0, 1), Foliation(1, 1), Foliation(1, 2)]
    tau = cross_ratio(*fs)
    four = four_distance_sum(*fs, depth=15.0)
    gap = abs(2 * tau - four)
    g = MappingClass(2, 1, 1, 1)
    from .geometry import translation_length

    axis = translation_length(g)
    beta = Foliation(1, 3)
    tau_axis = cross_ratio(axis.attracting, axis.repelling, beta, g.act_foliation(beta))
    ell_gap = abs(axis.length - tau_axis)
    report = {
        "experiment": "cross_ratio",
        "tau": tau,
        "four_distance_sum": four,
        "translation_length": axis.length,
        "axis_cross_ratio": tau_axis,
        "criteria": [
            check("four_distance_agreement", gap, 1e-4, gap < 1e-4),
            check("translation_identity", ell_gap, 1e-9, ell_gap < 1e-9),
        ],
    }
    write_table_csv(
        [
            {"quantity": "tau", "value": tau},
            {"quantity": "four_distance_sum", "value": four},
            {"quantity": "translation_length", "value": axis.length},
            {"quantity": "axis_cross_ratio", "value": tau_axis},
        ],
        args.out,
        "cross_ratio",
    )
    return _finish(report, args, "cross_ratio", {"seconds": time.time() - t0})


def cmd_tt_dilatation(args) -> int:
    t0 = time.time()
    from .traintrack import action_matrix, dilatation, load_action, load_track, torus_track

    if args.track:
        track = load_track(args.track)
    else:
        track = torus_track()
    if args.action:
        action = load_action(args.action, track)
    else:
        action = action_matrix(track, [[2, 1], [1, 1]])
    result = dilatation(action)
    report = {
        "experiment": "tt_dilatation",
        "weight_space_dimension": len(track.weight_space_basis()),
        "char_poly": [int(c) for c in result.char_poly],
        "dilatation": result.value,
        "enclosure": [str(result.lo), str(result.hi)],
        "enclosure_width": float(result.hi - result.lo),
        "positive_power": result.positive_power,
        "criteria": [
            check(
                "enclosure_width",
                float(result.hi - result.lo),
                1e-12,
                float(result.hi - result.lo) < 1e-12,
            )
        ],
    }
    write_table_csv(
        [{"quantity": "dilatation", "value": result.value}], args.out, "tt_dilatation"
    )
    if not args.no_plots:
        from . import plots
        from .traintrack import proximality_and_limit_set, action_matrix as act

        if track.branches == 2:
            other = act(track, [[1, 1], [1, 2]])
            rep = proximality_and_limit_set([action, other], depth=5)
            plots.plot_limit_set(rep.samples, args.out)
    return _finish(report, args, "tt_dilatation", {"seconds": time.time() - t0})


def cmd_nonarith(args) -> int:
    t0 = time.time()
    from .traintrack import action_matrix, nonarith_check, torus_track

    mats = json.loads(args.matrices) if args.matrices else [[2, 1, 1, 1], [5, 2, 2, 1]]
    track = torus_track()
    acts = [
        action_matrix(track, [[m[0], m[1]], [m[2], m[3]]]) for m in mats
    ]
    verdict = nonarith_check(acts[0], acts[1], height=args.height, precision=args.precision)
    report = {
        "experiment": "nonarith",
        "verdict": str(verdict),
        "kind": verdict.kind,
        "p": verdict.p,
        "q": verdict.q,
        "height": verdict.height,
        "log_ratio": verdict.log_ratio,
        "criteria": [check("verdict_emitted", 1.0, 1.0, True)],
    }
    print("verdict:", str(verdict))
    return _finish(report, args, "nonarith", {"seconds": time.time() - t0})


def cmd_lattice(args) -> int:
    cfg = _config(args)
    t0 = time.time()
    report = lattice_calibration_experiment(cfg)
    write_table_csv(
        [{"R": r, "count": c} for r, c in zip(report["ladder"], report["counts"])],
        args.out,
        "lattice_counts",
    )
    return _finish(report, args, "lattice_calibration", {"seconds": time.time() - t0})


HANDLERS = {
    "verify-group": cmd_verify_group,
    "orbit-count": cmd_orbit_count,
    "exponent": cmd_exponent,
    "ps-measure": cmd_ps_measure,
    "conformality": cmd_conformality,
    "bm-grid": cmd_bm_grid,
    "mixing": cmd_mixing,
    "geodesic-count": cmd_geodesic_count,
    "equidistribution": cmd_equidistribution,
    "cross-ratio": cmd_cross_ratio,
    "tt-dilatation": cmd_tt_dilatation,
    "nonarith": cmd_nonarith,
    "lattice": cmd_lattice,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    mpmath.mp.dps = max(30, args.precision)
    os.makedirs(args.out, exist_ok=True)
    try:
        return HANDLERS[args.command](args)
    except BudgetExceeded as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
