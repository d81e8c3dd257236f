"""Command line interface.

Exit codes: 0 all PASS (or nothing to judge), 2 any FAIL, 3 any
INCONCLUSIVE, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys

import numpy as np

from .audit import FAIL, INCONCLUSIVE, AuditConfig, audit_channel, audit_sweep, edge_depth
from .bound_states import bound_state_catalog, write_catalog_csv
from .observables import amplitude_set, summary_json, write_cross_section_csv
from .phase_shifts import default_k_grid, threshold_fit, unwrap_sweep, write_curve_csv
from .potential import ExponentialCutoff, PotentialSpec, SquareWell, potential_from_dict
from .radial import AngularChannel

log = logging.getLogger("dirac2d")

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3


def load_config(path):
    with open(path) as fh:
        raw = json.load(fh)
    if "potential" not in raw:
        raise ValueError("config needs a 'potential' block")
    spec = potential_from_dict(raw["potential"])
    cfg = AuditConfig.from_dict(raw.get("grid"), raw.get("tolerances"), raw.get("channels"))
    return spec, cfg


def parse_channels(text):
    return [AngularChannel.parse(t) for t in text.split(",") if t.strip()]


def parse_branch(text):
    if text in ("+", "+1", "1", "plus"):
        return 1
    if text in ("-", "-1", "minus"):
        return -1
    raise argparse.ArgumentTypeError("branch must be + or -")


def exit_code(statuses, errors=0):
    if FAIL in statuses:
        return EXIT_FAIL
    if INCONCLUSIVE in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_ERROR if errors else EXIT_OK


def family_for(spec: PotentialSpec, param: str):
    if param == "lambda":
        return spec.scaled
    if param == "a":
        return lambda p: dataclasses.replace(spec, a=p)
    if param == "v0":
        if not isinstance(spec.shape, (SquareWell, ExponentialCutoff)):
            raise ValueError("v0 sweeps need a square_well or exponential_cutoff potential")
        return lambda p: dataclasses.replace(spec, shape=dataclasses.replace(spec.shape, v0=p))
    raise ValueError(f"unknown sweep parameter {param!r}")


def cmd_phases(args):
    spec, cfg = load_config(args.config)
    ch = AngularChannel.parse(args.j)
    grid = default_k_grid(spec.a, cfg.k_min, cfg.k_max, cfg.points)
    curve = unwrap_sweep(ch, args.branch, spec, grid, refine_threshold=cfg.refine_threshold, max_depth=cfg.max_depth)
    write_curve_csv(curve, args.out)
    fit = threshold_fit(curve)
    print(f"j={ch} branch={'+' if args.branch > 0 else '-'} points={curve.k.size} eta(k_min)={curve.eta[0]:.10g} "
          f"eta(k_max)={curve.eta[-1]:.10g} threshold fit: {fit}")
    return EXIT_OK


def cmd_bound(args):
    spec, cfg = load_config(args.config)
    ch = AngularChannel.parse(args.j)
    cat = bound_state_catalog(ch, spec, crit_tol=cfg.critical_tol, n_grid=cfg.n_grid, eps_g=cfg.eps_g,
                              edge_depth=edge_depth(spec, cfg))
    write_catalog_csv(cat, args.out)
    print(f"j={ch} gap states={cat.n_gap} delta(+mu)={cat.delta_plus} delta(-mu)={cat.delta_minus} n_j={cat.levinson_number}")
    for note in cat.warnings:
        print(f"warning: {note}")
    return EXIT_OK


def cmd_audit(args):
    spec, cfg = load_config(args.config)
    channels = parse_channels(args.channels) if args.channels else [AngularChannel(j) for j in cfg.channels]
    reports = [audit_channel(ch, spec, cfg) for ch in channels]
    with open(args.out, "w") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
    for r in reports:
        res = "n/a" if r.levinson_residual is None else f"{r.levinson_residual:.3g}"
        print(f"{r.status:12s} j={r.channel} n_j={r.n_j} residual={res} sum_rule={r.sum_rule_residual:.3g}")
    return exit_code([r.status for r in reports])


def cmd_xsec(args):
    spec, _ = load_config(args.config)
    aset = amplitude_set(spec, args.k, branch=args.branch)
    write_cross_section_csv(aset, args.out, points=args.points)
    summary = summary_json(aset)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary)
    print(summary)
    return EXIT_OK


def cmd_sweep(args):
    spec, cfg = load_config(args.config)
    channels = parse_channels(args.channels) if args.channels else [AngularChannel(j) for j in cfg.channels]
    params = np.linspace(args.start, args.stop, args.steps + 1) if args.steps > 0 else np.array([args.start])
    result = audit_sweep(family_for(spec, args.param), params, channels, cfg, bound_only=args.bound_only)
    statuses = []
    errors = 0
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([args.param, "j", "status", "n_j", "levinson_residual", "sum_rule_residual", "error"])
        for p, ch, rep, err, n in result.rows:
            if rep is not None:
                statuses.append(rep.status)
                w.writerow([repr(p), str(ch), rep.status, n, rep.levinson_residual, rep.sum_rule_residual, ""])
            else:
                errors += err is not None
                w.writerow([repr(p), str(ch), "ERROR" if err else "", "" if n is None else n, "", "", err or ""])
    if args.transitions:
        with open(args.transitions, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", f"{args.param}_lo", f"{args.param}_hi", "n_lo", "n_hi"])
            for row in result.transitions:
                w.writerow([str(AngularChannel(row[0])), *row[1:]])
    for j, lo, hi, n0, n1 in result.transitions:
        print(f"transition j={AngularChannel(j)}: n_j {n0} -> {n1} in [{lo:.10g}, {hi:.10g}]")
    return exit_code(statuses, errors)


def build_parser():
    p = argparse.ArgumentParser(prog="dirac2d", description="2D radial Dirac scattering and Levinson audit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phases", help="unwrapped phase-shift curve for one channel and branch")
    s.add_argument("--config", required=True)
    s.add_argument("--j", required=True)
    s.add_argument("--branch", type=parse_branch, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_phases)

    s = sub.add_parser("bound", help="gap bound states and critical-state checks")
    s.add_argument("--config", required=True)
    s.add_argument("--j", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("audit", help="Levinson audit per channel")
    s.add_argument("--config", required=True)
    s.add_argument("--channels")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("xsec", help="differential and total cross section at one momentum")
    s.add_argument("--config", required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--branch", type=parse_branch, default=1)
    s.add_argument("--points", type=int, default=361)
    s.add_argument("--out", required=True)
    s.add_argument("--summary")
    s.set_defaults(func=cmd_xsec)

    s = sub.add_parser("sweep", help="audit over a one-parameter family")
    s.add_argument("--config", required=True)
    s.add_argument("--param", choices=("v0", "lambda", "a"), required=True)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, default=10, help="number of intervals (steps + 1 points)")
    s.add_argument("--channels")
    s.add_argument("--bound-only", action="store_true", help="count bound states only, no phase curves")
    s.add_argument("--transitions", help="write the transition table to this CSV")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - reported as exit code 1
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
