"""Command-line frontend: simulate / verify / sweep / ablate.

Exit codes: 0 success, 2 run completed but the certificate (or comparison
principle) failed, 1 operational error.
"""

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import PlatoonError
from .scenario import emit_scenario, paper_iv, parse_scenario
from .sim import run_ablation, run_scenario
from .stability import build_certificate, string_stability_sweep

TRAJECTORY_FIELDS = ("x", "v", "a", "ex", "ev", "u", "dvhat", "dahat")


def _load_scenario(args):
    if args.scenario is not None:
        scenario = parse_scenario(args.scenario)
    else:
        scenario = paper_iv()
    if args.preset is not None:
        if args.preset != "paper-iv":
            raise PlatoonError(f"unknown preset {args.preset!r}")
        scenario = paper_iv()
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if getattr(args, "horizon", None) is not None:
        overrides["horizon"] = args.horizon
    if overrides:
        scenario = replace(scenario, sim=replace(scenario.sim, **overrides))
    return scenario


def trajectory_header(n: int):
    cols = ["t"]
    for i in range(1, n + 1):
        cols.extend(f"{name}_{i}" for name in TRAJECTORY_FIELDS)
    cols.extend(["x0", "v0", "a0", "V1", "V2", "V3", "z1", "z2", "z3"])
    return cols


def write_trajectory_csv(log, path):
    n = log.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(n))
        per_vehicle = (log.x, log.v, log.a, log.e_x, log.e_v, log.u, log.dv_hat, log.da_hat)
        for row in range(log.t.size):
            out = [repr(float(log.t[row]))]
            for i in range(n):
                out.extend(repr(float(series[row, i])) for series in per_vehicle)
            out.extend(
                repr(float(v))
                for v in (log.x0[row], log.v0[row], log.a0[row], *log.vslf[row], *log.z[row])
            )
            writer.writerow(out)


def write_metrics_csv(metrics, cert, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "vehicle", "value"])
        for i, val in enumerate(metrics.rms_position_error, start=1):
            writer.writerow(["rms_position_error", i, repr(float(val))])
        writer.writerow(["sup_error", "", repr(float(metrics.sup_error))])
        for i, val in enumerate(metrics.post_transient_amplitude, start=1):
            writer.writerow(["post_transient_amplitude", i, repr(float(val))])
        writer.writerow(["certified", "", str(cert.certified).lower()])
        writer.writerow(["metzler", "", str(cert.metzler).lower()])
        writer.writerow(["hurwitz", "", str(cert.hurwitz).lower()])
        writer.writerow(["gain_margin_a", "", repr(cert.gain_conditions.margin_a)])
        writer.writerow(["gain_margin_b", "", repr(cert.gain_conditions.margin_b)])
        writer.writerow(["delta_star_estimate", "", repr(cert.delta_star_estimate)])
        writer.writerow(["verdict", "", cert.verdict])


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log, metrics, cert = run_scenario(scenario)
    write_trajectory_csv(log, out / "trajectory.csv")
    write_metrics_csv(metrics, cert, out / "metrics.csv")
    (out / "certificate.txt").write_text("\n".join(cert.report_lines()) + "\n")
    (out / "scenario_echo.ini").write_text(emit_scenario(scenario))
    print(f"simulated {scenario.topology.n} followers for {scenario.sim.horizon} s; "
          f"verdict: {cert.verdict}")
    return 0 if cert.certified else 2


def cmd_verify(args) -> int:
    scenario = _load_scenario(args)
    scenario.validate()
    cert = build_certificate(
        scenario.controller,
        scenario.disturbance,
        scenario.delta_star_prior,
        scenario.topology,
    )
    print("\n".join(cert.report_lines()))
    return 0 if cert.certified else 2


def cmd_sweep(args) -> int:
    scenario = _load_scenario(args)
    n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    rows = string_stability_sweep(scenario, n_list)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "sup_error", "normalized_sup_error", "certified"])
        for row in rows:
            writer.writerow(
                [row.n, repr(row.sup_error), repr(row.normalized_sup_error),
                 str(row.certified).lower()]
            )
    for row in rows:
        print(f"N={row.n}: sup={row.sup_error:.6g} "
              f"normalized={row.normalized_sup_error:.6g} certified={row.certified}")
    return 0


def cmd_ablate(args) -> int:
    scenario = _load_scenario(args)
    result = run_ablation(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ablation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["vehicle", "post_transient_with", "post_transient_without", "ratio"]
        )
        for i in range(result.amplitude_ratio.size):
            writer.writerow(
                [
                    i + 1,
                    repr(float(result.with_adaptive.post_transient_amplitude[i])),
                    repr(float(result.without_adaptive.post_transient_amplitude[i])),
                    repr(float(result.amplitude_ratio[i])),
                ]
            )
    worst = float(np.max(result.amplitude_ratio))
    print(f"ablation amplitude ratio (with/without), worst vehicle: {worst:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoon-vss",
        description="Platoon control simulation and string-stability certification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--scenario", default=None, help="scenario file path")
        p.add_argument("--preset", default=None, help="named preset (paper-iv)")
        p.add_argument("--dt", type=float, default=None, help="override step size [s]")
        p.add_argument("--horizon", type=float, default=None, help="override horizon [s]")
        if with_out:
            p.add_argument("--out", default=".", help="output directory")

    p_sim = sub.add_parser("simulate", help="run the closed loop, write CSV + report")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="assemble and print the certificate only")
    common(p_ver, with_out=False)
    p_ver.set_defaults(func=cmd_verify)

    p_swp = sub.add_parser("sweep", help="string-stability sweep over platoon sizes")
    common(p_swp)
    p_swp.add_argument("--n-list", default="4,8,16,32", help="comma-separated sizes")
    p_swp.set_defaults(func=cmd_sweep)

    p_abl = sub.add_parser("ablate", help="paired runs with/without adaptive laws")
    common(p_abl)
    p_abl.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlatoonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
