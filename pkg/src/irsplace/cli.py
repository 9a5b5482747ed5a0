"""Command-line entry point: ``irsplace {validate,evaluate,optimize,sweep,interim}``.

IRS and ASA indices on the command line and in emitted files are 1-based,
matching the order in the scenario file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .capacity import channel_rate
from .channel import compound_channel, los_channel
from .errors import DegenerateGeometryError, InstanceTooLargeError, ScenarioError
from .placement import build_candidate_set, exhaustive_oracle, focused_cascade
from .runner import SWEEP_AXES, run_optimize, run_sweep, sweep_csv, sweep_json
from .scenario import bundled_scenario_path, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GEOMETRY = 3
EXIT_GUARD = 4


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists() or p.suffix:
        return p
    return bundled_scenario_path(path)


def _load(args):
    scenario = load_scenario(_resolve(args.scenario))
    if getattr(args, "frequency", None) is not None:
        scenario = scenario.with_frequency(args.frequency)
    return scenario


def _indices(text: str, upper: int, what: str) -> list[int]:
    out = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        try:
            i = int(tok)
        except ValueError:
            raise ScenarioError(f"{what} index {tok!r} is not an integer") from None
        if not 1 <= i <= upper:
            raise ScenarioError(f"{what} index {i} outside 1..{upper}")
        out.append(i - 1)
    return out


def cmd_validate(args) -> int:
    s = _load(args)
    cands = build_candidate_set(s)
    print(f"{s.name}: {s.num_asas} ASAs, {s.num_irs} IRS candidates, f = {s.frequency_ghz:g} GHz")
    spacing = ", ".join(f"{d:.3f}" for d in s.asa_spacings()) or "-"
    print(f"ASA spacing [m]: {spacing} ({'uniform' if s.uniformly_spaced else 'non-uniform'})")
    for u, feas in enumerate(cands.per_asa_feasible):
        print(f"ASA {u + 1} feasible IRS: {', '.join(str(m + 1) for m in feas) or 'none'}")
    if cands.globally_infeasible:
        print("IRS serving no ASA: " + ", ".join(str(m + 1) for m in cands.globally_infeasible))
    for axis in ("frequency_ghz", "separation_m", "cap_m2"):
        values = getattr(s.sweep, axis)
        if values:
            print(f"sweep {axis}: {list(values)}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    s = _load(args)
    u = _indices(args.asa, s.num_asas, "ASA")
    if len(u) != 1:
        raise ScenarioError("--asa takes exactly one index")
    u = u[0]
    subset = sorted(set(_indices(args.irs or "", s.num_irs, "IRS")))
    if len(subset) > s.s_max:
        raise ScenarioError(f"{len(subset)} IRSs exceed s_max={s.s_max}")
    feasible = build_candidate_set(s).per_asa_feasible[u]
    bad = [m + 1 for m in subset if m not in feasible]
    if bad:
        raise DegenerateGeometryError(f"IRS {bad} cannot serve ASA {u + 1} (angle limits or geometry)")
    radio = s.radio
    direct = los_channel(s.bs_antenna(), s.user_antenna(s.asa_centers[u]), radio)
    h = compound_channel(direct, [focused_cascade(s, m, u) for m in subset], s.cascade_scaling)
    alloc = channel_rate(h, radio)
    print(f"ASA {u + 1}, IRS {{{', '.join(str(m + 1) for m in subset)}}}: {alloc.rate:.6f} bits/s/Hz")
    print(f"direct: {channel_rate(direct, radio).rate:.6f} bits/s/Hz, active streams: {alloc.active_streams}")
    return EXIT_OK


def _print_report(report) -> None:
    print(f"{'ASA':>4} {'direct':>10} {'optimized':>10}  IRS")
    for r in report.per_asa:
        irs = ",".join(str(m + 1) for m in r.assigned) or "-"
        print(f"{r.index + 1:>4} {r.direct_rate:>10.4f} {r.irs_rate:>10.4f}  {irs}")
    print(f"mean {report.average_direct:>10.4f} {report.average_optimized:>10.4f}")


def cmd_optimize(args) -> int:
    s = _load(args)
    report = run_optimize(s, interim=not args.no_interim)
    _print_report(report)
    if args.verify:
        oracle = exhaustive_oracle(report.table)
        if oracle.objective != report.average_optimized:
            print(f"oracle disagrees: {oracle.objective!r} vs {report.average_optimized!r}", file=sys.stderr)
            return 1
        print("verified against exhaustive enumeration")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{s.name}.json").write_text(report.to_json())
        (out / f"{s.name}.csv").write_text(sweep_csv([(s.frequency_ghz, report)]))
        print(f"wrote {out / (s.name + '.json')} and {out / (s.name + '.csv')}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = _load(args)
    results = run_sweep(s, args.axis, interim=not args.no_interim)
    text = sweep_csv(results)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{s.name}_{args.axis}.csv").write_text(text)
        (out / f"{s.name}_{args.axis}.json").write_text(sweep_json(args.axis, results))
        print(f"wrote {len(results)} sweep points to {out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_interim(args) -> int:
    s = _load(args)
    report = run_optimize(s, interim=True)
    _print_report(report)
    if not report.interim:
        print("fewer than two ASAs: no interim points")
        return EXIT_OK
    print(f"{'segment':>8} {'point':>26} {'rate':>9} {'nearest':>9}")
    for p in report.interim:
        seg = f"{p.segment[0] + 1}-{p.segment[1] + 1}"
        pt = "(" + ", ".join(f"{x:.2f}" for x in p.point) + ")"
        near = report.per_asa[p.nearest_asa].irs_rate
        flag = "  near-field: IRS " + ",".join(str(m + 1) for m in p.near_field_irs) if p.near_field_irs else ""
        print(f"{seg:>8} {pt:>26} {p.rate:>9.4f} {near:>9.4f}{flag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsplace", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log rate-table exclusions")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario file, or the name of a bundled one (e.g. table1_D20)")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "parse and validate a scenario")
    p = add("evaluate", cmd_evaluate, "rate of one (ASA, IRS subset) entry")
    p.add_argument("--asa", required=True, help="ASA index (1-based)")
    p.add_argument("--irs", default="", help="comma-separated IRS indices (1-based); empty for direct")
    p.add_argument("--frequency", type=float, help="override carrier frequency [GHz]")
    p = add("optimize", cmd_optimize, "solve the placement problem")
    p.add_argument("--out", help="directory for JSON and CSV output")
    p.add_argument("--frequency", type=float, help="override carrier frequency [GHz]")
    p.add_argument("--no-interim", action="store_true", help="skip interim-point evaluation")
    p.add_argument("--verify", action="store_true", help="cross-check against exhaustive enumeration")
    p = add("sweep", cmd_sweep, "optimize over a sweep axis")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--out", help="directory for CSV and JSON output (default: CSV to stdout)")
    p.add_argument("--frequency", type=float, help="override carrier frequency [GHz]")
    p.add_argument("--no-interim", action="store_true", help="skip interim-point evaluation")
    p = add("interim", cmd_interim, "rates at corridor trisection points")
    p.add_argument("--frequency", type=float, help="override carrier frequency [GHz]")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DegenerateGeometryError as exc:
        print(f"infeasible geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except InstanceTooLargeError as exc:
        print(f"solver guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
