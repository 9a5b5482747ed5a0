"""Experiment orchestration and machine-readable result emission."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import ScenarioError
from .placement import (
    Assignment,
    CandidateSet,
    InterimPoint,
    RateTable,
    build_candidate_set,
    build_rate_table,
    evaluate_interim,
    fixed_assignment,
    solve_assignment,
)

CSV_COLUMNS = (
    "sweep_value",
    "asa_index",
    "direct_rate_bps_hz",
    "optimized_rate_bps_hz",
    "assigned_irs",
    "reflector_area_m2",
    "num_cells",
)
_DECIMALS = 9


@dataclass(frozen=True)
class AsaResult:
    index: int
    center: tuple[float, float, float]
    direct_rate: float
    assigned: tuple[int, ...]
    irs_rate: float
    reflector_area: float
    num_cells: int


@dataclass
class RateReport:
    per_asa: list[AsaResult]
    average_direct: float
    average_optimized: float
    metadata: dict
    interim: list[InterimPoint] | None = None
    assignment: Assignment | None = field(default=None, repr=False)
    table: RateTable | None = field(default=None, repr=False)
    candidates: CandidateSet | None = field(default=None, repr=False)

    @property
    def assigned_areas(self) -> list[float]:
        return [
            self.table.reflectors[(r.index, m)].area
            for r in self.per_asa
            for m in r.assigned
        ]

    @property
    def mean_reflector_area(self) -> float | None:
        areas = self.assigned_areas
        return sum(areas) / len(areas) if areas else None

    def to_dict(self) -> dict:
        def rnd(x):
            return None if x is None else round(float(x), _DECIMALS)

        out = {
            "metadata": self.metadata,
            "average_direct_bps_hz": rnd(self.average_direct),
            "average_optimized_bps_hz": rnd(self.average_optimized),
            "mean_reflector_area_m2": rnd(self.mean_reflector_area),
            "per_asa": [
                {
                    "asa": r.index + 1,
                    "center": [rnd(x) for x in r.center],
                    "direct_rate_bps_hz": rnd(r.direct_rate),
                    "assigned_irs": [m + 1 for m in r.assigned],
                    "irs_rate_bps_hz": rnd(r.irs_rate),
                    "reflector_area_m2": rnd(r.reflector_area),
                    "num_cells": r.num_cells,
                }
                for r in self.per_asa
            ],
        }
        if self.interim is not None:
            out["interim"] = [
                {
                    "segment": [p.segment[0] + 1, p.segment[1] + 1],
                    "fraction": rnd(p.fraction),
                    "point": [rnd(x) for x in p.point],
                    "rate_bps_hz": rnd(p.rate),
                    "nearest_asa": p.nearest_asa + 1,
                    "nearest_asa_rate_bps_hz": rnd(self.per_asa[p.nearest_asa].irs_rate),
                    "near_field_irs": [m + 1 for m in p.near_field_irs],
                }
                for p in self.interim
            ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def csv_rows(self, sweep_value="") -> list[dict]:
        return [
            {
                "sweep_value": sweep_value,
                "asa_index": r.index + 1,
                "direct_rate_bps_hz": f"{r.direct_rate:.6f}",
                "optimized_rate_bps_hz": f"{r.irs_rate:.6f}",
                "assigned_irs": ";".join(str(m + 1) for m in r.assigned),
                "reflector_area_m2": f"{r.reflector_area:.6f}",
                "num_cells": r.num_cells,
            }
            for r in self.per_asa
        ]


def check_report_dict(data: dict) -> None:
    """Re-validate the assignment stored in a serialized report."""
    s_max = data["metadata"]["s_max"]
    seen = set()
    for row in data["per_asa"]:
        irs = row["assigned_irs"]
        if len(irs) > s_max:
            raise ValueError(f"ASA {row['asa']} served by {len(irs)} IRSs > s_max={s_max}")
        if seen.intersection(irs):
            raise ValueError(f"IRS(s) {sorted(seen.intersection(irs))} serve more than one ASA")
        seen.update(irs)


def _metadata(scenario, solver: str) -> dict:
    return {
        "scenario": scenario.name,
        "frequency_ghz": scenario.frequency_ghz,
        "separation_m": None if scenario.separation is None else round(scenario.separation, _DECIMALS),
        "uniform_spacing": scenario.uniformly_spaced,
        "s_max": int(scenario.s_max),
        "sizing_rule": scenario.sizing_rule.value,
        "cascade_scaling": scenario.cascade_scaling.value,
        "solver": solver,
    }


def _report(scenario, table, candidates, assignment, solver, interim) -> RateReport:
    per_asa = []
    for u, mu in enumerate(assignment.subsets):
        geoms = [table.reflectors[(u, m)] for m in mu]
        per_asa.append(
            AsaResult(
                index=u,
                center=tuple(scenario.asa_centers[u]),
                direct_rate=table.direct_rate(u),
                assigned=mu,
                irs_rate=assignment.per_asa_rate[u],
                reflector_area=sum(g.area for g in geoms),
                num_cells=sum(g.num_cells for g in geoms),
            )
        )
    avg_direct = sum(r.direct_rate for r in per_asa) / len(per_asa)
    return RateReport(
        per_asa=per_asa,
        average_direct=avg_direct,
        average_optimized=assignment.objective,
        metadata=_metadata(scenario, solver),
        interim=evaluate_interim(scenario, assignment) if interim and scenario.num_asas >= 2 else None,
        assignment=assignment,
        table=table,
        candidates=candidates,
    )


def run_optimize(scenario, interim: bool = True) -> RateReport:
    candidates = build_candidate_set(scenario)
    table = build_rate_table(scenario, candidates)
    assignment = solve_assignment(table)
    assignment.check(int(scenario.s_max), candidates)
    return _report(scenario, table, candidates, assignment, "exact", interim)


def evaluate_fixed(scenario, subsets, interim: bool = False) -> RateReport:
    """Report for a prescribed assignment, e.g. one optimised at another frequency."""
    candidates = build_candidate_set(scenario)
    table = build_rate_table(scenario, candidates)
    assignment = fixed_assignment(table, subsets)
    assignment.check(int(scenario.s_max), candidates)
    return _report(scenario, table, candidates, assignment, "fixed", interim)


SWEEP_AXES = ("frequency", "separation", "cap")


def sweep_points(scenario, axis: str):
    """``(value, scenario)`` pairs for one sweep axis."""
    if axis == "frequency":
        values, apply = scenario.sweep.frequency_ghz, scenario.with_frequency
    elif axis == "separation":
        values, apply = scenario.sweep.separation_m, scenario.with_separation
    elif axis == "cap":
        values, apply = scenario.sweep.cap_m2, scenario.with_cap
    else:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if not values:
        raise ScenarioError(f"scenario has no sweep values for axis {axis!r}")
    return [(v, apply(v)) for v in values]


def run_sweep(scenario, axis: str, interim: bool = True) -> list[tuple[object, RateReport]]:
    return [(v, run_optimize(s, interim=interim)) for v, s in sweep_points(scenario, axis)]


def sweep_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for value, report in results:
        writer.writerows(report.csv_rows("uncapped" if value is None else value))
    return buf.getvalue()


def sweep_json(axis: str, results) -> str:
    payload = {
        "axis": axis,
        "points": [{"sweep_value": v, "report": r.to_dict()} for v, r in results],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
