"""IRS-to-ASA assignment: candidate filtering, rate tables and exact solvers."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import channel_rate
from .channel import build_cascade, compound_channel, focus_phase_profile, los_channel
from .errors import DegenerateGeometryError, InstanceTooLargeError
from .geometry import (
    ReflectorGeometry,
    angle_to_normal,
    as_unit,
    distance,
    fresnel_distance,
    size_reflector,
)

log = logging.getLogger(__name__)

ORACLE_STATE_LIMIT = 10**6

Subset = tuple[int, ...]


@dataclass
class CandidateSet:
    per_asa_feasible: list[tuple[int, ...]]
    incidence_threshold: float
    reflection_threshold: float
    num_irs: int
    reasons: dict[tuple[int, int], str] = field(default_factory=dict)

    @property
    def globally_infeasible(self) -> tuple[int, ...]:
        used = set(itertools.chain.from_iterable(self.per_asa_feasible))
        return tuple(m for m in range(self.num_irs) if m not in used)


def irs_angles(scenario, m: int, u: int) -> tuple[float, float]:
    """(incidence from BS, departure toward ASA ``u``) on candidate ``m``, radians."""
    cand = scenario.irs_candidates[m]
    return (
        angle_to_normal(cand.center, cand.normal, scenario.bs_center),
        angle_to_normal(cand.center, cand.normal, scenario.asa_centers[u]),
    )


def build_candidate_set(scenario) -> CandidateSet:
    phi_i, phi_r = scenario.incidence_threshold, scenario.reflection_threshold
    # a surface facing away is never usable, whatever the thresholds
    lim_i, lim_r = min(phi_i, math.pi / 2), min(phi_r, math.pi / 2)
    feasible, reasons = [], {}
    for u in range(scenario.num_asas):
        ok = []
        for m in range(scenario.num_irs):
            try:
                inc, dep = irs_angles(scenario, m, u)
            except DegenerateGeometryError as exc:
                reasons[(u, m)] = f"degenerate geometry: {exc}"
                continue
            if not inc < lim_i:
                reasons[(u, m)] = f"incidence {math.degrees(inc):.1f} deg"
            elif not dep < lim_r:
                reasons[(u, m)] = f"departure {math.degrees(dep):.1f} deg"
            else:
                ok.append(m)
        feasible.append(tuple(ok))
    return CandidateSet(feasible, phi_i, phi_r, scenario.num_irs, reasons)


@dataclass
class RateTable:
    num_asas: int
    num_irs: int
    s_max: int
    entries: dict[tuple[int, Subset], float]
    reflectors: dict[tuple[int, int], ReflectorGeometry] = field(default_factory=dict)
    excluded: dict[tuple[int, int], str] = field(default_factory=dict)

    def direct_rate(self, u: int) -> float:
        return self.entries[(u, ())]

    def options(self, u: int) -> list[tuple[Subset, float]]:
        """All recorded ``(subset, rate)`` pairs for ASA ``u`` in lexicographic order."""
        return sorted((mu, r) for (v, mu), r in self.entries.items() if v == u)


def sized_reflector(scenario, m: int, u: int) -> ReflectorGeometry:
    cand = scenario.irs_candidates[m]
    return size_reflector(
        cand.center,
        cand.normal,
        scenario.cell_pitch(m),
        cand.max_area_m2,
        scenario.asa_centers[u],
        scenario.radio.wavelength,
        scenario.sizing_rule,
    )


def focused_cascade(scenario, m: int, u: int, target=None, reflector=None):
    """Cascade of IRS ``m`` with its phase map focused on ASA ``u``, seen from ``target``.

    ``target`` defaults to ASA ``u`` itself.
    """
    radio = scenario.radio
    geom = reflector if reflector is not None else sized_reflector(scenario, m, u)
    profile = focus_phase_profile(geom, scenario.bs_center, scenario.asa_centers[u], radio, scenario.reflection_loss)
    point = scenario.asa_centers[u] if target is None else target
    return build_cascade(geom, scenario.bs_antenna(), scenario.user_antenna(point), profile, radio)


def build_rate_table(scenario, candidates: CandidateSet) -> RateTable:
    radio = scenario.radio
    bs = scenario.bs_antenna()
    table = RateTable(scenario.num_asas, scenario.num_irs, int(scenario.s_max), {})
    for u in range(scenario.num_asas):
        user = scenario.user_antenna(scenario.asa_centers[u])
        direct = los_channel(bs, user, radio)
        direct_rate = channel_rate(direct, radio).rate
        table.entries[(u, ())] = direct_rate

        cascades = {}
        for m in candidates.per_asa_feasible[u]:
            try:
                geom = sized_reflector(scenario, m, u)
                cascades[m] = focused_cascade(scenario, m, u, reflector=geom)
            except DegenerateGeometryError as exc:
                table.excluded[(u, m)] = str(exc)
                log.info("ASA %d / IRS %d excluded: %s", u, m, exc)
                continue
            table.reflectors[(u, m)] = geom

        usable = sorted(cascades)
        for k in range(1, min(int(scenario.s_max), len(usable)) + 1):
            for mu in itertools.combinations(usable, k):
                h = compound_channel(direct, [cascades[m] for m in mu], scenario.cascade_scaling)
                rate = channel_rate(h, radio).rate
                if rate < direct_rate - 1e-6:
                    log.warning("ASA %d subset %s rate %.4f below direct %.4f", u, mu, rate, direct_rate)
                table.entries[(u, mu)] = rate
    return table


@dataclass(frozen=True)
class Assignment:
    subsets: tuple[Subset, ...]
    per_asa_rate: tuple[float, ...]
    objective: float
    num_irs: int

    @property
    def alpha(self) -> np.ndarray:
        a = np.zeros((len(self.subsets), self.num_irs), dtype=int)
        for u, mu in enumerate(self.subsets):
            a[u, list(mu)] = 1
        return a

    def check(self, s_max: int, candidates: CandidateSet | None = None) -> None:
        """Raise ``ValueError`` unless binary, per-IRS and per-ASA limits all hold."""
        a = self.alpha
        if a.size and a.sum(axis=0).max() > 1:
            raise ValueError("an IRS is assigned to more than one ASA")
        if a.size and a.sum(axis=1).max() > s_max:
            raise ValueError(f"an ASA is served by more than s_max={s_max} IRSs")
        if candidates is not None:
            for u, mu in enumerate(self.subsets):
                bad = set(mu) - set(candidates.per_asa_feasible[u])
                if bad:
                    raise ValueError(f"ASA {u} assigned infeasible IRS(s) {sorted(bad)}")


def _assignment(table: RateTable, subsets) -> Assignment:
    rates = tuple(table.entries[(u, mu)] for u, mu in enumerate(subsets))
    total = 0.0
    for r in rates:
        total += r
    return Assignment(tuple(subsets), rates, total / table.num_asas, table.num_irs)


def _hungarian(cost: np.ndarray) -> list[int]:
    """Min-cost assignment of every row to a distinct column (rows <= cols)."""
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: row (1-based) matched to column j
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = np.inf, 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j], way[j] = cur, j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, m + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


def _solve_matching(table: RateTable) -> Assignment:
    xi, M = table.num_asas, table.num_irs
    # one private "direct service" column per ASA; positive cost marks forbidden pairs
    cost = np.ones((xi, M + xi))
    cost[:, M:] = 0.0
    gains = {}
    for (u, mu), r in table.entries.items():
        if len(mu) == 1:
            gains[(u, mu[0])] = r - table.direct_rate(u)
            cost[u, mu[0]] = -gains[(u, mu[0])]
    cols = _hungarian(cost)
    subsets = [
        (c,) if c < M and gains.get((u, c), 0.0) > 0.0 else ()
        for u, c in enumerate(cols)
    ]
    return _assignment(table, subsets)


def _solve_branch_and_bound(table: RateTable, incumbent: Assignment | None = None) -> Assignment:
    xi = table.num_asas
    opts = []
    for u in range(xi):
        o = [(mu, r) for mu, r in table.options(u) if len(mu) <= table.s_max]
        o.sort(key=lambda t: (-t[1], t[0]))
        opts.append(o)
    best_rest = [0.0] * (xi + 1)
    for u in range(xi - 1, -1, -1):
        best_rest[u] = best_rest[u + 1] + opts[u][0][1]
    slack = 1e-9 * max(1.0, abs(best_rest[0]))

    best = {"total": -math.inf, "key": None}
    if incumbent is not None:
        total = 0.0
        for r in incumbent.per_asa_rate:
            total += r
        best["total"], best["key"] = total, incumbent.subsets
    chosen: list[Subset] = []

    def dfs(u: int, used: frozenset, partial: float) -> None:
        if u == xi:
            key = tuple(chosen)
            if partial > best["total"] or (partial == best["total"] and key < best["key"]):
                best["total"], best["key"] = partial, key
            return
        if partial + best_rest[u] + slack < best["total"]:
            return
        for mu, r in opts[u]:
            if used.isdisjoint(mu):
                chosen.append(mu)
                dfs(u + 1, used.union(mu), partial + r)
                chosen.pop()

    dfs(0, frozenset(), 0.0)
    return _assignment(table, best["key"])


def solve_assignment(table: RateTable) -> Assignment:
    """Globally optimal assignment maximising the mean ASA rate.

    ``s_max == 1`` is solved as a maximum-weight bipartite matching on rate gains
    over direct service; larger ``s_max`` by depth-first branch-and-bound.
    """
    if table.num_asas == 0:
        return Assignment((), (), 0.0, table.num_irs)
    if table.s_max == 1:
        # the matching optimum prunes everything but tied branches, which fixes the tie-break
        return _solve_branch_and_bound(table, incumbent=_solve_matching(table))
    return _solve_branch_and_bound(table)


def exhaustive_oracle(table: RateTable, limit: int | None = None) -> Assignment:
    """Optimum by enumerating every assignment; ties go to the lexicographically smallest."""
    xi = table.num_asas
    if xi == 0:
        return Assignment((), (), 0.0, table.num_irs)
    limit = ORACLE_STATE_LIMIT if limit is None else limit
    opts = [[(mu, r) for mu, r in table.options(u) if len(mu) <= table.s_max] for u in range(xi)]
    states, prod = 0, 1
    for o in opts:
        prod *= len(o)
        states += prod
    if states > limit:
        raise InstanceTooLargeError(f"{states} partial states exceeds the oracle guard of {limit}")

    best_total, best_key = -math.inf, None
    stack = [(0, frozenset(), 0.0, ())]
    while stack:
        u, used, partial, key = stack.pop()
        if u == xi:
            if partial > best_total or (partial == best_total and key < best_key):
                best_total, best_key = partial, key
            continue
        for mu, r in reversed(opts[u]):
            if used.isdisjoint(mu):
                stack.append((u + 1, used.union(mu), partial + r, key + (mu,)))
    return _assignment(table, best_key)


def fixed_assignment(table: RateTable, subsets) -> Assignment:
    """Score a caller-chosen assignment against ``table`` (no optimisation)."""
    subsets = tuple(tuple(sorted(mu)) for mu in subsets)
    missing = [(u, mu) for u, mu in enumerate(subsets) if (u, mu) not in table.entries]
    if missing:
        raise DegenerateGeometryError(f"subset(s) not in the rate table: {missing}")
    return _assignment(table, subsets)


@dataclass(frozen=True)
class InterimPoint:
    segment: tuple[int, int]
    fraction: float
    point: tuple[float, float, float]
    rate: float
    nearest_asa: int
    # IRSs whose Fresnel zone contains the point (far-field gain is optimistic there)
    near_field_irs: tuple[int, ...] = ()


def interim_points(scenario) -> list[tuple[tuple[int, int], float, np.ndarray]]:
    out = []
    for u in range(scenario.num_asas - 1):
        a, b = scenario.asa_point(u), scenario.asa_point(u + 1)
        for frac in (1.0 / 3.0, 2.0 / 3.0):
            out.append(((u, u + 1), frac, a + frac * (b - a)))
    return out


def rate_at(scenario, point, served: list[tuple[int, int]]) -> float:
    """Rate at ``point`` with every ``(asa, irs)`` pair in ``served`` left as deployed.

    Each reflector keeps the size and phase map of its own ASA; reflectors
    that face away from ``point`` contribute nothing.
    """
    radio = scenario.radio
    user = scenario.user_antenna(point)
    direct = los_channel(scenario.bs_antenna(), user, radio)
    cascades = []
    for u, m in served:
        cand = scenario.irs_candidates[m]
        offset = np.asarray(point, dtype=float) - np.asarray(cand.center)
        # a point on the surface itself or behind it receives nothing from it
        if np.linalg.norm(offset) < 1e-9 or np.dot(as_unit(cand.normal), offset) <= 0.0:
            continue
        cascades.append(focused_cascade(scenario, m, u, target=point))
    h = compound_channel(direct, cascades, scenario.cascade_scaling)
    return channel_rate(h, radio).rate


def evaluate_interim(scenario, assignment: Assignment) -> list[InterimPoint]:
    """Rates at the two trisection points of every consecutive ASA pair."""
    served = [(u, m) for u, mu in enumerate(assignment.subsets) for m in mu]
    wavelength = scenario.radio.wavelength
    fresnel = {(u, m): fresnel_distance(sized_reflector(scenario, m, u), wavelength) for u, m in served}
    out = []
    for seg, frac, p in interim_points(scenario):
        rate = rate_at(scenario, p, served)
        nearest = seg[0] if frac < 0.5 else seg[1]
        near = tuple(
            sorted(m for (u, m), f in fresnel.items() if distance(p, scenario.irs_candidates[m].center) < f)
        )
        out.append(InterimPoint(seg, frac, tuple(float(x) for x in p), rate, nearest, near))
    return out
