"""Point/vector helpers, incidence angles and far-field reflector sizing.

Points and directions are plain ``numpy`` arrays of shape ``(3,)`` in meters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, ReflectorDegenerateError

# Relative slack so that sqrt(A)/pitch landing a hair under an integer still floors up.
_FLOOR_SLACK = 1e-12
_COINCIDENT_TOL = 1e-12


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected 3 coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite coordinates: {arr}")
    return arr


def as_unit(v) -> np.ndarray:
    """Return ``v`` scaled to unit Euclidean norm."""
    arr = as_point(v)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise DegenerateGeometryError("zero-length direction vector")
    return arr / norm


def distance(a, b) -> float:
    return float(np.linalg.norm(as_point(a) - as_point(b)))


def angle_to_normal(surface_point, normal, external_point) -> float:
    """Angle in radians between ``normal`` and the ray toward ``external_point``.

    Values above pi/2 mean the point lies behind the surface.
    """
    v = as_point(external_point) - as_point(surface_point)
    d = np.linalg.norm(v)
    if d <= _COINCIDENT_TOL:
        raise DegenerateGeometryError("external point coincides with the surface point")
    cosang = float(np.dot(as_unit(normal), v / d))
    return math.acos(min(1.0, max(-1.0, cosang)))


def surface_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Two in-plane unit vectors ``(t1, t2)`` with ``t1 x t2 = normal``.

    ``t1`` is horizontal whenever the surface is not itself horizontal.
    """
    n = as_unit(normal)
    ref = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.999 else np.array([1.0, 0.0, 0.0])
    t1 = np.cross(ref, n)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


class SizingRule(str, enum.Enum):
    """How the far-field bound turns into a per-ASA cell count.

    ``AREA_FORMULA`` caps the aperture area at ``wavelength * d_ru / 4``, which puts
    the served point exactly on the ``4 a^2 / wavelength`` boundary.
    ``CELL_COUNT_FORMULA`` caps the total cell count at ``floor(d_ru / (4 pitch))``;
    it is four times stricter at quarter-wavelength pitch.
    """

    AREA_FORMULA = "area_formula"
    CELL_COUNT_FORMULA = "cell_count_formula"


@dataclass(frozen=True)
class ReflectorGeometry:
    center: np.ndarray
    normal: np.ndarray
    cell_pitch: float
    max_area: float
    cells_per_edge: int

    @property
    def num_cells(self) -> int:
        return self.cells_per_edge * self.cells_per_edge

    @property
    def edge_length(self) -> float:
        return self.cells_per_edge * self.cell_pitch

    @property
    def area(self) -> float:
        return self.edge_length**2


def size_reflector(
    center,
    normal,
    cell_pitch: float,
    max_area: float | None,
    asa_center,
    wavelength: float,
    rule: SizingRule = SizingRule.AREA_FORMULA,
) -> ReflectorGeometry:
    """Size a square reflector so ``asa_center`` sits outside its Fresnel zone.

    ``max_area=None`` removes the physical cap and leaves only the far-field bound.
    """
    if wavelength <= 0 or cell_pitch <= 0:
        raise ValueError("wavelength and cell_pitch must be positive")
    cap = math.inf if max_area is None else float(max_area)
    if cap <= 0:
        raise ReflectorDegenerateError("max_area must be positive")
    center = as_point(center)
    d_ru = distance(center, asa_center)
    if d_ru <= _COINCIDENT_TOL:
        raise DegenerateGeometryError("ASA center coincides with the reflector center")

    rule = SizingRule(rule)
    if rule is SizingRule.AREA_FORMULA:
        area = min(cap, wavelength * d_ru / 4.0)
        edge = math.floor(math.sqrt(area) / cell_pitch * (1.0 + _FLOOR_SLACK))
    else:
        n_far = math.floor(d_ru / (4.0 * cell_pitch) * (1.0 + _FLOOR_SLACK))
        n_cap = math.floor(cap / cell_pitch**2 * (1.0 + _FLOOR_SLACK)) if math.isfinite(cap) else n_far
        edge = math.isqrt(min(n_far, n_cap))
    if edge < 1:
        raise ReflectorDegenerateError(
            f"reflector too small for one cell (pitch {cell_pitch:.4g} m, cap {cap:.4g} m^2)"
        )
    return ReflectorGeometry(
        center=center,
        normal=as_unit(normal),
        cell_pitch=float(cell_pitch),
        max_area=cap,
        cells_per_edge=int(edge),
    )


def fresnel_distance(geom: ReflectorGeometry, wavelength: float) -> float:
    return 4.0 * geom.edge_length**2 / wavelength


def cell_centers(geom: ReflectorGeometry) -> np.ndarray:
    """Unit-cell centers on a square grid, shape ``(num_cells, 3)``."""
    t1, t2 = surface_basis(geom.normal)
    offsets = (np.arange(geom.cells_per_edge) - (geom.cells_per_edge - 1) / 2.0) * geom.cell_pitch
    grid = (
        geom.center
        + offsets[:, None, None] * t1[None, None, :]
        + offsets[None, :, None] * t2[None, None, :]
    )
    return grid.reshape(-1, 3)
