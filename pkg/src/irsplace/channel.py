"""Direct LoS, IRS cascade and compound MIMO channel construction.

Channel matrices are complex ``numpy`` arrays shaped ``(n_rx, n_tx)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindSurfaceError, DegenerateGeometryError, ShapeError
from .geometry import (
    ReflectorGeometry,
    angle_to_normal,
    as_point,
    as_unit,
    cell_centers,
    distance,
    surface_basis,
)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class RadioParams:
    carrier_frequency: float
    tx_gain: float
    rx_gain: float
    total_power: float
    noise_power: float

    def __post_init__(self):
        for name in ("carrier_frequency", "tx_gain", "rx_gain", "total_power", "noise_power"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class AntennaArray:
    element_positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.element_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError(f"element_positions must be (count, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("non-finite element position")
        if pos.shape[0] > 1:
            gaps = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
            gaps[np.diag_indices_from(gaps)] = np.inf
            if gaps.min() <= 0.0:
                raise ValueError("array elements must be pairwise distinct")
        object.__setattr__(self, "element_positions", pos)

    @property
    def count(self) -> int:
        return self.element_positions.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self.element_positions.mean(axis=0)

    @classmethod
    def ula(cls, center, count: int, spacing: float, axis=(1.0, 0.0, 0.0)) -> "AntennaArray":
        """Uniform linear array centered on ``center`` along ``axis``."""
        offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
        return cls(as_point(center) + offsets[:, None] * as_unit(axis)[None, :])


@dataclass(frozen=True)
class PhaseProfile:
    phases: np.ndarray
    reflection_loss: float = 1.0

    @property
    def coefficients(self) -> np.ndarray:
        return self.reflection_loss * np.exp(1j * self.phases)


class CascadeScaling(str, enum.Enum):
    """Amplitude applied to ``H_ru diag(.) H_br`` before adding to the direct path.

    ``NORMALIZED`` scales by ``sqrt(beta_c) / N`` so a focused cascade delivers
    exactly ``alpha^2 beta_c`` end to end. ``UNNORMALIZED`` scales by
    ``sqrt(beta_c)`` only, on top of the ``N``-fold coherent array gain.
    """

    NORMALIZED = "normalized"
    UNNORMALIZED = "unnormalized"


@dataclass(frozen=True)
class Cascade:
    h_ru: np.ndarray
    profile: PhaseProfile
    h_br: np.ndarray
    beta_c: float

    @property
    def num_cells(self) -> int:
        return self.h_br.shape[0]


def _exact_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


def friis_gain(d: float, params: RadioParams) -> float:
    """Free-space power gain including both antenna gains."""
    return params.tx_gain * params.rx_gain * (params.wavelength / (4.0 * math.pi * d)) ** 2


def los_channel(bs: AntennaArray, user: AntennaArray, params: RadioParams) -> np.ndarray:
    d0 = distance(bs.center, user.center)
    if d0 == 0.0:
        raise DegenerateGeometryError("BS and user arrays coincide")
    d = _exact_distances(user.element_positions, bs.element_positions)
    return math.sqrt(friis_gain(d0, params)) * np.exp(1j * params.wavenumber * d)


def _check_not_on_surface(array: AntennaArray, reflector: ReflectorGeometry) -> None:
    t1, t2 = surface_basis(reflector.normal)
    half = reflector.edge_length / 2.0
    rel = array.element_positions - reflector.center
    on_plane = np.abs(rel @ reflector.normal) < 1e-12
    inside = (np.abs(rel @ t1) <= half) & (np.abs(rel @ t2) <= half)
    if np.any(on_plane & inside):
        raise DegenerateGeometryError("antenna element lies on the reflector surface")


def cascade_segment_channel(
    array: AntennaArray, reflector: ReflectorGeometry, side: str, params: RadioParams
) -> np.ndarray:
    """Unit-magnitude BS->IRS (``N x n_tx``) or IRS->user (``n_rx x N``) segment."""
    _check_not_on_surface(array, reflector)
    cells = cell_centers(reflector)
    if side == "bs_to_irs":
        d = _exact_distances(cells, array.element_positions)
    elif side == "irs_to_user":
        d = _exact_distances(array.element_positions, cells)
    else:
        raise ValueError(f"side must be 'bs_to_irs' or 'irs_to_user', got {side!r}")
    return np.exp(1j * params.wavenumber * d)


def focus_phase_profile(
    reflector: ReflectorGeometry, bs_center, asa_center, params: RadioParams, loss: float = 1.0
) -> PhaseProfile:
    """Conjugate phase map that co-phases every cell at ``asa_center``."""
    if not 0.0 < loss <= 1.0:
        raise ValueError("reflection loss must lie in (0, 1]")
    cells = cell_centers(reflector)
    path = np.linalg.norm(cells - as_point(bs_center), axis=1) + np.linalg.norm(
        cells - as_point(asa_center), axis=1
    )
    phases = np.mod(-params.wavenumber * path, 2.0 * math.pi)
    # mod of a tiny negative can round to exactly 2*pi
    phases[phases >= 2.0 * math.pi] = 0.0
    return PhaseProfile(phases=phases, reflection_loss=float(loss))


def incidence_angle(reflector: ReflectorGeometry, bs_center) -> float:
    return angle_to_normal(reflector.center, reflector.normal, bs_center)


def irs_path_gain(reflector: ReflectorGeometry, bs_center, asa_center, params: RadioParams) -> float:
    """Far-field BS->IRS->user power gain of a square plate, cosine-weighted by incidence."""
    phi = incidence_angle(reflector, bs_center)
    if phi >= math.pi / 2:
        raise BehindSurfaceError(f"incidence angle {math.degrees(phi):.2f} deg is behind the surface")
    d_br = distance(reflector.center, bs_center)
    d_ru = distance(reflector.center, asa_center)
    if d_ru == 0.0:
        raise DegenerateGeometryError("user coincides with the reflector center")
    aperture = reflector.num_cells * reflector.cell_pitch**2
    return (
        params.tx_gain
        * params.rx_gain
        / (4.0 * math.pi) ** 2
        * (aperture / (d_br * d_ru)) ** 2
        * math.cos(phi) ** 2
    )


def build_cascade(
    reflector: ReflectorGeometry,
    bs: AntennaArray,
    user: AntennaArray,
    profile: PhaseProfile,
    params: RadioParams,
) -> Cascade:
    """Cascade toward ``user`` using a (possibly off-focus) fixed ``profile``."""
    return Cascade(
        h_ru=cascade_segment_channel(user, reflector, "irs_to_user", params),
        profile=profile,
        h_br=cascade_segment_channel(bs, reflector, "bs_to_irs", params),
        beta_c=irs_path_gain(reflector, bs.center, user.center, params),
    )


def cascade_matrix(cascade: Cascade, scaling: CascadeScaling = CascadeScaling.NORMALIZED) -> np.ndarray:
    n = cascade.num_cells
    if cascade.h_ru.shape[1] != n or cascade.profile.phases.shape != (n,):
        raise ShapeError(
            f"cascade segments disagree on cell count: H_ru {cascade.h_ru.shape}, "
            f"profile {cascade.profile.phases.shape}, H_br {cascade.h_br.shape}"
        )
    amp = math.sqrt(cascade.beta_c)
    if CascadeScaling(scaling) is CascadeScaling.NORMALIZED:
        amp /= n
    return amp * ((cascade.h_ru * cascade.profile.coefficients[None, :]) @ cascade.h_br)


def compound_channel(
    direct: np.ndarray, cascades=(), scaling: CascadeScaling = CascadeScaling.NORMALIZED
) -> np.ndarray:
    """Direct channel plus the sum of single-bounce cascades."""
    h = np.array(direct, dtype=complex, copy=True)
    for cascade in cascades:
        part = cascade_matrix(cascade, scaling)
        if part.shape != h.shape:
            raise ShapeError(f"cascade yields {part.shape}, direct channel is {h.shape}")
        h += part
    return h
