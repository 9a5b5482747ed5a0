"""SVD multi-stream capacity with water-filling power allocation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoChannelError

SV_RELATIVE_FLOOR = 1e-12


@dataclass(frozen=True)
class StreamAllocation:
    singular_values: np.ndarray
    powers: np.ndarray
    water_level: float
    rate: float

    @property
    def active_streams(self) -> int:
        return int(np.count_nonzero(self.powers > 0))


def singular_values(h) -> np.ndarray:
    """Descending singular values; those below ``1e-12 * max`` are set to zero."""
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel has non-finite entries")
    s = np.linalg.svd(h, compute_uv=False)
    if s.size and s[0] > 0:
        s = np.where(s < SV_RELATIVE_FLOOR * s[0], 0.0, s)
    return s


def _stream_rate(powers, svals, noise_power: float) -> float:
    return float(np.sum(np.log1p(powers * svals**2 / noise_power)) / np.log(2.0))


def water_fill(svals, total_power: float, noise_power: float) -> StreamAllocation:
    """Exact water-filling over the eigen-streams.

    Streams are activated strongest first; with ``k`` active the level is
    ``mu = (P + sum_{s<=k} noise / lambda_s^2) / k`` and ``k`` is the largest
    count whose weakest member still sits below ``mu``.
    """
    if total_power <= 0 or noise_power <= 0:
        raise ValueError("total_power and noise_power must be positive")
    s = np.sort(np.asarray(svals, dtype=float))[::-1]
    pos = s[s > 0]
    if pos.size == 0:
        raise NoChannelError("all singular values are zero")
    floors = noise_power / pos**2  # inverse stream SNR per unit power

    k = pos.size
    while k > 1:
        mu = (total_power + floors[:k].sum()) / k
        if mu > floors[k - 1]:
            break
        k -= 1
    mu = (total_power + floors[:k].sum()) / k

    # p_i = P/k + mean_j(floor_j - floor_i) avoids cancelling P against a huge floor
    active = floors[:k]
    powers = np.zeros_like(s)
    powers[:k] = total_power / k + (active[None, :] - active[:, None]).mean(axis=1)
    powers[:k] = np.maximum(powers[:k], 0.0)
    powers[:k] *= total_power / powers[:k].sum()
    rate = _stream_rate(powers, s, noise_power)
    return StreamAllocation(singular_values=s, powers=powers, water_level=float(mu), rate=rate)


def channel_rate(h, params) -> StreamAllocation:
    """Water-filled rate in bits/s/Hz; read it from ``.rate``."""
    return water_fill(singular_values(h), params.total_power, params.noise_power)


def equal_power_rate(svals, total_power: float, noise_power: float) -> float:
    """Baseline: spread power evenly over the non-zero streams."""
    s = np.asarray(svals, dtype=float)
    s = s[s > 0]
    if s.size == 0:
        raise NoChannelError("all singular values are zero")
    return _stream_rate(np.full(s.size, total_power / s.size), s, noise_power)
