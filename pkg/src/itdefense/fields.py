"""Gaussian risk density seen by the threat and quadratic barrier costs
that tether interceptors to their patrol centers and the HVA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import FieldParams


@dataclass(frozen=True)
class RiskBreakdown:
    sd_component: float
    ei_component: float

    @property
    def total(self) -> float:
        return self.sd_component + self.ei_component


@dataclass(frozen=True)
class BarrierBreakdown:
    pac: float
    htc: float

    @property
    def total(self) -> float:
        return self.pac + self.htc


def gaussian_sum(points: np.ndarray, sources: np.ndarray, sigma: float) -> np.ndarray:
    """Sum of unit Gaussians over sources, evaluated at points.

    ``points`` is (..., 2), ``sources`` is (m, 2); returns shape (...,).
    """
    sources = np.asarray(sources, dtype=float).reshape(-1, 2)
    points = np.asarray(points, dtype=float)
    if sources.shape[0] == 0:
        return np.zeros(points.shape[:-1])
    d = points[..., None, :] - sources
    d2 = d[..., 0] ** 2 + d[..., 1] ** 2
    return np.exp(-d2 / (2.0 * sigma * sigma)).sum(axis=-1)


def risk_density(zeta, defenses, ei_points, fields: FieldParams) -> RiskBreakdown:
    """Risk at one point from static defenses and (already pruned) anticipated EI points."""
    z = np.asarray(zeta, dtype=float)
    sd = fields.w_sd * float(gaussian_sum(z, defenses, fields.sigma_sd))
    ei = fields.w_ei * float(gaussian_sum(z, ei_points, fields.sigma_ei))
    return RiskBreakdown(sd, ei)


def risk_along(positions: np.ndarray, defenses: np.ndarray, ei_tracks: np.ndarray,
               fields: FieldParams) -> np.ndarray:
    """Time-aligned risk for predicted positions.

    ``positions`` is (..., h, 2); ``ei_tracks`` is (m, h', 2) with h' >= h and
    track sample j paired with prediction step j.  Returns (..., h).
    """
    rho = fields.w_sd * gaussian_sum(positions, defenses, fields.sigma_sd)
    ei_tracks = np.asarray(ei_tracks, dtype=float)
    if ei_tracks.size:
        h = positions.shape[-2]
        pts = np.swapaxes(ei_tracks[:, :h, :], 0, 1)  # (h, m, 2)
        d = positions[..., :, None, :] - pts
        d2 = d[..., 0] ** 2 + d[..., 1] ** 2
        s2 = fields.sigma_ei * fields.sigma_ei
        rho = rho + fields.w_ei * np.exp(-d2 / (2.0 * s2)).sum(axis=-1)
    return rho


def _one_sided(dist, radius: float, weight: float):
    over = np.maximum(np.asarray(dist, dtype=float) - radius, 0.0)
    return weight * over * over


def barrier_terms(positions: np.ndarray, patrol_center, hva, fields: FieldParams):
    """PAC and HTC for (..., 2) positions; returns a (pac, htc) pair of arrays."""
    p = np.asarray(positions, dtype=float)
    dp = p - np.asarray(patrol_center, dtype=float)
    dh = p - np.asarray(hva, dtype=float)
    pac = _one_sided(np.hypot(dp[..., 0], dp[..., 1]), fields.r_pac, fields.w_pac)
    htc = _one_sided(np.hypot(dh[..., 0], dh[..., 1]), fields.r_htc, fields.w_htc)
    return pac, htc


def barrier_cost(p, patrol_center, hva, fields: FieldParams) -> BarrierBreakdown:
    """Zero inside each radius, quadratic in the overshoot outside."""
    pac, htc = barrier_terms(p, patrol_center, hva, fields)
    return BarrierBreakdown(float(pac), float(htc))
