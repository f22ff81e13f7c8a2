"""Singular-value information curves and left-coordinate analysis of a path."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSpectrum
from .linalg import TemporalSvd, temporal_svd
from .path_metrics import ParameterPath, detour_ratio, final_change, layer_of, split_periods

DEFAULT_BETA_GRID = (0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99)


def _spectrum(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    if sigma.size == 0:
        raise DegenerateSpectrum("empty spectrum")
    if np.any(sigma < 0) or np.any(np.diff(sigma) > 0):
        raise ValueError("sigma must be non-negative and non-increasing")
    if not sigma.sum() > 0:
        raise DegenerateSpectrum("all singular values are zero")
    return sigma


def info_amount(sigma) -> np.ndarray:
    """Cumulative share of singular-value mass: ``a_k = sum(sigma[:k]) / sum(sigma)``."""
    running = np.cumsum(_spectrum(sigma))
    # normalize by the last partial sum so a_d is exactly 1
    return running / running[-1]


def major_dimensionality(sigma, beta: float) -> int:
    """Smallest ``k`` whose information amount reaches `beta`."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    a = info_amount(sigma)
    return int(np.searchsorted(a, beta, side="left")) + 1


@dataclass(frozen=True)
class SvdInfoProfile:
    info_amount: np.ndarray
    thresholds: np.ndarray
    major_dims: np.ndarray


def info_profile(sigma, beta_grid: Sequence[float] = DEFAULT_BETA_GRID) -> SvdInfoProfile:
    grid = np.asarray(beta_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("beta grid must be a non-empty vector")
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0 or grid[-1] > 1:
        raise ValueError("beta grid must be strictly increasing within (0, 1]")
    a = info_amount(sigma)
    dims = np.searchsorted(a, grid, side="left") + 1
    return SvdInfoProfile(info_amount=a, thresholds=grid, major_dims=dims.astype(np.int64))


@dataclass(frozen=True)
class CoordinateCurves:
    curves: np.ndarray
    per_direction_detour: np.ma.MaskedArray
    per_direction_final_change: np.ndarray


def coordinate_curves(svd: TemporalSvd) -> CoordinateCurves:
    """Columns of ``U`` as time series, with the same detour / net-change
    statistics that :mod:`path_metrics` computes for raw parameters."""
    steps = svd.steps if svd.steps is not None else np.arange(svd.n)
    coords = ParameterPath(steps=steps, params=svd.u)
    return CoordinateCurves(
        curves=coords.params,
        per_direction_detour=detour_ratio(coords),
        per_direction_final_change=final_change(coords),
    )


def path_svd(path: ParameterPath, layer: Optional[str] = None) -> TemporalSvd:
    """Temporal SVD of the whole path or of one named layer."""
    sub = layer_of(path, layer)
    return temporal_svd(sub.params, steps=sub.steps, layer=layer)


def period_profiles(
    path: ParameterPath,
    periods: int = 3,
    layer: Optional[str] = None,
    beta_grid: Sequence[float] = DEFAULT_BETA_GRID,
) -> list[SvdInfoProfile]:
    """Information profile of each consecutive period (early, middle, later...)."""
    sub = layer_of(path, layer)
    return [info_profile(path_svd(part).sigma, beta_grid) for part in split_periods(sub, periods)]
