"""Per-parameter change statistics along a policy parameter path.

A path is the ordered stack of flattened parameter snapshots ``theta_1..theta_n``
(rows) over ``m`` parameters (columns).  Columns are grouped into named layer
segments so every statistic can also be read layer by layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInput, PathTooShort, ShapeMismatch, UnknownLayer

DEFAULT_TOP_FRACTION = 0.8
DEFAULT_CLIP_QUANTILE = 0.99
DEFAULT_BINS = 50


@dataclass(frozen=True)
class LayerSegment:
    name: str
    offset: int
    length: int

    @property
    def stop(self) -> int:
        return self.offset + self.length


@dataclass(frozen=True)
class ParameterPath:
    """Snapshots ``params[i]`` taken at training step ``steps[i]``.

    Arrays are stored read-only; ``layers`` must tile ``[0, m)`` in order.
    When ``layers`` is omitted a single segment named ``"all"`` is used.
    """

    steps: np.ndarray
    params: np.ndarray
    layers: tuple[LayerSegment, ...] = field(default=())

    def __post_init__(self):
        params = np.array(self.params, dtype=np.float64, order="C")
        if params.ndim != 2:
            raise ShapeMismatch(f"params must be 2-D (n x m), got shape {params.shape}")
        steps = np.array(self.steps, dtype=np.int64)
        if steps.shape != (params.shape[0],):
            raise ShapeMismatch(f"{steps.shape[0] if steps.ndim else 0} steps for {params.shape[0]} snapshots")
        if steps.size and np.any(steps < 0):
            raise ValueError("steps must be non-negative")
        if np.any(np.diff(steps) <= 0):
            raise ValueError("steps must be strictly increasing")
        layers = tuple(self.layers) or (LayerSegment("all", 0, params.shape[1]),)
        cursor = 0
        for seg in layers:
            if seg.offset != cursor or seg.length < 0:
                raise ShapeMismatch(f"layer {seg.name!r} does not continue at column {cursor}")
            cursor = seg.stop
        if cursor != params.shape[1]:
            raise ShapeMismatch(f"layer segments cover {cursor} of {params.shape[1]} columns")
        if len({seg.name for seg in layers}) != len(layers):
            raise ValueError("layer names must be unique")
        params.setflags(write=False)
        steps.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_rows(cls, rows, steps=None, layers: Sequence[LayerSegment] = ()) -> "ParameterPath":
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if steps is None:
            steps = np.arange(rows.shape[0])
        return cls(steps=steps, params=rows, layers=tuple(layers))

    @property
    def n(self) -> int:
        return self.params.shape[0]

    @property
    def m(self) -> int:
        return self.params.shape[1]

    @property
    def layer_names(self) -> list[str]:
        return [seg.name for seg in self.layers]


@dataclass(frozen=True)
class ChangeReport:
    apc: np.ndarray
    fpc: np.ndarray
    pud: np.ma.MaskedArray
    layers: tuple[LayerSegment, ...]


def _require_two(path: ParameterPath) -> None:
    if path.n < 2:
        raise PathTooShort(f"need at least 2 snapshots, got {path.n}")


def accumulated_change(path: ParameterPath) -> np.ndarray:
    """Sum of absolute step-to-step changes of every parameter."""
    _require_two(path)
    return np.abs(np.diff(path.params, axis=0)).sum(axis=0)


def final_change(path: ParameterPath) -> np.ndarray:
    """Absolute net change ``|theta_n - theta_1|`` of every parameter."""
    _require_two(path)
    return np.abs(path.params[-1] - path.params[0])


def detour_ratio(path: ParameterPath) -> np.ma.MaskedArray:
    """Accumulated over final change; masked where the net change is zero."""
    apc = accumulated_change(path)
    fpc = final_change(path)
    undefined = ~(fpc > 0.0)
    # a subnormal net change can push the ratio past float range; inf is the honest value
    with np.errstate(over="ignore"):
        ratio = np.divide(apc, fpc, out=np.zeros_like(apc), where=~undefined)
    return np.ma.MaskedArray(ratio, mask=undefined)


def change_report(path: ParameterPath) -> ChangeReport:
    return ChangeReport(
        apc=accumulated_change(path),
        fpc=final_change(path),
        pud=detour_ratio(path),
        layers=path.layers,
    )


def filter_top_fraction(values, by, fraction: float = DEFAULT_TOP_FRACTION) -> np.ndarray:
    """Keep the entries of `values` whose `by` score is in the top `fraction`.

    ``ceil(fraction * len)`` entries survive; ties go to the lower index.  The
    survivors are returned in their original order.
    """
    values = np.asarray(values)
    by = np.asarray(by, dtype=np.float64)
    if values.shape != by.shape or values.ndim != 1:
        raise ShapeMismatch(f"values {values.shape} and by {by.shape} must be equal-length vectors")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if values.size == 0:
        return values.copy()
    keep = min(values.size, max(1, math.ceil(fraction * values.size - 1e-9)))
    order = np.lexsort((np.arange(by.size), -by))
    chosen = np.sort(order[:keep])
    return values[chosen]


def clip_extremes(values, upper_quantile: float = DEFAULT_CLIP_QUANTILE) -> np.ndarray:
    """Drop values strictly above the empirical `upper_quantile` (linear interpolation)."""
    values = np.asarray(values, dtype=np.float64)
    if not 0.0 < upper_quantile <= 1.0:
        raise ValueError(f"upper_quantile must lie in (0, 1], got {upper_quantile}")
    if values.size == 0:
        return values.copy()
    cutoff = np.quantile(values, upper_quantile)
    return values[values <= cutoff]


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    cdf: np.ndarray


def histogram(values, bins: int = DEFAULT_BINS) -> Histogram:
    """Equal-width histogram over ``[min, max]`` plus cumulative fractions.

    The last bin is closed on the right.  A constant input collapses to a
    zero-width range, in which case every value lands in the first bin.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyInput("histogram of an empty vector")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if not np.all(np.isfinite(values)):
        raise ValueError("histogram input must be finite")
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    else:
        edges = np.full(bins + 1, lo)
        counts = np.zeros(bins, dtype=np.int64)
        counts[0] = values.size
    cdf = np.cumsum(counts) / values.size
    return Histogram(edges=edges, counts=counts.astype(np.int64), cdf=cdf)


def split_periods(path: ParameterPath, periods: int) -> list[ParameterPath]:
    """Contiguous near-equal split; earlier periods absorb the remainder."""
    if periods < 1:
        raise ValueError(f"periods must be >= 1, got {periods}")
    if path.n < periods:
        raise PathTooShort(f"cannot split {path.n} snapshots into {periods} periods")
    out = []
    for idx in np.array_split(np.arange(path.n), periods):
        out.append(ParameterPath(steps=path.steps[idx], params=path.params[idx], layers=path.layers))
    return out


def slice_layer(path: ParameterPath, layer_name: str) -> ParameterPath:
    for seg in path.layers:
        if seg.name == layer_name:
            return ParameterPath(
                steps=path.steps,
                params=path.params[:, seg.offset:seg.stop],
                layers=(LayerSegment(seg.name, 0, seg.length),),
            )
    raise UnknownLayer(f"no layer named {layer_name!r}; have {path.layer_names}")


def layer_of(path: ParameterPath, name: Optional[str]) -> ParameterPath:
    """`slice_layer` that treats ``None`` as the whole path."""
    return path if name is None else slice_layer(path, name)
