"""Policy path trimming (PPT), boosting (PPB) and their combination (PPTB).

All three transforms act on the temporal SVD of a window of recent policy
snapshots.  Trimming rebuilds a snapshot from its first ``r_t`` left
coordinates only; boosting pushes the first ``r_b`` coordinates further
along the window's start-to-end direction by a factor ``p_b``.

The scheduler mirrors the usual plug-in loop: store the policy every
``t_s`` steps into a bounded FIFO, and every ``t_p`` steps replace the
current policy with its trimmed-and-boosted version.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidConfig, InvalidRank, OutOfOrderSnapshot, PathTooShort, ShapeMismatch
from .linalg import TemporalSvd, temporal_svd
from .path_metrics import LayerSegment, ParameterPath


@dataclass(frozen=True)
class PptbConfig:
    r_t: int = 32
    r_b: int = 2
    p_b: float = 0.1
    t_s: int = 25
    t_p: int = 1000
    capacity_k: int = 1000
    per_layer: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("r_t", "t_s", "t_p", "capacity_k"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise InvalidConfig(f"pptb.{name} must be a positive integer, got {value!r}")
        if not isinstance(self.r_b, (int, np.integer)) or self.r_b < 0:
            raise InvalidConfig(f"pptb.r_b must be a non-negative integer, got {self.r_b!r}")
        if self.r_b > self.r_t:
            raise InvalidConfig(f"pptb.r_b ({self.r_b}) must not exceed pptb.r_t ({self.r_t})")
        if not np.isfinite(self.p_b) or self.p_b < 0:
            raise InvalidConfig(f"pptb.p_b must be finite and >= 0, got {self.p_b!r}")
        if self.t_p % self.t_s != 0:
            raise InvalidConfig(
                f"pptb.t_p ({self.t_p}) must be a multiple of pptb.t_s ({self.t_s}): "
                "the transform interval requires t_p % t_s == 0"
            )
        if self.capacity_k < 2:
            raise InvalidConfig(f"pptb.capacity_k must be >= 2, got {self.capacity_k}")


class PolicyPathBuffer:
    """Bounded FIFO of ``(step, params)`` snapshots; oldest entries drop first."""

    def __init__(self, capacity_k: int):
        if capacity_k < 1:
            raise InvalidConfig(f"buffer capacity must be >= 1, got {capacity_k}")
        self.capacity_k = capacity_k
        self._entries: deque[tuple[int, np.ndarray]] = deque(maxlen=capacity_k)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def last_step(self) -> Optional[int]:
        return self._entries[-1][0] if self._entries else None

    @property
    def width(self) -> Optional[int]:
        return self._entries[0][1].shape[0] if self._entries else None

    def push(self, step: int, params) -> "PolicyPathBuffer":
        params = np.array(params, dtype=np.float64).ravel()
        if self._entries:
            if step <= self._entries[-1][0]:
                raise OutOfOrderSnapshot(f"step {step} is not after last stored step {self._entries[-1][0]}")
            if params.shape[0] != self.width:
                raise ShapeMismatch(f"snapshot has {params.shape[0]} parameters, buffer holds {self.width}")
        params.setflags(write=False)
        self._entries.append((int(step), params))
        return self

    def replace_last(self, params) -> None:
        if not self._entries:
            raise PathTooShort("buffer is empty")
        params = np.array(params, dtype=np.float64).ravel()
        if params.shape[0] != self.width:
            raise ShapeMismatch(f"snapshot has {params.shape[0]} parameters, buffer holds {self.width}")
        params.setflags(write=False)
        step, _ = self._entries.pop()
        self._entries.append((step, params))

    @property
    def steps(self) -> np.ndarray:
        return np.array([s for s, _ in self._entries], dtype=np.int64)

    def matrix(self) -> np.ndarray:
        return np.stack([p for _, p in self._entries])

    def to_path(self, layers: Sequence[LayerSegment] = ()) -> ParameterPath:
        return ParameterPath(steps=self.steps, params=self.matrix(), layers=tuple(layers))


def _check_row(svd: TemporalSvd, row_index: int) -> int:
    i = int(row_index)
    if i < 0:
        i += svd.n
    if not 0 <= i < svd.n:
        raise IndexError(f"row {row_index} out of range for {svd.n} snapshots")
    return i


def _check_rank(r: int, svd: TemporalSvd, name: str) -> None:
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= svd.d:
        raise InvalidRank(f"{name} must be in [1, {svd.d}], got {r!r}")


def ppt(svd: TemporalSvd, row_index: int, r_t: int) -> np.ndarray:
    """Snapshot ``row_index`` rebuilt from the first `r_t` SVD directions.

    With ``r_t == d`` nothing is trimmed, so the stored snapshot itself is
    returned when the factorization carries its source matrix.
    """
    i = _check_row(svd, row_index)
    _check_rank(r_t, svd, "r_t")
    if r_t == svd.d and svd.source is not None:
        return svd.source[i].copy()
    return (svd.u[i, :r_t] * svd.sigma[:r_t]) @ svd.vt[:r_t]


def ppb_row(svd: TemporalSvd, row_index: int, r_b: int, p_b: float) -> np.ndarray:
    """Left coordinates of ``row_index`` with the first `r_b` entries pushed
    by ``p_b * (u_last - u_first)``."""
    if svd.n < 2:
        raise PathTooShort("boosting needs at least 2 snapshots")
    if p_b < 0:
        raise ValueError(f"p_b must be >= 0, got {p_b}")
    if not isinstance(r_b, (int, np.integer)) or r_b < 0 or r_b > svd.d:
        raise InvalidRank(f"r_b must be in [0, {svd.d}], got {r_b!r}")
    i = _check_row(svd, row_index)
    row = np.array(svd.u[i])
    row[:r_b] += p_b * (svd.u[-1, :r_b] - svd.u[0, :r_b])
    return row


def pptb_transform(svd: TemporalSvd, row_index: int, r_t: int, r_b: int, p_b: float) -> np.ndarray:
    """Boost the first `r_b` coordinates, keep the rest up to `r_t`, rebuild."""
    _check_rank(r_t, svd, "r_t")
    if r_b > r_t:
        raise InvalidRank(f"r_b ({r_b}) must not exceed r_t ({r_t})")
    if p_b == 0 or r_b == 0:
        return ppt(svd, row_index, r_t)
    coords = ppb_row(svd, row_index, r_b, p_b)[:r_t]
    return (coords * svd.sigma[:r_t]) @ svd.vt[:r_t]


def pptb(svd: TemporalSvd, row_index: int, config: PptbConfig) -> np.ndarray:
    config.validate()
    return pptb_transform(svd, row_index, config.r_t, config.r_b, config.p_b)


def _transform_block(block: np.ndarray, steps: np.ndarray, config: PptbConfig) -> np.ndarray:
    svd = temporal_svd(block, steps=steps)
    # a short window cannot support r_t directions yet; use what it has
    r_t = min(config.r_t, svd.d)
    r_b = min(config.r_b, r_t)
    return pptb_transform(svd, -1, r_t, r_b, config.p_b)


def transform_latest(
    buffer: PolicyPathBuffer, config: PptbConfig, layers: Sequence[LayerSegment] = ()
) -> np.ndarray:
    """PPTB of the newest snapshot against the buffered window."""
    if len(buffer) < 2:
        raise PathTooShort("transform needs at least 2 buffered snapshots")
    mat = buffer.matrix()
    steps = buffer.steps
    if config.per_layer and layers:
        return np.concatenate(
            [_transform_block(mat[:, seg.offset:seg.stop], steps, config) for seg in layers]
        )
    return _transform_block(mat, steps, config)


@dataclass(frozen=True)
class Stored:
    step: int


@dataclass(frozen=True)
class Transformed:
    step: int
    params: np.ndarray


SchedulerAction = Optional[Union[Stored, Transformed]]


def scheduler_step(
    step: int,
    config: PptbConfig,
    buffer: PolicyPathBuffer,
    current_params,
    layers: Sequence[LayerSegment] = (),
) -> SchedulerAction:
    """Advance the store/transform schedule by one training step.

    Returns ``None`` when nothing happens, :class:`Stored` after a snapshot
    is buffered, and :class:`Transformed` when the current policy has been
    replaced.  The caller must load ``Transformed.params`` into the policy;
    the newest buffer entry already holds them.
    """
    config.validate()
    action: SchedulerAction = None
    if step % config.t_s == 0:
        buffer.push(step, current_params)
        action = Stored(step)
    if step % config.t_p == 0 and len(buffer) >= 2 and buffer.last_step == step:
        new_params = transform_latest(buffer, config, layers)
        buffer.replace_last(new_params)
        action = Transformed(step, new_params)
    return action
