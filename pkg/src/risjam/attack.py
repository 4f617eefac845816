"""Time-indexed RIS reflection coefficients for each attack mode."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AttackMode",
    "AmplitudeMode",
    "Direction",
    "ReflectionSchedule",
    "counter_uniform",
    "block_index",
    "lambda_at",
    "lambdas_at",
    "corruption_probability",
    "measure_corruption",
]


class AttackMode(str, enum.Enum):
    NO_RIS = "NoRis"
    BENIGN = "Benign"
    ASYMMETRIC = "AsymmetricStructure"
    ASYNC = "AsyncConfig"


class AmplitudeMode(str, enum.Enum):
    CONTINUOUS = "ContinuousPhase"
    ONE_BIT = "OneBitPhase"


class Direction(str, enum.Enum):
    FORWARD = "Forward"  # Alice -> Bob, measured by Bob at t1
    REVERSE = "Reverse"  # Bob -> Alice, measured by Alice at t2


@dataclass(frozen=True)
class ReflectionSchedule:
    """Attacker's RIS configuration over time.

    ``T_r`` and ``t_delta`` only matter for ``AsyncConfig``; ``T_r = inf``
    models a RIS that never switches (``f_r = 0``).
    """

    mode: AttackMode
    M: int
    beta: float = 1.0
    T_r: float | None = None
    t_delta: float = 0.0
    amplitude_mode: AmplitudeMode = AmplitudeMode.CONTINUOUS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", AttackMode(self.mode))
        object.__setattr__(self, "amplitude_mode", AmplitudeMode(self.amplitude_mode))
        if self.mode is AttackMode.ASYNC and not (self.T_r is not None and self.T_r > 0):
            raise ValueError("AsyncConfig needs a positive RIS update period T_r")
        if self.beta < 0 or self.M < 1:
            raise ValueError("need beta >= 0 and M >= 1")

    @property
    def f_r(self) -> float:
        return 0.0 if self.T_r is None or math.isinf(self.T_r) else 1.0 / self.T_r


_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return (z ^ (z >> np.uint64(31))) & _MASK


def counter_uniform(seed: int, blocks, width: int) -> np.ndarray:
    """Uniform [0, 1) numbers keyed by ``(seed, block, column)``.

    Pure function of its arguments: any block can be evaluated on its own
    and in any order. Output shape is ``np.shape(blocks) + (width,)``.
    """
    blocks = np.asarray(blocks, dtype=np.int64).astype(np.uint64)
    col = np.arange(width, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0x2545F4914F6CDD1D))
        x = _splitmix64(key ^ _splitmix64(blocks[..., None] * np.uint64(0x100000001B3) + col))
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _draw_lambdas(sched: ReflectionSchedule, blocks) -> np.ndarray:
    u = counter_uniform(sched.seed, blocks, sched.M)
    amp = math.sqrt(sched.beta)
    if sched.amplitude_mode is AmplitudeMode.ONE_BIT:
        return amp * np.where(u < 0.5, 1.0, -1.0).astype(complex)
    return amp * np.exp(2j * np.pi * u)


# Stream slot for the lifetime draw of Benign/Asymmetric schedules; Async blocks use n >= 0.
_FIXED_BLOCK = -1


def block_index(sched: ReflectionSchedule, t) -> np.ndarray:
    """RIS configuration block containing time ``t``: ``floor((t + t_delta) / T_r)``."""
    if sched.T_r is None or math.isinf(sched.T_r):
        return np.zeros(np.shape(t), dtype=np.int64)
    return np.floor((np.asarray(t, dtype=float) + sched.t_delta) / sched.T_r).astype(np.int64)


def lambdas_at(sched: ReflectionSchedule, t, direction: Direction) -> np.ndarray:
    """Vectorised :func:`lambda_at`; output shape ``np.shape(t) + (M,)``."""
    direction = Direction(direction)
    shape = np.shape(t)
    mode = sched.mode
    if mode is AttackMode.NO_RIS or (
        mode is AttackMode.ASYMMETRIC and direction is Direction.REVERSE
    ):
        return np.zeros(shape + (sched.M,), dtype=complex)
    if mode is AttackMode.ASYNC:
        return _draw_lambdas(sched, block_index(sched, t))
    fixed = _draw_lambdas(sched, _FIXED_BLOCK)
    return np.broadcast_to(fixed, shape + (sched.M,)).copy()


def lambda_at(sched: ReflectionSchedule, t: float, direction: Direction) -> np.ndarray:
    """Diagonal of the reflection matrix seen by a probe at time ``t``.

    - NoRis: zeros.
    - Benign: one lifetime draw, same in both directions.
    - AsymmetricStructure: lifetime draw forward, zeros in reverse (isolated).
    - AsyncConfig: fresh draw per RIS block, direction-independent.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    return lambdas_at(sched, float(t), direction)


def corruption_probability(T_p: float, sched: ReflectionSchedule) -> float:
    """Chance that the RIS switches between ping and pong, ``min(f_r / f_p, 1)``.

    Assumes the probe clock and the RIS clock have a uniformly random offset.
    """
    if sched.mode is not AttackMode.ASYNC:
        raise ValueError(f"corruption probability is only defined for AsyncConfig, not {sched.mode.value}")
    if not T_p > 0:
        raise ValueError("T_p must be positive")
    return min(sched.f_r * T_p, 1.0)


def measure_corruption(
    T_p: float, sched: ReflectionSchedule, n_rounds: int, rng: np.random.Generator
) -> float:
    """Fraction of simulated probe rounds whose ping and pong see different RIS blocks.

    Each round gets an independent uniformly random clock offset between
    the prober and the RIS.
    """
    if sched.mode is not AttackMode.ASYNC:
        raise ValueError("only AsyncConfig schedules switch configurations")
    if sched.f_r == 0.0:
        return 0.0
    # A uniform ping time over one RIS period is the same as a uniform clock offset.
    t1 = rng.uniform(0.0, sched.T_r, n_rounds)
    changed = block_index(sched, t1) != block_index(sched, t1 + T_p)
    return float(np.mean(changed))
