"""Secret key rates of Gaussian bidirectional channel estimates.

Rates are in bits per channel use. ``math.inf`` stands for an unbounded
rate (noiseless and perfectly reciprocal) and ``-math.inf`` for a gap
approximation whose logarithm argument vanishes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .attack import AttackMode, ReflectionSchedule, lambdas_at, Direction
from .channel import complex_normal, frequency_response, sample_batch
from .probing import ProbeConfig
from .scene import Scenario, direct_path_gains, ris_path_gain

__all__ = [
    "UNBOUNDED",
    "RateEstimationError",
    "RateInputs",
    "RateCase",
    "GapKind",
    "SubcarrierMode",
    "rate_general",
    "rate_case",
    "case_inputs",
    "rate_gap_exact",
    "rate_gap_approx",
    "scenario_rate_inputs",
    "plugin_rate",
    "rate_monte_carlo",
]

UNBOUNDED = math.inf
_LN2 = math.log(2.0)


class RateEstimationError(RuntimeError):
    """Sample covariance matrix is singular; more trials are needed."""


class RateCase(str, enum.Enum):
    NO_RIS = "NoRis"
    BENIGN = "Benign"
    ASYMMETRIC = "Asymmetric"
    ASYNC = "Async"

    @classmethod
    def from_mode(cls, mode: AttackMode) -> "RateCase":
        return {
            AttackMode.NO_RIS: cls.NO_RIS,
            AttackMode.BENIGN: cls.BENIGN,
            AttackMode.ASYMMETRIC: cls.ASYMMETRIC,
            AttackMode.ASYNC: cls.ASYNC,
        }[AttackMode(mode)]


class GapKind(str, enum.Enum):
    DELTA1 = "Delta1"  # R0 - R2
    DELTA2 = "Delta2"  # R0 - R3
    DELTA3 = "Delta3"  # R2 - R3


class SubcarrierMode(str, enum.Enum):
    FULL_BAND = "FullBand"
    SINGLE_CARRIER_FH = "SingleCarrierFH"


@dataclass(frozen=True)
class RateInputs:
    sum_beta: float
    beta_r: float
    beta_r2: float
    beta_cross: float
    sigma2: float

    def __post_init__(self):
        vals = (self.sum_beta, self.beta_r, self.beta_r2, self.beta_cross, self.sigma2)
        if any(v < 0 for v in vals):
            raise ValueError("rate inputs must be non-negative")
        if self.beta_cross > math.sqrt(self.beta_r * self.beta_r2) * (1 + 1e-12):
            raise ValueError("beta_cross violates Cauchy-Schwarz")


def rate_general(inp: RateInputs) -> float:
    """``log2(K_ab K_ba / det K)`` for arbitrary RIS statistics.

    Evaluated as ``log2(1 + (S + beta_cross)^2 / det)`` with the determinant
    expanded into non-negative terms, which avoids cancellation at low rate
    and at high SNR.
    """
    S, br, br2, bc, s2 = (inp.sum_beta, inp.beta_r, inp.beta_r2, inp.beta_cross, inp.sigma2)
    det = S * (br + br2 - 2.0 * bc + 2.0 * s2) + (br * br2 - bc * bc) + s2 * (br + br2) + s2 * s2
    num = (S + bc) ** 2
    if det <= 0.0:
        if num == 0.0:
            raise ValueError("all powers are zero; the rate is undefined")
        return UNBOUNDED
    return math.log1p(num / det) / _LN2


def case_inputs(case: RateCase, sum_beta: float, beta_r: float, sigma2: float) -> RateInputs:
    """``(beta_r, beta_r', beta_cross)`` substitution for each case."""
    case = RateCase(case)
    br, br2, bc = {
        RateCase.NO_RIS: (0.0, 0.0, 0.0),
        RateCase.BENIGN: (beta_r, beta_r, beta_r),
        RateCase.ASYMMETRIC: (beta_r, 0.0, 0.0),
        RateCase.ASYNC: (beta_r, beta_r, 0.0),
    }[case]
    return RateInputs(sum_beta, br, br2, bc, sigma2)


def _closed_form(num: float, den: float) -> float:
    if den <= 0.0:
        if num == 0.0:
            raise ValueError("all powers are zero; the rate is undefined")
        return UNBOUNDED
    return math.log1p(num / den) / _LN2


def rate_case(case: RateCase, sum_beta: float, beta_r: float, sigma2: float) -> float:
    """Closed-form rate for no RIS (R0), benign RIS (R1), asymmetric (R2), async (R3)."""
    if min(sum_beta, beta_r, sigma2) < 0:
        raise ValueError("arguments must be non-negative")
    S, br, s2 = sum_beta, beta_r, sigma2
    case = RateCase(case)
    if case is RateCase.NO_RIS:
        return _closed_form(S**2, s2**2 + 2 * s2 * S)
    if case is RateCase.BENIGN:
        return _closed_form((br + S) ** 2, s2**2 + 2 * s2 * (br + S))
    if case is RateCase.ASYMMETRIC:
        return _closed_form(S**2, s2**2 + 2 * s2 * S + br * S + br * s2)
    return _closed_form(S**2, (br + s2) ** 2 + 2 * (br + s2) * S)


def rate_gap_exact(which: GapKind, sum_beta: float, beta_r: float, sigma2: float) -> float:
    r = {c: rate_case(c, sum_beta, beta_r, sigma2) for c in RateCase}
    which = GapKind(which)
    if which is GapKind.DELTA1:
        return r[RateCase.NO_RIS] - r[RateCase.ASYMMETRIC]
    if which is GapKind.DELTA2:
        return r[RateCase.NO_RIS] - r[RateCase.ASYNC]
    return r[RateCase.ASYMMETRIC] - r[RateCase.ASYNC]


def _log2(x: float) -> float:
    if x == 0.0:
        return -math.inf
    if math.isinf(x):
        return math.inf
    return math.log2(x)


def rate_gap_approx(which: GapKind, sum_beta: float, beta_r: float, sigma2: float) -> float:
    """High-SNR approximations of the rate gaps.

    With ``rho = 1 + beta_r / S``::

        Delta1 ~ log2(S / (2 sigma2) * beta_r / (beta_r + S))
        Delta2 ~ log2(S (1 - 1/rho^2) / (2 sigma2))
        Delta3 = log2(1 + 1/rho)

    ``Delta3`` does not depend on the noise level.
    """
    S, br, s2 = sum_beta, beta_r, sigma2
    if S <= 0:
        raise ValueError("sum_beta must be positive")
    rho = 1.0 + br / S
    which = GapKind(which)
    if which is GapKind.DELTA3:
        return math.log2(1.0 + 1.0 / rho)
    scale = math.inf if s2 == 0 else S / (2.0 * s2)
    if which is GapKind.DELTA1:
        frac = br / (br + S)
        return _log2(scale * frac) if frac > 0 else -math.inf
    frac = 1.0 - 1.0 / rho**2
    return _log2(scale * frac) if frac > 0 else -math.inf


def scenario_rate_inputs(s: Scenario) -> tuple[float, float]:
    """``(sum_beta, beta_r)`` of a scenario after its power normalisation."""
    scale = s.power_scale
    return float(np.sum(direct_path_gains(s)) * scale), ris_path_gain(s).beta_r * scale


def plugin_rate(x: np.ndarray, y: np.ndarray, axis: int = 0) -> np.ndarray:
    """Gaussian plug-in estimate of ``I(x; y)`` in bits from paired samples.

    Second moments are taken along ``axis`` without mean removal (the
    channels are zero-mean).
    """
    x = np.asarray(x)
    y = np.asarray(y)
    kab = np.mean(np.abs(x) ** 2, axis=axis)
    kba = np.mean(np.abs(y) ** 2, axis=axis)
    kc = np.mean(x * np.conj(y), axis=axis)
    det = kab * kba - np.abs(kc) ** 2
    if np.any(det <= 0):
        raise RateEstimationError(
            "sample covariance is singular; increase n_trials"
        )
    return np.log2(kab * kba / det)


def rate_monte_carlo(
    s: Scenario,
    sched: ReflectionSchedule,
    cfg: ProbeConfig,
    n_trials: int,
    subcarrier_mode: SubcarrierMode = SubcarrierMode.FULL_BAND,
    seed: int = 0,
    chunk: int = 4096,
) -> float:
    """Monte-Carlo key rate from simulated probe pairs.

    Each trial is an independent coherence block with one probing round at
    a uniformly random time. ``FullBand`` averages the per-subcarrier
    plug-in rate over all K subcarriers. ``SingleCarrierFH`` uses a single
    random subcarrier per trial that carries the whole pilot power, so its
    noise variance is ``sigma2 / K``.

    Both modes report bits per subcarrier per probing round: the hopped
    subcarrier's rate is divided by K because the other K - 1 subcarriers
    carry nothing in that round.
    """
    if n_trials < 1000:
        raise ValueError("n_trials must be at least 1000")
    mode = SubcarrierMode(subcarrier_mode)
    rng = np.random.default_rng([int(seed), 0xC0FFEE])
    K = s.K
    fh = mode is SubcarrierMode.SINGLE_CARRIER_FH
    noise = cfg.sigma2 / K if fh else cfg.sigma2
    shape = (1,) if fh else (K,)
    acc = np.zeros((3,) + shape, dtype=complex)
    done = 0
    while done < n_trials:
        n = min(chunk, n_trials - done)
        c = sample_batch(s, n, rng)
        t1 = (done + np.arange(n)) * cfg.T_c + rng.uniform(0.0, cfg.T_c - cfg.T_p, n)
        h_f = frequency_response(c, lambdas_at(sched, t1, Direction.FORWARD))
        h_r = frequency_response(c, lambdas_at(sched, t1 + cfg.T_p, Direction.REVERSE))
        if fh:
            k = rng.integers(0, K, n)
            h_f = h_f[np.arange(n), k][:, None]
            h_r = h_r[np.arange(n), k][:, None]
        x = h_f + complex_normal(rng, noise, h_f.shape)
        y = h_r + complex_normal(rng, noise, h_r.shape)
        acc[0] += np.sum(np.abs(x) ** 2, axis=0)
        acc[1] += np.sum(np.abs(y) ** 2, axis=0)
        acc[2] += np.sum(x * np.conj(y), axis=0)
        done += n
    kab, kba, kc = acc / n_trials
    det = kab.real * kba.real - np.abs(kc) ** 2
    if np.any(det <= 0):
        raise RateEstimationError("sample covariance is singular; increase n_trials")
    rate = float(np.mean(np.log2(kab.real * kba.real / det)))
    return rate / K if fh else rate
