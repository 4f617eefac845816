"""Block-fading channel realizations and the K-subcarrier frequency response."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .scene import Scenario, direct_path_gains, ris_path_gain

__all__ = [
    "SPEED_OF_LIGHT",
    "ChannelRealization",
    "complex_normal",
    "path_delays",
    "ris_hop_variance",
    "sample_realization",
    "sample_batch",
    "frequency_response",
    "ris_coefficient",
    "evolve_block",
]

SPEED_OF_LIGHT = 2.998e8


def complex_normal(rng: np.random.Generator, var, size) -> np.ndarray:
    """Circularly-symmetric complex Gaussian draws with variance ``var``."""
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return z * np.sqrt(np.asarray(var) / 2.0)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One coherence block of the channel.

    Arrays may carry leading batch axes (one realization per batch entry);
    ``tau`` and ``tau_r`` are shared across the batch.
    """

    alpha: np.ndarray  # (..., L)
    tau: np.ndarray  # (L,) in taps
    h_ar: np.ndarray  # (..., M)
    h_rb: np.ndarray  # (..., M)
    tau_r: float
    K: int

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {
            "alpha": cplx(self.alpha),
            "tau": np.asarray(self.tau).tolist(),
            "h_ar": cplx(self.h_ar),
            "h_rb": cplx(self.h_rb),
            "tau_r": float(self.tau_r),
            "K": int(self.K),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _to_taps(s: Scenario, d):
    tau = np.asarray(d, dtype=float) / SPEED_OF_LIGHT * s.bandwidth_hz
    if s.integer_taps:
        tau = np.round(tau)
    return np.mod(tau, s.K)


def path_delays(s: Scenario) -> tuple[np.ndarray, float]:
    """Direct-path delays and the RIS-path delay in tap units, reduced modulo K."""
    d_r = ris_path_gain(s).d_r
    return _to_taps(s, s.path_distances), float(_to_taps(s, d_r))


def ris_hop_variance(s: Scenario) -> float:
    """Per-entry variance of each RIS hop, ``|Gamma cos(theta)| / d_r``.

    The split is symmetric, so the product of the two hops carries the
    RIS path gain once unit-power reflections are applied.
    """
    geo = ris_path_gain(s)
    return abs(geo.gamma * np.cos(geo.theta)) / geo.d_r * np.sqrt(s.power_scale)


def _draw(s: Scenario, rng: np.random.Generator, batch: tuple[int, ...]):
    betas = direct_path_gains(s) * s.power_scale
    alpha = complex_normal(rng, betas, batch + (s.L,))
    hop_var = ris_hop_variance(s)
    h_ar = complex_normal(rng, hop_var, batch + (s.M,))
    h_rb = complex_normal(rng, hop_var, batch + (s.M,))
    return alpha, h_ar, h_rb


def sample_realization(s: Scenario, rng_seed) -> ChannelRealization:
    """Draw one coherence block.

    ``rng_seed`` is anything :func:`numpy.random.default_rng` accepts,
    including a Generator or a sequence of ints.
    """
    rng = np.random.default_rng(rng_seed)
    tau, tau_r = path_delays(s)
    alpha, h_ar, h_rb = _draw(s, rng, ())
    return ChannelRealization(alpha=alpha, tau=tau, h_ar=h_ar, h_rb=h_rb, tau_r=tau_r, K=s.K)


def sample_batch(s: Scenario, n: int, rng: np.random.Generator) -> ChannelRealization:
    """``n`` independent blocks stacked along a leading axis."""
    tau, tau_r = path_delays(s)
    alpha, h_ar, h_rb = _draw(s, rng, (n,))
    return ChannelRealization(alpha=alpha, tau=tau, h_ar=h_ar, h_rb=h_rb, tau_r=tau_r, K=s.K)


def evolve_block(prev: ChannelRealization, s: Scenario, rng_seed) -> ChannelRealization:
    """Next coherence block: delays kept, every gain redrawn independently."""
    rng = np.random.default_rng(rng_seed)
    batch = np.shape(prev.alpha)[:-1]
    alpha, h_ar, h_rb = _draw(s, rng, batch)
    return replace(prev, alpha=alpha, h_ar=h_ar, h_rb=h_rb)


def ris_coefficient(c: ChannelRealization, lambda_diag) -> np.ndarray:
    """Scalar RIS link ``h_ar^T diag(lambda) h_rb``.

    The elementwise product of the hops is formed first so the value is
    bit-identical for the forward and the reverse direction.
    """
    return np.sum((c.h_ar * c.h_rb) * lambda_diag, axis=-1)


def _phasors(tau, K):
    k = np.arange(1, K + 1)
    return np.exp(-2j * np.pi * np.multiply.outer(np.asarray(tau), k) / K)


def frequency_response(c: ChannelRealization, lambda_diag) -> np.ndarray:
    """Per-subcarrier response ``h(k)`` for ``k = 1..K``.

    ``lambda_diag`` has the RIS size ``M`` as its last axis; extra leading
    axes broadcast against the batch axes of ``c``. A zero vector switches
    the RIS path off.
    """
    lambda_diag = np.asarray(lambda_diag)
    M = np.shape(c.h_ar)[-1]
    if lambda_diag.shape[-1] != M:
        raise ValueError(f"lambda has {lambda_diag.shape[-1]} entries, RIS has {M}")
    direct = c.alpha @ _phasors(c.tau, c.K)
    ris = ris_coefficient(c, lambda_diag)
    return direct + ris[..., None] * _phasors(c.tau_r, c.K)
