"""TDD ping-pong probing: paired noisy least-squares channel estimates."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .attack import Direction, ReflectionSchedule, lambdas_at
from .channel import ChannelRealization, complex_normal, frequency_response, sample_realization
from .scene import Scenario

__all__ = [
    "BlockBoundaryError",
    "ProbeConfig",
    "ProbeSeries",
    "probe_round",
    "probe_rounds",
    "collect_series",
    "block_seed",
    "write_series_csv",
]


class BlockBoundaryError(ValueError):
    """A probing round straddles two coherence blocks."""


@dataclass(frozen=True)
class ProbeConfig:
    """Probing timing and noise.

    ``T_p`` is the ping-to-pong delay and also the spacing between rounds.
    ``random_offset`` places the first ping of each block uniformly inside
    the slack ``T_c - N_p * T_p``.
    """

    T_p: float = 1e-3
    T_c: float = 0.1
    N_p: int = 50
    snr_db: float = 10.0
    random_offset: bool = True

    def __post_init__(self):
        if not 0 < self.T_p < self.T_c:
            raise ValueError("need 0 < T_p < T_c")
        if self.N_p < 1:
            raise ValueError("N_p must be at least 1")
        if self.N_p * self.T_p > self.T_c * (1 + 1e-12):
            raise ValueError("N_p rounds of length T_p do not fit in one coherence block")

    @property
    def sigma2(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True, eq=False)
class ProbeSeries:
    """One coherence block of estimates; columns are probing rounds."""

    H_ab: np.ndarray  # (K, N_p) Bob's estimates of the forward link
    H_ba: np.ndarray  # (K, N_p) Alice's estimates of the reverse link
    t1: np.ndarray  # (N_p,) ping times

    def __post_init__(self):
        if self.H_ab.shape != self.H_ba.shape:
            raise ValueError("estimate matrices must have equal shapes")


def probe_rounds(
    c: ChannelRealization,
    sched: ReflectionSchedule,
    t1,
    cfg: ProbeConfig,
    rng: np.random.Generator,
    noise_var: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Estimates for several ping times within one block, shape ``t1.shape + (K,)``."""
    t1 = np.asarray(t1, dtype=float)
    t2 = t1 + cfg.T_p
    blk1 = np.floor(t1 / cfg.T_c)
    blk2 = np.floor(t2 / cfg.T_c)
    # pong exactly on the boundary still belongs to the block
    straddle = (blk1 != blk2) & ~np.isclose(t2, blk2 * cfg.T_c)
    if np.any(straddle):
        raise BlockBoundaryError("probing round crosses a coherence-block boundary")
    var = cfg.sigma2 if noise_var is None else noise_var
    lam_f = lambdas_at(sched, t1, Direction.FORWARD)
    lam_r = lambdas_at(sched, t2, Direction.REVERSE)
    h_f = frequency_response(c, lam_f)
    h_r = frequency_response(c, lam_r)
    # Bob's noise first, then Alice's: both independent of everything else.
    z_b = complex_normal(rng, var, h_f.shape)
    z_a = complex_normal(rng, var, h_r.shape)
    return h_f + z_b, h_r + z_a


def probe_round(
    c: ChannelRealization,
    sched: ReflectionSchedule,
    t1: float,
    cfg: ProbeConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """One ping (Alice at ``t1``) and pong (Bob at ``t1 + T_p``).

    Returns Bob's estimate ``h_ab`` and Alice's estimate ``h_ba``.
    """
    h_ab, h_ba = probe_rounds(c, sched, np.asarray([t1]), cfg, rng)
    return h_ab[0], h_ba[0]


def block_seed(seed: int, block: int, stream: int = 0) -> list[int]:
    """Entropy for block ``block`` under master ``seed``.

    Stream 0 draws the channel, stream 1 the noise and probe offset.
    Blocks can therefore be simulated in any order or in parallel.
    """
    return [int(seed), int(block), int(stream)]


def collect_series(
    s: Scenario,
    sched: ReflectionSchedule,
    cfg: ProbeConfig,
    n_blocks: int,
    seed: int,
    noise_var: float | None = None,
) -> list[ProbeSeries]:
    """Simulate ``n_blocks`` coherence blocks of ``N_p`` probing rounds each.

    Block ``b`` spans ``[b T_c, (b+1) T_c)`` and gets a fresh channel
    realization; round ``m`` pings at ``b T_c + offset + m T_p``.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    out = []
    slack = cfg.T_c - cfg.N_p * cfg.T_p
    for b in range(n_blocks):
        c = sample_realization(s, block_seed(seed, b, 0))
        rng = np.random.default_rng(block_seed(seed, b, 1))
        offset = rng.uniform(0.0, max(slack, 0.0)) if cfg.random_offset else 0.0
        t1 = b * cfg.T_c + offset + cfg.T_p * np.arange(cfg.N_p)
        h_ab, h_ba = probe_rounds(c, sched, t1, cfg, rng, noise_var)
        out.append(ProbeSeries(H_ab=h_ab.T.copy(), H_ba=h_ba.T.copy(), t1=t1))
    return out


def write_series_csv(series: list[ProbeSeries], fh=None) -> str:
    """CSV dump: block, round, subcarrier, real/imag of both estimates.

    Writes to ``fh`` when given and always returns the text.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block", "round", "subcarrier", "h_ab_re", "h_ab_im", "h_ba_re", "h_ba_im"])
    for b, ps in enumerate(series):
        K, N_p = ps.H_ab.shape
        for m in range(N_p):
            for k in range(K):
                ab, ba = ps.H_ab[k, m], ps.H_ba[k, m]
                w.writerow([b, m, k + 1, *(repr(float(v)) for v in (ab.real, ab.imag, ba.real, ba.imag))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
