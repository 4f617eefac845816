"""Raw key extraction: CDF quantization, BDR, and contaminated path removal.

The CPR pipeline per coherence block:

1. collect ``N_p`` paired estimates (``probing.collect_series``)
2. map each party's ``K x N_p`` matrix to the delay domain
3. keep rows that rank in the top ``N_sel`` for at least ``alpha_min`` rounds
4. flag rows whose lag-1 autocorrelation collapses (fast RIS switching)
5. intersect the two parties' surviving rows and average each over rounds
6. quantize every kept path across blocks with a one-bit median quantizer
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .attack import ReflectionSchedule
from .probing import ProbeConfig, ProbeSeries, collect_series
from .scene import Scenario

__all__ = [
    "NoUsablePathsError",
    "Scheme",
    "BitKey",
    "CprConfig",
    "PathReport",
    "PipelineResult",
    "delay_transform",
    "inverse_delay_transform",
    "select_significant",
    "lag1_autocorrelation",
    "detect_ris_path",
    "negotiate_paths",
    "average_paths",
    "cdf_quantize",
    "bdr",
    "cpr_block",
    "run_pipeline",
]


class NoUsablePathsError(RuntimeError):
    """The negotiated path set is empty; this block yields no key bits."""

    def __init__(self, msg: str = "no delay tap survived negotiation", report=None):
        super().__init__(msg)
        self.report = report


class Scheme(str, enum.Enum):
    PLAIN = "PlainCrkg"
    CPR = "CprCrkg"
    FH = "FhCrkg"


@dataclass(frozen=True, eq=False)
class BitKey:
    """Raw key bits with one ``(index, block)`` label per bit.

    ``index`` is a subcarrier (1-based) for plain/FH keys and a delay tap
    (0-based) for CPR keys, as recorded in ``label_kind``.
    """

    bits: np.ndarray
    source_labels: np.ndarray  # (n, 2) int
    label_kind: str = "subcarrier"

    def __post_init__(self):
        if len(self.bits) != len(self.source_labels):
            raise ValueError("bits and source_labels must have equal length")

    def __len__(self):
        return len(self.bits)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class CprConfig:
    N_sel: int
    alpha_min: int
    detect_eta: float = 0.5
    detect: bool = True

    def __post_init__(self):
        if self.N_sel < 1 or self.alpha_min < 1:
            raise ValueError("N_sel and alpha_min must be at least 1")
        if not 0 < self.detect_eta < 1:
            raise ValueError("detect_eta must lie in (0, 1)")

    @classmethod
    def default_for(cls, L: int, N_p: int, **kw) -> "CprConfig":
        """``N_sel = L + 2`` and ``alpha_min = ceil(0.8 N_p)``."""
        return cls(N_sel=L + 2, alpha_min=max(1, math.ceil(0.8 * N_p)), **kw)

    def check(self, K: int, N_p: int):
        if self.N_sel > K or self.alpha_min > N_p:
            raise ValueError(f"need N_sel <= K={K} and alpha_min <= N_p={N_p}")


@dataclass(frozen=True)
class PathReport:
    K_A: frozenset
    K_B: frozenset
    flagged: frozenset
    K_final: frozenset
    flagged_A: frozenset = frozenset()
    flagged_B: frozenset = frozenset()
    autocorr_A: dict = field(default_factory=dict)
    autocorr_B: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def fmt(d):
            return {str(k): float(v) for k, v in sorted(d.items())}

        return {
            "K_A": sorted(self.K_A),
            "K_B": sorted(self.K_B),
            "flagged_A": sorted(self.flagged_A),
            "flagged_B": sorted(self.flagged_B),
            "K_final": sorted(self.K_final),
            "autocorr_A": fmt(self.autocorr_A),
            "autocorr_B": fmt(self.autocorr_B),
        }


# --------------------------------------------------------------------------
# delay domain


def delay_transform(H: np.ndarray) -> np.ndarray:
    """``G = F H / K`` with ``F[r, c] = exp(j 2 pi r c / K)``, ``r = 0..K-1``, ``c = 1..K``.

    A unit path at integer delay ``tau`` lands on row ``tau`` with its gain
    intact. Computed with an FFT: column index ``c = K`` aliases to 0, hence
    the roll.
    """
    H = np.asarray(H)
    return np.fft.ifft(np.roll(H, 1, axis=0), axis=0)


def inverse_delay_transform(G: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`delay_transform`."""
    return np.roll(np.fft.fft(np.asarray(G), axis=0), -1, axis=0)


# Powers this far below the column peak are round-off, never a path.
_NEGLIGIBLE = 1e-20


def select_significant(G: np.ndarray, cfg: CprConfig) -> frozenset:
    """Rows that are among the ``N_sel`` strongest in at least ``alpha_min`` columns.

    Ties are broken toward the lower row index. Entries below
    ``1e-20`` times the column peak power are never counted.
    """
    G = np.asarray(G)
    if G.ndim == 1:
        G = G[:, None]
    K, N_p = G.shape
    cfg.check(K, N_p)
    p = np.abs(G) ** 2
    order = np.argsort(-p, axis=0, kind="stable")[: cfg.N_sel]
    d = np.zeros_like(p, dtype=bool)
    np.put_along_axis(d, order, True, axis=0)
    d &= p > _NEGLIGIBLE * p.max(axis=0, keepdims=True)
    counts = d.sum(axis=1)
    return frozenset(int(k) for k in np.flatnonzero(counts >= cfg.alpha_min))


def lag1_autocorrelation(row: np.ndarray) -> float:
    """``|R(1)| / R(0)`` with ``R(j) = sum_n g(n + j) g*(n)``.

    Each lag is averaged over the pairs it actually has (``N_p - j``), so
    a static row scores exactly 1.
    """
    row = np.asarray(row)
    r0 = float(np.mean(np.abs(row) ** 2))
    if r0 == 0.0 or row.size < 2:
        return 1.0
    r1 = np.mean(row[1:] * np.conj(row[:-1]))
    return float(abs(r1) / r0)


def detect_ris_path(
    G: np.ndarray, candidates, cfg: CprConfig, with_values: bool = False
):
    """Flag candidate rows whose autocorrelation falls off much faster than the rest.

    A row is flagged when its normalized lag-1 autocorrelation is below
    ``detect_eta`` and below half the median over the candidate set.
    """
    G = np.asarray(G)
    if G.shape[1] < 8:
        raise ValueError("detection needs at least 8 probing rounds")
    cand = sorted(candidates)
    values = {k: lag1_autocorrelation(G[k]) for k in cand}
    flagged = frozenset()
    if cand:
        med = float(np.median(list(values.values())))
        flagged = frozenset(
            k for k, v in values.items() if v < cfg.detect_eta and v < 0.5 * med
        )
    return (flagged, values) if with_values else flagged


def negotiate_paths(K_A, K_B, flagged_A=frozenset(), flagged_B=frozenset()) -> PathReport:
    """Intersect both parties' path sets after each drops its own flagged rows."""
    K_A, K_B = frozenset(K_A), frozenset(K_B)
    flagged_A, flagged_B = frozenset(flagged_A), frozenset(flagged_B)
    final = (K_A - flagged_A) & (K_B - flagged_B)
    rep = PathReport(
        K_A=K_A,
        K_B=K_B,
        flagged=flagged_A | flagged_B,
        K_final=frozenset(final),
        flagged_A=flagged_A,
        flagged_B=flagged_B,
    )
    if not final:
        raise NoUsablePathsError(report=rep)
    return rep


def average_paths(G: np.ndarray, K_final) -> np.ndarray:
    """Mean over probing rounds of every kept row, in ascending tap order."""
    rows = sorted(K_final)
    if not rows:
        raise NoUsablePathsError("no paths to average")
    return np.asarray(G)[rows].mean(axis=1)


# --------------------------------------------------------------------------
# quantization


def cdf_quantize(samples) -> np.ndarray:
    """One bit per sample: 1 iff the sample is at or above the empirical median."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples to quantize")
    return (x >= np.median(x)).astype(np.uint8)


def bdr(a, b) -> float:
    """Fraction of positions where two bit strings differ."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("bit strings must have equal length")
    if a.size == 0:
        return 0.0
    return float(np.count_nonzero(a != b) / a.size)


# --------------------------------------------------------------------------
# pipelines


@dataclass(frozen=True, eq=False)
class PipelineResult:
    key_a: BitKey
    key_b: BitKey
    bdr: float
    reports: list  # PathReport or None per block (CPR only)
    skipped: int
    n_blocks: int

    @property
    def skip_rate(self) -> float:
        return self.skipped / self.n_blocks

    def block_bdr(self) -> dict[int, float]:
        """Per-block disagreement, keyed by block index (blocks with bits only)."""
        blocks = self.key_a.source_labels[:, 1]
        out = {}
        for b in np.unique(blocks):
            m = blocks == b
            out[int(b)] = bdr(self.key_a.bits[m], self.key_b.bits[m])
        return out


def cpr_block(ps: ProbeSeries, cpr: CprConfig) -> tuple[PathReport, np.ndarray, np.ndarray]:
    """Steps 2-5 for one block; returns the report and both averaged gain vectors."""
    G_ab = delay_transform(ps.H_ab)  # Bob
    G_ba = delay_transform(ps.H_ba)  # Alice
    K_B = select_significant(G_ab, cpr)
    K_A = select_significant(G_ba, cpr)
    if cpr.detect:
        f_B, v_B = detect_ris_path(G_ab, K_B, cpr, with_values=True)
        f_A, v_A = detect_ris_path(G_ba, K_A, cpr, with_values=True)
    else:
        f_A = f_B = frozenset()
        v_A = {k: lag1_autocorrelation(G_ba[k]) for k in K_A}
        v_B = {k: lag1_autocorrelation(G_ab[k]) for k in K_B}
    try:
        rep = negotiate_paths(K_A, K_B, f_A, f_B)
    except NoUsablePathsError as exc:
        exc.report = replace(exc.report, autocorr_A=v_A, autocorr_B=v_B)
        raise
    rep = replace(rep, autocorr_A=v_A, autocorr_B=v_B)
    return rep, average_paths(G_ba, rep.K_final), average_paths(G_ab, rep.K_final)


def _quantize_groups(values_a, values_b, labels, groups):
    """Median-quantize each group separately; groups of one sample are dropped."""
    bits_a = np.zeros(len(labels), dtype=np.uint8)
    bits_b = np.zeros(len(labels), dtype=np.uint8)
    keep = np.zeros(len(labels), dtype=bool)
    for g in np.unique(groups):
        m = groups == g
        if np.count_nonzero(m) < 2:
            continue
        bits_a[m] = cdf_quantize(values_a[m])
        bits_b[m] = cdf_quantize(values_b[m])
        keep |= m
    return bits_a[keep], bits_b[keep], labels[keep]


def run_pipeline(
    s: Scenario,
    sched: ReflectionSchedule,
    cfg: ProbeConfig,
    cpr: CprConfig | None,
    n_blocks: int,
    scheme: Scheme,
    seed: int = 0,
) -> PipelineResult:
    """Simulate ``n_blocks`` coherence blocks and extract both raw keys.

    - ``PlainCrkg``: every round's per-subcarrier magnitude, quantized per subcarrier.
    - ``FhCrkg``: one subcarrier per block (rotating), carrying the whole pilot
      power so its noise variance is ``sigma2 / K``. All subcarriers share one
      distribution, so the hopped samples are quantized against a single median.
    - ``CprCrkg``: averaged delay-tap magnitudes over the negotiated taps,
      quantized per tap; blocks without usable taps are skipped and counted.

    Alice's key comes from her reverse-link estimates, Bob's from the forward link.
    """
    scheme = Scheme(scheme)
    noise_var = cfg.sigma2 / s.K if scheme is Scheme.FH else None
    series = collect_series(s, sched, cfg, n_blocks, seed, noise_var=noise_var)
    reports: list = [None] * n_blocks
    skipped = 0

    if scheme is Scheme.PLAIN:
        K, N_p = series[0].H_ab.shape
        va = np.abs(np.stack([ps.H_ba.T for ps in series])).ravel()
        vb = np.abs(np.stack([ps.H_ab.T for ps in series])).ravel()
        sub = np.tile(np.arange(1, K + 1), n_blocks * N_p)
        blk = np.repeat(np.arange(n_blocks), N_p * K)
        labels = np.column_stack([sub, blk])
        kind = "subcarrier"
    elif scheme is Scheme.FH:
        K, N_p = series[0].H_ab.shape
        ks = np.arange(n_blocks) % K
        va = np.concatenate([np.abs(ps.H_ba[k]) for ps, k in zip(series, ks)])
        vb = np.concatenate([np.abs(ps.H_ab[k]) for ps, k in zip(series, ks)])
        labels = np.column_stack([np.repeat(ks + 1, N_p), np.repeat(np.arange(n_blocks), N_p)])
        kind = "subcarrier"
    else:
        if cpr is None:
            raise ValueError("CprCrkg needs a CprConfig")
        va_l, vb_l, lab_l = [], [], []
        for b, ps in enumerate(series):
            try:
                rep, g_a, g_b = cpr_block(ps, cpr)
            except NoUsablePathsError as exc:
                skipped += 1
                reports[b] = exc.report
                continue
            reports[b] = rep
            taps = sorted(rep.K_final)
            va_l.append(np.abs(g_a))
            vb_l.append(np.abs(g_b))
            lab_l.append(np.column_stack([taps, np.full(len(taps), b)]))
        if lab_l:
            va, vb, labels = np.concatenate(va_l), np.concatenate(vb_l), np.concatenate(lab_l)
        else:
            va = vb = np.zeros(0)
            labels = np.zeros((0, 2), dtype=int)
        kind = "tap"

    labels = labels.astype(np.int64)
    groups = np.zeros(len(labels), dtype=np.int64) if scheme is Scheme.FH else labels[:, 0]
    bits_a, bits_b, labels = _quantize_groups(va, vb, labels, groups)
    # bits are stored in block order, then index
    order = np.lexsort((labels[:, 0], labels[:, 1]), axis=0) if len(labels) else np.zeros(0, int)
    key_a = BitKey(bits_a[order], labels[order], kind)
    key_b = BitKey(bits_b[order], labels[order], kind)
    return PipelineResult(
        key_a=key_a,
        key_b=key_b,
        bdr=bdr(key_a.bits, key_b.bits),
        reports=reports,
        skipped=skipped,
        n_blocks=n_blocks,
    )
