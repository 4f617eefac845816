import csv
import io

import numpy as np
import pytest

from risjam.attack import ReflectionSchedule, lambdas_at
from risjam.channel import frequency_response, sample_batch, sample_realization
from risjam.probing import (
    BlockBoundaryError,
    ProbeConfig,
    collect_series,
    probe_round,
    probe_rounds,
    write_series_csv,
)
from risjam.scene import reference_scenario

S = reference_scenario()


def sched(mode, **kw):
    return ReflectionSchedule(mode, M=S.M, seed=2, **kw)


def zero_noise(c, sc, t1, cfg):
    return probe_rounds(c, sc, t1, cfg, np.random.default_rng(0), noise_var=0.0)


def test_benign_noiseless_reciprocal():
    c = sample_realization(S, 1)
    h_ab, h_ba = zero_noise(c, sched("Benign"), np.array([0.01, 0.02]), ProbeConfig())
    np.testing.assert_array_equal(h_ab, h_ba)


def test_no_ris_noiseless_reciprocal():
    c = sample_realization(S, 1)
    h_ab, h_ba = zero_noise(c, sched("NoRis"), np.array([0.0]), ProbeConfig())
    np.testing.assert_array_equal(h_ab, h_ba)


def test_asymmetric_reverse_lacks_ris_term():
    c = sample_realization(S, 1)
    h_ab, h_ba = zero_noise(c, sched("AsymmetricStructure"), np.array([0.0]), ProbeConfig())
    np.testing.assert_array_equal(h_ba[0], frequency_response(c, np.zeros(S.M)))
    assert not np.allclose(h_ab, h_ba)


def test_noise_variance_and_independence():
    cfg = ProbeConfig(snr_db=10.0)
    c = sample_batch(S, 100_000, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    h_ab, h_ba = probe_rounds(c, sched("NoRis"), np.zeros(100_000), cfg, rng)
    clean, _ = probe_rounds(c, sched("NoRis"), np.zeros(100_000), cfg, rng, noise_var=0.0)
    z_b = (h_ab - clean)[:, 0]
    z_a = (h_ba - clean)[:, 0]
    assert np.mean(np.abs(z_b) ** 2) == pytest.approx(cfg.sigma2, rel=0.02)
    assert abs(np.mean(z_a * np.conj(z_b))) < 0.02 * cfg.sigma2


def test_straddling_round_rejected():
    c = sample_realization(S, 1)
    cfg = ProbeConfig(T_p=1e-3, T_c=0.1)
    with pytest.raises(BlockBoundaryError):
        probe_round(c, sched("NoRis"), 0.0995, cfg, np.random.default_rng(0))
    # a pong landing exactly on the boundary is still inside the block
    probe_round(c, sched("NoRis"), 0.099, cfg, np.random.default_rng(0))


def test_config_validation():
    with pytest.raises(ValueError):
        ProbeConfig(T_p=0.2, T_c=0.1)
    with pytest.raises(ValueError):
        ProbeConfig(N_p=0)
    with pytest.raises(ValueError):
        ProbeConfig(T_p=1e-3, T_c=0.01, N_p=20)


def test_single_block_single_round():
    out = collect_series(S, sched("NoRis"), ProbeConfig(N_p=1), 1, seed=0)
    assert len(out) == 1 and out[0].H_ab.shape == (S.K, 1)


def test_collect_is_deterministic():
    cfg = ProbeConfig(N_p=5)
    a = write_series_csv(collect_series(S, sched("AsyncConfig", T_r=1e-3), cfg, 2, seed=7))
    b = write_series_csv(collect_series(S, sched("AsyncConfig", T_r=1e-3), cfg, 2, seed=7))
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert rows[0] == ["block", "round", "subcarrier", "h_ab_re", "h_ab_im", "h_ba_re", "h_ba_im"]
    assert len(rows) == 1 + 2 * 5 * S.K


def test_csv_roundtrip_is_exact():
    cfg = ProbeConfig(N_p=2)
    series = collect_series(S, sched("Benign"), cfg, 1, seed=3)
    buf = io.StringIO()
    write_series_csv(series, buf)
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    r = rows[5]
    k, m = int(r["subcarrier"]) - 1, int(r["round"])
    assert complex(float(r["h_ab_re"]), float(r["h_ab_im"])) == series[0].H_ab[k, m]


def test_benign_high_snr_correlation():
    cfg = ProbeConfig(snr_db=30.0, N_p=1)
    series = collect_series(S, sched("Benign"), cfg, 1000, seed=1)
    x = np.stack([p.H_ab[:, 0] for p in series])
    y = np.stack([p.H_ba[:, 0] for p in series])
    num = np.abs(np.mean(x * np.conj(y), axis=0))
    den = np.sqrt(np.mean(np.abs(x) ** 2, axis=0) * np.mean(np.abs(y) ** 2, axis=0))
    assert np.all(num / den > 0.99)


def test_slow_async_equals_benign_per_block():
    cfg = ProbeConfig(N_p=10, random_offset=False)
    # one RIS block per channel block; the RIS clock is aligned to t = 0
    a = collect_series(S, sched("AsyncConfig", T_r=cfg.T_c), cfg, 1, seed=4, noise_var=0.0)[0]
    lam = lambdas_at(sched("AsyncConfig", T_r=cfg.T_c), 0.0, "Forward")
    expect = frequency_response(sample_realization(S, [4, 0, 0]), lam)
    np.testing.assert_array_equal(a.H_ab, np.repeat(expect[:, None], 10, axis=1))
    np.testing.assert_array_equal(a.H_ab, a.H_ba)
