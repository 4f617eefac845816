import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risjam.attack import ReflectionSchedule
from risjam.channel import ChannelRealization, frequency_response
from risjam.crkg import (
    BitKey,
    CprConfig,
    NoUsablePathsError,
    Scheme,
    average_paths,
    bdr,
    cdf_quantize,
    delay_transform,
    detect_ris_path,
    inverse_delay_transform,
    lag1_autocorrelation,
    negotiate_paths,
    run_pipeline,
    select_significant,
)
from risjam.probing import ProbeConfig
from risjam.scene import reference_scenario


def F_matrix(K):
    """Printed transform matrix: rows r = 0..K-1, columns c = 1..K."""
    r = np.arange(K)[:, None]
    c = np.arange(1, K + 1)[None, :]
    return np.exp(2j * np.pi * r * c / K)


def response(alpha, tau, K):
    c = ChannelRealization(
        alpha=np.asarray(alpha, complex), tau=np.asarray(tau, float),
        h_ar=np.zeros(1, complex), h_rb=np.zeros(1, complex), tau_r=0.0, K=K,
    )
    return frequency_response(c, np.zeros(1))


# -- delay transform ----------------------------------------------------------


def test_single_path_at_zero_delay():
    G = delay_transform(response([1.0], [0], 16)[:, None])
    assert abs(G[0, 0]) == pytest.approx(1.0, abs=1e-15)
    assert np.max(np.abs(G[1:, 0])) < 1e-15


def test_two_paths_against_matrix_oracle():
    K = 16
    H = response([1.0, 0.5], [3, 7], K)[:, None]
    G = delay_transform(H)
    ref = F_matrix(K) @ H / K
    np.testing.assert_allclose(G, ref, atol=1e-14)
    mag = np.abs(G[:, 0])
    assert mag[3] == pytest.approx(1.0, abs=1e-12) and mag[7] == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.delete(mag, [3, 7])) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), K=st.sampled_from([4, 16, 128]), n=st.integers(1, 8))
def test_round_trip_and_oracle(seed, K, n):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n))
    G = delay_transform(H)
    assert np.max(np.abs(inverse_delay_transform(G) - H)) < 1e-10
    np.testing.assert_allclose(G, F_matrix(K) @ H / K, atol=1e-10)


# -- selection ----------------------------------------------------------------


def test_noiseless_integer_channel_selects_true_taps():
    K, taps = 32, [2, 5, 9, 20]
    rng = np.random.default_rng(0)
    cols = [response(rng.standard_normal(4) + 1j * rng.standard_normal(4), taps, K) for _ in range(10)]
    G = delay_transform(np.stack(cols, axis=1))
    assert select_significant(G, CprConfig(N_sel=4, alpha_min=10)) == frozenset(taps)
    # N_sel larger than the path count must not pick up round-off rows
    assert select_significant(G, CprConfig(N_sel=6, alpha_min=10)) == frozenset(taps)


def test_pure_noise_selects_almost_nothing():
    rng = np.random.default_rng(1)
    G = rng.standard_normal((128, 100)) + 1j * rng.standard_normal((128, 100))
    assert len(select_significant(G, CprConfig(N_sel=6, alpha_min=100))) <= 1


def test_alpha_one_is_union():
    rng = np.random.default_rng(2)
    G = rng.standard_normal((16, 5)) + 1j * rng.standard_normal((16, 5))
    top = set()
    for n in range(5):
        top |= set(np.argsort(-np.abs(G[:, n]), kind="stable")[:3].tolist())
    assert select_significant(G, CprConfig(N_sel=3, alpha_min=1)) == frozenset(top)


def test_ties_prefer_lower_index():
    G = np.ones((8, 1))
    assert select_significant(G, CprConfig(N_sel=3, alpha_min=1)) == frozenset({0, 1, 2})


def test_config_checks():
    with pytest.raises(ValueError):
        CprConfig(N_sel=0, alpha_min=1)
    with pytest.raises(ValueError):
        CprConfig(N_sel=1, alpha_min=1, detect_eta=1.0)
    with pytest.raises(ValueError):
        select_significant(np.ones((4, 2)), CprConfig(N_sel=5, alpha_min=1))
    d = CprConfig.default_for(4, 50)
    assert (d.N_sel, d.alpha_min, d.detect_eta) == (6, 40, 0.5)


# -- detection ----------------------------------------------------------------


def test_constant_row_autocorrelation():
    row = np.full(50, 0.3 + 0.4j)
    assert lag1_autocorrelation(row) == pytest.approx(1.0, abs=1e-15)


def test_white_row_autocorrelation_vanishes():
    rng = np.random.default_rng(0)
    vals = []
    for n in (50, 5000):
        row = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        vals.append(lag1_autocorrelation(row))
    assert vals[1] < 0.05 and vals[1] < vals[0] + 0.05


def test_detect_flags_white_row_only():
    rng = np.random.default_rng(3)
    G = np.ones((6, 50), complex)
    G[4] = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    cfg = CprConfig(N_sel=6, alpha_min=1)
    assert detect_ris_path(G, {0, 1, 2, 4}, cfg) == frozenset({4})
    assert detect_ris_path(G, {0, 1, 2}, cfg) == frozenset()
    assert detect_ris_path(G, set(), cfg) == frozenset()
    with pytest.raises(ValueError):
        detect_ris_path(G[:, :7], {0}, cfg)


# -- negotiation and averaging --------------------------------------------------


def test_negotiation_cases():
    rep = negotiate_paths({1, 2, 3}, {1, 2, 3})
    assert rep.K_final == {1, 2, 3} and rep.flagged == frozenset()
    rep = negotiate_paths({1, 2}, {1, 2, 4})
    assert rep.K_final == {1, 2}
    rep = negotiate_paths({1, 2, 4}, {1, 2, 4}, {4}, set())
    assert rep.K_final == {1, 2} and rep.flagged <= rep.K_A | rep.K_B
    with pytest.raises(NoUsablePathsError) as e:
        negotiate_paths({1}, {2})
    assert e.value.report.K_final == frozenset()


def test_average_paths():
    G = np.arange(12, dtype=complex).reshape(4, 3)
    np.testing.assert_array_equal(average_paths(G[:, :1], {2, 0}), G[[0, 2], 0])
    np.testing.assert_allclose(average_paths(np.full((3, 7), 2 - 1j), {1}), [2 - 1j])


def test_averaging_reduces_noise_variance():
    rng = np.random.default_rng(0)
    trials, N = 1000, 100
    noise = (rng.standard_normal((trials, N)) + 1j * rng.standard_normal((trials, N))) / math.sqrt(2)
    est = np.array([average_paths((1.0 + noise[i])[None, :], {0})[0] for i in range(trials)])
    assert np.var(est) == pytest.approx(1 / N, rel=0.2)


# -- quantizer and BDR --------------------------------------------------------


def test_cdf_quantize():
    np.testing.assert_array_equal(cdf_quantize([1, 2, 3, 4]), [0, 0, 1, 1])
    np.testing.assert_array_equal(cdf_quantize([5, 5, 5]), [1, 1, 1])
    x = np.random.default_rng(0).standard_normal(1000)  # even: no sample sits on the median
    assert np.all(cdf_quantize(-x) != cdf_quantize(x))
    with pytest.raises(ValueError):
        cdf_quantize([1.0])


def test_quantizer_balance():
    x = np.abs(np.random.default_rng(1).standard_normal(2000))
    assert abs(np.mean(cdf_quantize(x)) - 0.5) < 0.05


def test_bdr():
    a = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    assert bdr(a, a) == 0.0
    assert bdr(a, 1 - a) == 1.0
    b = a.copy()
    b[3] ^= 1
    assert bdr(a, b) == 0.125
    with pytest.raises(ValueError):
        bdr(a, a[:-1])


def test_bitkey_lengths():
    with pytest.raises(ValueError):
        BitKey(np.zeros(3), np.zeros((2, 2)))
    assert BitKey(np.array([1, 0]), np.zeros((2, 2), int)).to_string() == "10"


# -- pipelines ----------------------------------------------------------------

S_INT = reference_scenario(integer_taps=True)


def sched(mode, T_r=None, s=S_INT):
    return ReflectionSchedule(mode, M=s.M, T_r=T_r, seed=1)


def test_cpr_no_attack_high_snr():
    cfg = ProbeConfig(snr_db=30.0)
    res = run_pipeline(S_INT, sched("NoRis"), cfg, CprConfig.default_for(4, 50), 500, Scheme.CPR, seed=2)
    assert res.bdr < 0.02


def test_pipeline_is_deterministic():
    cfg = ProbeConfig(snr_db=10.0, N_p=10)
    cpr = CprConfig.default_for(4, 10)
    for scheme in Scheme:
        a = run_pipeline(S_INT, sched("AsyncConfig", 1e-3), cfg, cpr, 20, scheme, seed=9)
        b = run_pipeline(S_INT, sched("AsyncConfig", 1e-3), cfg, cpr, 20, scheme, seed=9)
        assert a.key_a.to_string() == b.key_a.to_string()
        assert a.key_b.to_string() == b.key_b.to_string()
        np.testing.assert_array_equal(a.key_a.source_labels, b.key_a.source_labels)


def test_asymmetric_noiseless_cpr_independent_of_eta():
    cfg = ProbeConfig(snr_db=300.0)
    for eta in (0.1, 0.5, 0.9):
        for detect in (True, False):
            cpr = CprConfig(N_sel=6, alpha_min=40, detect_eta=eta, detect=detect)
            res = run_pipeline(S_INT, sched("AsymmetricStructure"), cfg, cpr, 200, Scheme.CPR, seed=1)
            assert res.bdr == 0.0


def test_async_cpr_matches_no_attack_when_detected():
    cfg = ProbeConfig(snr_db=10.0)
    cpr = CprConfig.default_for(4, 50)
    att = run_pipeline(S_INT, sched("AsyncConfig", cfg.T_p), cfg, cpr, 500, Scheme.CPR, seed=4)
    ref = run_pipeline(S_INT, sched("NoRis"), cfg, cpr, 500, Scheme.CPR, seed=4)
    assert abs(att.bdr - ref.bdr) <= 0.02


def test_fractional_taps_leave_cpr_floor():
    s = reference_scenario()
    cfg = ProbeConfig(snr_db=30.0)
    cpr = CprConfig.default_for(4, 50)
    res = run_pipeline(s, sched("AsymmetricStructure", s=s), cfg, cpr, 300, Scheme.CPR, seed=1)
    assert res.bdr > 0.01


def test_plain_and_fh_labels():
    cfg = ProbeConfig(snr_db=10.0, N_p=4)
    res = run_pipeline(S_INT, sched("NoRis"), cfg, None, 3, Scheme.PLAIN, seed=0)
    assert len(res.key_a) == 3 * 4 * S_INT.K
    assert res.key_a.label_kind == "subcarrier"
    assert set(res.key_a.source_labels[:, 1]) == {0, 1, 2}
    fh = run_pipeline(S_INT, sched("NoRis"), cfg, None, 3, Scheme.FH, seed=0)
    assert len(fh.key_a) == 3 * 4
    np.testing.assert_array_equal(np.unique(fh.key_a.source_labels[:, 0]), [1, 2, 3])
    with pytest.raises(ValueError):
        run_pipeline(S_INT, sched("NoRis"), cfg, None, 3, Scheme.CPR)


def test_skipped_blocks_are_counted():
    # an impossible threshold leaves no common path in any block
    cfg = ProbeConfig(snr_db=-20.0, N_p=10)
    cpr = CprConfig(N_sel=1, alpha_min=10)
    res = run_pipeline(S_INT, sched("NoRis"), cfg, cpr, 20, Scheme.CPR, seed=0)
    assert res.skipped > 0
    assert res.skip_rate == res.skipped / 20
    assert all(r is not None for r in res.reports)
