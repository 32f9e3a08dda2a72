import numpy as np
import pytest

from marclat import (ConfigurationError, MarcConfig, build_dst_superchannel,
                     build_relay_listen_channel, build_relay_superchannel,
                     embed_complex, embed_vector, rate_ung, sample_rayleigh,
                     transmitter_slices)


def make_cfg(**kw):
    base = dict(num_users=2, user_antennas=1, relay_antennas=2, dst_antennas=1,
                num_slots=2, slot_len=1, snr_relay_db=10.0, snr_dst_db=10.0,
                user_rates=(2.0, 2.0), relay_rate=4.0)
    base.update(kw)
    return MarcConfig(**base)


# ----------------------------------------------------------------------------
# configuration invariants


def test_config_rejects_bad_values():
    with pytest.raises(ConfigurationError):
        make_cfg(num_users=0)
    with pytest.raises(ConfigurationError):
        make_cfg(num_slots=1)
    with pytest.raises(ConfigurationError):
        make_cfg(user_rates=(2.0,))
    with pytest.raises(ConfigurationError):
        make_cfg(user_rates=(2.0, -1.0))


# ----------------------------------------------------------------------------
# fading draws


def test_sample_rayleigh_deterministic_per_seed():
    cfg = make_cfg()
    a = sample_rayleigh(cfg, np.random.default_rng(7))
    b = sample_rayleigh(cfg, np.random.default_rng(7))
    assert np.array_equal(a.to_relay, b.to_relay)
    assert np.array_equal(a.to_dst, b.to_dst)
    assert np.array_equal(a.relay_to_dst, b.relay_to_dst)


def test_sample_rayleigh_unit_power():
    cfg = make_cfg(num_users=1, relay_antennas=1, user_rates=(2.0,))
    rng = np.random.default_rng(0)
    draws = np.array([sample_rayleigh(cfg, rng).to_relay[0, 0, 0]
                      for _ in range(10_000)])
    assert abs(np.mean(np.abs(draws) ** 2) - 1.0) < 0.05


def test_sample_rayleigh_shapes():
    cfg = make_cfg()
    real = sample_rayleigh(cfg, np.random.default_rng(1))
    assert real.to_relay.shape == (2, 2, 1)
    assert real.to_dst.shape == (2, 1, 1)
    assert real.relay_to_dst.shape == (1, 2)


# ----------------------------------------------------------------------------
# complex embedding


def test_embed_real_scalar():
    assert np.array_equal(embed_complex(np.array([[1.0]])), np.eye(2))


def test_embed_imaginary_unit():
    assert np.array_equal(embed_complex(np.array([[1j]])),
                          np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_embed_respects_complex_product():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    lhs = embed_complex(h) @ embed_vector(x)
    rhs = embed_vector(h @ x)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_embed_is_ring_homomorphism():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.allclose(embed_complex(a @ b),
                           embed_complex(a) @ embed_complex(b), atol=1e-10)
        assert np.allclose(embed_complex(a + b),
                           embed_complex(a) + embed_complex(b), atol=1e-10)


# ----------------------------------------------------------------------------
# destination super-channel


def test_dst_relay_block_zero_when_silent():
    cfg = make_cfg()
    real = sample_rayleigh(cfg, np.random.default_rng(5))
    h = build_dst_superchannel(real, cfg.num_slots, cfg)
    relay_cols = transmitter_slices(cfg)[-1]
    assert np.all(h[:, relay_cols] == 0.0)


def test_dst_zero_channels_give_zero_matrix():
    cfg = make_cfg()
    real = sample_rayleigh(cfg, np.random.default_rng(6))
    zero = type(real)(to_relay=np.zeros_like(real.to_relay),
                      to_dst=np.zeros_like(real.to_dst),
                      relay_to_dst=np.zeros_like(real.relay_to_dst))
    assert np.all(build_dst_superchannel(zero, 1, cfg) == 0.0)


def test_dst_hand_assembled_single_user_layout():
    cfg = make_cfg(num_users=1, relay_antennas=1, user_rates=(2.0,))
    real = sample_rayleigh(cfg, np.random.default_rng(8))
    h = build_dst_superchannel(real, 1, cfg)
    assert h.shape == (4, 8)
    scale = np.sqrt(cfg.snr_dst)
    eu = embed_complex(real.to_dst[0])
    er = embed_complex(real.relay_to_dst)
    expected = np.zeros((4, 8))
    expected[0:2, 0:2] = scale * eu
    expected[2:4, 2:4] = scale * eu
    expected[2:4, 6:8] = scale * er
    assert np.allclose(h, expected, atol=1e-12)


def test_dst_phase1_rows_zero_in_relay_block():
    cfg = make_cfg(num_slots=3, slot_len=2)
    real = sample_rayleigh(cfg, np.random.default_rng(9))
    for ell1 in range(1, cfg.num_slots + 1):
        h = build_dst_superchannel(real, ell1, cfg)
        relay_cols = transmitter_slices(cfg)[-1]
        rows = 2 * cfg.dst_antennas * ell1 * cfg.slot_len
        assert np.all(h[:rows, relay_cols] == 0.0)


# ----------------------------------------------------------------------------
# relay super-channel


def test_relay_single_symbol_block():
    cfg = make_cfg(num_users=1, relay_antennas=1, user_rates=(2.0,))
    real = sample_rayleigh(cfg, np.random.default_rng(10))
    h = build_relay_superchannel(real, 1, cfg)
    assert h.shape == (2, 2)
    assert np.allclose(h, np.sqrt(cfg.snr_relay) * embed_complex(real.to_relay[0]))


def test_relay_dims_scale_with_listening_length():
    cfg = make_cfg(num_slots=4)
    real = sample_rayleigh(cfg, np.random.default_rng(11))
    h1 = build_relay_superchannel(real, 1, cfg)
    h2 = build_relay_superchannel(real, 2, cfg)
    assert h2.shape == (2 * h1.shape[0], 2 * h1.shape[1])


def test_relay_sr_offset_scales_snr():
    cfg = make_cfg(sr_offset_db=10.0)
    real = sample_rayleigh(cfg, np.random.default_rng(12))
    h = build_relay_superchannel(real, 1, cfg)
    cfg0 = make_cfg(sr_offset_db=0.0)
    h0 = build_relay_superchannel(real, 1, cfg0)
    assert np.allclose(h, np.sqrt(10.0) * h0, atol=1e-12)


def test_relay_logdet_matches_per_symbol_value():
    cfg = make_cfg(num_slots=4, slot_len=2)
    real = sample_rayleigh(cfg, np.random.default_rng(13))
    for ell in (1, 2, 3):
        h = build_relay_superchannel(real, ell, cfg)
        per_symbol = build_relay_superchannel(
            real, 1, make_cfg(num_slots=4, slot_len=1))
        n_sym = ell * cfg.slot_len
        assert abs(rate_ung(h) - n_sym * rate_ung(per_symbol)) < 1e-9


def test_dst_logdet_factors_over_phases():
    # dense super-matrix log-det equals per-symbol log-dets times symbol
    # counts, checked up to the LT = 8 oracle size
    for slots, t in ((3, 1), (4, 2)):
        cfg = make_cfg(num_slots=slots, slot_len=t)
        real = sample_rayleigh(cfg, np.random.default_rng(14))
        for ell1 in range(1, slots + 1):
            h = build_dst_superchannel(real, ell1, cfg)
            dense = rate_ung(h)
            scale_u = np.sqrt(cfg.snr_dst / cfg.user_antennas)
            scale_r = np.sqrt(cfg.snr_dst / cfg.relay_antennas)
            a1 = np.hstack([scale_u * embed_complex(real.to_dst[i])
                            for i in range(2)])
            a2 = np.hstack([a1, scale_r * embed_complex(real.relay_to_dst)])
            per = t * (ell1 * rate_ung(a1) + (slots - ell1) * rate_ung(a2))
            assert abs(dense - per) < 1e-9


def test_superchannel_container():
    from marclat import build_superchannel
    cfg = make_cfg()
    real = sample_rayleigh(cfg, np.random.default_rng(16))
    sc = build_superchannel(real, 1, cfg)
    assert np.array_equal(sc.h_dst, build_dst_superchannel(real, 1, cfg))
    assert sc.ell1 == 1
    assert np.array_equal(sc.h_relay(2), build_relay_superchannel(real, 2, cfg))


# ----------------------------------------------------------------------------
# relay listening channel (zero columns on unheard symbols)


def test_relay_listen_channel_pads_unheard_symbols():
    cfg = make_cfg(num_slots=3, slot_len=2)
    real = sample_rayleigh(cfg, np.random.default_rng(15))
    h = build_relay_listen_channel(real, 1, cfg)
    assert h.shape == (2 * cfg.relay_antennas * 2, 2 * cfg.num_users * cfg.block_len)
    heard = 2 * cfg.user_antennas * 2
    for i in range(cfg.num_users):
        block = h[:, i * cfg.user_dim:(i + 1) * cfg.user_dim]
        assert np.all(block[:, heard:] == 0.0)
        assert np.any(block[:, :heard] != 0.0)
