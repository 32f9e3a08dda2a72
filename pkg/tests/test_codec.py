import numpy as np
import pytest

from marclat import (MapperKind, MarcConfig, build_dst_superchannel,
                     build_relay_listen_channel, build_search, compute_gdfe,
                     construction_a, coset_metric, encode, from_code_rows,
                     k_stage_decode, make_mapper, map_indices, mod_lattice,
                     normalize_power, one_stage_decode, relay_decode,
                     sample_dither, sample_rayleigh, transmitter_slices)


def cubic_code(n, tau):
    return from_code_rows(np.eye(n, dtype=int), prime=2, scale=1.0).with_nesting(tau)


def small_mapper():
    users = (cubic_code(2, 2), cubic_code(2, 2))
    return make_mapper(MapperKind.ONE_TO_ONE_LINEAR, users, cubic_code(4, 2))


# ----------------------------------------------------------------------------
# MMSE-GDFE filters


def test_gdfe_zero_channel():
    f = compute_gdfe(np.zeros((3, 3)))
    assert np.allclose(f.feedback, np.eye(3))
    assert np.allclose(f.forward, 0.0)


def test_gdfe_scalar_closed_form():
    h = 1.7
    f = compute_gdfe(np.array([[h]]))
    assert np.isclose(f.feedback[0, 0], np.sqrt(1 + h * h))
    assert np.isclose(f.forward[0, 0], h / np.sqrt(1 + h * h))


def test_gdfe_identity_random_channels():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = rng.standard_normal((4, 4))
        f = compute_gdfe(h)
        gram = np.eye(4) + h.T @ h
        err = np.linalg.norm(f.feedback.T @ f.feedback - gram) / np.linalg.norm(gram)
        assert err < 1e-9
        assert np.allclose(np.tril(f.feedback, -1), 0.0)
        assert np.allclose(f.feedback.T @ f.forward, h.T, atol=1e-9)


# ----------------------------------------------------------------------------
# encoding


def test_encode_zero_message_zero_dither():
    code = cubic_code(4, 2)
    state = encode(code, np.zeros(4, dtype=int), np.zeros(4))
    assert np.allclose(state.signal, 0.0)


def test_encode_power_after_normalization():
    rng = np.random.default_rng(1)
    code = construction_a(6, 7, 2, 1.0, rng).with_nesting(2)
    code = normalize_power(code, rng, samples=20_000)
    total = 0.0
    n_enc = 10_000
    for _ in range(n_enc):
        msg = rng.integers(0, 2, size=6)
        x = encode(code, msg, sample_dither(code, rng)).signal
        total += x @ x
    assert abs(total / (n_enc * 6) - 0.5) < 0.01


def test_encoded_signal_distribution_independent_of_message():
    rng = np.random.default_rng(2)
    code = construction_a(4, 5, 2, 1.0, rng).with_nesting(2)
    code = normalize_power(code, rng, samples=10_000)
    msgs = (np.array([0, 0, 0, 0]), np.array([1, 0, 1, 1]))
    stats = []
    for msg in msgs:
        r = np.random.default_rng(3)
        xs = np.array([encode(code, msg, sample_dither(code, r)).signal
                       for _ in range(4000)])
        stats.append((xs.mean(axis=0), np.mean(xs ** 2)))
    # dithering makes the transmit signal Voronoi-uniform for every message
    assert np.all(np.abs(stats[0][0] - stats[1][0]) < 0.06)
    assert abs(stats[0][1] - stats[1][1]) < 0.02


# ----------------------------------------------------------------------------
# one-stage decoding


def loopback_setup(seed, gain=10.0):
    rng = np.random.default_rng(seed)
    mapper = small_mapper()
    search = build_search(mapper.user_codes, (0, 1), mapper)
    n = search.basis.shape[0]
    h = gain * (np.eye(n) + 0.05 * rng.standard_normal((n, n)))
    msgs = [rng.integers(0, 2, size=2), rng.integers(0, 2, size=2)]
    dithers = [sample_dither(c, rng) for c in mapper.user_codes]
    relay_dither = sample_dither(mapper.relay_code, rng)
    x = np.concatenate([
        encode(mapper.user_codes[0], msgs[0], dithers[0]).signal,
        encode(mapper.user_codes[1], msgs[1], dithers[1]).signal,
        encode(mapper.relay_code, map_indices(mapper, msgs), relay_dither).signal,
    ])
    u = np.concatenate(dithers + [relay_dither])
    return mapper, search, h, msgs, x, u


def test_one_stage_zero_noise_loopback():
    for seed in range(10):
        mapper, search, h, msgs, x, u = loopback_setup(seed)
        res = one_stage_decode(h @ x, h, search, u)
        assert res.exact
        assert np.array_equal(res.messages[0], msgs[0])
        assert np.array_equal(res.messages[1], msgs[1])


def test_one_stage_metric_equals_selfnoise_at_truth():
    mapper, search, h, msgs, x, u = loopback_setup(42)
    filters = compute_gdfe(h)
    y = h @ x
    # at zero noise the metric of the true (shifted) codeword reduces to the
    # feedback-whitened self-noise |B^-T x|^2
    c_true = x + u
    m_true = coset_metric(filters, y, u, c_true)
    self_noise = np.linalg.solve(filters.feedback.T, x)
    assert np.isclose(m_true, self_noise @ self_noise, atol=1e-9)
    res = one_stage_decode(y, h, search, u, filters=filters)
    assert res.metric <= m_true + 1e-9


def test_one_stage_coset_shift_invariance():
    rng = np.random.default_rng(7)
    for seed in range(5):
        mapper, search, h, msgs, x, u = loopback_setup(seed, gain=10.0)
        res0 = one_stage_decode(h @ x, h, search, u)
        z_shift = rng.integers(-2, 3, size=search.basis.shape[1])
        z_shift[:4] *= 2     # message coordinates shifted by shaping multiples
        shift = search.basis @ z_shift
        res1 = one_stage_decode(h @ (x + 0) + h @ shift, h, search, u)
        for i in (0, 1):
            assert np.array_equal(res0.messages[i], res1.messages[i])


def test_one_stage_all_zero():
    mapper = small_mapper()
    search = build_search(mapper.user_codes, (0, 1), mapper)
    n = search.basis.shape[0]
    res = one_stage_decode(np.zeros(n), 5 * np.eye(n), search, np.zeros(n))
    assert np.array_equal(res.messages[0], [0, 0])
    assert np.array_equal(res.messages[1], [0, 0])


# ----------------------------------------------------------------------------
# K-stage decoding


def coded_cfg(relay_antennas=2):
    return MarcConfig(num_users=2, user_antennas=1, relay_antennas=relay_antennas,
                      dst_antennas=1, num_slots=2, slot_len=1,
                      snr_relay_db=30.0, snr_dst_db=30.0,
                      user_rates=(2.0, 2.0), relay_rate=4.0)


def coded_codes(cfg, seed):
    rng = np.random.default_rng(seed)
    n_u = cfg.user_dim
    n_r = cfg.relay_dim
    users = tuple(normalize_power(construction_a(n_u, 13, 2, 1.0, rng)
                                  .with_nesting(2), rng, samples=4000)
                  for _ in range(2))
    relay = normalize_power(construction_a(n_r, 13, 2, 1.0, rng)
                            .with_nesting(2), rng, samples=4000)
    return make_mapper(MapperKind.ONE_TO_ONE_LINEAR, users, relay)


def dst_loopback(seed, decoder="kstage"):
    cfg = coded_cfg()
    mapper = coded_codes(cfg, seed)
    rng = np.random.default_rng(seed + 1000)
    real = sample_rayleigh(cfg, rng)
    h = build_dst_superchannel(real, 1, cfg)
    msgs = [rng.integers(0, 2, size=cfg.user_dim) for _ in range(2)]
    dithers = [sample_dither(c, rng) for c in mapper.user_codes]
    relay_dither = sample_dither(mapper.relay_code, rng)
    x = np.concatenate([
        encode(mapper.user_codes[0], msgs[0], dithers[0]).signal,
        encode(mapper.user_codes[1], msgs[1], dithers[1]).signal,
        encode(mapper.relay_code, map_indices(mapper, msgs), relay_dither).signal,
    ])
    y = h @ x
    slices = transmitter_slices(cfg, include_relay=True)
    if decoder == "kstage":
        res = k_stage_decode(y, h, slices, mapper.user_codes,
                             tuple(dithers) + (relay_dither,), mapper)
    else:
        search = build_search(mapper.user_codes, (0, 1), mapper)
        res = one_stage_decode(y, h, search,
                               np.concatenate(dithers + [relay_dither]))
    return msgs, res


def test_k_stage_tree_shape_two_users():
    msgs, res = dst_loopback(0)
    stages = [(n.stage, n.index) for n in res.nodes]
    assert stages == [(1, 1), (2, 1), (2, 2)]
    assert len(res.candidates) == 2


def test_k_stage_zero_noise_loopback():
    for seed in range(8):
        msgs, res = dst_loopback(seed)
        assert np.array_equal(res.messages[0], msgs[0])
        assert np.array_equal(res.messages[1], msgs[1])


def test_one_stage_zero_noise_loopback_through_channel():
    for seed in range(8):
        msgs, res = dst_loopback(seed, decoder="onestage")
        assert np.array_equal(res.messages[0], msgs[0])
        assert np.array_equal(res.messages[1], msgs[1])


def test_k_stage_single_user_equals_one_stage():
    rng = np.random.default_rng(5)
    code = normalize_power(construction_a(4, 13, 2, 1.0, rng).with_nesting(2),
                           rng, samples=4000)
    h = 8 * (np.eye(4) + 0.05 * rng.standard_normal((4, 4)))
    msg = rng.integers(0, 2, size=4)
    u = sample_dither(code, rng)
    x = encode(code, msg, u).signal
    y = h @ x + 0.05 * rng.standard_normal(4)
    res_k = k_stage_decode(y, h, (slice(0, 4),), (code,), (u,), None)
    res_1 = one_stage_decode(y, h, build_search((code,), (0,), None), u)
    assert np.array_equal(res_k.messages[0], res_1.messages[0])
    assert len(res_k.candidates) == 1


# ----------------------------------------------------------------------------
# relay decoding


def test_relay_decode_zero_noise_partial_listen():
    cfg = coded_cfg()
    for seed in range(6):
        mapper = coded_codes(cfg, seed)
        rng = np.random.default_rng(seed + 2000)
        real = sample_rayleigh(cfg, rng)
        msgs = [rng.integers(0, 2, size=cfg.user_dim) for _ in range(2)]
        dithers = [sample_dither(c, rng) for c in mapper.user_codes]
        x = np.concatenate([encode(c, m, u).signal for c, m, u
                            in zip(mapper.user_codes, msgs, dithers)])
        h = build_relay_listen_channel(real, 1, cfg)
        res = relay_decode(h @ x, h, transmitter_slices(cfg, False),
                           mapper.user_codes, tuple(dithers))
        assert np.array_equal(res.messages[0], msgs[0])
        assert np.array_equal(res.messages[1], msgs[1])


def test_relay_decode_zero_channel_is_message_independent():
    cfg = coded_cfg()
    mapper = coded_codes(cfg, 3)
    rng = np.random.default_rng(11)
    dithers = [sample_dither(c, rng) for c in mapper.user_codes]
    h = np.zeros((4, 2 * cfg.user_dim))
    y = rng.standard_normal(4)
    outs = []
    for seed in (0, 1):
        msg_rng = np.random.default_rng(seed)
        _ = [msg_rng.integers(0, 2, size=cfg.user_dim) for _ in range(2)]
        res = relay_decode(y, h, transmitter_slices(cfg, False),
                           mapper.user_codes, tuple(dithers))
        outs.append(res.messages)
    assert np.array_equal(outs[0][0], outs[1][0])
    assert np.array_equal(outs[0][1], outs[1][1])


def test_relay_decode_high_snr_monte_carlo():
    cfg = MarcConfig(num_users=2, user_antennas=1, relay_antennas=1,
                     dst_antennas=1, num_slots=2, slot_len=1,
                     snr_relay_db=40.0, snr_dst_db=40.0,
                     user_rates=(2.0, 2.0), relay_rate=4.0)
    rng = np.random.default_rng(21)
    users = tuple(normalize_power(construction_a(4, 13, 2, 1.0, rng)
                                  .with_nesting(2), rng, samples=4000)
                  for _ in range(2))
    errors = 0
    trials = 200
    for t in range(trials):
        trng = np.random.default_rng(10_000 + t)
        real = sample_rayleigh(cfg, trng)
        msgs = [trng.integers(0, 2, size=4) for _ in range(2)]
        dithers = [sample_dither(c, trng) for c in users]
        x = np.concatenate([encode(c, m, u).signal
                            for c, m, u in zip(users, msgs, dithers)])
        h = build_relay_listen_channel(real, 1, cfg)
        y = h @ x + np.sqrt(0.5) * trng.standard_normal(h.shape[0])
        res = relay_decode(y, h, transmitter_slices(cfg, False), users,
                           tuple(dithers))
        if not all(np.array_equal(res.messages[i], msgs[i]) for i in range(2)):
            errors += 1
    assert errors / trials < 0.05
