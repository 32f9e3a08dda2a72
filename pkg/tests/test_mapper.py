import itertools

import numpy as np
import pytest

from marclat import (ConfigurationError, MapperKind, build_superlattice_generator,
                     coset_consistency_check, from_code_rows, make_mapper,
                     map_indices, mod_lattice)


def cubic_code(n, tau, scale=1.0):
    return from_code_rows(np.eye(n, dtype=int), prime=2, scale=scale).with_nesting(tau)


def one_to_one_mapper(n_user=2, tau=2):
    users = (cubic_code(n_user, tau), cubic_code(n_user, tau))
    return make_mapper(MapperKind.ONE_TO_ONE_LINEAR, users,
                       cubic_code(2 * n_user, tau))


def modulo_sum_mapper(n=2, tau=2, tau_relay=None):
    users = (cubic_code(n, tau), cubic_code(n, tau))
    return make_mapper(MapperKind.MODULO_SUM, users,
                       cubic_code(n, tau_relay or tau))


# ----------------------------------------------------------------------------
# index maps


def test_one_to_one_concatenates():
    m = one_to_one_mapper()
    out = map_indices(m, [np.array([1, 0]), np.array([0, 1])])
    assert np.array_equal(out, [1, 0, 0, 1])


def test_modulo_sum_wraps():
    m = modulo_sum_mapper(n=1, tau=4, tau_relay=4)
    out = map_indices(m, [np.array([3]), np.array([2])])
    assert np.array_equal(out, [1])


def test_one_to_one_exhaustively_injective():
    m = one_to_one_mapper(n_user=2, tau=2)
    seen = set()
    for z1 in itertools.product(range(2), repeat=2):
        for z2 in itertools.product(range(2), repeat=2):
            out = tuple(map_indices(m, [np.array(z1), np.array(z2)]))
            assert out not in seen
            seen.add(out)
    assert len(seen) == 2 ** 4


def test_modulo_sum_collision_fibers_are_uniform():
    # every relay index has exactly tau^n preimage pairs under (z1+z2) mod tau
    m = modulo_sum_mapper(n=2, tau=2)
    fibers = {}
    for z1 in itertools.product(range(2), repeat=2):
        for z2 in itertools.product(range(2), repeat=2):
            out = tuple(map_indices(m, [np.array(z1), np.array(z2)]))
            fibers[out] = fibers.get(out, 0) + 1
    assert len(fibers) == 4
    assert all(count == 4 for count in fibers.values())


def test_mapper_validation():
    users = (cubic_code(2, 2), cubic_code(2, 2))
    with pytest.raises(ConfigurationError):
        make_mapper(MapperKind.ONE_TO_ONE_LINEAR, users, cubic_code(3, 2))
    with pytest.raises(ConfigurationError):
        make_mapper(MapperKind.ONE_TO_ONE_LINEAR, users, cubic_code(4, 3))
    with pytest.raises(ConfigurationError):
        make_mapper(MapperKind.MODULO_SUM, (cubic_code(2, 4), cubic_code(2, 4)),
                    cubic_code(2, 2))
    with pytest.raises(ConfigurationError):
        make_mapper(MapperKind.MODULO_SUM, users, cubic_code(3, 2))


def test_index_range_enforced():
    m = one_to_one_mapper()
    with pytest.raises(ConfigurationError):
        map_indices(m, [np.array([2, 0]), np.array([0, 0])])


# ----------------------------------------------------------------------------
# stacked generator


def test_generator_routes_messages_to_relay():
    rng = np.random.default_rng(0)
    for kind, mk in (("omlc", one_to_one_mapper), ("msmlc", modulo_sum_mapper)):
        m = mk()
        gen = build_superlattice_generator(m)
        n_msg = sum(c.dim for c in m.user_codes)
        for _ in range(20):
            z1 = rng.integers(0, 2, size=2)
            z2 = rng.integers(0, 2, size=2)
            z = np.concatenate([z1, z2, np.zeros(m.relay_code.dim, dtype=int)])
            w = gen @ z
            relay_part = w[n_msg:]
            expected = m.relay_code.basis @ map_indices(m, [z1, z2])
            if kind == "omlc":
                # concatenation never wraps, so the match is exact
                assert np.allclose(relay_part, expected, atol=1e-12)
            # in general the mapped index agrees modulo the relay shaping lattice
            assert np.allclose(mod_lattice(m.relay_code, relay_part),
                               mod_lattice(m.relay_code, expected), atol=1e-9), kind


def test_generator_determinant():
    m = one_to_one_mapper(n_user=2, tau=2)
    gen = build_superlattice_generator(m)
    dets = np.prod([abs(np.linalg.det(c.basis)) for c in m.user_codes])
    dets *= abs(np.linalg.det(m.relay_code.basis))
    expected = dets * 2 ** m.relay_code.dim
    assert abs(abs(np.linalg.det(gen)) - expected) < 1e-9 * expected


def test_generator_zero_maps_to_zero():
    gen = build_superlattice_generator(one_to_one_mapper())
    assert np.all(gen @ np.zeros(gen.shape[1], dtype=int) == 0.0)


def test_generator_lattice_closed_under_addition():
    gen = build_superlattice_generator(modulo_sum_mapper())
    rng = np.random.default_rng(1)
    for _ in range(10):
        z1 = rng.integers(-3, 4, size=gen.shape[1])
        z2 = rng.integers(-3, 4, size=gen.shape[1])
        assert np.allclose(gen @ z1 + gen @ z2, gen @ (z1 + z2), atol=1e-12)


def test_generator_needs_two_users():
    users = (cubic_code(2, 2),)
    m = make_mapper(MapperKind.MODULO_SUM, users, cubic_code(2, 2))
    with pytest.raises(ConfigurationError):
        build_superlattice_generator(m)


# ----------------------------------------------------------------------------
# coset consistency


def test_consistency_holds_for_both_mappers():
    rng = np.random.default_rng(2)
    for m in (one_to_one_mapper(), modulo_sum_mapper()):
        gen = build_superlattice_generator(m)
        assert coset_consistency_check(m, gen, 100, rng)


def test_consistency_detects_corruption():
    m = one_to_one_mapper()
    gen = build_superlattice_generator(m)
    bad = gen.copy()
    bad[-1, 0] += 0.37
    assert not coset_consistency_check(m, bad, 100, np.random.default_rng(3))


def test_shaping_only_coordinates_stay_in_shaping_lattices():
    m = one_to_one_mapper()
    gen = build_superlattice_generator(m)
    rng = np.random.default_rng(4)
    tau = m.relay_code.nesting_ratio
    for _ in range(20):
        z = rng.integers(-3, 4, size=gen.shape[1])
        z[:4] *= tau   # user message coordinates restricted to shaping multiples
        w = gen @ z
        for code, sl in zip(m.user_codes, (slice(0, 2), slice(2, 4))):
            coeff = np.linalg.solve(code.basis, w[sl])
            assert np.allclose(coeff % tau, 0.0, atol=1e-9)
        coeff = np.linalg.solve(m.relay_code.basis, w[4:])
        assert np.allclose(coeff % tau, 0.0, atol=1e-9)
