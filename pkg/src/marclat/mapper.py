"""Relay mappers at the index level, plus the stacked super-lattice generator.

The relay's codeword is a function of the users' codewords.  Two linear
realizations are supported: the one-to-one mapper concatenates the users'
message index vectors, the modulo-sum mapper adds them componentwise modulo
the relay's nesting ratio.  For two users the mapping rule embeds into a
single stacked lattice generator, so a plain integer lattice search covers
exactly the mapping-consistent super-codewords.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .lattice import NestedLatticeCode, index_to_coset_leader, mod_lattice


class MapperKind(str, Enum):
    ONE_TO_ONE_LINEAR = "omlc"
    MODULO_SUM = "msmlc"


@dataclass(frozen=True)
class RelayMapper:
    kind: MapperKind
    user_codes: tuple[NestedLatticeCode, ...]
    relay_code: NestedLatticeCode

    @property
    def num_users(self) -> int:
        return len(self.user_codes)


def make_mapper(kind: MapperKind | str,
                user_codes: tuple[NestedLatticeCode, ...],
                relay_code: NestedLatticeCode) -> RelayMapper:
    """Validate code compatibility for the requested mapping rule."""
    kind = MapperKind(kind)
    for c in (*user_codes, relay_code):
        c._require_nesting()
    taus = [c.nesting_ratio for c in user_codes]
    if kind is MapperKind.ONE_TO_ONE_LINEAR:
        if relay_code.dim != sum(c.dim for c in user_codes):
            raise ConfigurationError(
                "one-to-one concatenation needs relay dim = sum of user dims")
        if any(t != relay_code.nesting_ratio for t in taus):
            raise ConfigurationError(
                "one-to-one concatenation needs equal nesting ratios; "
                "relay codebook size must equal the product of user sizes")
    else:
        if any(c.dim != relay_code.dim for c in user_codes):
            raise ConfigurationError(
                "modulo-sum mapping needs equal user and relay dimensions")
        if any(t > relay_code.nesting_ratio for t in taus):
            raise ConfigurationError(
                "modulo-sum mapping needs relay codebook at least as large "
                "as every user codebook")
    return RelayMapper(kind=kind, user_codes=tuple(user_codes),
                       relay_code=relay_code)


def map_indices(mapper: RelayMapper, z_msgs: list[np.ndarray]) -> np.ndarray:
    """Relay message index vector from the users' index vectors."""
    if len(z_msgs) != mapper.num_users:
        raise ConfigurationError(
            f"got {len(z_msgs)} index vectors for {mapper.num_users} users")
    zs = []
    for code, z in zip(mapper.user_codes, z_msgs):
        z = np.asarray(z, dtype=np.int64).ravel()
        if z.shape[0] != code.dim:
            raise ConfigurationError("index vector length mismatch")
        if np.any(z < 0) or np.any(z >= code.nesting_ratio):
            raise ConfigurationError("index entries out of range")
        zs.append(z)
    if mapper.kind is MapperKind.ONE_TO_ONE_LINEAR:
        return np.concatenate(zs)
    total = np.zeros(mapper.relay_code.dim, dtype=np.int64)
    for z in zs:
        total += z
    return total % mapper.relay_code.nesting_ratio


def index_embeddings(mapper: RelayMapper) -> list[np.ndarray]:
    """Per-user integer matrices E_i with relay index = sum_i E_i @ z_i
    (mod nesting): block selectors for concatenation, identities for the
    modulo sum."""
    nr = mapper.relay_code.dim
    out = []
    pos = 0
    for code in mapper.user_codes:
        e = np.zeros((nr, code.dim), dtype=np.int64)
        if mapper.kind is MapperKind.ONE_TO_ONE_LINEAR:
            e[pos:pos + code.dim] = np.eye(code.dim, dtype=np.int64)
            pos += code.dim
        else:
            e[:, :] = np.eye(nr, dtype=np.int64)
        out.append(e)
    return out


def build_superlattice_generator(mapper: RelayMapper) -> np.ndarray:
    """Stacked generator G such that {G @ z : z integer} is exactly the set
    of super-lattice points (users then relay) whose relay component follows
    the mapping rule modulo the relay shaping lattice.

    Columns: the users' message coordinates, then the relay's shaping
    degrees of freedom.  Supported for two users with a common nesting
    ratio; the ratio equality is what lets user-side shaping shifts land in
    the relay's shaping lattice.
    """
    if mapper.num_users != 2:
        raise ConfigurationError(
            "stacked generator is only constructed for two users")
    tau = mapper.relay_code.nesting_ratio
    if any(c.nesting_ratio != tau for c in mapper.user_codes):
        raise ConfigurationError(
            "stacked generator needs one common nesting ratio")
    dims = [c.dim for c in mapper.user_codes]
    nr = mapper.relay_code.dim
    total = sum(dims) + nr
    stack = np.zeros((total, total))
    pos = 0
    for d in dims:
        stack[pos:pos + d, pos:pos + d] = np.eye(d)
        pos += d
    for e, d0 in zip(index_embeddings(mapper),
                     np.cumsum([0] + dims[:-1])):
        stack[pos:, d0:d0 + e.shape[1]] = e
    stack[pos:, pos:] = tau * np.eye(nr)
    gens = [c.basis for c in mapper.user_codes] + [mapper.relay_code.basis]
    blockdiag = np.zeros((total, total))
    r = 0
    for g in gens:
        blockdiag[r:r + g.shape[0], r:r + g.shape[1]] = g
        r += g.shape[0]
    return blockdiag @ stack


def coset_consistency_check(mapper: RelayMapper, gen: np.ndarray,
                            trials: int, rng: np.random.Generator,
                            tol: float = 1e-9) -> bool:
    """Spot-check that the stacked generator realizes the mapping rule:
    for random integer z, the relay component of G @ z must land in the
    coset the mapper assigns to the user components' cosets."""
    dims = [c.dim for c in mapper.user_codes]
    nr = mapper.relay_code.dim
    n = sum(dims) + nr
    for _ in range(trials):
        z = rng.integers(-4, 5, size=n)
        w = gen @ z
        pos = 0
        indices = []
        for code, d in zip(mapper.user_codes, dims):
            indices.append(z[pos:pos + d] % code.nesting_ratio)
            pos += d
        mapped = index_to_coset_leader(mapper.relay_code,
                                       map_indices(mapper, indices))
        relay_coset = mod_lattice(mapper.relay_code, w[pos:], lattice="shaping")
        if np.linalg.norm(relay_coset - mapped) > tol:
            return False
    return True
