"""Closed-form rate constraints, the relay's decision time, and outage tests.

All constraints compare a rate sum against (1/LT) * (1/2) log2 det(I + H'H)
for the appropriate sub-channel.  The mapper scheme and the decoder depth
only change which sub-channels are checked and which loss terms are
subtracted: the one-stage decoder pays a loss that vanishes at |S| = K, and
the modulo-sum scheme adds a constraint (for |S| > 1) that loosens linearly
in the relay rate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import (ChannelRealization, MarcConfig, build_dst_superchannel,
                      build_relay_superchannel, transmitter_slices)
from .errors import ConfigurationError
from .mapper import MapperKind

_MAX_SUBSET_USERS = 10   # exhaustive 2^K - 1 enumeration; keep K modest


class Decoder(str, Enum):
    K_STAGE = "kstage"
    ONE_STAGE = "onestage"


@dataclass(frozen=True)
class RateRegionSpec:
    scheme: MapperKind
    decoder: Decoder
    user_rates: tuple[float, ...]
    relay_rate: float

    def __post_init__(self):
        object.__setattr__(self, "scheme", MapperKind(self.scheme))
        object.__setattr__(self, "decoder", Decoder(self.decoder))
        object.__setattr__(self, "user_rates",
                           tuple(float(r) for r in self.user_rates))
        if any(r < 0 for r in self.user_rates) or self.relay_rate < 0:
            raise ConfigurationError("rates must be nonnegative")

    @staticmethod
    def from_config(cfg: MarcConfig, scheme: MapperKind | str,
                    decoder: Decoder | str) -> "RateRegionSpec":
        return RateRegionSpec(scheme=MapperKind(scheme), decoder=Decoder(decoder),
                              user_rates=cfg.user_rates,
                              relay_rate=cfg.relay_rate)


@dataclass(frozen=True)
class OutageVerdict:
    in_outage: bool
    ell1: int
    violated_subsets: tuple[tuple[int, ...], ...]


# ============================================================================
#  Log-det rate of a real super-channel
# ============================================================================


def rate_ung(h: np.ndarray) -> float:
    """(1/2) log2 det(I + H'H) in bits, evaluated on the smaller Gram side."""
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        return 0.0
    if h.shape[0] <= h.shape[1]:
        gram = h @ h.T
    else:
        gram = h.T @ h
    _, logdet = np.linalg.slogdet(np.eye(gram.shape[0]) + gram)
    return 0.5 * logdet / np.log(2.0)


def subsets(num_users: int):
    """All nonempty user subsets, by size then lexicographic order."""
    if num_users > _MAX_SUBSET_USERS:
        raise ConfigurationError(
            f"subset enumeration capped at {_MAX_SUBSET_USERS} users "
            f"(2^K - 1 constraint checks)")
    for size in range(1, num_users + 1):
        yield from itertools.combinations(range(num_users), size)


def _dst_subset_columns(h_dst: np.ndarray, cfg: MarcConfig,
                        subset: tuple[int, ...], include_relay: bool) -> np.ndarray:
    sl = transmitter_slices(cfg, include_relay=True)
    cols = [h_dst[:, sl[i]] for i in subset]
    if include_relay:
        cols.append(h_dst[:, sl[-1]])
    return np.hstack(cols)


def _relay_subset_columns(h_relay: np.ndarray, cfg: MarcConfig, ell: int,
                          subset: tuple[int, ...]) -> np.ndarray:
    width = 2 * cfg.user_antennas * ell * cfg.slot_len
    return np.hstack([h_relay[:, i * width:(i + 1) * width] for i in subset])


# ============================================================================
#  Loss terms
# ============================================================================


def one_stage_dst_loss(cfg: MarcConfig, subset_size: int) -> float:
    """Destination-side rate loss of the one-stage coset decoder; zero at
    |S| = K, so the one-stage front end is only sum-rate optimal."""
    mu, mr, k = cfg.user_antennas, cfg.relay_antennas, cfg.num_users
    return (mu * subset_size + mr) * np.log2((k * mu + mr) / (subset_size * mu + mr))


def one_stage_relay_loss(cfg: MarcConfig, subset_size: int) -> float:
    """Relay-side rate loss of the one-stage coset decoder (zero at |S| = K)."""
    return cfg.user_antennas * subset_size * np.log2(cfg.num_users / subset_size)


def modulo_sum_loss(cfg: MarcConfig, subset_size: int, decoder: Decoder) -> float:
    """Loss in the modulo-sum scheme's extra constraint, offset by the relay
    rate on the constraint's other side."""
    mu, mr, k = cfg.user_antennas, cfg.relay_antennas, cfg.num_users
    if decoder is Decoder.K_STAGE:
        return mu * subset_size * np.log2((subset_size * mu + mr) / (subset_size * mu))
    return mu * subset_size * np.log2((k * mu + mr) / (subset_size * mu))


# ============================================================================
#  Decision time and outage
# ============================================================================


def decision_time(real: ChannelRealization, spec: RateRegionSpec,
                  cfg: MarcConfig) -> int:
    """Earliest slot count ell in 1..L-1 after which the relay-side rate
    constraints hold for every nonempty user subset; L means the relay
    stays silent."""
    lt = cfg.block_len
    for ell in range(1, cfg.num_slots):
        h = build_relay_superchannel(real, ell, cfg)
        ok = True
        for s in subsets(cfg.num_users):
            rate_sum = sum(spec.user_rates[i] for i in s)
            if not rate_sum < rate_ung(_relay_subset_columns(h, cfg, ell, s)) / lt:
                ok = False
                break
        if ok:
            return ell
    return cfg.num_slots


def outage_indicator(real: ChannelRealization, spec: RateRegionSpec,
                     cfg: MarcConfig, *,
                     relay_silence_is_outage: bool = False) -> OutageVerdict:
    """Destination-side outage at the decision time the relay-side rule
    picks.  The relay block of the destination channel is zero over the
    listening phase (entirely zero if the relay stays silent)."""
    ell1 = decision_time(real, spec, cfg)
    h_dst = build_dst_superchannel(real, ell1, cfg)
    lt = cfg.block_len
    violated: list[tuple[int, ...]] = []
    for s in subsets(cfg.num_users):
        rate_sum = sum(spec.user_rates[i] for i in s)
        rhs = rate_ung(_dst_subset_columns(h_dst, cfg, s, include_relay=True)) / lt
        if spec.decoder is Decoder.ONE_STAGE:
            rhs -= one_stage_dst_loss(cfg, len(s))
        bad = not rate_sum < rhs
        if not bad and spec.scheme is MapperKind.MODULO_SUM and len(s) > 1:
            extra_rhs = (rate_ung(_dst_subset_columns(h_dst, cfg, s,
                                                      include_relay=False)) / lt
                         - modulo_sum_loss(cfg, len(s), spec.decoder)
                         + spec.relay_rate)
            bad = not rate_sum < extra_rhs
        if bad:
            violated.append(s)
    in_outage = bool(violated)
    if relay_silence_is_outage and ell1 == cfg.num_slots:
        in_outage = True
    return OutageVerdict(in_outage=in_outage, ell1=ell1,
                         violated_subsets=tuple(violated))


# ============================================================================
#  Region ordering checks
# ============================================================================


@dataclass(frozen=True)
class InclusionReport:
    samples: int
    violations_one_stage: int   # feasible one-stage but infeasible K-stage
    violations_modulo_sum: int  # feasible MS-MLC but infeasible O-MLC


def region_inclusion_check(real: ChannelRealization, cfg: MarcConfig,
                           samples: int, rng: np.random.Generator,
                           rate_max: float = 8.0) -> InclusionReport:
    """Sample rate vectors and confirm the region orderings: anything the
    one-stage decoder supports is supported by the K-stage decoder, and
    anything the modulo-sum scheme supports is supported one-to-one."""
    bad_one, bad_mod = 0, 0
    for _ in range(samples):
        rates = tuple(rng.uniform(0.0, rate_max, size=cfg.num_users))
        relay_rate = float(rng.uniform(max(rates), rate_max + max(rates)))
        def verdict(scheme, decoder):
            spec = RateRegionSpec(scheme=scheme, decoder=decoder,
                                  user_rates=rates, relay_rate=relay_rate)
            return outage_indicator(real, spec, cfg).in_outage
        thm1 = verdict(MapperKind.ONE_TO_ONE_LINEAR, Decoder.K_STAGE)
        if not verdict(MapperKind.ONE_TO_ONE_LINEAR, Decoder.ONE_STAGE) and thm1:
            bad_one += 1
        if not verdict(MapperKind.MODULO_SUM, Decoder.K_STAGE) and thm1:
            bad_mod += 1
    return InclusionReport(samples=samples, violations_one_stage=bad_one,
                           violations_modulo_sum=bad_mod)
