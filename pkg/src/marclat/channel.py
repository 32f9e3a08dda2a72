"""Rayleigh fading draws and real-valued equivalent super-channel assembly.

The half-duplex relay splits each codeword of ``num_slots * slot_len`` vector
symbols into a listening phase (slots 1..ell1) and a forwarding phase
(slots ell1+1..L).  All decoding happens on real-valued block matrices built
from the complex per-link channels: each complex symbol becomes a stacked
[Re; Im] pair and each complex matrix becomes the usual 2x2 rotation-style
embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# ============================================================================
#  Configuration and channel draw containers
# ============================================================================


@dataclass(frozen=True)
class MarcConfig:
    """Static system parameters for a K-user relay-aided multiple access run.

    SNRs are *received* SNRs in dB; ``sr_offset_db`` is the extra gain of the
    source-to-relay links over every other link.  ``user_rates`` are in bits
    per (complex) channel use.
    """

    num_users: int
    user_antennas: int = 1
    relay_antennas: int = 1
    dst_antennas: int = 1
    num_slots: int = 2
    slot_len: int = 1
    snr_relay_db: float = 10.0
    snr_dst_db: float = 10.0
    sr_offset_db: float = 0.0
    user_rates: tuple[float, ...] = field(default=None)  # type: ignore[assignment]
    relay_rate: float = 0.0

    def __post_init__(self):
        if self.num_users < 1:
            raise ConfigurationError("need at least one user")
        if self.num_slots < 2:
            raise ConfigurationError("need at least two slots per codeword")
        if self.slot_len < 1:
            raise ConfigurationError("slot length must be >= 1")
        if min(self.user_antennas, self.relay_antennas, self.dst_antennas) < 1:
            raise ConfigurationError("all antenna counts must be >= 1")
        rates = self.user_rates
        if rates is None:
            rates = (0.0,) * self.num_users
        rates = tuple(float(r) for r in rates)
        if len(rates) != self.num_users:
            raise ConfigurationError(
                f"user_rates has length {len(rates)}, expected {self.num_users}")
        if any(r < 0 for r in rates):
            raise ConfigurationError("rates must be nonnegative")
        object.__setattr__(self, "user_rates", rates)

    # -- derived dimensions ---------------------------------------------

    @property
    def block_len(self) -> int:
        """Number of vector symbols per codeword (slots times slot length)."""
        return self.num_slots * self.slot_len

    @property
    def user_dim(self) -> int:
        """Real dimension of one user's transmit block."""
        return 2 * self.user_antennas * self.block_len

    @property
    def relay_dim(self) -> int:
        """Real dimension of the relay's transmit block."""
        return 2 * self.relay_antennas * self.block_len

    @property
    def snr_relay(self) -> float:
        """Linear received SNR at the relay, S-R offset included."""
        return 10.0 ** ((self.snr_relay_db + self.sr_offset_db) / 10.0)

    @property
    def snr_dst(self) -> float:
        return 10.0 ** (self.snr_dst_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """One slow-fading draw of all links, constant over the code block.

    ``to_relay[i]``: user i -> relay, shape (relay_antennas, user_antennas).
    ``to_dst[i]``:   user i -> destination, shape (dst_antennas, user_antennas).
    ``relay_to_dst``: relay -> destination, shape (dst_antennas, relay_antennas).
    """

    to_relay: np.ndarray
    to_dst: np.ndarray
    relay_to_dst: np.ndarray

    def validate(self, cfg: MarcConfig) -> None:
        k, mu, mr, nd = (cfg.num_users, cfg.user_antennas,
                         cfg.relay_antennas, cfg.dst_antennas)
        if self.to_relay.shape != (k, mr, mu):
            raise ConfigurationError(
                f"to_relay shape {self.to_relay.shape} != {(k, mr, mu)}")
        if self.to_dst.shape != (k, nd, mu):
            raise ConfigurationError(
                f"to_dst shape {self.to_dst.shape} != {(k, nd, mu)}")
        if self.relay_to_dst.shape != (nd, mr):
            raise ConfigurationError(
                f"relay_to_dst shape {self.relay_to_dst.shape} != {(nd, mr)}")
        for m in (self.to_relay, self.to_dst, self.relay_to_dst):
            if not np.all(np.isfinite(m.view(float))):
                raise ConfigurationError("channel matrices must be finite")


def sample_rayleigh(cfg: MarcConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw every link entry i.i.d. circularly-symmetric complex Gaussian,
    unit variance (1/2 per real part).  The S-R offset is *not* applied here;
    it enters as an SNR scale during super-channel assembly."""
    k, mu, mr, nd = (cfg.num_users, cfg.user_antennas,
                     cfg.relay_antennas, cfg.dst_antennas)

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
            / np.sqrt(2.0)

    return ChannelRealization(
        to_relay=cn(k, mr, mu),
        to_dst=cn(k, nd, mu),
        relay_to_dst=cn(nd, mr),
    )


# ============================================================================
#  Real embeddings
# ============================================================================


def embed_complex(h: np.ndarray) -> np.ndarray:
    """Real 2m x 2n embedding [[Re, -Im], [Im, Re]] of a complex m x n matrix."""
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def embed_vector(x: np.ndarray) -> np.ndarray:
    """Stack a complex m-vector as [Re(x); Im(x)] (one symbol)."""
    x = np.asarray(x, dtype=complex).ravel()
    return np.concatenate([x.real, x.imag])


def stack_symbols(x: np.ndarray) -> np.ndarray:
    """Stack complex symbols (num_symbols, m) into the symbol-major real
    super-vector [Re x_1; Im x_1; Re x_2; Im x_2; ...]."""
    x = np.asarray(x, dtype=complex)
    return np.concatenate([embed_vector(row) for row in x])


# ============================================================================
#  Super-channel assembly
# ============================================================================


def _kron_block(per_symbol: np.ndarray, n_symbols: int) -> np.ndarray:
    return np.kron(np.eye(n_symbols), per_symbol)


def transmitter_slices(cfg: MarcConfig, include_relay: bool = True) -> tuple[slice, ...]:
    """Column slices of the destination super-channel, one per transmitter
    (users in order, then the relay)."""
    out = []
    pos = 0
    for _ in range(cfg.num_users):
        out.append(slice(pos, pos + cfg.user_dim))
        pos += cfg.user_dim
    if include_relay:
        out.append(slice(pos, pos + cfg.relay_dim))
    return tuple(out)


def build_dst_superchannel(real: ChannelRealization, ell1: int,
                           cfg: MarcConfig) -> np.ndarray:
    """Real destination super-channel (2*N*LT x 2*(K*Mu+Mr)*LT) for decision
    slot ``ell1``.  The relay's column block is zero over the first ell1
    slots (listening) and entirely zero when ell1 == num_slots (silent)."""
    if not 1 <= ell1 <= cfg.num_slots:
        raise ConfigurationError(f"ell1={ell1} outside 1..{cfg.num_slots}")
    real.validate(cfg)
    lt = cfg.block_len
    t = cfg.slot_len
    scale_u = np.sqrt(cfg.snr_dst / cfg.user_antennas)
    blocks = [
        scale_u * _kron_block(embed_complex(real.to_dst[i]), lt)
        for i in range(cfg.num_users)
    ]
    relay_block = np.zeros((2 * cfg.dst_antennas * lt, cfg.relay_dim))
    if ell1 < cfg.num_slots:
        scale_r = np.sqrt(cfg.snr_dst / cfg.relay_antennas)
        active = scale_r * _kron_block(embed_complex(real.relay_to_dst),
                                       (cfg.num_slots - ell1) * t)
        r0 = 2 * cfg.dst_antennas * ell1 * t
        c0 = 2 * cfg.relay_antennas * ell1 * t
        relay_block[r0:, c0:] = active
    blocks.append(relay_block)
    return np.hstack(blocks)


def build_relay_superchannel(real: ChannelRealization, ell: int,
                             cfg: MarcConfig) -> np.ndarray:
    """Real relay super-channel (2*Mr*ell*T x 2*K*Mu*ell*T) over the first
    ``ell`` listening slots, with the S-R offset folded into the SNR scale."""
    if not 1 <= ell <= cfg.num_slots:
        raise ConfigurationError(f"ell={ell} outside 1..{cfg.num_slots}")
    real.validate(cfg)
    n_sym = ell * cfg.slot_len
    scale = np.sqrt(cfg.snr_relay / cfg.user_antennas)
    blocks = [
        scale * _kron_block(embed_complex(real.to_relay[i]), n_sym)
        for i in range(cfg.num_users)
    ]
    return np.hstack(blocks)


def build_relay_listen_channel(real: ChannelRealization, ell: int,
                               cfg: MarcConfig) -> np.ndarray:
    """Relay channel acting on *full-length* user blocks: the symbols the
    relay has not yet heard get zero columns.  Shape
    (2*Mr*ell*T x 2*K*Mu*LT); used by the relay's decoder."""
    if not 1 <= ell <= cfg.num_slots:
        raise ConfigurationError(f"ell={ell} outside 1..{cfg.num_slots}")
    real.validate(cfg)
    n_sym = ell * cfg.slot_len
    rows = 2 * cfg.relay_antennas * n_sym
    heard = 2 * cfg.user_antennas * n_sym
    scale = np.sqrt(cfg.snr_relay / cfg.user_antennas)
    blocks = []
    for i in range(cfg.num_users):
        b = np.zeros((rows, cfg.user_dim))
        b[:, :heard] = scale * _kron_block(embed_complex(real.to_relay[i]), n_sym)
        blocks.append(b)
    return np.hstack(blocks)


@dataclass(frozen=True)
class SuperChannel:
    """Destination super-channel for a fixed decision slot, plus access to
    the relay-side channel family indexed by listening length."""

    h_dst: np.ndarray
    ell1: int
    realization: ChannelRealization
    cfg: MarcConfig

    def h_relay(self, ell: int) -> np.ndarray:
        return build_relay_superchannel(self.realization, ell, self.cfg)


def build_superchannel(real: ChannelRealization, ell1: int,
                       cfg: MarcConfig) -> SuperChannel:
    return SuperChannel(
        h_dst=build_dst_superchannel(real, ell1, cfg),
        ell1=ell1, realization=real, cfg=cfg,
    )
