"""Dithered lattice encoding and the coset decoders.

Encoding subtracts a Voronoi-uniform dither and folds back into the shaping
region.  Decoding whitens with MMSE-GDFE filters (feedback B with
B'B = I + H'H, forward F = B^-T H') and runs an exact sphere search over the
stacked lattice; messages are the integer solution's index blocks reduced
modulo the nesting ratio, so the argmin is effectively over cosets.  The
multi-stage decoder peels previously decoded users off the received signal
on a decoding tree and keeps the candidate whose re-encoded signal lands
closest to the observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, SearchBudgetError
from .lattice import NestedLatticeCode, index_to_coset_leader, mod_lattice
from .mapper import RelayMapper, index_embeddings, map_indices
from .sphere import DEFAULT_MAX_NODES, sphere_decode

# ============================================================================
#  MMSE-GDFE filters
# ============================================================================


@dataclass(frozen=True)
class GdfeFilters:
    forward: np.ndarray    # (m, n_obs)
    feedback: np.ndarray   # (m, m) upper triangular, B'B = I + H'H


def compute_gdfe(h: np.ndarray) -> GdfeFilters:
    """Forward/feedback filter pair of the MMSE decision-feedback front end:
    B from the Cholesky factorization B'B = I + H'H, F = B^-T H'."""
    h = np.asarray(h, dtype=float)
    m = h.shape[1]
    gram = np.eye(m) + h.T @ h
    feedback = scipy.linalg.cholesky(gram, lower=False)
    forward = scipy.linalg.solve_triangular(feedback.T, h.T, lower=True)
    return GdfeFilters(forward=forward, feedback=feedback)


def coset_metric(filters: GdfeFilters, y: np.ndarray, dither: np.ndarray,
                 point: np.ndarray) -> float:
    """Decoder metric |F y + B (u - c)|^2 for a candidate lattice point c."""
    r = filters.forward @ y + filters.feedback @ (dither - point)
    return float(r @ r)


# ============================================================================
#  Encoding
# ============================================================================


@dataclass(frozen=True)
class TransmitState:
    dither: np.ndarray
    coset_leader: np.ndarray
    signal: np.ndarray


def encode(code: NestedLatticeCode, z_msg: np.ndarray,
           dither: np.ndarray) -> TransmitState:
    """Dithered encoding x = (leader(z_msg) - u) mod Lambda_S; the output is
    Voronoi-uniform and independent of the message."""
    leader = index_to_coset_leader(code, z_msg)
    signal = mod_lattice(code, leader - dither, lattice="shaping")
    return TransmitState(dither=np.asarray(dither, dtype=float),
                         coset_leader=leader, signal=signal)


# ============================================================================
#  Search-lattice assembly
# ============================================================================


@dataclass(frozen=True)
class CosetSearch:
    """Integer search set offset + basis @ z together with the bookkeeping
    to read residual users' messages out of a solution z."""

    basis: np.ndarray
    offset: np.ndarray
    user_ids: tuple[int, ...]
    msg_slices: tuple[slice, ...]
    msg_ratios: tuple[int, ...]
    component_dim: int

    def messages(self, z: np.ndarray) -> dict[int, np.ndarray]:
        return {
            uid: z[sl] % tau
            for uid, sl, tau in zip(self.user_ids, self.msg_slices, self.msg_ratios)
        }


def build_search(user_codes: tuple[NestedLatticeCode, ...],
                 residual: tuple[int, ...],
                 mapper: RelayMapper | None = None,
                 fixed_indices: dict[int, np.ndarray] | None = None) -> CosetSearch:
    """Search lattice for the residual users (plus the relay codeword block
    when a mapper is given).  Fixed users' decoded indices enter the relay
    component as a constant offset."""
    fixed_indices = fixed_indices or {}
    res_codes = [user_codes[i] for i in residual]
    dims = [c.dim for c in res_codes]
    slices, pos = [], 0
    for d in dims:
        slices.append(slice(pos, pos + d))
        pos += d
    if mapper is None:
        total = sum(dims)
        basis = np.zeros((total, total))
        r = 0
        for c in res_codes:
            basis[r:r + c.dim, r:r + c.dim] = c.basis
            r += c.dim
        return CosetSearch(
            basis=basis, offset=np.zeros(total), user_ids=tuple(residual),
            msg_slices=tuple(slices), msg_ratios=tuple(c.nesting_ratio for c in res_codes),
            component_dim=total)

    relay = mapper.relay_code
    tau = relay.nesting_ratio
    if any(c.nesting_ratio != tau for c in mapper.user_codes):
        raise ConfigurationError("relay-coupled search needs one common nesting ratio")
    embeds = index_embeddings(mapper)
    comp_dim = sum(dims) + relay.dim
    cols = sum(dims) + relay.dim
    basis = np.zeros((comp_dim, cols))
    r = 0
    for c, sl in zip(res_codes, slices):
        basis[r:r + c.dim, sl] = c.basis
        r += c.dim
    for uid, sl in zip(residual, slices):
        basis[r:, sl] = relay.basis @ embeds[uid]
    basis[r:, sum(dims):] = tau * relay.basis
    offset = np.zeros(comp_dim)
    acc = np.zeros(relay.dim, dtype=np.int64)
    for uid, z_fixed in fixed_indices.items():
        acc += embeds[uid] @ np.asarray(z_fixed, dtype=np.int64)
    offset[r:] = relay.basis @ acc
    return CosetSearch(
        basis=basis, offset=offset, user_ids=tuple(residual),
        msg_slices=tuple(slices), msg_ratios=tuple(c.nesting_ratio for c in res_codes),
        component_dim=comp_dim)


# ============================================================================
#  One-stage coset decoding
# ============================================================================


@dataclass(frozen=True)
class OneStageResult:
    messages: dict[int, np.ndarray]
    z: np.ndarray
    metric: float
    exact: bool


def one_stage_decode(y: np.ndarray, h: np.ndarray, search: CosetSearch,
                     dither: np.ndarray, *, filters: GdfeFilters | None = None,
                     max_nodes: int = DEFAULT_MAX_NODES) -> OneStageResult:
    """Single-shot coset decode: argmin_z |F y + B (u - offset - G z)|^2,
    with messages read off the solution modulo the nesting ratios."""
    if filters is None:
        filters = compute_gdfe(h)
    target = filters.forward @ y + filters.feedback @ (dither - search.offset)
    basis = filters.feedback @ search.basis
    exact = True
    try:
        # the metric at the transmitted point averages dim/2 (signal and
        # noise both at variance 1/2 per dimension), so a 2x sphere prunes
        # the search without ever excluding the answer
        z = sphere_decode(basis, target, max_nodes=max_nodes,
                          initial_radius_sq=float(search.component_dim))
    except SearchBudgetError as err:
        z = np.asarray(err.best, dtype=np.int64)
        exact = False
    resid = target - basis @ z
    return OneStageResult(messages=search.messages(z), z=z,
                          metric=float(resid @ resid), exact=exact)


# ============================================================================
#  Multi-stage (tree) coset decoding
# ============================================================================


@dataclass(frozen=True)
class DecodeNodeResult:
    stage: int
    index: int
    residual_users: tuple[int, ...]
    messages: dict[int, np.ndarray]
    metric: float
    exact: bool


@dataclass(frozen=True)
class Candidate:
    messages: dict[int, np.ndarray]
    metric: float
    exact: bool


@dataclass(frozen=True)
class KStageResult:
    messages: dict[int, np.ndarray]
    chosen_leaf: int
    candidates: tuple[Candidate, ...]
    nodes: tuple[DecodeNodeResult, ...]
    exact: bool


def _assemble_signal(user_codes, mapper, messages, dithers, tx_slices, total_dim):
    x = np.zeros(total_dim)
    for uid, code in enumerate(user_codes):
        x[tx_slices[uid]] = encode(code, messages[uid], dithers[uid]).signal
    if mapper is not None:
        z_relay = map_indices(mapper, [messages[i] for i in range(len(user_codes))])
        x[tx_slices[-1]] = encode(mapper.relay_code, z_relay, dithers[-1]).signal
    return x


def k_stage_decode(y: np.ndarray, h: np.ndarray, tx_slices: tuple[slice, ...],
                   user_codes: tuple[NestedLatticeCode, ...],
                   dithers: tuple[np.ndarray, ...],
                   mapper: RelayMapper | None = None, *,
                   max_nodes: int = DEFAULT_MAX_NODES) -> KStageResult:
    """Successive-cancellation tree decode.

    Stage k nodes assume the users on their root path were decoded at
    earlier stages, subtract those reconstructed signals, and coset-decode
    the remaining users (together with the relay block when a mapper is
    given).  The K! leaf candidates are compared by the raw reconstruction
    error |y - H x|^2 and the lowest-index minimizer wins.
    """
    num_users = len(user_codes)
    if mapper is not None and len(tx_slices) != num_users + 1:
        raise ConfigurationError("need one column slice per user plus the relay")
    if mapper is None and len(tx_slices) != num_users:
        raise ConfigurationError("need one column slice per user")

    def node_columns(residual):
        ids = list(residual) + ([num_users] if mapper is not None else [])
        return np.hstack([h[:, tx_slices[i]] for i in ids])

    def node_dither(residual):
        parts = [dithers[i] for i in residual]
        if mapper is not None:
            parts.append(dithers[-1])
        return np.concatenate(parts)

    node_results: list[DecodeNodeResult] = []
    counters: dict[int, int] = {}

    def decode_node(stage, fixed: dict[int, np.ndarray], fixed_exact: bool):
        residual = tuple(i for i in range(num_users) if i not in fixed)
        idx = counters.get(stage, 0) + 1
        counters[stage] = idx
        y_node = y.copy()
        for uid, msg in fixed.items():
            y_node -= h[:, tx_slices[uid]] @ encode(user_codes[uid], msg,
                                                    dithers[uid]).signal
        search = build_search(user_codes, residual, mapper, fixed)
        res = one_stage_decode(y_node, node_columns(residual), search,
                               node_dither(residual), max_nodes=max_nodes)
        node_results.append(DecodeNodeResult(
            stage=stage, index=idx, residual_users=residual,
            messages=res.messages, metric=res.metric,
            exact=res.exact and fixed_exact))
        if stage == num_users:
            merged = dict(fixed)
            merged.update(res.messages)
            return [Candidate(messages=merged, metric=np.inf,
                              exact=res.exact and fixed_exact)]
        out = []
        for uid in residual:
            child_fixed = dict(fixed)
            child_fixed[uid] = res.messages[uid]
            out.extend(decode_node(stage + 1, child_fixed,
                                   res.exact and fixed_exact))
        return out

    candidates = decode_node(1, {}, True)

    total_dim = sum(sl.stop - sl.start for sl in tx_slices)
    scored = []
    for cand in candidates:
        x = _assemble_signal(user_codes, mapper, cand.messages, dithers,
                             tx_slices, total_dim)
        r = y - h @ x
        metric = float(r @ r) if cand.exact else np.inf
        scored.append(Candidate(messages=cand.messages, metric=metric,
                                exact=cand.exact))
    best_idx = 0
    for j, cand in enumerate(scored):
        if cand.metric < scored[best_idx].metric:
            best_idx = j
    chosen = scored[best_idx]
    return KStageResult(messages=chosen.messages, chosen_leaf=best_idx,
                        candidates=tuple(scored), nodes=tuple(node_results),
                        exact=chosen.exact)


def relay_decode(y: np.ndarray, h: np.ndarray, tx_slices: tuple[slice, ...],
                 user_codes: tuple[NestedLatticeCode, ...],
                 dithers: tuple[np.ndarray, ...], *,
                 max_nodes: int = DEFAULT_MAX_NODES) -> KStageResult:
    """Relay-side decode: the same tree machinery with no relay codeword
    block, searching the users' super-lattice over the listened slots."""
    return k_stage_decode(y, h, tx_slices, user_codes, dithers, mapper=None,
                          max_nodes=max_nodes)
