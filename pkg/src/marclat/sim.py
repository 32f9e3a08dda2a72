"""Monte Carlo engines: theoretical outage sweeps and coded block-error
sweeps, with deterministic seeding, optional parallelism (threads for the
vectorized outage chunks, processes for coded trials), and CSV + manifest
persistence.

Reproducibility contract: a plan plus master seed produces byte-identical
CSV output for any worker count.  The outage engine derives one substream
per fixed-size chunk of draws from (seed, point, chunk); the coded engine
derives one substream per trial from (seed, point, trial).  Aggregation is
pure counting, so scheduling order never matters.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import (MarcConfig, ChannelRealization, build_dst_superchannel,
                      build_relay_listen_channel, sample_rayleigh,
                      transmitter_slices)
from .codec import (build_search, encode, k_stage_decode, one_stage_decode,
                    relay_decode)
from .errors import ConfigurationError, EstimationError
from .lattice import (NestedLatticeCode, code_to_text, construction_a,
                      normalize_power, sample_dither)
from .mapper import MapperKind, RelayMapper, make_mapper, map_indices
from .rates import (Decoder, RateRegionSpec, modulo_sum_loss,
                    one_stage_dst_loss, subsets)
from .sphere import DEFAULT_MAX_NODES

OUTAGE_CHUNK = 65536
CODED_CHUNK = 32
CSV_HEADER = "mode,scheme,decoder,snr_db,trials,failures,probability,wilson_halfwidth,seed"
_LN2 = np.log(2.0)


# ============================================================================
#  Plans and curve containers
# ============================================================================


@dataclass(frozen=True)
class SimPlan:
    mode: str            # "outage" or "coded"
    cfg: MarcConfig
    spec: RateRegionSpec
    snr_grid_db: tuple[float, ...]
    trials: int | tuple[int, ...]              # scalar or one count per point
    master_seed: int
    code_params: tuple[tuple[int, int], ...] | None = None  # (p, k), users then relay
    zero_noise: bool = False
    norm_samples: int = 100_000
    max_nodes: int = DEFAULT_MAX_NODES
    relay_silence_is_outage: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.mode not in ("outage", "coded"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise ConfigurationError("empty SNR grid")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        trials = self.trials
        trials = (int(trials),) * len(grid) if np.isscalar(trials) \
            else tuple(int(t) for t in trials)
        if len(trials) != len(grid):
            raise ConfigurationError("need one trial count per SNR point")
        if any(t < 1 for t in trials):
            raise ConfigurationError("need at least one trial per point")
        object.__setattr__(self, "trials", trials)


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    trials: int
    failures: int
    probability: float
    wilson_halfwidth: float
    budget_failures: int = 0

    @staticmethod
    def from_counts(snr_db: float, trials: int, failures: int,
                    budget_failures: int = 0) -> "CurvePoint":
        return CurvePoint(snr_db=float(snr_db), trials=trials, failures=failures,
                          probability=failures / trials,
                          wilson_halfwidth=wilson_halfwidth(failures, trials),
                          budget_failures=budget_failures)


@dataclass(frozen=True)
class Curve:
    mode: str
    scheme: MapperKind
    decoder: Decoder
    seed: int
    points: tuple[CurvePoint, ...]


def wilson_halfwidth(failures: int, trials: int, z: float = 1.959963984540054) -> float:
    """Half-width of the 95% Wilson score interval for failures/trials."""
    p = failures / trials
    denom = 1.0 + z * z / trials
    return float(z * np.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
                 / denom)


# ============================================================================
#  CSV + manifest persistence
# ============================================================================


def curve_to_csv(curve: Curve) -> str:
    lines = [CSV_HEADER]
    for pt in curve.points:
        lines.append(",".join([
            curve.mode, curve.scheme.value, curve.decoder.value,
            repr(pt.snr_db), str(pt.trials), str(pt.failures),
            repr(pt.probability), repr(pt.wilson_halfwidth), str(curve.seed),
        ]))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> Curve:
    lines = [ln for ln in text.split("\n") if ln]
    if lines[0] != CSV_HEADER:
        raise ConfigurationError("CSV header does not match the curve schema")
    pts, mode, scheme, decoder, seed = [], None, None, None, None
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 9:
            raise ConfigurationError(f"malformed CSV row: {ln!r}")
        mode, scheme, decoder = cells[0], MapperKind(cells[1]), Decoder(cells[2])
        seed = int(cells[8])
        pts.append(CurvePoint(snr_db=float(cells[3]), trials=int(cells[4]),
                              failures=int(cells[5]), probability=float(cells[6]),
                              wilson_halfwidth=float(cells[7])))
    return Curve(mode=mode, scheme=scheme, decoder=decoder, seed=seed,
                 points=tuple(pts))


def manifest_path(csv_path: str) -> str:
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".manifest.json"


def _plan_manifest(plan: SimPlan, extra: dict) -> str:
    doc = {
        "plan": {
            "mode": plan.mode,
            "cfg": dataclasses.asdict(plan.cfg),
            "spec": {
                "scheme": plan.spec.scheme.value,
                "decoder": plan.spec.decoder.value,
                "user_rates": list(plan.spec.user_rates),
                "relay_rate": plan.spec.relay_rate,
            },
            "snr_grid_db": list(plan.snr_grid_db),
            "trials": list(plan.trials),
            "master_seed": plan.master_seed,
            "code_params": (None if plan.code_params is None
                            else [list(pk) for pk in plan.code_params]),
            "zero_noise": plan.zero_noise,
            "norm_samples": plan.norm_samples,
            "max_nodes": plan.max_nodes,
            "relay_silence_is_outage": plan.relay_silence_is_outage,
        },
        "engine": {"outage_chunk": OUTAGE_CHUNK, "coded_chunk": CODED_CHUNK},
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _persist(plan: SimPlan, curve: Curve, extra: dict) -> None:
    if plan.output is None:
        return
    with open(plan.output, "w", newline="\n") as f:
        f.write(curve_to_csv(curve))
    with open(manifest_path(plan.output), "w", newline="\n") as f:
        f.write(_plan_manifest(plan, extra))


# ============================================================================
#  Vectorized outage evaluation
# ============================================================================


def _draw_batch(cfg: MarcConfig, seed_key: tuple, count: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
            / np.sqrt(2.0)

    k, mu, mr, nd = (cfg.num_users, cfg.user_antennas,
                     cfg.relay_antennas, cfg.dst_antennas)
    return (cn(count, k, mr, mu), cn(count, k, nd, mu), cn(count, nd, mr))


def _logdet_eye_plus(a: np.ndarray) -> np.ndarray:
    """log2 det(I + A) for stacked Hermitian PSD matrices (..., m, m)."""
    m = a.shape[-1]
    if m == 1:
        return np.log1p(a[..., 0, 0].real) / _LN2
    if m == 2:
        det = ((1.0 + a[..., 0, 0].real) * (1.0 + a[..., 1, 1].real)
               - (a[..., 0, 1] * np.conj(a[..., 0, 1])).real)
        return np.log(det) / _LN2
    _, ld = np.linalg.slogdet(np.eye(m) + a)
    return ld / _LN2


def _outage_masks_chunk(h_r, h_d, h_dr, cfg: MarcConfig, spec: RateRegionSpec,
                        relay_silence_is_outage: bool) -> np.ndarray:
    """Outage mask over one batch of draws via per-symbol log-dets: the
    Kronecker block structure makes the full super-channel log-det equal a
    per-symbol value times the symbol count of each phase."""
    count = h_r.shape[0]
    slots = cfg.num_slots
    subs = list(subsets(cfg.num_users))
    rate_sums = {s: sum(spec.user_rates[i] for i in s) for s in subs}

    outer_r = (cfg.snr_relay / cfg.user_antennas) * np.einsum(
        "nkab,nkcb->nkac", h_r, np.conj(h_r))
    outer_d = (cfg.snr_dst / cfg.user_antennas) * np.einsum(
        "nkab,nkcb->nkac", h_d, np.conj(h_d))
    outer_relay_dst = (cfg.snr_dst / cfg.relay_antennas) * (
        h_dr @ np.conj(np.swapaxes(h_dr, -1, -2)))

    ld_relay = {s: _logdet_eye_plus(outer_r[:, list(s)].sum(axis=1)) for s in subs}
    ld_p1 = {s: _logdet_eye_plus(outer_d[:, list(s)].sum(axis=1)) for s in subs}
    ld_p2 = {s: _logdet_eye_plus(outer_d[:, list(s)].sum(axis=1) + outer_relay_dst)
             for s in subs}

    ell1 = np.full(count, slots, dtype=np.int64)
    undecided = np.ones(count, dtype=bool)
    for ell in range(1, slots):
        feasible = np.ones(count, dtype=bool)
        for s in subs:
            feasible &= rate_sums[s] < (ell / slots) * ld_relay[s]
        newly = undecided & feasible
        ell1[newly] = ell
        undecided &= ~feasible

    outage = np.zeros(count, dtype=bool)
    for s in subs:
        rhs = (ell1 * ld_p1[s] + (slots - ell1) * ld_p2[s]) / slots
        if spec.decoder is Decoder.ONE_STAGE:
            rhs = rhs - one_stage_dst_loss(cfg, len(s))
        bad = ~(rate_sums[s] < rhs)
        if spec.scheme is MapperKind.MODULO_SUM and len(s) > 1:
            extra = ld_p1[s] - modulo_sum_loss(cfg, len(s), spec.decoder) \
                + spec.relay_rate
            bad |= ~(rate_sums[s] < extra)
        outage |= bad
    if relay_silence_is_outage:
        outage |= ell1 == slots
    return outage


def _chunk_ranges(total: int, chunk: int):
    start = 0
    idx = 0
    while start < total:
        size = min(chunk, total - start)
        yield idx, start, size
        idx += 1
        start += size


def batch_to_realizations(h_r, h_d, h_dr) -> list[ChannelRealization]:
    """Unpack a drawn batch into per-draw realizations (test cross-checks)."""
    return [ChannelRealization(to_relay=h_r[i], to_dst=h_d[i], relay_to_dst=h_dr[i])
            for i in range(h_r.shape[0])]


def evaluate_outage_masks(cfg: MarcConfig, spec: RateRegionSpec, snr_db: float,
                          trials: int, master_seed: int, *, point_index: int = 0,
                          relay_silence_is_outage: bool = False,
                          workers: int = 1) -> np.ndarray:
    """Per-draw outage mask at one SNR point.  The channel draws depend only
    on (master_seed, point_index, chunk), so calls with different specs see
    identical fading and masks can be compared draw by draw."""
    cfg_pt = dataclasses.replace(cfg, snr_dst_db=snr_db, snr_relay_db=snr_db)

    def work(task):
        idx, start, size = task
        h_r, h_d, h_dr = _draw_batch(cfg_pt, (master_seed, point_index, idx), size)
        return start, _outage_masks_chunk(h_r, h_d, h_dr, cfg_pt, spec,
                                          relay_silence_is_outage)

    mask = np.zeros(trials, dtype=bool)
    tasks = list(_chunk_ranges(trials, OUTAGE_CHUNK))
    if workers <= 1:
        results = map(work, tasks)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, tasks))
    for start, chunk_mask in results:
        mask[start:start + chunk_mask.shape[0]] = chunk_mask
    return mask


def run_outage(plan: SimPlan, workers: int = 1) -> Curve:
    """Theoretical outage curve: per SNR point, count fading draws whose
    rate-region constraints fail under the plan's scheme and decoder."""
    if plan.mode != "outage":
        raise ConfigurationError("plan mode must be 'outage'")
    points = []
    for j, snr in enumerate(plan.snr_grid_db):
        mask = evaluate_outage_masks(
            plan.cfg, plan.spec, snr, plan.trials[j], plan.master_seed,
            point_index=j, relay_silence_is_outage=plan.relay_silence_is_outage,
            workers=workers)
        points.append(CurvePoint.from_counts(snr, plan.trials[j], int(mask.sum())))
    curve = Curve(mode="outage", scheme=plan.spec.scheme,
                  decoder=plan.spec.decoder, seed=plan.master_seed,
                  points=tuple(points))
    _persist(plan, curve, {})
    return curve


# ============================================================================
#  Coded block-error simulation
# ============================================================================


@dataclass(frozen=True)
class CodedSystem:
    cfg: MarcConfig
    spec: RateRegionSpec
    mapper: RelayMapper

    @property
    def user_codes(self) -> tuple[NestedLatticeCode, ...]:
        return self.mapper.user_codes

    @property
    def relay_code(self) -> NestedLatticeCode:
        return self.mapper.relay_code


def _integer_ratio(rate: float, antennas: int) -> int:
    ratio = 2.0 ** (rate / (2 * antennas))
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigurationError(
            f"rate {rate} gives non-integer nesting ratio {ratio}")
    return int(round(ratio))


_SYSTEM_CACHE: dict = {}


def build_coded_system(plan: SimPlan) -> CodedSystem:
    """Draw and power-normalize the nested codebooks once per plan; plans
    differing only in grid, trials, or decoder share the cached system."""
    key = (plan.cfg, plan.spec.scheme, plan.spec.user_rates,
           plan.spec.relay_rate, plan.code_params, plan.master_seed,
           plan.norm_samples)
    cached = _SYSTEM_CACHE.get(key)
    if cached is not None:
        return cached
    system = _build_coded_system(plan)
    _SYSTEM_CACHE[key] = system
    return system


def _build_coded_system(plan: SimPlan) -> CodedSystem:
    cfg, spec = plan.cfg, plan.spec
    if cfg.num_users != 2:
        raise ConfigurationError("coded simulation supports two users")
    params = plan.code_params
    if params is None or len(params) != cfg.num_users + 1:
        raise ConfigurationError("need (p, k) code parameters per transmitter")
    rng = np.random.default_rng(np.random.SeedSequence((plan.master_seed, 0xC0DE)))
    codes = []
    dims = [2 * cfg.user_antennas * cfg.block_len] * cfg.num_users \
        + [2 * cfg.relay_antennas * cfg.block_len]
    ratios = [_integer_ratio(r, cfg.user_antennas) for r in spec.user_rates] \
        + [_integer_ratio(spec.relay_rate, cfg.relay_antennas)]
    rates = list(spec.user_rates) + [spec.relay_rate]
    for dim, (p, k), ratio, rate in zip(dims, params, ratios, rates):
        code = construction_a(dim, p, k, 1.0, rng).with_nesting(ratio, rate)
        codes.append(normalize_power(code, rng, samples=plan.norm_samples))
    mapper = make_mapper(spec.scheme, tuple(codes[:-1]), codes[-1])
    return CodedSystem(cfg=cfg, spec=spec, mapper=mapper)


def coded_trial(system: CodedSystem, cfg: MarcConfig, seed_key: tuple, *,
                zero_noise: bool = False,
                max_nodes: int = DEFAULT_MAX_NODES) -> tuple[bool, bool]:
    """One fading block: relay listens and forwards from the first slot
    boundary where it decodes the users correctly (genie-checked), the
    destination decodes with the mapper-consistent search.  Returns
    (any user wrong or unfinished search, search budget hit anywhere)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    mapper = system.mapper
    user_codes = mapper.user_codes
    relay_code = mapper.relay_code
    num_users = len(user_codes)
    slots, t = cfg.num_slots, cfg.slot_len

    real = sample_rayleigh(cfg, rng)
    msgs = [rng.integers(0, c.nesting_ratio, size=c.dim) for c in user_codes]
    dithers = [sample_dither(c, rng) for c in user_codes]
    relay_dither = sample_dither(relay_code, rng)
    x_users = np.concatenate([encode(c, m, u).signal
                              for c, m, u in zip(user_codes, msgs, dithers)])

    def noise(dim):
        if zero_noise:
            return np.zeros(dim)
        return np.sqrt(0.5) * rng.standard_normal(dim)

    relay_noise = noise(2 * cfg.relay_antennas * (slots - 1) * t)
    user_slices = transmitter_slices(cfg, include_relay=False)

    budget_hit = False
    ell1 = slots
    for ell in range(1, slots):
        h_listen = build_relay_listen_channel(real, ell, cfg)
        y_rel = h_listen @ x_users + relay_noise[:h_listen.shape[0]]
        res = relay_decode(y_rel, h_listen, user_slices, user_codes,
                           tuple(dithers), max_nodes=max_nodes)
        budget_hit |= not res.exact
        if all(np.array_equal(res.messages[i], msgs[i]) for i in range(num_users)):
            ell1 = ell
            break

    h_dst = build_dst_superchannel(real, ell1, cfg)
    if ell1 < slots:
        x_relay = encode(relay_code, map_indices(mapper, msgs), relay_dither).signal
    else:
        x_relay = np.zeros(relay_code.dim)
    y = h_dst @ np.concatenate([x_users, x_relay]) \
        + noise(h_dst.shape[0])

    relay_active = ell1 < slots
    if system.spec.decoder is Decoder.ONE_STAGE:
        if relay_active:
            search = build_search(user_codes, tuple(range(num_users)), mapper)
            res = one_stage_decode(y, h_dst, search,
                                   np.concatenate(dithers + [relay_dither]),
                                   max_nodes=max_nodes)
        else:
            h_users = h_dst[:, :num_users * user_codes[0].dim]
            search = build_search(user_codes, tuple(range(num_users)), None)
            res = one_stage_decode(y, h_users, search, np.concatenate(dithers),
                                   max_nodes=max_nodes)
        decoded, exact = res.messages, res.exact
    else:
        if relay_active:
            res = k_stage_decode(y, h_dst, transmitter_slices(cfg, True),
                                 user_codes, tuple(dithers) + (relay_dither,),
                                 mapper, max_nodes=max_nodes)
        else:
            h_users = h_dst[:, :num_users * user_codes[0].dim]
            res = k_stage_decode(y, h_users, user_slices, user_codes,
                                 tuple(dithers), None, max_nodes=max_nodes)
        decoded, exact = res.messages, res.exact
    budget_hit |= not exact
    wrong = (not exact) or any(
        not np.array_equal(decoded[i], msgs[i]) for i in range(num_users))
    return wrong, budget_hit


def _coded_task(args) -> tuple[int, int]:
    system, cfg_pt, seed, point, start, size, zero_noise, max_nodes = args
    fails = budget = 0
    for trial in range(start, start + size):
        wrong, hit = coded_trial(system, cfg_pt, (seed, point, trial),
                                 zero_noise=zero_noise, max_nodes=max_nodes)
        fails += wrong
        budget += hit
    return fails, budget


def run_coded_bler(plan: SimPlan, workers: int = 1) -> Curve:
    """Coded block-error curve with the linear relay mapper and exact sphere
    search; a failed trial is any user decoded wrong (unfinished searches
    count as failures and are tallied separately in the manifest).

    Parallel trials run in worker processes: the per-trial work is a mix of
    short jitted searches and small-matrix numpy calls, so threads would
    serialize on the interpreter lock."""
    if plan.mode != "coded":
        raise ConfigurationError("plan mode must be 'coded'")
    # the cache is decoder-agnostic; the trials must honor this plan's decoder
    system = dataclasses.replace(build_coded_system(plan), spec=plan.spec)
    points = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for j, snr in enumerate(plan.snr_grid_db):
            cfg_pt = dataclasses.replace(plan.cfg, snr_dst_db=snr,
                                         snr_relay_db=snr)
            tasks = [(system, cfg_pt, plan.master_seed, j, start, size,
                      plan.zero_noise, plan.max_nodes)
                     for _, start, size in _chunk_ranges(plan.trials[j],
                                                         CODED_CHUNK)]
            if pool is None:
                results = list(map(_coded_task, tasks))
            else:
                results = list(pool.map(_coded_task, tasks))
            failures = sum(r[0] for r in results)
            budget = sum(r[1] for r in results)
            points.append(CurvePoint.from_counts(snr, plan.trials[j], failures,
                                                 budget))
    finally:
        if pool is not None:
            pool.shutdown()
    curve = Curve(mode="coded", scheme=plan.spec.scheme,
                  decoder=plan.spec.decoder, seed=plan.master_seed,
                  points=tuple(points))
    _persist(plan, curve, {
        "lattices": [code_to_text(c) for c in system.user_codes]
        + [code_to_text(system.relay_code)],
        "budget_failures": [pt.budget_failures for pt in curve.points],
    })
    return curve


# ============================================================================
#  Slope estimation
# ============================================================================


def estimate_slope(curve: Curve, window: tuple[float, float]) -> float:
    """Least-squares slope of log10(probability) against snr_db / 10 over the
    window; a finite-SNR stand-in for the diversity exponent."""
    lo, hi = window
    xs, ys = [], []
    for pt in curve.points:
        if lo <= pt.snr_db <= hi and pt.failures > 0:
            xs.append(pt.snr_db / 10.0)
            ys.append(np.log10(pt.probability))
    if len(xs) < 2:
        raise EstimationError(
            f"need at least two points with failures in [{lo}, {hi}] dB")
    coeffs = np.polyfit(np.asarray(xs), np.asarray(ys), 1)
    return float(coeffs[0])
