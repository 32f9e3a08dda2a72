"""Command-line front end: outage sweeps, coded block-error sweeps,
rate-region queries on explicit channel matrices, and validation suites.

Configuration files are flat ``key = value`` text ('#' starts a comment);
command-line flags override file values.  Exit status: 0 on success, 1 on
usage/configuration errors, 2 on runtime or numerical errors (and on failed
validation checks).
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys

import numpy as np

from .channel import ChannelRealization, MarcConfig
from .errors import ConfigurationError, MarclatError
from .lattice import construction_a, from_code_rows, quantize, sample_dither
from .mapper import (MapperKind, build_superlattice_generator,
                     coset_consistency_check, make_mapper, map_indices)
from .codec import compute_gdfe
from .rates import (Decoder, RateRegionSpec, decision_time, outage_indicator,
                    region_inclusion_check)
from .sim import SimPlan, run_coded_bler, run_outage
from .sphere import sphere_decode

OUT_DIR_ENV = "MARCLAT_OUT"


class UsageError(MarclatError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ============================================================================
#  Config file handling
# ============================================================================

_CFG_KEYS = {
    "users": int, "user_antennas": int, "relay_antennas": int,
    "dst_antennas": int, "slots": int, "slot_len": int,
    "sr_offset_db": float, "relay_rate": float,
    "rates": str, "scheme": str, "decoder": str,
    "trials": int, "seed": int,
    "snr_from": float, "snr_to": float, "snr_step": float,
    "p": int, "k": int, "zero_noise": str, "norm_samples": int,
    "max_nodes": int, "out": str,
}


def parse_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    values: dict = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _CFG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CFG_KEYS[key](val)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def _build_cfg(values: dict) -> MarcConfig:
    rates_raw = values.get("rates", "2,2")
    rates = tuple(float(r) for r in str(rates_raw).split(","))
    users = values.get("users", len(rates))
    try:
        return MarcConfig(
            num_users=users,
            user_antennas=values.get("user_antennas", 1),
            relay_antennas=values.get("relay_antennas", 1),
            dst_antennas=values.get("dst_antennas", 1),
            num_slots=values.get("slots", 2),
            slot_len=values.get("slot_len", 1),
            sr_offset_db=values.get("sr_offset_db", 0.0),
            user_rates=rates,
            relay_rate=values.get("relay_rate", sum(rates)),
        )
    except ConfigurationError as exc:
        raise UsageError(str(exc))


def _snr_grid(values: dict) -> tuple[float, ...]:
    lo = values.get("snr_from", 10.0)
    hi = values.get("snr_to", lo)
    step = values.get("snr_step", 5.0)
    if step <= 0:
        raise UsageError("snr_step must be positive")
    grid = []
    snr = lo
    while snr <= hi + 1e-9:
        grid.append(round(snr, 9))
        snr += step
    return tuple(grid)


def _merge_flags(values: dict, args) -> dict:
    merged = dict(values)
    for key in ("seed", "trials", "scheme", "decoder", "out"):
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    for flag_key, cfg_key in (("snr_from", "snr_from"), ("snr_to", "snr_to"),
                              ("snr_step", "snr_step")):
        flag = getattr(args, flag_key, None)
        if flag is not None:
            merged[cfg_key] = flag
    return merged


def _build_plan(mode: str, values: dict) -> SimPlan:
    cfg = _build_cfg(values)
    try:
        spec = RateRegionSpec.from_config(cfg, values.get("scheme", "omlc"),
                                          values.get("decoder", "kstage"))
    except (ConfigurationError, ValueError) as exc:
        raise UsageError(str(exc))
    code_params = None
    if mode == "coded":
        p, k = values.get("p", 97), values.get("k", 3)
        code_params = tuple((p, k) for _ in range(cfg.num_users + 1))
    out_dir = values.get("out") or os.environ.get(OUT_DIR_ENV) or "."
    seed = values.get("seed", 0)
    name = (f"{mode}_{values.get('scheme', 'omlc')}_"
            f"{values.get('decoder', 'kstage')}_seed{seed}.csv")
    try:
        return SimPlan(
            mode=mode, cfg=cfg, spec=spec, snr_grid_db=_snr_grid(values),
            trials=values.get("trials", 10_000), master_seed=seed,
            code_params=code_params,
            zero_noise=str(values.get("zero_noise", "false")).lower() == "true",
            norm_samples=values.get("norm_samples", 100_000),
            max_nodes=values.get("max_nodes", 10_000_000),
            output=os.path.join(out_dir, name),
        )
    except ConfigurationError as exc:
        raise UsageError(str(exc))


# ============================================================================
#  Channel matrix files
# ============================================================================


def read_matrix_blocks(path: str) -> list[np.ndarray]:
    """Blocks of complex matrices: one row per line, entries like '1+2j',
    blank lines separate blocks."""
    if not os.path.exists(path):
        raise UsageError(f"matrix file not found: {path}")
    blocks, rows = [], []
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                if rows:
                    blocks.append(np.array(rows, dtype=complex))
                    rows = []
                continue
            try:
                rows.append([complex(tok) for tok in line.split()])
            except ValueError as exc:
                raise UsageError(f"{path}: bad complex entry: {exc}")
    if rows:
        blocks.append(np.array(rows, dtype=complex))
    if not blocks:
        raise UsageError(f"{path}: no matrix blocks found")
    return blocks


def _realization_from_files(hd_path: str, hr_path: str,
                            args) -> tuple[ChannelRealization, MarcConfig]:
    hr_blocks = read_matrix_blocks(hr_path)
    hd_blocks = read_matrix_blocks(hd_path)
    num_users = len(hr_blocks)
    if len(hd_blocks) != num_users + 1:
        raise UsageError(
            f"--hd needs {num_users} user blocks plus one relay block")
    mr, mu = hr_blocks[0].shape
    nd = hd_blocks[0].shape[0]
    rates = tuple(float(r) for r in args.rates.split(","))
    if len(rates) != num_users:
        raise UsageError(f"--rates needs {num_users} entries")
    cfg = MarcConfig(
        num_users=num_users, user_antennas=mu, relay_antennas=mr,
        dst_antennas=nd, num_slots=args.slots, slot_len=args.slot_len,
        snr_relay_db=args.snr_db, snr_dst_db=args.snr_db,
        sr_offset_db=args.sr_offset_db, user_rates=rates,
        relay_rate=args.relay_rate if args.relay_rate is not None else sum(rates))
    real = ChannelRealization(
        to_relay=np.stack(hr_blocks), to_dst=np.stack(hd_blocks[:-1]),
        relay_to_dst=hd_blocks[-1])
    real.validate(cfg)
    return real, cfg


# ============================================================================
#  Validation suites
# ============================================================================


def _check_sphere(rng) -> tuple[bool, str]:
    mismatches = 0
    for _ in range(60):
        n = int(rng.integers(2, 5))
        basis = np.eye(n) + 0.3 * rng.standard_normal((n, n))
        target = basis @ rng.integers(-2, 3, size=n) + 0.4 * rng.standard_normal(n)
        z = sphere_decode(basis, target)
        grids = np.stack(np.meshgrid(*[np.arange(-5, 6)] * n,
                                     indexing="ij")).reshape(n, -1)
        d_all = np.sum((target[:, None] - basis @ grids) ** 2, axis=0)
        if np.sum((target - basis @ z) ** 2) > d_all.min() + 1e-9:
            mismatches += 1
    return mismatches == 0, f"{mismatches} mismatches vs exhaustive search"


def _check_gdfe(rng, broken: bool = False) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(100):
        h = rng.standard_normal((5, 4))
        filt = compute_gdfe(h)
        feedback = filt.feedback.copy()
        if broken:
            feedback[0, 0] += 1e-3
        gram = np.eye(4) + h.T @ h
        err = np.linalg.norm(feedback.T @ feedback - gram) / np.linalg.norm(gram)
        worst = max(worst, err)
    return worst < 1e-9, f"worst relative identity error {worst:.2e}"


def _cubic(n, tau):
    return from_code_rows(np.eye(n, dtype=int), prime=2, scale=1.0).with_nesting(tau)


def _check_mapper(rng, exhaustive_tau: int | None) -> tuple[bool, str]:
    ok = True
    for kind, relay_dim in ((MapperKind.ONE_TO_ONE_LINEAR, 4),
                            (MapperKind.MODULO_SUM, 2)):
        m = make_mapper(kind, (_cubic(2, 2), _cubic(2, 2)), _cubic(relay_dim, 2))
        ok &= coset_consistency_check(m, build_superlattice_generator(m), 200, rng)
    detail = "consistency 200 trials/kind"
    if exhaustive_tau is not None:
        tau = exhaustive_tau
        if tau ** 4 > 4096:
            raise UsageError("exhaustive map check capped at tau^4 <= 4096")
        m = make_mapper(MapperKind.ONE_TO_ONE_LINEAR,
                        (_cubic(2, tau), _cubic(2, tau)), _cubic(4, tau))
        seen = set()
        violations = 0
        for z1 in itertools.product(range(tau), repeat=2):
            for z2 in itertools.product(range(tau), repeat=2):
                out = tuple(map_indices(m, [np.array(z1), np.array(z2)]))
                violations += out in seen
                seen.add(out)
        ok &= violations == 0
        detail += f", exhaustive tau={tau}: {violations} violations"
    return ok, detail


def _check_lattice(rng) -> tuple[bool, str]:
    bad = 0
    for _ in range(10):
        code = construction_a(4, 5, 2, 0.8, rng).with_nesting(2)
        y = code.basis @ rng.integers(-2, 3, size=4) + 0.3 * rng.standard_normal(4)
        pt = quantize(code, y)
        grids = np.stack(np.meshgrid(*[np.arange(-6, 7)] * 4,
                                     indexing="ij")).reshape(4, -1)
        d_all = np.sum((y[:, None] - code.basis @ grids) ** 2, axis=0)
        if np.sum((y - pt.coords) ** 2) > d_all.min() + 1e-9:
            bad += 1
        u = sample_dither(code, rng)
        if np.linalg.norm(quantize(code, u, lattice="shaping").coords) > 1e-9:
            bad += 1
    return bad == 0, f"{bad} quantizer/dither violations"


def _check_region(rng) -> tuple[bool, str]:
    cfg = MarcConfig(num_users=2, user_rates=(2.0, 2.0), relay_rate=4.0,
                     sr_offset_db=10.0)
    from .channel import sample_rayleigh
    real = sample_rayleigh(cfg, rng)
    report = region_inclusion_check(real, cfg, samples=300, rng=rng)
    ok = report.violations_one_stage == 0 and report.violations_modulo_sum == 0
    return ok, (f"{report.violations_one_stage}+{report.violations_modulo_sum} "
                f"inclusion violations in {report.samples} samples")


_SUITES = ("sphere", "gdfe", "mapper", "lattice", "region")


def run_validation(suite: str, exhaustive_tau: int | None,
                   break_gdfe: bool) -> int:
    names = _SUITES if suite == "all" else (suite,)
    rng = np.random.default_rng(2024)
    failures = 0
    for name in names:
        if name == "sphere":
            ok, detail = _check_sphere(rng)
        elif name == "gdfe":
            ok, detail = _check_gdfe(rng, broken=break_gdfe)
        elif name == "mapper":
            ok, detail = _check_mapper(rng, exhaustive_tau)
        elif name == "lattice":
            ok, detail = _check_lattice(rng)
        elif name == "region":
            ok, detail = _check_region(rng)
        else:
            raise UsageError(f"unknown validation suite {name!r}")
        failures += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name:8s} {detail}")
    return 0 if failures == 0 else 2


# ============================================================================
#  Argument parsing and dispatch
# ============================================================================


def _add_sweep_flags(sub):
    sub.add_argument("--config", help="flat key = value configuration file")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--trials", type=int)
    sub.add_argument("--snr-from", dest="snr_from", type=float)
    sub.add_argument("--snr-to", dest="snr_to", type=float)
    sub.add_argument("--snr-step", dest="snr_step", type=float)
    sub.add_argument("--scheme", choices=["omlc", "msmlc"])
    sub.add_argument("--decoder", choices=["kstage", "onestage"])
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out")


def _add_matrix_flags(sub, with_hd: bool):
    if with_hd:
        sub.add_argument("--hd", required=True,
                         help="destination matrices: K user blocks + relay block")
    sub.add_argument("--hr", required=True,
                     help="relay matrices: K user blocks")
    sub.add_argument("--rates", required=True, help="comma-separated user rates")
    sub.add_argument("--relay-rate", dest="relay_rate", type=float)
    sub.add_argument("--scheme", choices=["omlc", "msmlc"], default="omlc")
    sub.add_argument("--decoder", choices=["kstage", "onestage"],
                     default="kstage")
    sub.add_argument("--slots", type=int, default=2)
    sub.add_argument("--slot-len", dest="slot_len", type=int, default=1)
    sub.add_argument("--snr-db", dest="snr_db", type=float, default=0.0)
    sub.add_argument("--sr-offset-db", dest="sr_offset_db", type=float,
                     default=0.0)


def build_parser() -> _Parser:
    parser = _Parser(prog="marclat",
                     description="Lattice-coded relay-channel simulator")
    subs = parser.add_subparsers(dest="command", required=True)

    _add_sweep_flags(subs.add_parser("outage", help="theoretical outage sweep"))
    _add_sweep_flags(subs.add_parser("codec", help="coded block-error sweep"))

    region = subs.add_parser("region", help="outage query on explicit matrices")
    _add_matrix_flags(region, with_hd=True)

    dtime = subs.add_parser("decision-time", help="relay decision slot query")
    _add_matrix_flags(dtime, with_hd=False)

    val = subs.add_parser("validate", help="run oracle validation suites")
    val.add_argument("suite", choices=("all",) + _SUITES)
    val.add_argument("--exhaustive-tau", dest="exhaustive_tau", type=int)
    val.add_argument("--break-gdfe", dest="break_gdfe", action="store_true",
                     help="test hook: inject a GDFE fault (must fail)")
    return parser


def _run_sweep(mode: str, args) -> int:
    values = parse_config_file(args.config) if args.config else {}
    plan = _build_plan(mode, _merge_flags(values, args))
    out_dir = os.path.dirname(plan.output)
    if out_dir and not os.path.isdir(out_dir):
        os.makedirs(out_dir, exist_ok=True)
    runner = run_outage if mode == "outage" else run_coded_bler
    curve = runner(plan, workers=max(1, args.threads))
    print(f"wrote {plan.output}")
    for pt in curve.points:
        print(f"  snr={pt.snr_db:g} dB  p={pt.probability:.3e} "
              f"({pt.failures}/{pt.trials})")
    return 0


def _run_region(args) -> int:
    real, cfg = _realization_from_files(args.hd, args.hr, args)
    spec = RateRegionSpec.from_config(cfg, args.scheme, args.decoder)
    verdict = outage_indicator(real, spec, cfg)
    print(f"in_outage={'true' if verdict.in_outage else 'false'}")
    print(f"ell1={verdict.ell1}")
    subsets_txt = " ".join("{" + ",".join(str(i) for i in s) + "}"
                           for s in verdict.violated_subsets) or "none"
    print(f"violated_subsets={subsets_txt}")
    return 0


def _run_decision_time(args) -> int:
    hr_blocks = read_matrix_blocks(args.hr)
    num_users = len(hr_blocks)
    mr, mu = hr_blocks[0].shape
    rates = tuple(float(r) for r in args.rates.split(","))
    if len(rates) != num_users:
        raise UsageError(f"--rates needs {num_users} entries")
    cfg = MarcConfig(num_users=num_users, user_antennas=mu, relay_antennas=mr,
                     dst_antennas=1, num_slots=args.slots,
                     slot_len=args.slot_len, snr_relay_db=args.snr_db,
                     snr_dst_db=args.snr_db, sr_offset_db=args.sr_offset_db,
                     user_rates=rates,
                     relay_rate=args.relay_rate if args.relay_rate is not None
                     else sum(rates))
    real = ChannelRealization(
        to_relay=np.stack(hr_blocks),
        to_dst=np.zeros((num_users, 1, mu), dtype=complex),
        relay_to_dst=np.zeros((1, mr), dtype=complex))
    spec = RateRegionSpec.from_config(cfg, args.scheme, args.decoder)
    print(f"ell1={decision_time(real, spec, cfg)}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "outage":
            return _run_sweep("outage", args)
        if args.command == "codec":
            return _run_sweep("coded", args)
        if args.command == "region":
            return _run_region(args)
        if args.command == "decision-time":
            return _run_decision_time(args)
        if args.command == "validate":
            return run_validation(args.suite, args.exhaustive_tau,
                                  args.break_gdfe)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MarclatError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
