"""Command-line front end.

Subcommands::

    construct    emit a frozen-mask CSV for PC(N, K)
    simulate     FER sweep for one decoder over one or more Eb/N0 points
    profile-e1   single-error occurrence profile (genie campaign)
    profile-llr  mean |leaf LLR| per unfrozen rank
    build-plan   turn a profile CSV into a fixed or candidate-set flip plan
    cost         logic-cost breakdown for a datapath configuration
    decode       decode a single frame from an LLR file or a hex word

Every value can also come from a YAML config file (``--config``), keyed
by the flag's long name with dashes or underscores; explicit flags win.
All outputs are CSV (stdout by default, ``--out`` to write a file) with
reproducibility comments (seed, config hash, version) up top.  Exit
status is 0 on success and 2 for any configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .campaign import (
    DECODERS,
    load_profile_csv,
    profile_e1,
    profile_llr_magnitude,
    run_fer,
    write_fer_csv,
    write_llr_profile_csv,
    write_profile_csv,
)
from .channel import ChannelConfig, saturated_llrs
from .code_spec import (
    CodeSpec,
    default_crc_poly,
    load_frozen_mask,
    make_code,
    save_frozen_mask,
)
from .cost_model import DEFAULT_WEIGHTS, CostModel, estimate_cost
from .flip_engines import (
    build_eis_plan,
    build_fis_plan,
    eis_decode,
    fis_decode,
    load_plan,
    save_plan,
    scflip_decode,
)


# ---------------------------------------------------------------------------
# Parser construction (argument_default=SUPPRESS so a config file can fill
# anything the command line left out)
# ---------------------------------------------------------------------------

def _add_code_args(sub):
    sub.add_argument("-N", "--block-length", type=int, help="block length (power of two)")
    sub.add_argument("--k", type=int, help="information bits")
    sub.add_argument("--crc-bits", type=int, help="CRC width (default 8; 0 disables)")
    sub.add_argument("--design-snr", type=float, help="construction Eb/N0 in dB (default 2.5)")
    sub.add_argument("--mask", help="frozen-mask CSV (overrides construction)")


def _add_common(sub):
    sub.add_argument("--config", help="YAML config file")
    sub.add_argument("--out", help="output path (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polarflip",
        description="Polar-code SC / SC-Flip decoding toolkit",
    )
    parser.add_argument("--version", action="version", version=f"polarflip {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command")
    table = {}

    def new(name, help_, func):
        sub = subs.add_parser(name, help=help_, argument_default=argparse.SUPPRESS)
        sub.set_defaults(func=func, command=name)
        _add_common(sub)
        table[name] = sub
        return sub

    sub = new("construct", "emit a frozen-mask CSV", _cmd_construct)
    _add_code_args(sub)

    sub = new("simulate", "run an FER sweep for one decoder", _cmd_simulate)
    _add_code_args(sub)
    sub.add_argument("--decoder", choices=DECODERS)
    sub.add_argument("--ebn0", type=float, help="single Eb/N0 point in dB")
    sub.add_argument("--ebn0-range", help="start:stop:step sweep in dB (stop inclusive)")
    sub.add_argument("--frames", type=int, help="frames per point")
    sub.add_argument("--seed", type=int, help="master RNG seed (default 1)")
    sub.add_argument("--tmax", type=int, help="flip attempt budget (default 10)")
    sub.add_argument("--plan", help="flip-plan CSV (required for fis/eis)")
    sub.add_argument("--stop-errors", type=int,
                     help="early-stop after this many frame errors (default 200; 0 disables)")
    sub.add_argument("--rate", type=float,
                     help="noise-normalization rate override (default K/N)")
    sub.add_argument("--eis-scaling", choices=["divide", "multiply"],
                     help="candidate metric form (default divide)")

    sub = new("profile-e1", "profile single-error occurrences", _cmd_profile_e1)
    _add_code_args(sub)
    sub.add_argument("--ebn0", type=float)
    sub.add_argument("--frames", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--rate", type=float)

    sub = new("profile-llr", "profile mean |leaf LLR| per rank", _cmd_profile_llr)
    _add_code_args(sub)
    sub.add_argument("--ebn0", type=float)
    sub.add_argument("--frames", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--rate", type=float)

    sub = new("build-plan", "derive a flip plan from a profile CSV", _cmd_build_plan)
    sub.add_argument("--profile", help="profile CSV from profile-e1")
    sub.add_argument("--mode", choices=["fis", "eis"])
    sub.add_argument("--tmax", type=int, help="fixed-plan length (default 10)")
    sub.add_argument("--set-size", type=int, help="candidate-set size for eis")

    sub = new("cost", "logic-cost breakdown", _cmd_cost)
    sub.add_argument("--pe", type=int, help="processing elements")
    sub.add_argument("--q", type=int, help="soft-value quantization bits")
    sub.add_argument("--tmax", type=int, help="sorter depth (default 10)")
    sub.add_argument("--unit-cost", action="append", metavar="NAME=VALUE",
                     help="override a primitive cost (repeatable); names: "
                          + ", ".join(DEFAULT_WEIGHTS))

    sub = new("decode", "decode one frame from LLRs or a hex word", _cmd_decode)
    _add_code_args(sub)
    sub.add_argument("--decoder", choices=[d for d in DECODERS if d != "oracle"])
    sub.add_argument("--llrs", help="text file of N channel LLRs")
    sub.add_argument("--hex", dest="hex_word",
                     help="hex-packed N hard channel bits (mapped to saturated LLRs)")
    sub.add_argument("--tmax", type=int)
    sub.add_argument("--plan", help="flip-plan CSV (required for fis/eis)")
    sub.add_argument("--eis-scaling", choices=["divide", "multiply"])

    return parser, table


# ---------------------------------------------------------------------------
# Config-file merge
# ---------------------------------------------------------------------------

def _load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _merge_args(subparser, explicit: argparse.Namespace) -> argparse.Namespace:
    """defaults < config file < explicit flags."""
    values = {}
    for action in subparser._actions:
        if action.dest in ("help", "==SUPPRESS=="):
            continue
        values[action.dest] = None if action.default is argparse.SUPPRESS else action.default
    explicit_vars = dict(vars(explicit))
    config = {}
    path = explicit_vars.get("config")
    if path:
        config = _load_config(path)
        unknown = set(config) - set(values)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    values.update(config)
    values.update(explicit_vars)
    return argparse.Namespace(**values)


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ValueError(f"missing required option(s): {flags}")


def _get(args, name, default):
    value = getattr(args, name, None)
    return default if value is None else value


def _config_digest(args) -> str:
    payload = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config", "out") and v is not None
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _meta(args, seed: Optional[int] = None) -> dict:
    meta = {}
    if seed is not None:
        meta["seed"] = seed
    meta["config_sha"] = _config_digest(args)
    meta["version"] = __version__
    return meta


def _out_stream(args):
    out = getattr(args, "out", None)
    return out if out else sys.stdout


# ---------------------------------------------------------------------------
# Shared builders
# ---------------------------------------------------------------------------

def _build_spec(args) -> CodeSpec:
    crc_bits = _get(args, "crc_bits", 8)
    design_snr = _get(args, "design_snr", 2.5)
    mask_path = getattr(args, "mask", None)
    if mask_path:
        mask = load_frozen_mask(mask_path)
        N = mask.size
        k = int(N - mask.sum()) - crc_bits
        n = N.bit_length() - 1
        if 1 << n != N:
            raise ValueError(f"mask length {N} is not a power of two")
        return CodeSpec(n=n, k=k, c=crc_bits, frozen_mask=mask,
                        crc_poly=default_crc_poly(crc_bits),
                        design_snr_db=design_snr)
    _require(args, "block_length", "k")
    return make_code(args.block_length, args.k, crc_bits=crc_bits,
                     design_snr_db=design_snr)


def _ebn0_points(args) -> list[float]:
    single = getattr(args, "ebn0", None)
    rng = getattr(args, "ebn0_range", None)
    if (single is None) == (rng is None):
        raise ValueError("exactly one of --ebn0 / --ebn0-range is required")
    if single is not None:
        return [float(single)]
    parts = str(rng).split(":")
    if len(parts) != 3:
        raise ValueError("--ebn0-range must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError("--ebn0-range needs stop >= start and step > 0")
    count = int(round((stop - start) / step))
    points = [start + i * step for i in range(count + 1)]
    return [p for p in points if p <= stop + 1e-9]


def _load_plan_if_needed(args, decoder: str):
    if decoder not in ("fis", "eis"):
        return None
    _require(args, "plan")
    return load_plan(args.plan)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_construct(args) -> int:
    spec = _build_spec(args)
    meta = _meta(args)
    meta["code"] = spec.fingerprint()
    save_frozen_mask(_out_stream(args), spec.frozen_mask, meta=meta)
    return 0


def _cmd_simulate(args) -> int:
    _require(args, "decoder", "frames")
    spec = _build_spec(args)
    decoder = args.decoder
    plan = _load_plan_if_needed(args, decoder)
    seed = _get(args, "seed", 1)
    t_max = _get(args, "tmax", 10)
    stop = _get(args, "stop_errors", 200)
    rate = _get(args, "rate", spec.k / spec.block_length)
    points = []
    for ebn0 in _ebn0_points(args):
        channel = ChannelConfig(ebn0_db=ebn0, rate=rate, seed=seed)
        points.append(run_fer(
            spec, decoder, channel, args.frames,
            stop_at_errors=stop if stop else None,
            t_max=t_max, plan=plan,
            eis_scaling=_get(args, "eis_scaling", "divide"),
        ))
    meta = _meta(args, seed=seed)
    meta["code"] = spec.fingerprint()
    write_fer_csv(points, _out_stream(args), meta=meta)
    return 0


def _cmd_profile_e1(args) -> int:
    _require(args, "ebn0", "frames")
    spec = _build_spec(args)
    seed = _get(args, "seed", 1)
    rate = _get(args, "rate", spec.k / spec.block_length)
    channel = ChannelConfig(ebn0_db=args.ebn0, rate=rate, seed=seed)
    profile = profile_e1(spec, channel, args.frames)
    write_profile_csv(profile, _out_stream(args), meta=_meta(args, seed=seed))
    return 0


def _cmd_profile_llr(args) -> int:
    _require(args, "ebn0", "frames")
    spec = _build_spec(args)
    seed = _get(args, "seed", 1)
    rate = _get(args, "rate", spec.k / spec.block_length)
    channel = ChannelConfig(ebn0_db=args.ebn0, rate=rate, seed=seed)
    means = profile_llr_magnitude(spec, channel, args.frames)
    meta = _meta(args, seed=seed)
    meta.update(code=spec.fingerprint(), ebn0_db=repr(float(args.ebn0)), frames=args.frames)
    write_llr_profile_csv(means, spec, _out_stream(args), meta=meta)
    return 0


def _cmd_build_plan(args) -> int:
    _require(args, "profile", "mode")
    profile = load_profile_csv(args.profile)
    if args.mode == "fis":
        plan = build_fis_plan(profile, _get(args, "tmax", 10))
    else:
        _require(args, "set_size")
        plan = build_eis_plan(profile, args.set_size)
    meta = _meta(args)
    meta["code"] = profile.code_id
    save_plan(_out_stream(args), plan, meta=meta)
    return 0


def _cmd_cost(args) -> int:
    _require(args, "pe", "q")
    weights = dict(DEFAULT_WEIGHTS)
    for item in _get(args, "unit_cost", []) or []:
        name, sep, value = item.partition("=")
        if not sep or name not in DEFAULT_WEIGHTS:
            raise ValueError(f"--unit-cost expects NAME=VALUE with NAME in "
                             f"{sorted(DEFAULT_WEIGHTS)}, got {item!r}")
        weights[name] = float(value)
    model = CostModel(pe=args.pe, q=args.q, t_max=_get(args, "tmax", 10), weights=weights)
    b = estimate_cost(model)
    fh = _out_stream(args)
    opened = not hasattr(fh, "write")
    stream = open(fh, "w", encoding="ascii") if opened else fh
    try:
        for key, value in _meta(args).items():
            stream.write(f"# {key}={value}\n")
        stream.write("block,cost\n")
        stream.write(f"f,{b.f_cost!r}\n")
        stream.write(f"g,{b.g_cost!r}\n")
        stream.write(f"c,{b.c_cost!r}\n")
        stream.write(f"sorter,{b.sorter_cost!r}\n")
        stream.write(f"scflip_total,{b.scflip_total!r}\n")
        stream.write(f"fis_total,{b.fis_total!r}\n")
        stream.write(f"sorter_fraction,{b.sorter_fraction!r}\n")
    finally:
        if opened:
            stream.close()
    return 0


def _read_llr_file(path, N: int) -> np.ndarray:
    values = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.split("#", 1)[0].replace(",", " ")
            values.extend(float(tok) for tok in line.split())
    llrs = np.array(values, dtype=np.float64)
    if llrs.size != N:
        raise ValueError(f"LLR file holds {llrs.size} values, expected {N}")
    return llrs


def _hex_to_llrs(hex_word: str, N: int) -> np.ndarray:
    data = bytes.fromhex(hex_word)
    if data == b"" or len(data) != (N + 7) // 8:
        raise ValueError(f"hex word must pack exactly {N} bits ({(N + 7) // 8} bytes)")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:N]
    return saturated_llrs(bits)


def _cmd_decode(args) -> int:
    _require(args, "decoder")
    spec = _build_spec(args)
    N = spec.block_length
    llr_path = getattr(args, "llrs", None)
    hex_word = getattr(args, "hex_word", None)
    if (llr_path is None) == (hex_word is None):
        raise ValueError("exactly one of --llrs / --hex is required")
    llrs = _read_llr_file(llr_path, N) if llr_path else _hex_to_llrs(hex_word, N)
    t_max = _get(args, "tmax", 10)
    decoder = args.decoder
    plan = _load_plan_if_needed(args, decoder)
    if decoder == "sc":
        outcome = scflip_decode(llrs, spec, 0)
    elif decoder == "scflip":
        outcome = scflip_decode(llrs, spec, t_max)
    elif decoder == "fis":
        outcome = fis_decode(llrs, spec, plan, t_max)
    else:
        outcome = eis_decode(llrs, spec, plan, t_max,
                             scaling=_get(args, "eis_scaling", "divide"))
    fh = _out_stream(args)
    opened = not hasattr(fh, "write")
    stream = open(fh, "w", encoding="ascii") if opened else fh
    try:
        meta = _meta(args)
        meta["code"] = spec.fingerprint()
        for key, value in meta.items():
            stream.write(f"# {key}={value}\n")
        stream.write("field,value\n")
        stream.write(f"info_hex,{np.packbits(outcome.info_hat).tobytes().hex()}\n")
        stream.write(f"crc_pass,{int(outcome.crc_pass)}\n")
        stream.write(f"attempts,{outcome.attempts}\n")
        stream.write(f"iteration_cost,{outcome.iteration_cost!r}\n")
        flipped = "" if outcome.flipped_index is None else outcome.flipped_index
        stream.write(f"flipped_index,{flipped}\n")
    finally:
        if opened:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser, table = build_parser()
    try:
        explicit = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    command = getattr(explicit, "command", None)
    if command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = _merge_args(table[command], explicit)
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
