#!/usr/bin/env python3
"""Throughput comparison of the two traversal backends.

Runs identical noisy frames through :class:`polarflip.ScDecoder` once per
available backend (compiled extension and pure-numpy fallback), checks that
the outputs are bit-identical, and prints frames/s plus the speedup of the
compiled kernel.

Usage::

    python3 benchmarks/bench_kernels.py [--frames 2000] [--seed 9] \
        [--codes 256:64 1024:512]
"""

import argparse
import sys
import time
from contextlib import contextmanager

import numpy as np

from polarflip import ChannelConfig, ScDecoder, make_code
from polarflip import sc_kernel
from polarflip.channel import channel_llrs, frame_rng
from polarflip.code_spec import crc_attach, polar_transform


@contextmanager
def use_backend(module):
    saved = sc_kernel._backend
    sc_kernel._backend = module
    try:
        yield
    finally:
        sc_kernel._backend = saved


def available_backends():
    from polarflip import _kernel_py

    backends = [("python", _kernel_py)]
    try:
        from polarflip import _sc_ext

        backends.append(("cython", _sc_ext))
    except ImportError:
        pass
    return backends


def build_frames(spec, ebn0_db, frames, seed):
    cfg = ChannelConfig(ebn0_db, spec.k / spec.block_length, seed)
    out = np.empty((frames, spec.block_length), dtype=np.float64)
    for i in range(frames):
        rng = frame_rng(seed, i)
        msg = rng.integers(0, 2, spec.k, dtype=np.uint8)
        u = np.zeros(spec.block_length, dtype=np.uint8)
        u[spec.unfrozen_indices] = crc_attach(msg, spec.crc_poly)
        out[i] = channel_llrs(polar_transform(u), cfg, i, rng=rng)
    return out


def bench_code(n_bits, payload, frames, ebn0_db, seed, backends):
    spec = make_code(n_bits, payload, crc_bits=8)
    llrs = build_frames(spec, ebn0_db, frames, seed)
    rows, outputs = [], {}
    for name, module in backends:
        with use_backend(module):
            dec = ScDecoder(spec)
            dec.decode(llrs[0])  # warm-up
            t0 = time.perf_counter()
            hats = [dec.decode(llrs[i]).u_hat for i in range(frames)]
            dt = time.perf_counter() - t0
        outputs[name] = np.stack(hats)
        rows.append((name, dt, frames / dt))
    if len(outputs) == 2 and not np.array_equal(outputs["python"], outputs["cython"]):
        raise SystemExit(f"backend outputs differ for PC({n_bits},{payload})")
    base = rows[0][1]
    print(f"\nPC({n_bits},{payload}) crc=8 @ {ebn0_db} dB, {frames} frames")
    print(f"  {'backend':<8} {'seconds':>9} {'frames/s':>10} {'us/frame':>10} {'speedup':>8}")
    for name, dt, fps in rows:
        print(
            f"  {name:<8} {dt:>9.3f} {fps:>10.0f} {1e6 * dt / frames:>10.1f} "
            f"{base / dt:>7.2f}x"
        )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--ebn0", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument(
        "--codes",
        nargs="+",
        default=["256:64", "1024:512"],
        metavar="N:K",
        help="codes to benchmark, as block_length:message_bits",
    )
    args = ap.parse_args(argv)

    backends = available_backends()
    print("backends found: " + ", ".join(name for name, _ in backends))
    if len(backends) == 1:
        print("compiled extension not built; timing the fallback only")
    for code in args.codes:
        n_bits, payload = (int(v) for v in code.split(":"))
        bench_code(n_bits, payload, args.frames, args.ebn0, args.seed, backends)
    return 0


if __name__ == "__main__":
    sys.exit(main())
