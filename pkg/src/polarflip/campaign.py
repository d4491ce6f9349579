"""Monte Carlo campaigns: FER sweeps, single-error profiling, and
leaf-reliability profiling.

Frames are numbered 0..frames-1 and processed in fixed batches of
:data:`FRAMES_PER_BATCH`.  Each frame's randomness comes from its own
counter-based substream (see :mod:`polarflip.channel`), and batch
results merge in batch order, so campaign outputs are bit-identical for
any worker count — including early-stopped FER runs, which stop at a
batch boundary.  Worker count comes from the ``workers`` argument, the
``POLARFLIP_WORKERS`` environment variable, or ``os.cpu_count()``, in
that order.
"""

from __future__ import annotations

import csv
import multiprocessing
import os
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelConfig, frame_rng
from .code_spec import CodeSpec, crc_attach_many, polar_transform_many
from .flip_engines import (
    FlipPlan,
    eis_decode,
    fis_decode,
    iteration_cost,
    oracle_decode,
    scflip_decode,
)
from .sc_kernel import ScDecoder

__all__ = [
    "DECODERS",
    "FRAMES_PER_BATCH",
    "ErrorProfile",
    "FerPoint",
    "MatchedFerResult",
    "iteration_cost",
    "load_profile_csv",
    "profile_e1",
    "profile_llr_magnitude",
    "run_fer",
    "run_fer_matched",
    "write_fer_csv",
    "write_llr_profile_csv",
    "write_profile_csv",
]

DECODERS = ("sc", "scflip", "fis", "eis", "oracle")
FRAMES_PER_BATCH = 4096
# Frames whose messages/noise are materialized together inside a batch.
# Vectorizes encoding and demapping without changing any per-frame RNG
# stream, so results are invariant to this value.  Sized to keep the
# working set within L2-sized caches.
_GEN_CHUNK = 64


@dataclass
class ErrorProfile:
    """Where single channel-induced errors land, keyed by unfrozen rank.

    ``e1_counts[r]`` counts frames whose genie pass corrected exactly
    one decision, at the leaf of rank ``r`` (rank = position among the
    K+C unfrozen indices).  ``unfrozen_leaf_indices[r]`` maps the rank
    back to its leaf.  Frames with several corrections or none are
    tallied separately, so the three buckets partition the campaign.
    """

    code_id: str
    ebn0_db: float
    frames_simulated: int
    e1_counts: np.ndarray
    multi_error_frames: int
    zero_error_frames: int
    unfrozen_leaf_indices: np.ndarray

    def __post_init__(self):
        self.e1_counts = np.asarray(self.e1_counts, dtype=np.int64)
        self.unfrozen_leaf_indices = np.asarray(self.unfrozen_leaf_indices, dtype=np.int64)
        if self.e1_counts.shape != self.unfrozen_leaf_indices.shape:
            raise ValueError("e1_counts and unfrozen_leaf_indices must align")
        if (self.e1_counts < 0).any():
            raise ValueError("counts must be non-negative")
        total = int(self.e1_counts.sum()) + self.multi_error_frames + self.zero_error_frames
        if total != self.frames_simulated:
            raise ValueError(
                f"buckets sum to {total}, expected frames_simulated={self.frames_simulated}"
            )

    def normalized(self) -> np.ndarray:
        """Per-rank share of all single-error events (zeros when none)."""
        total = self.e1_counts.sum()
        if total == 0:
            return np.zeros_like(self.e1_counts, dtype=np.float64)
        return self.e1_counts / total


@dataclass
class FerPoint:
    """One decoder at one operating point."""

    ebn0_db: float
    decoder: str
    frames: int
    frame_errors: int
    fer: float
    avg_iterations: float
    avg_attempts: float
    undetected_error_frames: int
    tmax_exhausted_frames: int


@dataclass
class MatchedFerResult:
    """Several decoders measured on the *same* noise realizations.

    Because every decoder sees identical frames, the difference of two
    FERs can be estimated from per-frame paired outcomes, whose standard
    error is far smaller than the unpaired combination whenever the two
    decoders agree on most frames (their error sets largely nest).
    ``error_bits[i]`` holds one bit per decoder (bit ``j`` set means
    ``decoder_ids[j]`` got frame ``i`` wrong).
    """

    ebn0_db: float
    frames: int
    decoder_ids: Tuple[str, ...]
    points: Dict[str, FerPoint]
    error_bits: np.ndarray

    def errors_of(self, decoder_id: str) -> np.ndarray:
        """Boolean per-frame error indicators for one decoder."""
        j = self.decoder_ids.index(decoder_id)
        return (self.error_bits >> j) & 1 == 1

    def separation(self, a: str, b: str) -> Tuple[float, float]:
        """Return ``(FER(a) - FER(b), standard error)`` of the paired
        per-frame difference."""
        da = self.errors_of(a).astype(np.int8)
        db = self.errors_of(b).astype(np.int8)
        d = da - db
        gap = d.mean()
        se = float(np.sqrt(max(np.mean(d * d) - gap * gap, 0.0) / self.frames))
        return float(gap), se


# ---------------------------------------------------------------------------
# Per-frame work (runs inside workers)
# ---------------------------------------------------------------------------

class _FrameRunner:
    """Owns one decoder instance and simulates frames by absolute index."""

    def __init__(self, spec: CodeSpec, channel: ChannelConfig, decoder_id=None,
                 t_max=0, plan=None, scaling="divide", matched=None):
        self.spec = spec
        self.channel = channel
        self.decoder_id = decoder_id
        self.t_max = t_max
        self.plan = plan
        self.scaling = scaling
        self.matched = tuple(matched) if matched else ()
        self.dec = ScDecoder(spec)
        self._rank_of_leaf = np.full(spec.block_length, -1, dtype=np.int64)
        self._rank_of_leaf[spec.unfrozen_indices] = np.arange(spec.payload_bits)

    def _frames(self, start: int, stop: int):
        """Yield (message, true_u, channel llrs) for frames start..stop-1.

        Each frame's message and noise come from its own substream
        (keyed by absolute frame index); encoding and demapping are
        vectorized over chunks, which changes nothing bit-level.
        """
        spec, ch = self.spec, self.channel
        N, K = spec.block_length, spec.k
        sigma = ch.sigma
        scale = 2.0 / (sigma * sigma)
        for lo in range(start, stop, _GEN_CHUNK):
            hi = min(lo + _GEN_CHUNK, stop)
            count = hi - lo
            msgs = np.empty((count, K), dtype=np.uint8)
            noise = np.empty((count, N), dtype=np.float64)
            for j in range(count):
                rng = frame_rng(ch.seed, lo + j)
                msgs[j] = rng.integers(0, 2, size=K, dtype=np.uint8)
                noise[j] = rng.standard_normal(N)
            payloads = crc_attach_many(msgs, spec.crc_poly)
            us = np.zeros((count, N), dtype=np.uint8)
            us[:, spec.unfrozen_indices] = payloads
            s = polar_transform_many(us).astype(np.float64)
            s *= -2.0
            s += 1.0
            # llrs = scale * (s + sigma * noise), built in place
            noise *= sigma
            noise += s
            noise *= scale
            for j in range(count):
                yield msgs[j], us[j], noise[j]

    def _decode_one(self, which, plan, msg, u, llrs):
        """Run one decoder on one frame.

        Returns ``(error, undetected, exhausted, iteration_cost,
        attempts)``.
        """
        if which == "oracle":
            _, err_count, _ = oracle_decode(llrs, self.spec, u, decoder=self.dec)
            # A genie pass always returns the true message; what the
            # curve reports is the single-flip correctability bound:
            # frames needing two or more corrections count as errors.
            return err_count >= 2, False, False, 1.0, 1
        if which == "sc":
            out = scflip_decode(llrs, self.spec, 0, decoder=self.dec)
        elif which == "scflip":
            out = scflip_decode(llrs, self.spec, self.t_max, decoder=self.dec)
        elif which == "fis":
            out = fis_decode(llrs, self.spec, plan, self.t_max, decoder=self.dec)
        else:  # eis
            out = eis_decode(llrs, self.spec, plan, self.t_max,
                             decoder=self.dec, scaling=self.scaling)
        err = not np.array_equal(out.info_hat, msg)
        return (err, err and out.crc_pass, err and not out.crc_pass,
                out.iteration_cost, out.attempts)

    def fer_batch(self, start: int, stop: int):
        errors = undetected = exhausted = attempts_sum = 0
        cost_sum = 0.0
        which, plan = self.decoder_id, self.plan
        for msg, u, llrs in self._frames(start, stop):
            err, und, exh, cost, att = self._decode_one(which, plan, msg, u, llrs)
            errors += err
            undetected += und
            exhausted += exh
            cost_sum += cost
            attempts_sum += att
        return stop - start, errors, undetected, exhausted, cost_sum, attempts_sum

    def matched_batch(self, start: int, stop: int):
        """Run every configured decoder on the same frames.

        Returns ``(count, error bitmask array, per-decoder stat rows)``
        where each stat row is ``[errors, undetected, exhausted,
        cost_sum, attempts_sum]``.
        """
        ids = self.matched
        masks = np.zeros(stop - start, dtype=np.uint8)
        stats = [[0, 0, 0, 0.0, 0] for _ in ids]
        for i, (msg, u, llrs) in enumerate(self._frames(start, stop)):
            for j, (which, plan) in enumerate(ids):
                err, und, exh, cost, att = self._decode_one(which, plan, msg, u, llrs)
                row = stats[j]
                row[0] += err
                row[1] += und
                row[2] += exh
                row[3] += cost
                row[4] += att
                if err:
                    masks[i] |= 1 << j
        return stop - start, masks, stats

    def e1_batch(self, start: int, stop: int):
        counts = np.zeros(self.spec.payload_bits, dtype=np.int64)
        multi = zero = 0
        for _, u, llrs in self._frames(start, stop):
            _, err_count, first_err = oracle_decode(llrs, self.spec, u, decoder=self.dec)
            if err_count == 0:
                zero += 1
            elif err_count == 1:
                counts[self._rank_of_leaf[first_err]] += 1
            else:
                multi += 1
        return counts, multi, zero

    def llr_batch(self, start: int, stop: int):
        sums = np.zeros(self.spec.payload_bits, dtype=np.float64)
        for _, _, llrs in self._frames(start, stop):
            res = self.dec.decode(llrs)
            sums += np.abs(res.leaf_llrs[self.spec.unfrozen_indices])
        return sums


# ---------------------------------------------------------------------------
# Worker pool plumbing
# ---------------------------------------------------------------------------

_WORKER_RUNNER: Optional[_FrameRunner] = None


def _init_worker(runner_kwargs):
    global _WORKER_RUNNER
    _WORKER_RUNNER = _FrameRunner(**runner_kwargs)


def _fer_task(bounds):
    return _WORKER_RUNNER.fer_batch(*bounds)


def _e1_task(bounds):
    return _WORKER_RUNNER.e1_batch(*bounds)


def _llr_task(bounds):
    return _WORKER_RUNNER.llr_batch(*bounds)


def _matched_task(bounds):
    return _WORKER_RUNNER.matched_batch(*bounds)


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get("POLARFLIP_WORKERS", 0)) or (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _batched_results(task, runner_kwargs, frames: int, workers: Optional[int]):
    """Yield per-batch results in frame order, inline or via a pool."""
    batches = [
        (lo, min(lo + FRAMES_PER_BATCH, frames))
        for lo in range(0, frames, FRAMES_PER_BATCH)
    ]
    workers = _resolve_workers(workers)
    if workers == 1 or len(batches) == 1:
        runner = _FrameRunner(**runner_kwargs)
        method = {_fer_task: runner.fer_batch, _e1_task: runner.e1_batch,
                  _llr_task: runner.llr_batch, _matched_task: runner.matched_batch}[task]
        for lo, hi in batches:
            yield method(lo, hi)
        return
    ctx = multiprocessing.get_context()
    with ctx.Pool(workers, initializer=_init_worker, initargs=(runner_kwargs,)) as pool:
        yield from pool.imap(task, batches)


# ---------------------------------------------------------------------------
# Campaign entry points
# ---------------------------------------------------------------------------

def run_fer(
    spec: CodeSpec,
    decoder_id: str,
    channel: ChannelConfig,
    frames: int,
    stop_at_errors: Optional[int] = None,
    t_max: int = 10,
    plan: Optional[FlipPlan] = None,
    eis_scaling: str = "divide",
    workers: Optional[int] = None,
) -> FerPoint:
    """Measure FER for one decoder at one operating point.

    A frame error means the K decoded information bits differ from
    those transmitted, except for the genie decoder, whose output is
    always correct by construction: there an error means the genie had
    to correct two or more decisions, i.e. the frame lies beyond what
    any single-flip strategy can repair.  When ``stop_at_errors`` is
    set, the run ends at the first batch boundary where the error count
    reaches it (same stopping point for any worker count).
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if decoder_id not in DECODERS:
        raise ValueError(f"unknown decoder {decoder_id!r}; expected one of {DECODERS}")
    if decoder_id in ("fis", "eis") and plan is None:
        raise ValueError(f"decoder {decoder_id!r} requires a flip plan")
    if stop_at_errors is not None and stop_at_errors < 1:
        raise ValueError("stop_at_errors must be >= 1 when given")
    runner_kwargs = dict(spec=spec, channel=channel, decoder_id=decoder_id,
                         t_max=t_max, plan=plan, scaling=eis_scaling)
    done = errors = undetected = exhausted = attempts_sum = 0
    cost_sum = 0.0
    for n, e, und, exh, cost, att in _batched_results(_fer_task, runner_kwargs, frames, workers):
        done += n
        errors += e
        undetected += und
        exhausted += exh
        cost_sum += cost
        attempts_sum += att
        if stop_at_errors is not None and errors >= stop_at_errors:
            break
    return FerPoint(
        ebn0_db=channel.ebn0_db,
        decoder=decoder_id,
        frames=done,
        frame_errors=errors,
        fer=errors / done,
        avg_iterations=cost_sum / done,
        avg_attempts=attempts_sum / done,
        undetected_error_frames=undetected,
        tmax_exhausted_frames=exhausted,
    )


def run_fer_matched(
    spec: CodeSpec,
    channel: ChannelConfig,
    frames: int,
    decoders: Sequence[str] = DECODERS,
    t_max: int = 10,
    plans: Optional[Mapping[str, FlipPlan]] = None,
    eis_scaling: str = "divide",
    workers: Optional[int] = None,
) -> MatchedFerResult:
    """Measure several decoders on identical noise realizations.

    Every decoder in ``decoders`` processes the same frames (message and
    noise generation happens once per frame), which is what makes the
    paired separation estimates in :class:`MatchedFerResult` valid.
    ``plans`` supplies the flip plan for each plan-driven decoder.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    decoders = tuple(decoders)
    if not 1 <= len(decoders) <= 8:
        raise ValueError("need between 1 and 8 decoders")
    if len(set(decoders)) != len(decoders):
        raise ValueError("decoder ids must be unique")
    plan_map = dict(plans or {})
    matched = []
    for d in decoders:
        if d not in DECODERS:
            raise ValueError(f"unknown decoder {d!r}; expected one of {DECODERS}")
        plan = plan_map.get(d)
        if d in ("fis", "eis") and plan is None:
            raise ValueError(f"decoder {d!r} requires a flip plan")
        matched.append((d, plan))
    runner_kwargs = dict(spec=spec, channel=channel, t_max=t_max,
                         scaling=eis_scaling, matched=tuple(matched))
    mask_parts = []
    agg = [[0, 0, 0, 0.0, 0] for _ in decoders]
    done = 0
    for n, masks, stats in _batched_results(_matched_task, runner_kwargs, frames, workers):
        done += n
        mask_parts.append(masks)
        for j in range(len(decoders)):
            for f in range(5):
                agg[j][f] += stats[j][f]
    points = {}
    for j, d in enumerate(decoders):
        errors, und, exh, cost, att = agg[j]
        points[d] = FerPoint(
            ebn0_db=channel.ebn0_db,
            decoder=d,
            frames=done,
            frame_errors=int(errors),
            fer=errors / done,
            avg_iterations=cost / done,
            avg_attempts=att / done,
            undetected_error_frames=int(und),
            tmax_exhausted_frames=int(exh),
        )
    return MatchedFerResult(
        ebn0_db=channel.ebn0_db,
        frames=done,
        decoder_ids=decoders,
        points=points,
        error_bits=np.concatenate(mask_parts),
    )


def profile_e1(
    spec: CodeSpec,
    channel: ChannelConfig,
    frames: int,
    workers: Optional[int] = None,
) -> ErrorProfile:
    """Tally where genie passes found exactly one wrong decision."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    runner_kwargs = dict(spec=spec, channel=channel)
    counts = np.zeros(spec.payload_bits, dtype=np.int64)
    multi = zero = 0
    for c, m, z in _batched_results(_e1_task, runner_kwargs, frames, workers):
        counts += c
        multi += m
        zero += z
    return ErrorProfile(
        code_id=spec.fingerprint(),
        ebn0_db=channel.ebn0_db,
        frames_simulated=frames,
        e1_counts=counts,
        multi_error_frames=multi,
        zero_error_frames=zero,
        unfrozen_leaf_indices=spec.unfrozen_indices.copy(),
    )


def profile_llr_magnitude(
    spec: CodeSpec,
    channel: ChannelConfig,
    frames: int,
    workers: Optional[int] = None,
) -> np.ndarray:
    """Mean |leaf LLR| at each unfrozen rank over plain SC decodes."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    runner_kwargs = dict(spec=spec, channel=channel)
    sums = np.zeros(spec.payload_bits, dtype=np.float64)
    for s in _batched_results(_llr_task, runner_kwargs, frames, workers):
        sums += s
    return sums / frames


# ---------------------------------------------------------------------------
# CSV emission / loading
# ---------------------------------------------------------------------------

@contextmanager
def _open_out(out):
    if hasattr(out, "write"):
        yield out
    else:
        with open(out, "w", encoding="ascii", newline="") as fh:
            yield fh


def _write_meta(fh, meta) -> None:
    for key, value in (meta or {}).items():
        fh.write(f"# {key}={value}\n")


def write_fer_csv(points: Sequence[FerPoint], out, meta=None) -> None:
    """Rows: ebn0_db,decoder,frames,frame_errors,fer,avg_iterations,
    avg_attempts,undetected,tmax_exhausted."""
    with _open_out(out) as fh:
        _write_meta(fh, meta)
        writer = csv.writer(fh)
        writer.writerow([
            "ebn0_db", "decoder", "frames", "frame_errors", "fer",
            "avg_iterations", "avg_attempts", "undetected", "tmax_exhausted",
        ])
        for p in points:
            writer.writerow([
                repr(float(p.ebn0_db)), p.decoder, p.frames, p.frame_errors,
                repr(float(p.fer)), repr(float(p.avg_iterations)),
                repr(float(p.avg_attempts)), p.undetected_error_frames,
                p.tmax_exhausted_frames,
            ])


def write_profile_csv(profile: ErrorProfile, out, meta=None) -> None:
    """Rows: rank,leaf_index,e1_count,e1_prob_normalized; metadata as
    leading ``#`` lines."""
    merged = {
        "code": profile.code_id,
        "ebn0_db": repr(float(profile.ebn0_db)),
        "frames": profile.frames_simulated,
        "multi_error_frames": profile.multi_error_frames,
        "zero_error_frames": profile.zero_error_frames,
    }
    merged.update(meta or {})
    normalized = profile.normalized()
    with _open_out(out) as fh:
        _write_meta(fh, merged)
        writer = csv.writer(fh)
        writer.writerow(["rank", "leaf_index", "e1_count", "e1_prob_normalized"])
        for rank, leaf in enumerate(profile.unfrozen_leaf_indices):
            writer.writerow([
                rank, int(leaf), int(profile.e1_counts[rank]), repr(float(normalized[rank])),
            ])


def load_profile_csv(path) -> ErrorProfile:
    """Read back a file produced by :func:`write_profile_csv`."""
    meta = {}
    rows = []
    with open(path, encoding="ascii", newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                meta[key.strip()] = value.strip()
            else:
                rows.append(line)
    reader = csv.reader(rows)
    header = next(reader, None)
    if header != ["rank", "leaf_index", "e1_count", "e1_prob_normalized"]:
        raise ValueError(f"unexpected profile header: {header!r}")
    ranks, leaves, counts = [], [], []
    for row in reader:
        ranks.append(int(row[0]))
        leaves.append(int(row[1]))
        counts.append(int(row[2]))
    if ranks != list(range(len(ranks))):
        raise ValueError("profile ranks must run 0..len-1 in order")
    return ErrorProfile(
        code_id=meta.get("code", ""),
        ebn0_db=float(meta["ebn0_db"]),
        frames_simulated=int(meta["frames"]),
        e1_counts=counts,
        multi_error_frames=int(meta.get("multi_error_frames", 0)),
        zero_error_frames=int(meta.get("zero_error_frames", 0)),
        unfrozen_leaf_indices=leaves,
    )


def write_llr_profile_csv(means: np.ndarray, spec: CodeSpec, out, meta=None) -> None:
    """Rows: rank,leaf_index,mean_abs_llr,normalized (max-normalized)."""
    means = np.asarray(means, dtype=np.float64)
    peak = means.max() if means.size and means.max() > 0 else 1.0
    with _open_out(out) as fh:
        _write_meta(fh, meta)
        writer = csv.writer(fh)
        writer.writerow(["rank", "leaf_index", "mean_abs_llr", "normalized"])
        for rank, leaf in enumerate(spec.unfrozen_indices):
            writer.writerow([
                rank, int(leaf), repr(float(means[rank])), repr(float(means[rank] / peak)),
            ])
