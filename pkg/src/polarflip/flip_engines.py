"""CRC-gated multi-attempt decoders built on the SC kernel.

Four engines share one control flow: decode once; if the CRC passes,
stop; otherwise re-decode up to ``t_max`` times, each attempt inverting
a single first-pass decision, in an order that is the only thing
distinguishing the engines:

* :func:`scflip_decode` — ascending first-pass |leaf LLR| over all
  non-frozen leaves (runtime sorting);
* :func:`fis_decode` — a fixed order computed offline from an error
  profile (no runtime sorting);
* :func:`eis_decode` — runtime sorting restricted to a profiled
  candidate set, with magnitudes scaled by per-index error weights;
* :func:`oracle_decode` — a genie that corrects every wrong decision in
  a single pass using the true input vector, reporting how many
  corrections were needed (the lower bound for single-flip decoding).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .code_spec import CodeSpec, crc_check
from .sc_kernel import ScDecoder, ScResult

EIS_SCALING_MODES = ("divide", "multiply")


def iteration_cost(attempt_flip_indices: Sequence[int], block_length: int) -> float:
    """Fractional decoding effort: 1 for the first pass plus, per flip
    attempt at leaf ``i``, the remaining-tree share ``(N - i) / N``
    (resume-from-flip accounting, independent of how the re-decode is
    implemented)."""
    cost = 1.0
    for i in attempt_flip_indices:
        if not 0 <= i < block_length:
            raise ValueError(f"flip index {i} outside [0, {block_length})")
        cost += (block_length - i) / block_length
    return cost


@dataclass
class FlipPlan:
    """Offline flip schedule.

    ``fixed`` mode: ``ordered_indices`` is the exact flip order.
    ``candidate_set`` mode: ``ordered_indices`` restricts which leaves
    may be flipped and ``weights`` (same order, all positive) scale the
    runtime metric.
    """

    ordered_indices: np.ndarray
    mode: str
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in ("fixed", "candidate_set"):
            raise ValueError(f"mode must be 'fixed' or 'candidate_set', got {self.mode!r}")
        self.ordered_indices = np.asarray(self.ordered_indices, dtype=np.int64)
        if self.ordered_indices.ndim != 1:
            raise ValueError("ordered_indices must be one-dimensional")
        if np.unique(self.ordered_indices).size != self.ordered_indices.size:
            raise ValueError("plan indices must be unique")
        if (self.ordered_indices < 0).any():
            raise ValueError("plan indices must be non-negative")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != self.ordered_indices.shape:
                raise ValueError("weights must align one-to-one with ordered_indices")
            if not np.isfinite(self.weights).all() or (self.weights < 0).any():
                raise ValueError("weights must be finite and non-negative")
        if self.mode == "candidate_set":
            if self.weights is None:
                raise ValueError("candidate_set plans require weights")
            if (self.weights == 0).any():
                raise ValueError(
                    "zero-weight candidates are not allowed; drop them from the set"
                )

    def __len__(self) -> int:
        return self.ordered_indices.size


@dataclass
class DecodeOutcome:
    """Result of one CRC-gated decode.

    ``attempts`` counts SC applications including the first pass, so it
    is at most ``t_max + 1``.  ``flipped_index`` is set only when a flip
    attempt passed the CRC (first-pass success and exhaustion leave it
    None).  On exhaustion ``info_hat`` reverts to the first-pass
    estimate.
    """

    info_hat: np.ndarray
    crc_pass: bool
    attempts: int
    iteration_cost: float
    flipped_index: Optional[int] = None


def _validated_llrs(channel_llrs, spec: CodeSpec) -> np.ndarray:
    llrs = np.asarray(channel_llrs, dtype=np.float64)
    if llrs.shape != (spec.block_length,):
        raise ValueError(f"channel_llrs must have length {spec.block_length}")
    if not np.isfinite(llrs).all():
        raise ValueError("channel LLRs must all be finite")
    return llrs


def _order_by_metric(leaf_llrs, indices, weights=None, scaling="divide") -> np.ndarray:
    """Candidate leaves sorted by ascending flip metric, ties to the lower index."""
    idx = np.asarray(indices, dtype=np.int64)
    mags = np.abs(leaf_llrs[idx])
    if weights is None:
        metric = mags
    elif scaling == "divide":
        metric = mags / weights
    elif scaling == "multiply":
        metric = mags * (1.0 - weights)
    else:
        raise ValueError(f"scaling must be one of {EIS_SCALING_MODES}, got {scaling!r}")
    return idx[np.lexsort((idx, metric))]


def _gated_decode(llrs, spec, t_max, pick_order, decoder=None) -> DecodeOutcome:
    """Shared control flow; ``pick_order(first)`` yields the flip order."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    dec = decoder if decoder is not None else ScDecoder(spec)
    first = dec.decode(llrs)
    k = spec.k
    if crc_check(first.info_hat, spec.crc_poly):
        return DecodeOutcome(
            info_hat=first.info_hat[:k], crc_pass=True, attempts=1, iteration_cost=1.0
        )
    tried: list[int] = []
    for leaf in pick_order(first)[:t_max]:
        leaf = int(leaf)
        tried.append(leaf)
        retry = dec.decode(llrs, forced={leaf: int(first.u_hat[leaf]) ^ 1})
        if crc_check(retry.info_hat, spec.crc_poly):
            return DecodeOutcome(
                info_hat=retry.info_hat[:k],
                crc_pass=True,
                attempts=1 + len(tried),
                iteration_cost=iteration_cost(tried, spec.block_length),
                flipped_index=leaf,
            )
    return DecodeOutcome(
        info_hat=first.info_hat[:k],
        crc_pass=False,
        attempts=1 + len(tried),
        iteration_cost=iteration_cost(tried, spec.block_length),
    )


def scflip_decode(channel_llrs, spec: CodeSpec, t_max: int, decoder: Optional[ScDecoder] = None) -> DecodeOutcome:
    """Flip the least-reliable first-pass decisions, one at a time."""
    llrs = _validated_llrs(channel_llrs, spec)

    def pick_order(first: ScResult) -> np.ndarray:
        return _order_by_metric(first.leaf_llrs, spec.unfrozen_indices)

    return _gated_decode(llrs, spec, t_max, pick_order, decoder)


def fis_decode(channel_llrs, spec: CodeSpec, plan: FlipPlan, t_max: int, decoder: Optional[ScDecoder] = None) -> DecodeOutcome:
    """Flip in the plan's fixed order; no runtime sorting."""
    llrs = _validated_llrs(channel_llrs, spec)
    if plan.mode != "fixed":
        raise ValueError(f"fis_decode requires a fixed plan, got mode {plan.mode!r}")
    _check_plan_indices(plan, spec)
    order = plan.ordered_indices
    return _gated_decode(llrs, spec, t_max, lambda first: order, decoder)


def eis_decode(
    channel_llrs,
    spec: CodeSpec,
    plan: FlipPlan,
    t_max: int,
    decoder: Optional[ScDecoder] = None,
    scaling: str = "divide",
) -> DecodeOutcome:
    """Flip within the candidate set, ordered by weight-scaled |leaf LLR|.

    ``scaling="divide"`` uses ``|llr| / w``; ``scaling="multiply"`` uses
    ``|llr| * (1 - w)``.  Both rank error-prone leaves earlier; the
    division form is the default.
    """
    llrs = _validated_llrs(channel_llrs, spec)
    if plan.mode != "candidate_set":
        raise ValueError(f"eis_decode requires a candidate_set plan, got mode {plan.mode!r}")
    if scaling not in EIS_SCALING_MODES:
        raise ValueError(f"scaling must be one of {EIS_SCALING_MODES}, got {scaling!r}")
    _check_plan_indices(plan, spec)

    def pick_order(first: ScResult) -> np.ndarray:
        return _order_by_metric(
            first.leaf_llrs, plan.ordered_indices, plan.weights, scaling
        )

    return _gated_decode(llrs, spec, t_max, pick_order, decoder)


def oracle_decode(channel_llrs, spec: CodeSpec, true_u, decoder: Optional[ScDecoder] = None):
    """Single genie-corrected pass.

    Returns ``(outcome, error_count, first_error_index)`` where
    ``error_count`` is the number of decisions the genie had to correct
    and ``first_error_index`` the leaf of the earliest correction (None
    when the frame was clean).  The outcome's ``info_hat`` always equals
    the true message.
    """
    llrs = _validated_llrs(channel_llrs, spec)
    dec = decoder if decoder is not None else ScDecoder(spec)
    res = dec.decode(llrs, correct_with=true_u)
    outcome = DecodeOutcome(
        info_hat=res.info_hat[: spec.k],
        crc_pass=crc_check(res.info_hat, spec.crc_poly),
        attempts=1,
        iteration_cost=1.0,
    )
    return outcome, res.corrected_count, res.first_corrected


def _check_plan_indices(plan: FlipPlan, spec: CodeSpec) -> None:
    idx = plan.ordered_indices
    if idx.size and idx.max() >= spec.block_length:
        raise ValueError("plan contains indices beyond the block length")
    if spec.frozen_mask[idx].any():
        raise ValueError("plan contains frozen indices")


# ---------------------------------------------------------------------------
# Plan construction from an error profile
# ---------------------------------------------------------------------------

def build_fis_plan(profile, t_max: int) -> FlipPlan:
    """Fixed plan: the ``t_max`` leaves with the highest single-error
    counts, descending, ties to the lower index."""
    counts = np.asarray(profile.e1_counts, dtype=np.int64)
    leaves = np.asarray(profile.unfrozen_leaf_indices, dtype=np.int64)
    if counts.size == 0 or counts.size != leaves.size:
        raise ValueError("profile must map every unfrozen rank to a count")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    order = np.lexsort((np.arange(counts.size), -counts))
    return FlipPlan(ordered_indices=leaves[order[:t_max]], mode="fixed")


def build_eis_plan(profile, set_size: int) -> FlipPlan:
    """Candidate-set plan: the ``set_size`` leaves with the highest
    single-error counts (zero-count leaves excluded), weighted by their
    share of all single-error events."""
    counts = np.asarray(profile.e1_counts, dtype=np.int64)
    leaves = np.asarray(profile.unfrozen_leaf_indices, dtype=np.int64)
    if counts.size == 0 or counts.size != leaves.size:
        raise ValueError("profile must map every unfrozen rank to a count")
    if set_size < 1:
        raise ValueError("set_size must be >= 1")
    total = int(counts.sum())
    if total == 0:
        raise ValueError("profile contains no single-error events")
    order = np.lexsort((np.arange(counts.size), -counts))
    order = order[counts[order] > 0][:set_size]
    return FlipPlan(
        ordered_indices=leaves[order],
        mode="candidate_set",
        weights=counts[order] / total,
    )


# ---------------------------------------------------------------------------
# Plan files: CSV "rank,leaf_index,weight", weight empty in fixed mode
# ---------------------------------------------------------------------------

def save_plan(out, plan: FlipPlan, meta=None) -> None:
    """``out`` may be a path or a writable file object; ``meta`` entries
    are emitted as leading ``# key=value`` comment lines."""

    def _emit(fh):
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(["rank", "leaf_index", "weight"])
        for rank, leaf in enumerate(plan.ordered_indices):
            weight = "" if plan.weights is None else repr(float(plan.weights[rank]))
            writer.writerow([rank, int(leaf), weight])

    if hasattr(out, "write"):
        _emit(out)
    else:
        with open(out, "w", encoding="ascii", newline="") as fh:
            _emit(fh)


def load_plan(path) -> FlipPlan:
    with open(path, encoding="ascii", newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header != ["rank", "leaf_index", "weight"]:
            raise ValueError(f"unexpected plan header: {header!r}")
        rows = [row for row in reader if row]
    if [int(r[0]) for r in rows] != list(range(len(rows))):
        raise ValueError("plan ranks must run 0..len-1 in order")
    indices = [int(r[1]) for r in rows]
    weight_fields = [r[2] for r in rows]
    if all(w == "" for w in weight_fields):
        return FlipPlan(ordered_indices=indices, mode="fixed")
    if any(w == "" for w in weight_fields):
        raise ValueError("plan mixes weighted and unweighted rows")
    return FlipPlan(
        ordered_indices=indices,
        mode="candidate_set",
        weights=[float(w) for w in weight_fields],
    )
