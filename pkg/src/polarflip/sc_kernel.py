"""Successive-cancellation decoding over the binary recursion tree.

The tree primitives (:func:`f_op`, :func:`g_op`, :func:`combine`) are
exposed for reference and testing; full decodes run through
:class:`ScDecoder`, which delegates the depth-first traversal to one of
two interchangeable backends:

* ``polarflip._sc_ext`` — compiled extension (built via Cython);
* ``polarflip._kernel_py`` — pure-numpy fallback.

The compiled backend is preferred when importable.  Set the environment
variable ``POLARFLIP_BACKEND`` to ``cython`` or ``python`` before import
to force one (``cython`` raises if the extension is missing).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .code_spec import CodeSpec


def _load_backend():
    choice = os.environ.get("POLARFLIP_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "", "cython", "python"):
        raise ValueError(
            f"POLARFLIP_BACKEND must be 'cython' or 'python', got {choice!r}"
        )
    if choice in ("auto", "", "cython"):
        try:
            from . import _sc_ext

            return _sc_ext
        except ImportError:
            if choice == "cython":
                raise ImportError(
                    "POLARFLIP_BACKEND=cython but the compiled kernel is not built"
                ) from None
    from . import _kernel_py

    return _kernel_py


_backend = _load_backend()
BACKEND_NAME: str = _backend.BACKEND_NAME


def backend_name() -> str:
    """Name of the traversal backend selected at import: cython or python."""
    return BACKEND_NAME


# ---------------------------------------------------------------------------
# Tree primitives
# ---------------------------------------------------------------------------

def f_op(a, b):
    """Left-child soft value: sign product times min magnitude, sgn(0)=+1."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sign = np.where((a < 0) != (b < 0), -1.0, 1.0)
    out = sign * np.minimum(np.abs(a), np.abs(b))
    return float(out) if out.ndim == 0 else out

def g_op(a, b, beta_left):
    """Right-child soft value: ``b + a`` when the left decision is 0, else ``b - a``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.where(np.asarray(beta_left) == 1, b - a, b + a)
    return float(out) if out.ndim == 0 else out

def combine(beta_left, beta_right) -> np.ndarray:
    """Parent hard values: first half XOR, second half copy of the right."""
    bl = np.asarray(beta_left, dtype=np.uint8)
    br = np.asarray(beta_right, dtype=np.uint8)
    if bl.shape != br.shape:
        raise ValueError(f"length mismatch: {bl.shape} vs {br.shape}")
    return np.concatenate([bl ^ br, br])


# ---------------------------------------------------------------------------
# Full decode
# ---------------------------------------------------------------------------

@dataclass
class ScResult:
    """One traversal's outputs.

    ``u_hat`` holds all N leaf decisions (0 at frozen positions),
    ``leaf_llrs`` the decision-time soft value at every leaf, and
    ``info_hat`` the K+C bits extracted at the non-frozen positions.
    When decoding ran in correction mode, ``corrected_count`` /
    ``first_corrected`` report how many natural decisions disagreed
    with the supplied truth and where the first disagreement sat.
    """

    u_hat: np.ndarray
    leaf_llrs: np.ndarray
    info_hat: np.ndarray
    corrected_count: int = 0
    first_corrected: Optional[int] = None


class ScDecoder:
    """Reusable decoder bound to one :class:`CodeSpec`.

    Holds the traversal workspace, so repeated decodes allocate almost
    nothing.  Instances are not safe for concurrent use; create one per
    thread or process.
    """

    def __init__(self, spec: CodeSpec):
        self.spec = spec
        N = spec.block_length
        self._work = _backend.make_workspace(spec.n)
        self._frozen = np.ascontiguousarray(spec.frozen_mask, dtype=np.uint8)
        self._forced = np.full(N, -1, dtype=np.int8)
        self._truth = np.zeros(N, dtype=np.uint8)
        self._u_hat = np.empty(N, dtype=np.uint8)
        self._leaf_llrs = np.empty(N, dtype=np.float64)
        self._frozen_set = frozenset(int(i) for i in np.flatnonzero(spec.frozen_mask))

    def decode(
        self,
        channel_llrs,
        forced: Optional[Mapping[int, int]] = None,
        correct_with=None,
    ) -> ScResult:
        """Run one traversal.

        Parameters
        ----------
        channel_llrs : array_like of float, length N
            Root soft values; positive favors bit 0.
        forced : mapping of leaf index -> bit, optional
            Decisions to override at non-frozen leaves (the flip
            mechanism).  Keys must be unfrozen indices.
        correct_with : array_like of bits, length N, optional
            True leaf values.  Every natural decision that disagrees is
            corrected and counted (the genie mode).  Mutually exclusive
            with ``forced``.
        """
        spec = self.spec
        N = spec.block_length
        llrs = np.ascontiguousarray(channel_llrs, dtype=np.float64)
        if llrs.shape != (N,):
            raise ValueError(f"channel_llrs must have length {N}, got {llrs.shape}")

        oracle = False
        truth = self._truth
        if correct_with is not None:
            if forced:
                raise ValueError("forced and correct_with are mutually exclusive")
            truth = np.ascontiguousarray(correct_with, dtype=np.uint8)
            if truth.shape != (N,):
                raise ValueError(f"correct_with must have length {N}")
            if np.count_nonzero(truth & self._frozen):
                raise ValueError("correct_with must be 0 at every frozen index")
            oracle = True

        keys = ()
        if forced:
            keys = tuple(forced.items())
            for idx, bit in keys:
                if idx in self._frozen_set or not 0 <= idx < N:
                    raise ValueError(f"forced index {idx} is not an unfrozen leaf")
                if bit not in (0, 1):
                    raise ValueError(f"forced value for leaf {idx} must be 0 or 1")
        try:
            for idx, bit in keys:
                self._forced[idx] = bit
            err_count, first_err = _backend.decode(
                self._work, llrs, self._frozen, self._forced, truth,
                oracle, self._u_hat, self._leaf_llrs,
            )
        finally:
            for idx, _ in keys:
                self._forced[idx] = -1

        u_hat = self._u_hat.copy()
        return ScResult(
            u_hat=u_hat,
            leaf_llrs=self._leaf_llrs.copy(),
            info_hat=u_hat[spec.unfrozen_indices],
            corrected_count=int(err_count),
            first_corrected=None if first_err < 0 else int(first_err),
        )


def sc_decode(channel_llrs, spec: CodeSpec, forced: Optional[Mapping[int, int]] = None) -> ScResult:
    """One-shot decode; see :meth:`ScDecoder.decode`."""
    llrs = np.asarray(channel_llrs, dtype=np.float64)
    if not np.isfinite(llrs).all():
        raise ValueError("channel LLRs must all be finite")
    return ScDecoder(spec).decode(llrs, forced=forced)
