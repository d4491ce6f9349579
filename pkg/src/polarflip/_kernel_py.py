"""Pure-numpy successive-cancellation tree traversal.

Fallback backend with the exact same bit-level behaviour as the compiled
extension ``polarflip._sc_ext``; selected at import time by
``polarflip.sc_kernel`` when the extension is unavailable or when
``POLARFLIP_BACKEND=python`` is set.

The decoder walks the binary recursion tree depth first.  At an inner
node holding soft values ``a`` (first half) and ``b`` (second half):

* left child input:  ``sign(a) * sign(b) * min(|a|, |b|)`` with
  ``sign(0) = +1``;
* right child input: ``b + a`` where the left hard decision is 0 and
  ``b - a`` where it is 1;
* the node's hard output is ``[left ^ right, right]``.

At a leaf the hard decision is 0 when the soft value is >= 0, except
that frozen leaves always decide 0 and callers may force or correct
individual decisions (see :func:`decode`).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


class _Workspace:
    """Per-decoder scratch state reused across calls."""

    __slots__ = ("n", "u_hat", "leaf_llrs", "frozen", "forced", "truth",
                 "oracle", "err_count", "first_err", "cursor")

    def __init__(self, n: int):
        self.n = n
        self.u_hat = None
        self.leaf_llrs = None
        self.frozen = None
        self.forced = None
        self.truth = None
        self.oracle = False
        self.err_count = 0
        self.first_err = -1
        self.cursor = 0


def make_workspace(n: int) -> _Workspace:
    return _Workspace(n)


def _descend(work: _Workspace, alpha: np.ndarray) -> np.ndarray:
    size = alpha.size
    if size == 1:
        i = work.cursor
        work.cursor = i + 1
        v = float(alpha[0])
        work.leaf_llrs[i] = v
        natural = 0 if v >= 0.0 else 1
        if work.frozen[i]:
            bit = 0
        elif work.oracle:
            bit = int(work.truth[i])
            if bit != natural:
                work.err_count += 1
                if work.first_err < 0:
                    work.first_err = i
        elif work.forced[i] >= 0:
            bit = int(work.forced[i])
        else:
            bit = natural
        work.u_hat[i] = bit
        return np.array([bit], dtype=np.uint8)

    half = size // 2
    a = alpha[:half]
    b = alpha[half:]
    sign = np.where((a < 0) != (b < 0), -1.0, 1.0)
    beta_left = _descend(work, sign * np.minimum(np.abs(a), np.abs(b)))
    beta_right = _descend(work, np.where(beta_left == 1, b - a, b + a))
    return np.concatenate([beta_left ^ beta_right, beta_right])


def decode(work, llrs, frozen, forced, truth, oracle, u_hat_out, leaf_llrs_out):
    """Run one SC traversal; returns ``(err_count, first_err)``.

    Parameters mirror the compiled kernel: ``llrs`` float64[N] channel
    soft values, ``frozen`` uint8[N] mask, ``forced`` int8[N] with -1
    meaning "decide naturally" and 0/1 overriding the decision at that
    leaf, ``truth`` uint8[N] correct leaf bits (used only when
    ``oracle`` is true, in which case every wrong natural decision is
    corrected and counted).  Hard decisions and leaf-level soft values
    are written to ``u_hat_out`` and ``leaf_llrs_out``.  ``first_err``
    is the first oracle-corrected leaf index, or -1.
    """
    work.u_hat = u_hat_out
    work.leaf_llrs = leaf_llrs_out
    work.frozen = frozen
    work.forced = forced
    work.truth = truth
    work.oracle = bool(oracle)
    work.err_count = 0
    work.first_err = -1
    work.cursor = 0
    _descend(work, np.asarray(llrs, dtype=np.float64))
    return work.err_count, work.first_err
