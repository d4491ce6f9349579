"""Logic-cost estimate for a semi-parallel flip-decoder datapath.

The datapath comprises ``Pe`` processing elements operating on ``Q``-bit
soft values; each element needs an F unit (min-magnitude compare,
sign logic, output select), a G unit (add/subtract with select), and a
C unit (partial-sum select).  Runtime-sorted flip decoding additionally
needs a sorter holding the ``T_max`` smallest magnitudes in registers
with compare-and-insert logic; fixed-order flip decoding drops the
sorter entirely, which is the hardware argument for it.

Costs are in weighted gate-equivalents: each block's primitive counts
are multiplied by per-primitive unit costs (:data:`DEFAULT_WEIGHTS`)
and summed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping

DEFAULT_WEIGHTS: Dict[str, int] = {
    "xor": 1,
    "mux": 3,
    "sum": 5,
    "comparator": 5,
    "register": 4,
}


@dataclass(frozen=True)
class CostModel:
    """Datapath parameters: processing elements, quantization bits,
    sorter depth, and per-primitive unit costs."""

    pe: int
    q: int
    t_max: int
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def __post_init__(self):
        if self.pe < 1 or self.q < 1:
            raise ValueError("pe and q must be >= 1")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        missing = set(DEFAULT_WEIGHTS) - set(self.weights)
        if missing:
            raise ValueError(f"weights missing entries: {sorted(missing)}")
        if any(self.weights[k] <= 0 for k in DEFAULT_WEIGHTS):
            raise ValueError("all weights must be positive")


@dataclass(frozen=True)
class CostBreakdown:
    """Weighted cost per block plus decoder totals.

    ``scflip_total`` includes the sorter; ``fis_total`` = F + G + C is
    the fixed-order decoder, whose entire saving is the sorter:
    ``scflip_total - fis_total == sorter_cost``.
    """

    f_cost: float
    g_cost: float
    c_cost: float
    sorter_cost: float
    scflip_total: float
    fis_total: float
    sorter_fraction: float


def estimate_cost(model: CostModel) -> CostBreakdown:
    """Evaluate the block cost formulas for one datapath configuration."""
    w = model.weights
    pe, q, t_max = model.pe, model.q, model.t_max
    f_cost = pe * q * w["comparator"] + 2 * pe * w["xor"] + pe * q * w["mux"]
    g_cost = pe * q * w["sum"] + pe * w["mux"]
    c_cost = pe * w["mux"]
    sorter = t_max * q * w["register"] + t_max * q * w["comparator"] + 2 * t_max * q * w["mux"]
    scflip_total = f_cost + g_cost + c_cost + sorter
    return CostBreakdown(
        f_cost=float(f_cost),
        g_cost=float(g_cost),
        c_cost=float(c_cost),
        sorter_cost=float(sorter),
        scflip_total=float(scflip_total),
        fis_total=float(f_cost + g_cost + c_cost),
        sorter_fraction=float(sorter / scflip_total),
    )
