"""polarflip: polar-code SC / SC-Flip decoding toolkit.

Code construction (density evolution under a Gaussian approximation),
CRC-aided successive-cancellation flip decoding with fixed or enhanced
flip-index selection, a genie reference decoder, seeded Monte Carlo
campaigns, and a hardware logic-cost model.
"""

from .channel import (
    LLR_SAT,
    ChannelConfig,
    channel_llrs,
    demap_llr,
    ebn0_to_sigma,
    frame_rng,
    modulate,
    saturated_llrs,
    transmit,
)
from .code_spec import (
    CRC8_DEFAULT,
    CodeSpec,
    construct_frozen_set,
    crc_attach,
    crc_check,
    default_crc_poly,
    encode,
    load_frozen_mask,
    make_code,
    polar_transform,
    save_frozen_mask,
)
from .campaign import (
    DECODERS,
    ErrorProfile,
    FerPoint,
    MatchedFerResult,
    iteration_cost,
    load_profile_csv,
    profile_e1,
    profile_llr_magnitude,
    run_fer,
    run_fer_matched,
    write_fer_csv,
    write_llr_profile_csv,
    write_profile_csv,
)
from .cost_model import DEFAULT_WEIGHTS, CostBreakdown, CostModel, estimate_cost
from .flip_engines import (
    DecodeOutcome,
    FlipPlan,
    build_eis_plan,
    build_fis_plan,
    eis_decode,
    fis_decode,
    load_plan,
    oracle_decode,
    save_plan,
    scflip_decode,
)
from .sc_kernel import BACKEND_NAME, ScDecoder, ScResult, backend_name, combine, f_op, g_op, sc_decode

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "CRC8_DEFAULT",
    "ChannelConfig",
    "CodeSpec",
    "CostBreakdown",
    "CostModel",
    "DECODERS",
    "DEFAULT_WEIGHTS",
    "DecodeOutcome",
    "ErrorProfile",
    "FerPoint",
    "FlipPlan",
    "LLR_SAT",
    "MatchedFerResult",
    "ScDecoder",
    "ScResult",
    "backend_name",
    "build_eis_plan",
    "build_fis_plan",
    "channel_llrs",
    "combine",
    "construct_frozen_set",
    "crc_attach",
    "crc_check",
    "default_crc_poly",
    "demap_llr",
    "ebn0_to_sigma",
    "eis_decode",
    "encode",
    "estimate_cost",
    "f_op",
    "fis_decode",
    "frame_rng",
    "g_op",
    "iteration_cost",
    "load_frozen_mask",
    "load_plan",
    "load_profile_csv",
    "make_code",
    "modulate",
    "oracle_decode",
    "polar_transform",
    "profile_e1",
    "profile_llr_magnitude",
    "run_fer",
    "run_fer_matched",
    "save_frozen_mask",
    "save_plan",
    "saturated_llrs",
    "sc_decode",
    "scflip_decode",
    "transmit",
    "write_fer_csv",
    "write_llr_profile_csv",
    "write_profile_csv",
]
