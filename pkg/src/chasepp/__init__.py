"""Online on/off scheduling of combined heat-and-power generators with lookahead."""
from .model import (
    AssumptionViolated,
    DispatchSlot,
    InputSlot,
    LengthMismatch,
    Schedule,
    SystemParams,
    Trace,
    dispatch_given_status,
    external_cost,
    slot_cost,
    total_cost,
    validate_params,
)
from .online import NoiseModel, PredictionWindow, run_online
from .ratio import alpha, cr_chase, cr_chaselk, cr_chasepp, cr_chasepp_plus, optimal_threshold
from .segments import brute_force_optimal, capped_series, offline_optimal

__version__ = "0.1.0"
