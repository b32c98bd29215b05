from .milestones import (
    MILESTONES,
    ClaimReport,
    MilestoneReport,
    MilestoneTable,
    attack_table_check,
    monitor_claim_suite,
)
from .monitors import (
    Violation,
    check_quadruple_bound,
    monitor_elapsed,
    monitor_gap,
    monitor_no_catchup,
    monitor_posc_step,
    posc_of,
)
from .quadruple import (
    PhiReport,
    PotentialState,
    RoundDelta,
    check_phi_claim,
    check_psi_recurrence,
    movement,
    phi_bijection,
    phi_inverse,
    potential_state,
    psi_series,
    round_delta,
)

__all__ = [
    "MILESTONES",
    "ClaimReport",
    "MilestoneReport",
    "MilestoneTable",
    "PhiReport",
    "PotentialState",
    "RoundDelta",
    "Violation",
    "attack_table_check",
    "check_phi_claim",
    "check_psi_recurrence",
    "check_quadruple_bound",
    "monitor_claim_suite",
    "monitor_elapsed",
    "monitor_gap",
    "monitor_no_catchup",
    "monitor_posc_step",
    "movement",
    "phi_bijection",
    "phi_inverse",
    "posc_of",
    "potential_state",
    "psi_series",
    "round_delta",
]
