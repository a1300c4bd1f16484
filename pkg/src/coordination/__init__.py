"""Online coordination: AP selection, beam estimation, bad-beam elimination, BRP"""

from src.coordination.beams import (
    BeamPlan,
    BrpResult,
    OnlineFingerprint,
    bad_beam_candidates,
    brp_refine,
    eliminate_bad_beams,
    estimate_best_beams,
    refine_bad_beams_on_bid,
    select_ap,
)
from src.coordination.controller import ApController

__all__ = [
    'ApController',
    'BeamPlan',
    'BrpResult',
    'OnlineFingerprint',
    'bad_beam_candidates',
    'brp_refine',
    'eliminate_bad_beams',
    'estimate_best_beams',
    'refine_bad_beams_on_bid',
    'select_ap',
]
