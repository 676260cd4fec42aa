"""Rank-k updates of inverse moment matrices, their costs, and Christoffel-function scoring."""

from .basis import MonomialBasis, basis_size, enumerate_basis, vectorize, vectorize_batch
from .christoffel import Detector, DetectorConfig, LearnPolicy, ScoreReport, inverse_cf, score, stream_step
from .costmodel import UpdateMethod
from .moment import (
    MomentState,
    apply_update,
    denormalize,
    fit,
    fit_design,
    load_snapshot,
    renormalize,
    save_snapshot,
    update_with_points,
)
from .update import FlopLedger, SelectionRule, di_update, ism_update, select_method, spd_invert, wmi_update

__version__ = "0.1.0"
