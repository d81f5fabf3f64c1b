"""Cosine-type k-nearest-neighbor collaborative recommendation lab."""

from collabknn.core import (
    DatabaseSnapshot,
    InvalidRatingError,
    QueryUser,
    RatingScale,
    apply_mask,
    mask_set,
    rating_vector,
)
from collabknn.estimator import NeighborWeights, estimate, select_k_most_similar
from collabknn.harness import Experiment, KSchedule, convergence_study, l1_error, rate_fit
from collabknn.model import MultiplicativeModel, f_oracle_check
from collabknn.reveal import ResponderProcess, RevealProcess, Simulator, alpha_closed_form
from collabknn.similarity import IDENTITY, SQRT, bar_similarity, penalty, similarity

__version__ = "0.1.0"
