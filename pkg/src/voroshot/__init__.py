"""Influence-based Voronoi partitions (VD, PD, CIVD, CCVD) as few-shot classifier heads."""
from .classifiers import (
    LinearModel, TrainOptions, classify_civd_integrated, classify_linear, lr_centers,
    prototypes, train_power_lr, train_voronoi_lr,
)
from .data import EpisodeSpec, FeatureBank, SyntheticSpec, gen_synthetic, load_bank, save_bank
from .episode import Episode
from .geometry import (
    assign_ccvd, assign_civd, assign_pd, assign_vd, influence, influence_ccvd, sq_dist,
)
from .transforms import TransformParams

__version__ = "0.1.0"

__all__ = [
    "LinearModel", "TrainOptions", "classify_civd_integrated", "classify_linear", "lr_centers",
    "prototypes", "train_power_lr", "train_voronoi_lr", "EpisodeSpec", "FeatureBank",
    "SyntheticSpec", "gen_synthetic", "load_bank", "save_bank", "Episode", "assign_ccvd",
    "assign_civd", "assign_pd", "assign_vd", "influence", "influence_ccvd", "sq_dist",
    "TransformParams", "__version__",
]
