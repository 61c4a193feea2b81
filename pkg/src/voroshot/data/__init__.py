from .bank import SPLITS, FeatureBank, View
from .io import load_bank, read_manifest, save_bank, write_manifest
from .sampling import EpisodeSpec, SplitMix64, iter_episodes, sample_episode, sample_indices
from .synthetic import SyntheticSpec, gen_synthetic

__all__ = [
    "SPLITS", "FeatureBank", "View", "load_bank", "save_bank", "read_manifest",
    "write_manifest", "EpisodeSpec", "SplitMix64", "sample_episode", "sample_indices",
    "iter_episodes", "SyntheticSpec", "gen_synthetic",
]
