"""Clustering of posterior coefficient draws and final configurations."""
from .configuration import (NA, ClusterConfiguration, CoefficientSample, TwoStageResult, align_labels,
                            cluster_size_table, coefficient_samples, configuration, dahl_configuration,
                            dahl_distances, gmm_cluster_draws, mean_membership, membership_matrix,
                            mode_configuration, rand_index, stage1_dpmm, two_stage_dpmm)
from .dpmm import ClusterDraws, DpmmPrior, dpmm_fit, stick_breaking_weights
from .gmm import GmmModel, GmmSelection, gmm_em_fit, gmm_select_k

__all__ = [
    "NA", "ClusterConfiguration", "ClusterDraws", "CoefficientSample", "DpmmPrior", "GmmModel",
    "GmmSelection", "TwoStageResult", "align_labels", "cluster_size_table", "coefficient_samples",
    "configuration", "dahl_configuration", "dahl_distances", "dpmm_fit", "gmm_cluster_draws",
    "gmm_em_fit", "gmm_select_k", "mean_membership", "membership_matrix", "mode_configuration",
    "rand_index", "stage1_dpmm", "stick_breaking_weights", "two_stage_dpmm",
]
