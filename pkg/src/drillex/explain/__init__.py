"""Complaint-driven repair ranking over hierarchical group-by views."""

from .harness import CONDITIONS, HarnessResult, correlated_auxiliary, \
    synth_harness
from .ranking import FeatureBuilder, HierarchyRanking, Recommendation, \
    RepairCandidate, rank
from .stats import Complaint, StatBundle, bundle_from_moments, combine, \
    complaint_score, from_values, group_bundles, propagate_repair

__all__ = [
    "CONDITIONS",
    "Complaint",
    "FeatureBuilder",
    "HarnessResult",
    "HierarchyRanking",
    "Recommendation",
    "RepairCandidate",
    "StatBundle",
    "bundle_from_moments",
    "combine",
    "complaint_score",
    "correlated_auxiliary",
    "from_values",
    "group_bundles",
    "propagate_repair",
    "rank",
    "synth_harness",
]
