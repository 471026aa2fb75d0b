"""drillex: complaint-driven drill-down explanations over hierarchical data.

The library factorises hierarchical group-by views into per-hierarchy
chains, runs linear-algebra and mixed-effects training directly on the
factorised form, and ranks which drill-down subgroup, once repaired to its
modeled statistics, best answers a user's complaint about an aggregate.
"""

from . import aggregates, errors, explain, factorizer, features, fmatrix, \
    mlm, schema, service
from .errors import DrillexError
from .explain import Complaint, Recommendation, StatBundle, rank, \
    synth_harness
from .schema import DatasetSchema, Hierarchy, ViewSpec
from .service import Dataset, create_app, ingest

__version__ = "1.0.0"

__all__ = [
    "Complaint",
    "Dataset",
    "DatasetSchema",
    "DrillexError",
    "Hierarchy",
    "Recommendation",
    "StatBundle",
    "ViewSpec",
    "aggregates",
    "create_app",
    "errors",
    "explain",
    "factorizer",
    "features",
    "fmatrix",
    "ingest",
    "mlm",
    "rank",
    "schema",
    "service",
    "synth_harness",
]
