"""Dataset ingestion, HTTP API, and command-line tools."""

from .api import create_app
from .bench import BenchRow, run_bench
from .ingest import AuxiliaryConfig, Dataset, DatasetConfig, FeatureHook, \
    ingest, load_config, read_csv
from .sessions import SessionState, SessionStore, apply_drilldown, \
    recommend, recommendation_payload, records_payload, set_complaint, \
    view_payload

__all__ = [
    "AuxiliaryConfig",
    "BenchRow",
    "Dataset",
    "DatasetConfig",
    "FeatureHook",
    "SessionState",
    "SessionStore",
    "apply_drilldown",
    "create_app",
    "ingest",
    "load_config",
    "read_csv",
    "recommend",
    "recommendation_payload",
    "records_payload",
    "run_bench",
    "set_complaint",
    "view_payload",
]
