"""Configuration, orchestration and reporting."""

from ..records import CSV_COLUMNS, MetricsRecord, read_metrics_csv
from .config import RunConfig, from_dict, load_config, serialize_config
from .experiment import run_experiment, run_scheme
from .report import compare_report, compare_rows

__all__ = [
    "CSV_COLUMNS",
    "MetricsRecord",
    "RunConfig",
    "compare_report",
    "compare_rows",
    "from_dict",
    "load_config",
    "read_metrics_csv",
    "run_experiment",
    "run_scheme",
    "serialize_config",
]
