from .evaluate import (
    INFRA_FAILURE,
    MATCH,
    MISMATCH,
    PARSE_FAILURE,
    CaseResult,
    CorrectnessReport,
    annotate_plausibility,
    evaluate,
)
from .io import export_sft, export_tests, import_tests
from .model import Category, Dataset, TestCase, TestPoint, TestSuite
from .record import (
    build_suite_from_recording,
    dataset_from_suites,
    replay_suite,
    slugify,
    suite_oracle,
)

__all__ = [
    "INFRA_FAILURE",
    "MATCH",
    "MISMATCH",
    "PARSE_FAILURE",
    "CaseResult",
    "CorrectnessReport",
    "annotate_plausibility",
    "evaluate",
    "export_sft",
    "export_tests",
    "import_tests",
    "Category",
    "Dataset",
    "TestCase",
    "TestPoint",
    "TestSuite",
    "build_suite_from_recording",
    "dataset_from_suites",
    "replay_suite",
    "slugify",
    "suite_oracle",
]
