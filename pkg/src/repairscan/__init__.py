"""Toolkit for studying identifier fix ingredients in bug corpora: corpus
preprocessing, lexical ingredient extraction, scanner dataset generation and
evaluation, repair-prompt assembly and exact-match repair evaluation."""

from .corpus import (
    BugCorpus,
    BugSample,
    ContextWindow,
    CorpusSplit,
    dedup,
    ingest,
    local_context,
    normalize_bug,
    normalize_multiline,
    split,
)
from .errors import DataError, EndpointError
from .evaluation import (
    BreakdownReport,
    RepairOutcome,
    cover_report,
    exact_match,
    repair_summary,
    success_by_distance,
    success_by_frequency,
    success_by_ingredient_count,
)
from .ingredients import (
    FrequencyClass,
    IngredientDistance,
    IngredientSets,
    classify_uncovered,
    cover,
    frequency_table,
    ingredient_distance,
    ingredient_sets,
)
from .lexing import IdentifierOccurrence, enclosing_callable, identifiers_in_lines, lex_identifiers
from .repairprep import (
    LearningTarget,
    RepairPrompt,
    build_baseline_input,
    build_repair_input,
    learning_target,
    scan_pipeline,
)
from .scanning import (
    ScanSample,
    ScannerMetrics,
    ScannerPrediction,
    ScannerSpec,
    chunk_line_ranges,
    label_samples,
    make_scan_samples,
    run_scanner,
    scanner_metrics,
    threshold_sweep,
    undersample,
)

__version__ = "0.1.0"
