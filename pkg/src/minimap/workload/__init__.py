"""Data generators, the four modeled benchmark jobs, and the bench harness."""

from minimap.workload.benchmarks import (
    EXPECTED_MATRIX,
    MATRIX_OPTS,
    Benchmark,
    classify,
    make_benchmarks,
    make_sum_duration_job,
)
from minimap.workload.generators import (
    DocumentGenSpec,
    UserVisitsGenSpec,
    WebPageGenSpec,
    gen_documents,
    gen_pages_blob,
    gen_uservisits,
    gen_webpages,
)
from minimap.workload.suite import SCALES, bench_suite, render_report
from minimap.workload.zipf import Zipf

__all__ = [
    "Zipf",
    "WebPageGenSpec", "UserVisitsGenSpec", "DocumentGenSpec",
    "gen_webpages", "gen_pages_blob", "gen_uservisits", "gen_documents",
    "Benchmark", "MATRIX_OPTS", "EXPECTED_MATRIX",
    "classify", "make_benchmarks", "make_sum_duration_job",
    "SCALES", "bench_suite", "render_report",
]
