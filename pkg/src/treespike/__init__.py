"""Online anomaly detection for hierarchical count streams.

Maintains the succinct heavy hitter set of a category hierarchy over a sliding
window, keeps one residual time series per heavy hitter by adapting series
across the hierarchy instead of re-scanning history, forecasts each series
with additive multi-seasonal Holt-Winters smoothing, and flags timeunits whose
observed count exceeds the forecast both relatively and absolutely.
"""

from .ada import AdaDetector, MultiScaleSeries, SplitRule
from .detect import (
    AnomalyEvent,
    ComparisonReport,
    compare_with_reference,
    detect,
    drop_redundant,
    score_vs_oracle,
)
from .domain import (
    CategoryPath,
    ConfigError,
    DetectorConfig,
    HierarchySchema,
    Record,
    UnknownSegment,
    resolve_path,
    validate_config,
)
from .forecast import (
    EwmaState,
    HoltWintersState,
    HwParams,
    InsufficientHistory,
    TrackedSeries,
    build_by_replay,
    ewma_update,
    hw_init,
    hw_sum_property,
)
from .hierarchy import accumulate, compute_shhh, residual_pass, sta_step
from .pipeline import (
    CompareResult,
    ExecSpec,
    InsufficientBootstrap,
    RunResult,
    StaDetector,
    compare_runs,
    resolve_exec,
    run_detector,
    unitize,
)
from .seasonality import (
    DegenerateSeries,
    SeriesTooShort,
    Spectrum,
    WaveletDecomposition,
    atrous_decompose,
    dft_magnitude,
    dominant_periods,
    seasonal_weight,
)
from .synth import GeneratorConfig, LabeledStream, SpikeSpec, generate
from .windowing import OutOfWindow, Window, bucket, shift

__version__ = "0.1.0"
