"""Counting and correlation statistics of single-photon detectors whose
efficiency recovers over a finite time after each registered event.

The package simulates photon streams from Poissonian, bunched-thermal,
and antibunched sources; thins them through recovering detectors; solves
the waiting-time distribution to predict saturation curves; calibrates
recovery curves from interarrival histograms; measures and predicts the
rate-dependent suppression of zero-delay correlations; and evaluates
detector arrays as a mitigation.
"""
from .array_analysis import (
    ArraySweep,
    array_g2_sweep,
    coincidence_rate_scaling,
    optimal_detector_count,
    summed_pair_g2,
)
from .calibration import (
    TailFit,
    calibrate_ter,
    extract_ter,
    fit_exponential_tail,
    waiting_time_histogram,
)
from .correlator import (
    CorrelationHistogram,
    analytic_gn_ideal,
    g2_histogram,
    g3_surface,
    gn_zero,
    gn_zero_stderr,
    incident_for_registered,
    nfold_coincidences,
    predict_gn_zero,
    predict_registered_rate,
)
from .detector import (
    DetectorConfig,
    TERCurve,
    constant_ter,
    default_snspd_ter,
    detect,
    eta_at,
    half_recovery_time,
    heaviside_ter,
    split_stream,
    tabulated_ter,
)
from .errors import (
    CapacityError,
    CoverageError,
    EmptyStreamError,
    GridTooCoarseError,
    InfeasibleRateError,
    InstabilityError,
    InsufficientDataError,
    NumericalError,
    ParameterError,
    ParseError,
    PoorFitError,
    TruncationError,
    WindowEmptyError,
)
from .experiments import (
    apply_detectors,
    simulate_detected_channels,
    simulate_split_streams,
)
from .sources import (
    IntensityTrace,
    SourceKind,
    SourceModel,
    TimeTagStream,
    g2_model,
    merge_streams,
    sample_antibunched_stream,
    sample_doubly_stochastic_stream,
    sample_poisson_stream,
    sample_thermal_intensity,
)
from .wtd import (
    EfficiencyCurve,
    WaitingTimeDistribution,
    mean_waiting_time,
    poisson_step_curve,
    poisson_step_rate,
    rate_curve,
    registered_rate,
    solve_wtd,
)

__version__ = "0.1.0"
