__version__ = '0.1.0'

from .exceptions import (
    CpdetectError,
    InvalidInputError,
    SingularityError,
    DomainError,
    UsageError
)
from .series import (
    MeasurementSeries,
    ExceedanceData,
    extract_exceedances,
    mean_threshold,
    read_series_csv,
    write_series_csv
)
from .intensity import (
    IntensityFamily,
    SegmentParams,
    ChangePointConfig,
    SegmentedModel,
    is_singular_at_zero,
    intensity,
    log_intensity,
    mean_cumulative,
    segmented_mean
)
from .objective import (
    Hyperparams,
    ObjectiveValue,
    SegmentFit,
    FitOptions,
    penalty_factor,
    log_likelihood,
    log_prior,
    penalty,
    bayesian_mdl,
    expanded_bmdl,
    fit_segments
)
from .genetic import (
    GAConfig,
    GAHistory,
    Evaluation,
    init_population,
    rank_select,
    crossover,
    mutate,
    jump,
    evolve,
    run_ga,
    exhaustive_search
)
from .baselines import (
    PeltConfig,
    CusumConfig,
    CusumResult,
    FreqMdlValue,
    pelt,
    optimal_partitioning,
    slack_from_shift,
    cusum,
    lognormal_mle,
    freq_mdl,
    run_freq_mdl_ga
)
from .simulate import (
    RegimeSpec,
    SimulationSetting,
    setting_from_change_points,
    gen_lognormal_series,
    preset_settings,
    get_setting
)
from .report import (
    METHODS,
    DetectionResult,
    confidence_bands,
    regime_rate_summary,
    regime_means,
    build_detection_result,
    detect,
    detection_to_dict,
    dumps_json,
    write_json,
    plot_frame,
    write_plot_csv,
    compare_methods
)
