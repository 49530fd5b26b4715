"""Finite-sample t-tests for high-dimensional mean vectors."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateDataError,
    HDMeanError,
    InsufficientSampleError,
    ShapeError,
)
from .one_sample import (
    OneSampleOutcome,
    PopulationDescriptor,
    c1_ratio,
    estimate_tr_sigma2,
    one_sample_test,
    pairwise_inner_products,
    snr_one,
    theoretical_power_one,
    u_statistic,
)
from .two_sample import (
    TwoSampleOutcome,
    TwoSamplePopulationDescriptor,
    c2_ratio,
    scheffe_transform,
    snr_two,
    theoretical_power_two,
    two_sample_test,
    v_statistic,
)
from .competitors import (
    CompetitorOutcome,
    bs_one_sample_test,
    cq_one_sample_test,
    cq_two_sample_test,
    sd_one_sample_test,
)
