"""Normality tests based on the zero-bias transformation."""

from .competitors import CompetitorId, bcmr, bhep, hjg
from .errors import (
    DegenerateSampleError,
    IllPosedRequestError,
    InvalidArgumentError,
    InvalidModelError,
    InvalidPlanError,
    MissingCriticalValueError,
    QuadratureError,
    SampleTooSmallError,
    ZBTestError,
)
from .statistics import (
    ScaledResiduals,
    g1_closed_form,
    g1_quadrature,
    g2_closed_form,
    g2_quadrature,
    scaled_residuals,
)
from .streams import RandomStream
from .tables import CriticalValueTable, PowerTable, load_bundled_table
from .testing import StatisticId, TestReport, run_test

__version__ = "0.1.0"
