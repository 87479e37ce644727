"""Hyperparameter optimization for multi-subnetwork models.

Provides TPE-based Bayesian optimization plus two subnetwork-aware
schedulers (divide-and-conquer and subnetwork-adaptive), a seeded synthetic
multi-subnetwork surrogate benchmark with a transfer-aware cost model, and
regret/speedup reporting with a resumable CLI harness.
"""

from .errors import SubnetHpoError
from .metrics import (
    RegretCurve,
    SpeedupReport,
    regret_curve,
    speedup_at,
    summarize,
)
from .sched import (
    History,
    ImportanceVector,
    SchedulerParams,
    TrainingPlan,
    TrialRecord,
    bo_step,
    combine_loss,
    dcbo_step,
    execute_trial,
    max_speedup_bound,
    run,
    sabo_importance,
    sabo_step,
    transfer_combo_count,
)
from .space import (
    CATEGORICAL,
    CONTINUOUS,
    INTEGER,
    MERGE,
    GroupedConfigSpace,
    GroupId,
    HyperparameterDef,
    build_space,
    categorical,
    continuous,
    integer,
)
from .surrogate import (
    CostModel,
    QualityState,
    SurrogateObjective,
    SurrogateSpec,
    make_surrogate,
    standard_benchmarks,
)
from .tpe import (
    KdeModel,
    ObservationSet,
    TpeParams,
    fit_kde,
    kde_density,
    propose_focal_tpe,
    propose_tpe,
    split_by_quantile,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SubnetHpoError",
    # space
    "GroupId",
    "MERGE",
    "HyperparameterDef",
    "GroupedConfigSpace",
    "build_space",
    "continuous",
    "integer",
    "categorical",
    "CONTINUOUS",
    "INTEGER",
    "CATEGORICAL",
    # tpe
    "TpeParams",
    "KdeModel",
    "ObservationSet",
    "split_by_quantile",
    "fit_kde",
    "kde_density",
    "propose_tpe",
    "propose_focal_tpe",
    # sched
    "History",
    "TrialRecord",
    "TrainingPlan",
    "SchedulerParams",
    "ImportanceVector",
    "combine_loss",
    "bo_step",
    "dcbo_step",
    "sabo_importance",
    "sabo_step",
    "execute_trial",
    "run",
    "max_speedup_bound",
    "transfer_combo_count",
    # surrogate
    "SurrogateSpec",
    "QualityState",
    "CostModel",
    "SurrogateObjective",
    "make_surrogate",
    "standard_benchmarks",
    # metrics
    "RegretCurve",
    "SpeedupReport",
    "regret_curve",
    "speedup_at",
    "summarize",
]
