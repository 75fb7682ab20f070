"""Regression trees for data streams with imbalanced targets.

Hoeffding trees (plain and drift-adaptive), incremental kernel density
estimates of the target distribution turned into training weights,
hierarchical shrinkage at prediction time, and follow-the-leader tuning.
"""

from .density import BinStructure, SmoothedDensity, kde_batch, kde_update, kernel_eval
from .drift import ADWIN, HoeffdingAdaptiveTreeRegressor
from .errors import ConfigError, DatasetIOError, EmptyStateError, ImbStreamError, InputError
from .htree import HoeffdingTreeRegressor, SplitConfig, hoeffding_bound
from .learner import KDEParams, LearnerConfig, TreeLearner
from .metrics import Metrics, PrequentialTracker
from .relevance import KDEWeighting, weights_from_density
from .shrinkage import hs_predict
from .stream import LabeledExample, StreamSpec, open_stream
from .tuner import FTLTuner, TuningSchedule, build_grid

__version__ = "0.1.0"
