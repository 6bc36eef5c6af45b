"""ecgaudit: quantify and explain re-identification risk in ECG data.

The pipeline extracts interpretable PQRST statistics from raw ECG,
trains transparent classifiers under three re-identification protocols
(gender, age group, participant identity), and attributes the resulting
risk to individual features with exact Shapley values.
"""

from .cohort import AgeGroup, SplitPlan, Task, assign_age_group
from .delineate import BeatAnnotation, delineate_beats, detect_r_peaks
from .evaluate import EvalReport, evaluate, reference_compare
from .explain import ShapExplanation, ShapSummary, shap_exact, shap_summary
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    mean_amplitude_difference,
    mean_interval,
    windowed_features,
)
from .io import EcgRecord, read_record, write_record
from .preprocess import FilterSpec, clean, highpass_butterworth, powerline_notch
from .synth import SyntheticPopulationConfig, generate_population

__version__ = "0.1.0"

__all__ = [
    "AgeGroup", "BeatAnnotation", "EcgRecord", "EvalReport", "FEATURE_NAMES",
    "FeatureVector", "FilterSpec", "ShapExplanation", "ShapSummary",
    "SplitPlan", "SyntheticPopulationConfig", "Task", "assign_age_group",
    "clean", "delineate_beats", "detect_r_peaks", "evaluate",
    "generate_population", "highpass_butterworth", "mean_amplitude_difference",
    "mean_interval", "powerline_notch", "read_record", "reference_compare",
    "shap_exact", "shap_summary", "windowed_features", "write_record",
    "__version__",
]
