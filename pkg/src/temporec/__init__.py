"""Time-aware network recommendation on temporal bipartite event logs.

The package covers the full pipeline: ingesting timestamped user-item
interactions, freezing training snapshots, constructing random and time
probes, scoring items with diffusion and recency-based recommenders
(scikit-learn style estimators), computing recall / ranking-score /
popularity metrics, generating synthetic aging data, and orchestrating
calibration-plus-evaluation experiments reproducibly.
"""

from .errors import (ConfigurationError, EmptyLogError, EmptyProbeWarning,
                     ExperimentError, ParseError, TemporecError,
                     UndefinedMetricError)
from .eventlog import (Event, EventLog, IngestConfig, Snapshot,
                       build_snapshot, degree_increase, load_events,
                       write_events)
from .probes import (ProbeSampler, ProbeSplit, random_probe,
                     sample_probe_times, time_probe)
from .recommenders import (DEFAULT_EPSILON, DegreeIncrease, HeatS, Hybrid,
                           ProbS, RecommendationList, ScoreVector, SimS,
                           THybrid, TimeWeighted, TProbS, di_scores,
                           full_ranking, heats_scores, hybrid_scores,
                           probs_scores, rank_items, sims_scores,
                           temporal_reweight, write_recommendations)
from .metrics import (MetricsReport, UserOutcome, avg_degree_top_l,
                      evaluate_split, ranking_score, recall_at_l)
from .synthgen import GenParams, generate
from .diagnostics import (CorrelationReport, HalfLifeStats,
                          popularity_half_life, probe_degree_correlations,
                          write_scatter)
from .experiment import (EvaluationReport, ExperimentConfig, MethodSpec,
                         SweepResult, calibrate, default_method_specs,
                         evaluate, load_setup, make_estimator)
from .timeunits import parse_duration

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "EmptyLogError", "EmptyProbeWarning",
    "ExperimentError", "ParseError", "TemporecError", "UndefinedMetricError",
    "Event", "EventLog", "IngestConfig", "Snapshot", "build_snapshot",
    "degree_increase", "load_events", "write_events",
    "ProbeSampler", "ProbeSplit", "random_probe", "sample_probe_times",
    "time_probe",
    "DEFAULT_EPSILON", "DegreeIncrease", "HeatS", "Hybrid", "ProbS",
    "RecommendationList", "ScoreVector", "SimS", "THybrid", "TimeWeighted",
    "TProbS", "di_scores", "full_ranking", "heats_scores", "hybrid_scores",
    "probs_scores", "rank_items", "sims_scores", "temporal_reweight",
    "write_recommendations",
    "MetricsReport", "UserOutcome", "avg_degree_top_l", "evaluate_split",
    "ranking_score", "recall_at_l",
    "GenParams", "generate",
    "CorrelationReport", "HalfLifeStats", "popularity_half_life",
    "probe_degree_correlations", "write_scatter",
    "EvaluationReport", "ExperimentConfig", "MethodSpec", "SweepResult",
    "calibrate", "default_method_specs", "evaluate", "load_setup",
    "make_estimator",
    "parse_duration",
]
