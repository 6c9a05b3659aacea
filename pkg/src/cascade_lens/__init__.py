"""cascade-lens: burstiness, activity cascades and churn prediction for
temporal co-editing networks mined from collaborative repositories."""

__version__ = "0.1.0"

from .model import (CoEditEvent, CommitEvent, CommitHistory, EventLog, ParseError,
                    TopDevelopers, build_commit_history, load_event_log,
                    top_fraction_developers, write_event_log)
from .burst import (BurstinessReport, InterEventSeries, burstiness, burstiness_report,
                    individual_burstiness, project_burstiness, shuffle_commit_timestamps)
from .cascade import (CascadeChain, CascadeStats, TriggerEvent, cascade_stats,
                      detect_cascades, detect_cascades_detailed, is_trigger)
from .validate import (PermutationResult, assemble_report, permutation_test,
                       shuffle_coedit_timestamps)
from .synth import (GroundTruth, SynthConfig, default_cascade_config, default_random_config,
                    generate_cascade_network, generate_random_network)

__all__ = [
    "__version__",
    "CoEditEvent", "CommitEvent", "CommitHistory", "EventLog", "ParseError",
    "TopDevelopers", "build_commit_history", "load_event_log",
    "top_fraction_developers", "write_event_log",
    "BurstinessReport", "InterEventSeries", "burstiness", "burstiness_report",
    "individual_burstiness", "project_burstiness", "shuffle_commit_timestamps",
    "CascadeChain", "CascadeStats", "TriggerEvent", "cascade_stats",
    "detect_cascades", "detect_cascades_detailed", "is_trigger",
    "PermutationResult", "assemble_report", "permutation_test",
    "shuffle_coedit_timestamps",
    "GroundTruth", "SynthConfig", "default_cascade_config", "default_random_config",
    "generate_cascade_network", "generate_random_network",
]
