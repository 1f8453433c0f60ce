"""Connected-vehicle intersection traffic simulator."""

import json
import os

from ._icat import (
    ConfigError,
    MapFormatError,
    NoRoute,
    OffPath,
    Path,
    RoadGraph,
    default_map,
    load_map,
    merge_cycle_map,
    quintic,
)
from . import _icat

__all__ = [
    "ConfigError", "MapFormatError", "NoRoute", "OffPath", "Path", "RoadGraph",
    "default_map", "load_map", "merge_cycle_map", "quintic", "scenario_defaults",
    "run", "lag", "validate_map",
]


def scenario_defaults():
    return json.loads(_icat.scenario_defaults())


def _scenario(scenario):
    if isinstance(scenario, (str, os.PathLike)):
        with open(scenario) as f:
            return f.read(), os.path.dirname(os.fspath(scenario))
    return json.dumps(scenario), ""


def run(scenario, trace=False, events=False):
    """Run a scenario (dict or path to a JSON file).

    Returns the metrics dict, or (metrics, trace_csv, events_jsonl) when
    either output is requested.
    """
    doc, base = _scenario(scenario)
    metrics, t, e = _icat.run_json(doc, base, trace, events)
    metrics = json.loads(metrics)
    if trace or events:
        return metrics, t, e
    return metrics


def lag(scenario, latencies):
    doc, base = _scenario(scenario)
    rows, increasing = _icat.lag_json(doc, base, list(latencies))
    return {
        "rows": [{"latency": l, "mean_response_delay": d, "min_separation": s} for l, d, s in rows],
        "strictly_increasing": increasing,
    }


def validate_map(doc):
    """Errors found in a map document (dict); empty when valid."""
    errors, _ = _icat.validate_map_json(json.dumps(doc))
    return errors
