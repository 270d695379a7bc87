"""Python interface to the pmorder C++ library."""

import json as _json

from ._pmorder import *  # noqa: F401,F403
from ._pmorder import PmorderError, experiment_kinds, run_experiment_json


def run_experiment(config, seed=None, threads=1):
    """Run an experiment config (dict) and return the report as a dict."""
    return _json.loads(run_experiment_json(_json.dumps(config), seed, threads))


__all__ = ["PmorderError", "experiment_kinds", "run_experiment"]
