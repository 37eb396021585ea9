"""Carbon-aware co-design of pruned Transformer encoders and accelerators."""

import json

from ._core import (
    ConfigError,
    Session as _Session,
    hypervolume,
    lifetime_inferences,
    load_run_json,
    nondominated,
    peak_tops,
    spearman,
)

__all__ = [
    "ConfigError",
    "Session",
    "hypervolume",
    "lifetime_inferences",
    "load_run",
    "nondominated",
    "peak_tops",
    "spearman",
]


class Session(_Session):
    """A loaded run configuration."""

    def evaluate(self, hw):
        """Evaluate the unpruned model on one hardware tuple, e.g. "{1,256,8,64,256,2}"."""
        return json.loads(self.evaluate_json(hw))

    def search(self, strategy="", seed=None, budget=None, jobs=None):
        """Run a search; returns the run summary with a "front" list."""
        return json.loads(self.search_json(strategy, seed, budget, jobs))


def load_run(path):
    return json.loads(load_run_json(str(path)))
