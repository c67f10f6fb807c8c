import numpy as np

from families.base_distribution import BaseDistribution, Interval
from medmech.errors import ConfigError


class MixtureDistribution(BaseDistribution):
    """Finite mixture; every component lives on the mixture's support."""

    FAMILY = "mixture"

    def __init__(self, support: Interval, params=None):
        super().__init__(support, params)
        from distribution_factory import create_distribution

        specs = self.params.get("components") or []
        if not specs:
            raise ConfigError("mixture requires a non-empty params.components list")
        weights, components = [], []
        for spec in specs:
            if not isinstance(spec, dict) or "family" not in spec:
                raise ConfigError(f"mixture component must be an object with a family, got {spec!r}")
            weights.append(float(spec.get("weight", 1.0)))
            components.append(create_distribution(spec["family"], spec.get("params"), support))
        weights = np.asarray(weights)
        if np.any(weights <= 0):
            raise ConfigError("mixture weights must be positive")
        self.weights = weights / weights.sum()
        self.components = components

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        return sum(w * c.pdf(x) for w, c in zip(self.weights, self.components))

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return sum(w * c.cdf(x) for w, c in zip(self.weights, self.components))
