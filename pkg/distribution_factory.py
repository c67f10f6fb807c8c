import importlib

from medmech.errors import ConfigError

FAMILY_ALIASES = {
    "tabulated-piecewise-linear-pdf": "tabulated",
    "truncnorm": "truncated-normal",
    "beta": "beta-rescaled",
}


def _load(family: str):  # 필요한 경우에만 모듈 로드
    mapping = {
        "uniform": ("families.uniform", "UniformDistribution"),
        "truncated-normal": ("families.truncated_normal", "TruncatedNormalDistribution"),
        "beta-rescaled": ("families.beta_rescaled", "BetaRescaledDistribution"),
        "tabulated": ("families.tabulated", "TabulatedDistribution"),
        "mixture": ("families.mixture", "MixtureDistribution"),
    }
    family = FAMILY_ALIASES.get(family, family)
    try:
        mod, cls = mapping[family]
    except KeyError:
        raise ConfigError(f"Unsupported distribution family: {family}")
    module = importlib.import_module(mod)
    return getattr(module, cls)


def create_distribution(family: str, params=None, support=None):
    from families.base_distribution import Interval

    Dist = _load(family)
    params = dict(params or {})

    if support is None:
        # tabulated tables carry their own support
        points = params.get("points")
        if Dist.FAMILY != "tabulated" or not points:
            raise ConfigError(f"[ERROR] support is required for family: {family}")
        support = [points[0][0], points[-1][0]]
    if not isinstance(support, Interval):
        try:
            lo, hi = support
        except (TypeError, ValueError):
            raise ConfigError(f"support must be [lo, hi], got {support!r}")
        support = Interval(float(lo), float(hi))
    return Dist(support, params)


def distribution_from_config(doc: dict):
    if not isinstance(doc, dict) or "family" not in doc:
        raise ConfigError(f"distribution must be an object with a 'family' field, got {doc!r}")
    return create_distribution(doc["family"], doc.get("params"), doc.get("support"))
