# 공개 API는 __getattr__로 "지연 임포트"해서 재노출
# - import medmech 만으로는 scipy 기반 모듈을 즉시 불러오지 않습니다.
# 사용 예: from medmech import solve, audit
import importlib


def __getattr__(name):
    mapping = {
        "MediatorMechanism": ("mediator_mechanism", "MediatorMechanism"),
        "MediatorMechanismMixin": ("mediator_mechanism", "MediatorMechanismMixin"),
        "load_instance": ("medmech.model", "load_instance"),
        "instance_from_config": ("medmech.model", "instance_from_config"),
        "validate_instance": ("medmech.model", "validate_instance"),
        "ProblemInstance": ("medmech.model", "ProblemInstance"),
        "NumericConfig": ("medmech.model", "NumericConfig"),
        "compute_profile": ("medmech.virtual", "compute_profile"),
        "regularity_check": ("medmech.virtual", "regularity_check"),
        "iron_buyer": ("medmech.ironing", "iron_buyer"),
        "iron_seller": ("medmech.ironing", "iron_seller"),
        "eval_ironed": ("medmech.ironing", "eval_ironed"),
        "solve": ("medmech.mechanism", "solve"),
        "tabulate": ("medmech.mechanism", "tabulate"),
        "ThresholdMechanism": ("medmech.mechanism", "ThresholdMechanism"),
        "TabulatedMechanism": ("medmech.mechanism", "TabulatedMechanism"),
        "audit": ("medmech.verify", "audit"),
        "obedience_check": ("medmech.verify", "obedience_check"),
        "ironing_correction": ("medmech.verify", "ironing_correction"),
        "lp_oracle": ("medmech.verify", "lp_oracle"),
        "loss_region": ("medmech.verify", "loss_region"),
        "create_distribution": ("distribution_factory", "create_distribution"),
    }
    if name in mapping:
        mod, attr = mapping[name]
        module = importlib.import_module(mod)
        return getattr(module, attr)
    raise AttributeError(f"module 'medmech' has no attribute {name!r}")


__all__ = [  # 공개 심볼 명시
    "MediatorMechanism", "MediatorMechanismMixin",
    "load_instance", "instance_from_config", "validate_instance", "ProblemInstance", "NumericConfig",
    "compute_profile", "regularity_check", "iron_buyer", "iron_seller", "eval_ironed",
    "solve", "tabulate", "ThresholdMechanism", "TabulatedMechanism",
    "audit", "obedience_check", "ironing_correction", "lp_oracle", "loss_region",
    "create_distribution",
]
