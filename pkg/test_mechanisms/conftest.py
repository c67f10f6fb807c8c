import os
import sys
from pathlib import Path

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pytest

from medmech.mechanism import solve
from medmech.model import instance_from_config, load_instance

PRESETS = Path(__file__).resolve().parent.parent / "presets"

REGULAR_PRESETS = [
    "example1", "truncnorm_linear", "beta_window", "tabulated_tent",
    "affine_quality", "truncnorm_seller", "uniform_wide", "beta_seller",
]
IRREGULAR_PRESETS = [
    "irregular_bimodal_buyer", "irregular_seller_bump", "irregular_tabulated_dip",
]


def preset_path(name: str) -> Path:
    return PRESETS / f"{name}.json"


def make_instance(buyer=None, seller=None, alpha1="q", alpha2="0", k=1.5, numerics=None, validate=True):
    doc = {
        "buyer_dist": buyer or {"family": "uniform", "support": [1, 2]},
        "seller_dist": seller or {"family": "uniform", "support": [1, 2]},
        "valuation": {"alpha1": alpha1, "alpha2": alpha2, "k": k},
    }
    if numerics:
        doc["numerics"] = numerics
    return instance_from_config(doc, name="adhoc", validate=validate)


@pytest.fixture(scope="session")
def example1():
    return load_instance(preset_path("example1"))


@pytest.fixture(scope="session")
def example1_mech(example1):
    return solve(example1)


_solved = {}


def solved_preset(name: str):
    # 같은 프리셋은 세션 동안 한 번만 풀기
    if name not in _solved:
        _solved[name] = solve(load_instance(preset_path(name)))
    return _solved[name]
