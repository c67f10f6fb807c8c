import dataclasses
import json

import numpy as np
import pytest

from conftest import make_instance, preset_path, IRREGULAR_PRESETS, REGULAR_PRESETS
from distribution_factory import create_distribution, distribution_from_config
from families.base_distribution import Interval
from families.uniform import UniformDistribution
from medmech.errors import ConfigError, DomainError, ValidationError
from medmech.model import NumericConfig, cdf, instance_from_config, load_instance, pdf, quantile, validate_instance

ALL_PRESETS = REGULAR_PRESETS + IRREGULAR_PRESETS


# ---------------------------
# distributions
# ---------------------------
def test_uniform_values():
    u12 = create_distribution("uniform", support=[1, 2])
    assert pdf(u12, 1.4) == pytest.approx(1.0)
    assert pdf(create_distribution("uniform", support=[0, 4]), 3.0) == pytest.approx(0.25)
    assert cdf(u12, 1.25) == pytest.approx(0.25)
    assert cdf(u12, 2.0) == 1.0
    assert quantile(u12, 0.25) == pytest.approx(1.25, abs=1e-10)
    assert quantile(u12, 0.0) == 1.0
    assert quantile(u12, cdf(u12, 1.7)) == pytest.approx(1.7, abs=1e-10)


def test_tabulated_interpolates_and_normalizes():
    dist = create_distribution("tabulated-piecewise-linear-pdf", {"points": [[0, 0.5], [1, 1.5]]})
    assert pdf(dist, 0.5) == pytest.approx(1.0)
    assert dist.normalization == pytest.approx(1.0)
    scaled = create_distribution("tabulated", {"points": [[0, 1], [1, 3]]})
    assert scaled.normalization == pytest.approx(0.5)
    assert cdf(scaled, 1.0) == pytest.approx(1.0)


def test_tabulated_support_must_match():
    with pytest.raises(ConfigError):
        create_distribution("tabulated", {"points": [[0, 1], [1, 1]]}, [0, 2])


def test_truncated_normal_symmetry():
    dist = create_distribution("truncated-normal", {"mu": 0.0, "sigma": 1.0}, [-1, 1])
    assert cdf(dist, 0.0) == pytest.approx(0.5, abs=1e-12)


def test_cdf_clamps_and_pdf_rejects():
    dist = create_distribution("uniform", support=[1, 2])
    assert cdf(dist, 0.0) == 0.0
    assert cdf(dist, 3.0) == 1.0
    with pytest.raises(DomainError):
        pdf(dist, 2.5)
    with pytest.raises(DomainError):
        quantile(dist, 1.5)


def test_raw_cdf_skips_clamping():
    dist = create_distribution("uniform", support=[1, 2])
    assert dist.raw_cdf(1.25) == pytest.approx(0.25)
    assert dist.raw_cdf(np.array([1.0, 2.0])).tolist() == [0.0, 1.0]
    with pytest.raises(DomainError):
        dist.raw_cdf(2.5)


class _ShortUniform(UniformDistribution):
    # cdf stops at 0.9 on the upper end
    def _cdf(self, x):
        return 0.9 * super()._cdf(x)


def test_cdf_not_reaching_one_reported(example1):
    inst = dataclasses.replace(example1, buyer_dist=_ShortUniform(Interval(1.0, 2.0)))
    report = validate_instance(inst)
    assert "buyer_cdf_bounds" in report.kinds()
    assert "seller_cdf_bounds" not in report.kinds()


@pytest.mark.parametrize("family, params, support", [
    ("unknown", None, [0, 1]),
    ("uniform", None, [1, 1]),
    ("uniform", None, None),
    ("truncated-normal", {"mu": 0.0}, [0, 1]),
    ("truncated-normal", {"mu": 0.0, "sigma": -1}, [0, 1]),
    ("beta-rescaled", {"a": 2}, [0, 1]),
    ("beta-rescaled", {"a": 2, "b": 2, "window": [0.5, 0.2]}, [0, 1]),
    ("mixture", {"components": []}, [0, 1]),
])
def test_bad_distribution_configs(family, params, support):
    with pytest.raises(ConfigError):
        create_distribution(family, params, support)


@pytest.mark.parametrize("name", ALL_PRESETS)
def test_preset_distributions_are_consistent(name):
    with open(preset_path(name)) as f:
        doc = json.load(f)
    rng = np.random.default_rng(11)
    for side in ("buyer_dist", "seller_dist"):
        dist = distribution_from_config(doc[side])
        lo, hi = dist.support.lo, dist.support.hi
        h = 1e-5 * (hi - lo)
        x = rng.uniform(lo + 2 * h, hi - 2 * h, 100)
        deriv = (np.asarray(cdf(dist, x + h)) - np.asarray(cdf(dist, x - h))) / (2 * h)
        dens = np.asarray(pdf(dist, x))
        assert np.all(dens > 0)
        assert np.all(np.abs(deriv - dens) <= 1e-4 * np.maximum(1.0, dens))
        inner = rng.uniform(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo), 100)
        assert np.allclose(quantile(dist, cdf(dist, inner)), inner, atol=1e-8, rtol=0)


# ---------------------------
# instances
# ---------------------------
def test_example1_validates(example1):
    report = validate_instance(example1)
    assert report.ok
    assert report.summary() == "valid"
    assert example1.value(2.0, 1.5) == pytest.approx(3.0)
    assert example1.reserve(1.5) == pytest.approx(2.25)


def test_alpha1_sign_change_reported():
    inst = make_instance(alpha1="q - 1.5", validate=False)
    report = validate_instance(inst)
    assert "alpha1_positive" in report.kinds()
    bad = [v for v in report.violations if v.kind == "alpha1_positive"][0]
    assert bad.witness <= 1.5
    assert bad.extent[1] <= 1.5 + 1e-12


def test_negative_k_reported():
    report = validate_instance(make_instance(k=-1, validate=False))
    assert report.kinds() == ["k_negative"]
    assert "k negative" in report.violations[0].message


def test_zero_density_endpoint_reported():
    inst = make_instance(buyer={"family": "beta-rescaled", "params": {"a": 2, "b": 2}, "support": [1, 2]},
                         validate=False)
    assert "buyer_density" in validate_instance(inst).kinds()


def test_alpha1_not_evaluable_reported():
    inst = make_instance(alpha1="1 / (q - 1)", validate=False)
    assert "alpha1_eval" in validate_instance(inst).kinds()


def test_validation_error_on_load():
    with pytest.raises(ValidationError) as e:
        make_instance(alpha1="q - 1.5")
    assert not e.value.report.ok


def test_tabulated_renormalization_reported():
    inst = make_instance(buyer={"family": "tabulated", "params": {"points": [[1, 1], [2, 3]]}})
    assert validate_instance(inst).normalization == {"buyer": pytest.approx(0.5)}


def test_numerics_defaults_and_overrides(example1):
    assert example1.numerics == NumericConfig()
    inst = make_instance(numerics={"quad_nodes": 501, "tol": 1e-8})
    assert inst.numerics.quad_nodes == 501
    assert inst.numerics.tol == 1e-8
    assert inst.with_numerics(grid_n=101).numerics.grid_n == 101


def test_numerics_unknown_key():
    with pytest.raises(ConfigError):
        make_instance(numerics={"nodes": 5})


@pytest.mark.parametrize("doc", [
    [],
    {"buyer_dist": {"family": "uniform", "support": [0, 1]}},
    {"buyer_dist": {"family": "uniform", "support": [0, 1]},
     "seller_dist": {"family": "uniform", "support": [0, 1]},
     "valuation": {"alpha2": "0"}},
    {"buyer_dist": {"family": "uniform", "support": [0, 1]},
     "seller_dist": {"family": "uniform", "support": [0, 1]},
     "valuation": {"alpha1": "1", "k": "abc"}},
])
def test_bad_instance_documents(doc):
    with pytest.raises(ConfigError):
        instance_from_config(doc)


def test_load_instance_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_instance(broken)
    with pytest.raises(ConfigError):
        load_instance(tmp_path / "missing.json")


def test_load_instance_names_from_document(example1):
    assert example1.name == "example1"
    assert example1.describe()["valuation"] == {"alpha1": "q", "alpha2": "0", "k": 1.5}
