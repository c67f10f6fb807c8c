import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid
from scipy.spatial import ConvexHull

from conftest import IRREGULAR_PRESETS, REGULAR_PRESETS, preset_path, solved_preset
from medmech.errors import DomainError, EnvelopeError
from medmech.ironing import (IRONED_REL_TOL, eval_ironed, iron_buyer, iron_seller, lower_convex_envelope,
                             seller_weight_grid)
from medmech.model import load_instance
from medmech.verify import ironing_correction
from medmech.virtual import compute_profile, psi


def test_envelope_of_convex_samples_is_identity():
    w = np.linspace(0, 1, 11)
    H = w ** 2
    L, l = lower_convex_envelope(w, H)
    assert np.allclose(L, H)
    assert np.allclose(l, np.diff(H) / np.diff(w))


def test_envelope_bridges_a_bump():
    w = np.array([0.0, 1.0, 2.0, 3.0])
    H = np.array([0.0, 2.0, 1.0, 3.0])
    L, l = lower_convex_envelope(w, H)
    assert L.tolist() == pytest.approx([0.0, 0.5, 1.0, 3.0])
    assert l.tolist() == pytest.approx([0.5, 0.5, 2.0])
    assert np.all(L <= H + 1e-15)


@pytest.mark.parametrize("w, H", [
    ([0.0], [1.0]),
    ([0.0, 1.0, 1.0], [0.0, 1.0, 2.0]),
    ([0.0, 1.0], [0.0, np.nan]),
    ([[0.0, 1.0]], [[0.0, 1.0]]),
])
def test_envelope_rejects_bad_input(w, H):
    with pytest.raises(EnvelopeError):
        lower_convex_envelope(w, H)


def test_example1_seller_weight(example1):
    q, w = seller_weight_grid(example1, 2001)
    # w(q) = (q^2 - 1) / 2 for alpha1 = q, g = 1
    assert w[-1] == pytest.approx(1.5, abs=1e-9)
    assert np.allclose(w, (q ** 2 - 1) / 2, atol=1e-9)


def test_example1_ironing_is_identity(example1):
    profile = compute_profile(example1)
    buyer = iron_buyer(example1, profile)
    seller = iron_seller(example1, profile)
    assert buyer.ironed_intervals == [] and seller.ironed_intervals == []
    assert seller.w_max == pytest.approx(1.5, abs=1e-9)
    assert eval_ironed(buyer, 1.75) == pytest.approx(1.5, abs=1e-3)
    assert eval_ironed(seller, 1.25) == pytest.approx(1.8, abs=1e-3)


@pytest.mark.parametrize("name", REGULAR_PRESETS)
def test_regular_presets_iron_to_themselves(name):
    inst = load_instance(preset_path(name))
    profile = compute_profile(inst)
    for fn in (iron_buyer(inst, profile), iron_seller(inst, profile)):
        assert fn.ironed_intervals == []
        assert np.max(np.abs(fn.H - fn.L)) <= 1e-9 * max(1.0, np.max(np.abs(fn.H)))


@pytest.mark.parametrize("name", IRREGULAR_PRESETS)
def test_irregular_envelopes(name):
    inst = load_instance(preset_path(name))
    profile = compute_profile(inst)
    fns = [iron_buyer(inst, profile), iron_seller(inst, profile)]
    assert any(fn.ironed_intervals for fn in fns)
    for fn in fns:
        assert np.all(np.diff(fn.l) >= 0)
        assert np.all(fn.L <= fn.H + 1e-12)
        assert fn.L[0] == pytest.approx(fn.H[0], abs=1e-9)
        assert fn.L[-1] == pytest.approx(fn.H[-1], abs=1e-9)
        for a, b in fn.ironed_intervals:
            inside = (fn.w_mid > a) & (fn.w_mid < b)
            assert np.ptp(fn.l[inside]) <= 1e-9 * max(1.0, np.max(np.abs(fn.l[inside])))


@pytest.mark.parametrize("name", IRREGULAR_PRESETS)
def test_ironed_mechanism_is_revenue_neutral(name):
    mech = solved_preset(name)
    assert mech.ironed
    buyer, seller = ironing_correction(mech)
    assert abs(buyer) <= 1e-6
    assert abs(seller) <= 1e-6


def test_ironed_threshold_is_flat_on_interval():
    mech = solved_preset("irregular_bimodal_buyer")
    a, b = max(mech.lam.flat_intervals(), key=lambda s: s[1] - s[0])
    t = np.linspace(a, b, 50)[5:-5]
    lam = np.asarray(mech.lam(t))
    assert np.ptp(lam) <= 1e-9
    assert np.all(np.diff(np.asarray(mech.lam(np.linspace(1, 2, 501)))) >= -1e-12)


def test_eval_ironed_domain(example1):
    fn = iron_buyer(example1)
    with pytest.raises(DomainError):
        eval_ironed(fn, 2.5)


def test_eval_ironed_is_left_continuous():
    fn = iron_buyer(load_instance(preset_path("irregular_tabulated_dip")))
    w = fn.w_grid[100]
    assert fn.slope_at_w(w) == fn.l[99]
    assert fn.slope_at_w(w + 1e-9) == fn.l[100]


def _chord_minorant(w, H, k):
    # min over all chords (i <= k <= j) evaluated at w[k]
    i = np.arange(k + 1)[:, None]
    j = np.arange(k, len(w))[None, :]
    span = w[j] - w[i]
    safe = np.where(span > 0, span, 1.0)
    chord = H[i] + (H[j] - H[i]) * (w[k] - w[i]) / safe
    return float(np.min(np.where(span > 0, chord, H[k])))


def test_envelope_of_random_walk_matches_chords():
    rng = np.random.default_rng(7)
    w = np.linspace(0.0, 1.0, 2001)
    H = np.cumsum(rng.normal(size=w.size)) * 1e-2
    L, l = lower_convex_envelope(w, H)
    assert np.all(L <= H + 1e-12)
    assert L[0] == H[0] and L[-1] == H[-1]
    assert np.all(np.diff(l) >= 0)
    for k in range(0, len(w), 100):
        assert L[k] == pytest.approx(_chord_minorant(w, H, k), abs=1e-12)


def _gap_spans(w, H, L, min_width):
    gap = H - L > IRONED_REL_TOL * np.maximum(1.0, np.abs(H))
    edges = np.flatnonzero(np.diff(np.concatenate([[0], gap.astype(int), [0]])))
    spans = [(w[max(a - 1, 0)], w[min(b, len(w) - 1)]) for a, b in zip(edges[::2], edges[1::2])]
    return [(a, b) for a, b in spans if b - a > min_width]


def test_bimodal_buyer_envelope_against_convex_hull():
    inst = load_instance(preset_path("irregular_bimodal_buyer"))
    fn = iron_buyer(inst)
    w = np.linspace(0.0, 1.0, 10 * (len(fn.w_grid) - 1) + 1)
    t = np.asarray(inst.buyer_dist.quantile(w))
    t[0], t[-1] = inst.T.lo, inst.T.hi
    H = cumulative_trapezoid(np.asarray(psi(inst, t)), w, initial=0.0)

    hull = ConvexHull(np.column_stack([w, H]))
    lower = hull.simplices[hull.equations[:, 1] < 0]
    vertices = np.unique(lower.ravel())
    L = np.interp(w, w[vertices], H[vertices])

    expected = _gap_spans(w, H, L, 1e-3)
    got = [s for s in fn.ironed_intervals if s[1] - s[0] > 1e-3]
    assert expected and len(got) == len(expected)
    for (a, b), (ea, eb) in zip(got, expected):
        assert a == pytest.approx(ea, abs=2e-3)
        assert b == pytest.approx(eb, abs=2e-3)
        level = (np.interp(eb, w, L) - np.interp(ea, w, L)) / (eb - ea)
        assert fn.slope_at_w(0.5 * (a + b)) == pytest.approx(level, rel=1e-3, abs=1e-6)


@pytest.mark.parametrize("side", ["buyer", "seller"])
@pytest.mark.parametrize("name", IRREGULAR_PRESETS)
def test_slope_follows_h_off_ironed_intervals(name, side):
    inst = load_instance(preset_path(name))
    fn = iron_buyer(inst) if side == "buyer" else iron_seller(inst)
    margin = 0.02 * fn.w_max
    keep = np.ones(len(fn.l), dtype=bool)
    for a, b in fn.ironed_intervals:
        keep &= (fn.w_grid[1:] < a - margin) | (fn.w_grid[:-1] > b + margin)
    assert np.any(keep)
    mean_h = 0.5 * (fn.h[:-1] + fn.h[1:])
    assert np.max(np.abs(fn.l - mean_h)[keep]) <= 1e-6 * max(1.0, np.max(np.abs(fn.h)))
