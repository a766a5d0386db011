"""Cross-checks between the vectorized pipeline and the loop reference."""

import numpy as np

from eagleeye import synth
from eagleeye.naive import naive_stages
from eagleeye.saliency import compute_saliency


def rel_err(a, b):
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return np.abs(a - b).max() / scale


def test_all_42_feature_maps_match_reference():
    img = synth.random_rgb(123, 128, 128)
    fast = compute_saliency(img)
    slow = naive_stages(img)
    for kind in ("intensity", "color_rg", "color_by", "orientation"):
        fast_maps = getattr(fast.features, kind)
        for key, want in slow[kind].items():
            assert rel_err(fast_maps[key], want) < 1e-6, f"{kind} {key}"
    assert rel_err(fast.conspicuity.ibar, slow["ibar"]) < 1e-6
    assert rel_err(fast.conspicuity.cbar, slow["cbar"]) < 1e-6
    assert rel_err(fast.conspicuity.obar, slow["obar"]) < 1e-6
    assert rel_err(fast.salience, slow["salience"]) < 1e-6


def test_salience_matches_reference_on_odd_dims():
    img = synth.random_rgb(7, 93, 61)
    fast = compute_saliency(img).salience
    slow = naive_stages(img)["salience"]
    assert fast.shape == slow.shape
    assert rel_err(fast, slow) < 1e-6
