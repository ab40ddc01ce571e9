import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bodyschema.errors import EstimationError
from bodyschema.pipeline import JointState, forward_kinematics
from bodyschema.posture import (EfferenceCopy, PosturalPrior, ProprioceptiveCue, _fuse_joint,
                                estimate_posture_at, fuse_cues)

from oracles import grid_posterior

angle = st.floats(-1.5, 1.5, allow_nan=False)
sigma = st.floats(0.01, 2.0, allow_nan=False)


def test_equal_precision_midpoint():
    prior = PosturalPrior({"elbow": 0.2})
    mean, var = fuse_cues(prior, [ProprioceptiveCue({"elbow": 0.4}, 0.2)], "elbow")
    assert mean == pytest.approx(0.2, abs=1e-15)
    assert var == pytest.approx(0.02, abs=1e-15)


def test_uninformative_prior():
    prior = PosturalPrior(1e6)
    mean, _ = fuse_cues(prior, [ProprioceptiveCue({"elbow": 0.4}, 0.2)], "elbow")
    assert abs(mean - 0.4) < 1e-6


def test_three_cue_example_against_grid_oracle():
    prior = PosturalPrior(0.2)
    aff = ProprioceptiveCue({"elbow": 0.4}, 0.2)
    eff = EfferenceCopy({"elbow": 0.2}, math.sqrt(0.02))
    mean, var = fuse_cues(prior, [aff, eff], "elbow")
    g_mean, g_var = grid_posterior([(0.0, 0.04), (0.4, 0.04), (0.2, 0.02)])
    assert abs(mean - g_mean) < 1e-6 and abs(var - g_var) < 1e-6
    assert mean == pytest.approx(0.2, abs=1e-12)
    assert var == pytest.approx(0.01, abs=1e-12)


def test_no_information_is_an_error():
    with pytest.raises(EstimationError):
        fuse_cues(None, [], "elbow")
    with pytest.raises(EstimationError):
        fuse_cues(None, [ProprioceptiveCue({"shoulder": 0.1}, 0.1)], "elbow")


@pytest.mark.parametrize("bad", [0.0, -0.1])
def test_std_must_be_positive(bad):
    with pytest.raises(ValueError):
        PosturalPrior(bad)
    with pytest.raises(ValueError):
        ProprioceptiveCue({"elbow": 0.0}, bad)


class TestDelay:
    prior = PosturalPrior(0.2, {"elbow": 0.05})
    aff = ProprioceptiveCue({"elbow": 0.4}, 0.2, latency_ms=80)
    eff = EfferenceCopy({"elbow": 0.2}, math.sqrt(0.02), latency_ms=0)

    def test_before_afference_posterior_is_prior(self):
        post = estimate_posture_at(40, self.prior, self.aff)
        assert post.mean["elbow"] == 0.05
        assert post.variance["elbow"] == 0.2 ** 2
        assert post.timestamp == 40
        assert post.sources["elbow"] == ("prior",)

    def test_boundary_is_inclusive(self):
        post = estimate_posture_at(80, self.prior, self.aff)
        assert post.sources["elbow"] == ("prior", "afference")
        assert post.precision["elbow"] == 2 * (1 / 0.2 ** 2)

    def test_efference_before_afference(self):
        post = estimate_posture_at(40, PosturalPrior(0.2), self.aff, self.eff)
        g_mean, g_var = grid_posterior([(0.0, 0.04), (0.2, 0.02)])
        assert abs(post.mean["elbow"] - g_mean) < 1e-6
        assert abs(post.variance["elbow"] - g_var) < 1e-6
        assert post.sources["elbow"] == ("prior", "efference")

    def test_negative_time(self):
        with pytest.raises(ValueError):
            estimate_posture_at(-1, self.prior, self.aff)

    def test_joints_default_to_union(self):
        post = estimate_posture_at(100, PosturalPrior({"shoulder": 0.3}),
                                   ProprioceptiveCue({"shoulder": 0.1}, 0.1))
        assert list(post.mean) == ["shoulder"]


cue_lists = st.lists(st.tuples(angle, sigma), min_size=1, max_size=5)


def _cues(pairs):
    return [ProprioceptiveCue({"j": m}, s) for m, s in pairs]


@settings(max_examples=200, deadline=None)
@given(cue_lists)
def test_precision_additivity_is_exact(pairs):
    _, var, precision, _ = _fuse_joint(None, _cues(pairs), "j")
    assert precision == math.fsum(1.0 / (s * s) for _, s in pairs)
    assert var == pytest.approx(1.0 / precision, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(cue_lists)
def test_mean_within_cue_range(pairs):
    mean, _ = fuse_cues(None, _cues(pairs), "j")
    assert min(m for m, _ in pairs) <= mean <= max(m for m, _ in pairs)


@settings(max_examples=200, deadline=None)
@given(cue_lists, st.randoms(use_true_random=False))
def test_order_invariance(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = fuse_cues(None, _cues(pairs), "j")
    b = fuse_cues(None, _cues(shuffled), "j")
    assert abs(a[0] - b[0]) <= 1e-12 and abs(a[1] - b[1]) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(cue_lists, st.floats(0.1, 10.0))
def test_common_variance_scaling(pairs, c):
    a = fuse_cues(None, _cues(pairs), "j")
    b = fuse_cues(None, _cues([(m, s * math.sqrt(c)) for m, s in pairs]), "j")
    assert abs(a[0] - b[0]) <= 1e-12
    assert b[1] == pytest.approx(c * a[1], rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(angle, angle, sigma, st.lists(sigma, min_size=2, max_size=8))
def test_monotone_prior_pull(prior_mean, obs, prior_std, aff_stds):
    prior = PosturalPrior(prior_std, {"j": prior_mean})
    pulls = [abs(fuse_cues(prior, [ProprioceptiveCue({"j": obs}, s)], "j")[0] - prior_mean)
             for s in sorted(aff_stds)]
    assert all(b <= a + 1e-15 for a, b in zip(pulls, pulls[1:]))


def test_posterior_pulls_wrist_toward_canonical(arm):
    size, _ = arm
    true = {"shoulder": 0.6, "elbow": 1.1, "wrist": 0.4}
    canonical = forward_kinematics(size, JointState({j: 0.0 for j in true}))["hand"].translation
    prior = PosturalPrior(0.2)
    dists = []
    for s in (0.01, 0.05, 0.2, 1.0):
        post = estimate_posture_at(100, prior, ProprioceptiveCue(true, s, latency_ms=80))
        wrist = forward_kinematics(size, JointState(post.mean))["hand"].translation
        dists.append(float(np.linalg.norm(np.subtract(wrist, canonical))))
    assert all(b < a for a, b in zip(dists, dists[1:]))
