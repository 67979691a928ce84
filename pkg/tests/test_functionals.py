import numpy as np
import pytest
from hypothesis import given, strategies as st

from fronttrack.engine import initialize, step
from fronttrack.functionals import (InteractionSite, Q_pos, Q_weak, SnapFront, Snapshot, WaveArrays,
                                    auto_c_star, bystander_sum, evaluate, interaction_delta,
                                    isometry_image, normalized_speed, normalized_state, q_pos_arrays,
                                    secant_lipschitz, theta_weight, total_TV, total_V,
                                    weakly_approaching)
from fronttrack.kinetics import cubic_kinetic
from fronttrack.waves import WaveLabel, classify_wave, wave_strength
from helpers import naive_pairs, random_snapshot


def snap(m, *pairs):
    fronts = [SnapFront(float(i), a, b, classify_wave(m, a, b), 0.0, i) for i, (a, b) in enumerate(pairs)]
    return Snapshot(0.0, tuple(fronts))


class TestTotals:
    def test_V_examples(self, model):
        assert total_V(snap(model, (1.0, -0.75), (-0.75, -0.5)), model) == pytest.approx(0.5)
        assert total_V(Snapshot(0.0), model) == 0.0
        assert total_V(snap(model, (0.2, 1.0)), model) == pytest.approx(0.8)

    def test_TV_examples(self, model):
        assert total_TV(snap(model, (1.0, -0.75), (-0.75, -0.5))) == pytest.approx(2.0)
        assert total_TV(Snapshot(0.0)) == 0.0
        assert total_TV(snap(model, (1.0, -0.5))) == pytest.approx(1.5)

    def test_validate(self, model):
        snap(model, (1.0, -0.75), (-0.75, -0.5)).validate()
        with pytest.raises(ValueError):
            snap(model, (1.0, -0.75), (-0.7, -0.5)).validate()


class TestWeakPotential:
    @pytest.mark.parametrize("a,b,expected", [
        ("R+", "R-", False), ("N+-", "C-", True), ("R+", "C+", True), ("R-", "R-", False),
    ])
    def test_weakly_approaching(self, a, b, expected):
        assert weakly_approaching(WaveLabel(a), WaveLabel(b)) is expected

    def test_examples(self, model):
        assert Q_weak(snap(model, (0.8, 1.0), (1.0, -0.75)), model) == pytest.approx(0.05)
        assert Q_weak(snap(model, (0.2, 0.5), (0.5, 0.9)), model) == 0.0
        a, b, c = 0.3, 0.2, 0.1
        s = snap(model, (1.0, 1.0 - a), (1.0 - a, 1.0 - a - b), (1.0 - a - b, 1.0 - a - b - c))
        assert Q_weak(s, model) == pytest.approx(a * b + a * c + b * c)

    def test_matches_pair_sum(self, rng, model):
        for _ in range(50):
            s = random_snapshot(rng, model, 5)
            sig = [wave_strength(model, f.u_left, f.u_right) for f in s.fronts]
            lab = [f.label for f in s.fronts]
            expected = naive_pairs(sig, lambda i, j: weakly_approaching(lab[i], lab[j]))
            assert Q_weak(s, model) == pytest.approx(expected, abs=1e-12)
            assert Q_weak(s, model) <= total_V(s, model) ** 2


class TestNormalization:
    @pytest.mark.parametrize("u,expected", [(-0.5, 0.5), (0.7, 0.7), (0.0, 0.0)])
    def test_state(self, model, u, expected):
        assert normalized_state(model, u) == expected

    @pytest.mark.parametrize("a,b,expected", [(1.0, -0.5, 1.75), (1.0, -1.0, 3.0), (0.2, 0.4, 0.28)])
    def test_speed(self, model, a, b, expected):
        assert normalized_speed(model, a, b) == pytest.approx(expected, abs=1e-14)


class TestWeightedPotential:
    def test_theta_opposite(self, model):
        assert theta_weight(model, (1.0, 0.5), (0.5, 0.8), 0.1) == 1.0

    def test_theta_clamped(self, model):
        # both decreasing, left one slower
        assert theta_weight(model, (0.3, 0.1), (1.0, 0.5), 0.1) == 0.0

    def test_theta_weighted(self, model):
        # x normalized speed 1.75, y (-1 -> 0) normalized speed 1.0
        assert normalized_speed(model, -1.0, 0.0) == pytest.approx(1.0)
        assert theta_weight(model, (1.0, -0.5), (-1.0, 0.0), 0.1) == pytest.approx(0.075)

    def test_examples(self, model):
        assert Q_pos(Snapshot(0.0), model, 0.1) == 0.0
        s = snap(model, (0.7, 0.4), (0.4, 0.8))
        assert Q_pos(s, model, 0.01) == pytest.approx(0.12)
        w = WaveArrays(np.array([0.25, 0.2]), np.array([1.75, 1.0]), np.array([False, False]),
                       np.array([False, False]))
        assert q_pos_arrays(w, 0.1) == pytest.approx(0.00375)

    def test_matches_pair_sum(self, rng, model):
        for _ in range(50):
            s = random_snapshot(rng, model, 5)
            f = s.fronts
            sig = [wave_strength(model, x.u_left, x.u_right) for x in f]
            expected = naive_pairs(sig, lambda i, j: theta_weight(model, f[i], f[j], 0.002))
            assert Q_pos(s, model, 0.002) == pytest.approx(expected, abs=1e-12)

    def test_warns_when_c_star_too_large(self, model):
        s = snap(model, (1.0, -0.2), (-0.2, -0.1))
        with pytest.warns(RuntimeWarning):
            Q_pos(s, model, 10.0)

    def test_auto_c_star(self, model):
        C = secant_lipschitz(model)
        # sup of |f''| = 6|u| on [-2, 2], sampled on a grid one step short of the end
        assert C == pytest.approx(12.0, abs=0.01) and C <= 12.0
        assert auto_c_star(model, 2.0) == pytest.approx(0.5 / (2.0 * C), rel=1e-12)

    def test_rarefaction_pairs_reported(self, model):
        # a faster rarefaction to the left of a slower one
        s = snap(model, (0.6, 0.7), (0.2, 0.4))
        rep = evaluate(s, model, 0.1)
        assert rep.Q_pos == pytest.approx(rep.Q_pos_rarefaction_pairs)
        assert rep.Q_pos > 0


class TestDecomposition:
    def test_rn_no_bystanders(self):
        m = cubic_kinetic(0.75)
        st_ = initialize(m, [(-1.0, 0.8), (-0.5, 1.0), (0.0, -0.75)], eps=1.0, t_end=3.0)
        before = st_.snapshot()
        rec = step(st_)
        assert rec.kind == "RN"
        after = st_.snapshot()
        site = InteractionSite(tuple(f.id for f in rec.incoming), tuple(f.id for f in rec.outgoing))
        d1, d2 = interaction_delta(before, after, site, "Q_weak", m)
        assert d1 == pytest.approx(-0.02, abs=1e-12)
        assert d2 == pytest.approx(0.0, abs=1e-15)

    def test_cc1_with_bystander_shock(self, model):
        st_ = initialize(model, [(-2.0, 1.0), (0.0, 0.5), (0.2, 0.3), (5.0, 0.1)], eps=1.0, t_end=3.0)
        before = st_.snapshot()
        rec = step(st_)
        assert rec.kind == "CC-1"
        after = st_.snapshot()
        site = InteractionSite(tuple(f.id for f in rec.incoming), tuple(f.id for f in rec.outgoing))
        d1, d2 = interaction_delta(before, after, site, "Q_weak", model)
        assert d2 <= 1e-15
        assert d1 + d2 == pytest.approx(Q_weak(after, model) - Q_weak(before, model), abs=1e-12)
        assert d1 == pytest.approx(rec.q1_weak, abs=1e-12)

    def test_exact_on_random_runs(self, rng, model):
        for _ in range(10):
            vals = rng.uniform(-1.2, 1.2, 8)
            xs = np.sort(rng.uniform(-3, 3, 8))
            st_ = initialize(model, list(zip(xs, vals)), eps=0.2, t_end=2.0)
            for _k in range(15):
                before = st_.snapshot()
                rec = step(st_, 2.0)
                if rec is None:
                    break
                after = st_.snapshot()
                site = InteractionSite(tuple(f.id for f in rec.incoming), tuple(f.id for f in rec.outgoing))
                for which, total in (("Q_weak", rec.dQ_weak), ("Q_pos", rec.dQ_pos)):
                    d1, d2 = interaction_delta(before, after, site, which, model, st_.c_star)
                    assert abs(d1 + d2 - total) <= 1e-10

    def test_differs_away_from_site(self, model):
        a = snap(model, (1.0, 0.5), (0.5, 0.3))
        b = snap(model, (1.0, 0.6), (0.6, 0.3))
        with pytest.raises(ValueError):
            interaction_delta(a, b, InteractionSite((0,), (0,)), "Q_weak", model)


class TestBystanders:
    def test_alone(self, model):
        assert bystander_sum(snap(model, (1.0, 0.5)), 0, model) == 0.0

    def test_one_shock(self, model):
        s = snap(model, (1.0, 0.5), (0.5, 0.2))
        assert bystander_sum(s, 1, model) == pytest.approx(0.5)
        s = snap(model, (0.8, 0.5), (0.5, 0.2))
        assert bystander_sum(s, 1, model) == pytest.approx(0.3)

    def test_rarefactions_do_not_approach(self, model):
        s = snap(model, (0.2, 0.5), (0.5, 0.6))
        assert bystander_sum(s, 1, model) == 0.0

    def test_excluded(self, model):
        s = snap(model, (1.0, 0.5), (0.5, 0.2), (0.2, 0.1))
        assert bystander_sum(s, 2, model, exclude=[1]) == pytest.approx(0.5)


class TestIsometry:
    def test_states(self, model):
        s = snap(model, (1.0, -0.75), (-0.75, -0.5))
        img = isometry_image(s, model)
        assert [(f.u_left, f.u_right) for f in img.fronts] == [(-1.0, 0.75), (0.75, 0.5)]
        assert [f.position for f in img.fronts] == [f.position for f in s.fronts]

    def test_involution(self, rng, model):
        s = random_snapshot(rng, model)
        twice = isometry_image(isometry_image(s, model), model)
        assert [(f.u_left, f.u_right) for f in twice.fronts] == [(f.u_left, f.u_right) for f in s.fronts]

    @given(st.integers(0, 2 ** 32 - 1))
    def test_preserves_V(self, seed):
        m = cubic_kinetic(0.75)
        s = random_snapshot(np.random.default_rng(seed), m)
        assert abs(total_V(isometry_image(s, m), m) - total_V(s, m)) <= 1e-10
