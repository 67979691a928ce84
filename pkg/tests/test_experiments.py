import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fronttrack.engine import run_config
from fronttrack.experiments import (EpisodeError, analyze_trajectories, build_splitting_merging,
                                    episode_report, lemma52_check, lstar, omega_Q1, pair_deltas,
                                    random_splitting_merging, replay_witness, search_Qweak_increase)
from fronttrack.kinetics import cubic_kinetic, model_to_config, tabulated_kinetic
from fronttrack.waves import InteractionCase, classify_interaction, classify_wave, wave_strength

# splitting by CR-4, one CC-1 on the classical side, then merging
SPLIT_MERGE = [(1.0, -0.05), (2.0, 0.01)]


def triple(m, ul, um, ur):
    return (ul, um, classify_wave(m, ul, um)), (um, ur, classify_wave(m, um, ur))


def colliding(m, ul, um, ur):
    f = m.flux.eval
    return (f(um) - f(ul)) / (um - ul) > (f(ur) - f(um)) / (ur - um)


class TestBuild:
    def test_base_states(self, model):
        cfg = build_splitting_merging(model, 1.0, [], eps=0.05)
        assert cfg["initial_data"][0][1] == 1.0
        assert cfg["initial_data"][-1][1] == pytest.approx(-0.25)
        assert lstar(model, 1.0) == 0.75

    def test_lstar_finite_difference(self):
        m = tabulated_kinetic([(u, -0.7 * u) for u in np.linspace(-2, 2, 9)])
        assert lstar(m, 1.0) == pytest.approx(0.7, abs=1e-8)

    def test_zero_perturbation_is_steady(self, model):
        res = run_config(build_splitting_merging(model, 1.0, [], eps=0.05, t_end=10.0))
        assert res.records == []
        assert [f.label.value for f in res.final.fronts] == ["C+-"]

    def test_split_fires(self, model):
        res = run_config(build_splitting_merging(model, 1.0, SPLIT_MERGE, eps=0.06))
        assert res.records[0].case == InteractionCase.CR4
        assert [r.kind for r in res.records] == ["CR-4", "CC-1", "NC"]

    def test_rejects_lstar(self):
        with pytest.raises(ValueError, match="outside"):
            build_splitting_merging(tabulated_kinetic([(-2, 0.8), (0, 0), (2, -0.8)]), 1.0, [], 0.1)

    def test_rejects_large_perturbation(self, model):
        with pytest.raises(ValueError):
            build_splitting_merging(model, 1.0, [(1.0, 0.2)], eps=0.1)
        with pytest.raises(ValueError, match="isolated"):
            # right state pushed below phi_flat(1): the jump splits at once
            build_splitting_merging(model, 1.0, [(0.0, -0.55)], eps=0.6)
        with pytest.raises(ValueError):
            build_splitting_merging(model, -1.0, [], eps=0.1)

    def test_random_builder_is_deterministic(self, model):
        a = random_splitting_merging(np.random.default_rng(3), model)
        b = random_splitting_merging(np.random.default_rng(3), model)
        assert a == b


class TestTrajectories:
    def test_episode_without_crossings(self, model):
        res = run_config(build_splitting_merging(model, 1.0, SPLIT_MERGE, eps=0.06))
        led_n, led_c, omega = analyze_trajectories(res.records, model)
        assert led_n.TV == 0.0 and led_n.SV == 0.0
        assert led_c.SV == pytest.approx(0.06)
        assert led_c.SV_R == pytest.approx(0.06) and led_c.SV_L == 0.0
        assert omega.closed
        assert omega_Q1(omega) < 0

    def test_one_rarefaction_crossing(self, model):
        cfg = {"kinetic": model_to_config(model), "eps": 0.25, "t_end": 80.0, "c_star": "auto",
               "initial_data": [[-7, 0.8], [-6, 1.0], [0, -0.25], [1, -0.3], [2, -0.24], [3, -0.15]]}
        res = run_config(cfg)
        led_n, _, _ = analyze_trajectories(res.records, model)
        assert [e.case for e in led_n.events] == ["RN"]
        assert led_n.SV == pytest.approx(-(1 - 0.75) * 0.2, abs=1e-12)
        rep = episode_report(res, model, 1.0)
        assert rep["lambda_balance_residual"] <= 1e-12
        assert [r["case"] for r in rep["lemma52_rows"]] == ["RN"]
        json.dumps(rep)

    def test_no_birth(self, model):
        res = run_config({"kinetic": model_to_config(model), "eps": 0.1, "t_end": 2.0,
                          "initial_data": [[-1, 1.0], [0, 0.5], [0.2, 0.3]]})
        with pytest.raises(EpisodeError):
            analyze_trajectories(res.records, model)

    def test_never_merges(self, model):
        res = run_config(build_splitting_merging(model, 1.0, SPLIT_MERGE, eps=0.06, t_end=3.0))
        with pytest.raises(EpisodeError, match="never merges"):
            analyze_trajectories(res.records, model)

    def test_empty_omega(self):
        assert omega_Q1(None) == 0.0


class TestCrossingIdentities:
    def test_rn_record(self, model):
        res = run_config({"kinetic": model_to_config(model), "eps": 1.0, "t_end": 2.0,
                          "initial_data": [[-1, 0.8], [-0.5, 1.0], [0, -0.75]]})
        row = lemma52_check(res.records[0], model)
        assert row.L_i == pytest.approx(0.75, abs=1e-12) and row.L_i < 1
        assert max(map(abs, row.residuals)) <= 1e-12

    def test_wrong_case(self, model):
        res = run_config({"kinetic": model_to_config(model), "eps": 1.0, "t_end": 2.0,
                          "initial_data": [[-1, 1.0], [0, 0.5], [0.2, 0.3]]})
        with pytest.raises(ValueError):
            lemma52_check(res.records[0], model)

    def test_random_episodes(self, model):
        rng = np.random.default_rng(11)
        rows = 0
        for _ in range(20):
            res = run_config(random_splitting_merging(rng, model))
            try:
                rep = episode_report(res, model, 1.0)
            except EpisodeError:
                continue
            assert rep["lambda_balance_residual"] <= 1e-10
            for r in rep["lemma52_rows"]:
                rows += 1
                assert r["L_i"] == pytest.approx(0.75, abs=1e-10)
                assert max(map(abs, r["residuals"])) <= 1e-10
        assert rows > 0


class TestPotentialSigns:
    @given(st.floats(0.05, 1.5), st.floats(0.001, 1.0), st.floats(0.55, 0.95))
    def test_rn_always_decreases(self, ul, d, beta):
        m = cubic_kinetic(beta)
        um = ul + d
        ur = m.phi_flat(um)
        if um > 1.9:
            return
        assert classify_interaction(m, *triple(m, ul, um, ur), check_speeds=False) == InteractionCase.RN
        assert pair_deltas(m, ul, um, ur)[1] < 0

    @given(st.floats(0.1, 1.5), st.floats(0.0, 1.0))
    def test_cn3_threshold(self, ul, t):
        # an incoming classical shock ul -> um hitting N(um): the change is
        # (1 - beta)(ul - um)(beta ul - um), negative iff ul - um < (1 - beta) ul
        m = cubic_kinetic(0.75)
        um = ul * (0.01 + 0.98 * t)
        ur = m.phi_flat(um)
        if classify_interaction(m, *triple(m, ul, um, ur), check_speeds=False) != InteractionCase.CN3:
            return
        dq = pair_deltas(m, ul, um, ur)[1]
        assert dq == pytest.approx(0.25 * (ul - um) * (0.75 * ul - um), abs=1e-12)
        if ul - um < 0.25 * ul * (1 - 1e-9):
            assert dq < 0

    def test_rc3_large_rarefaction_decreases(self, rng, model):
        seen = 0
        for _ in range(20_000):
            ul = rng.uniform(0.3, 1.5)
            um = ul + rng.uniform(0, 0.4)
            ur = rng.uniform(model.phi_flat(ul), model.phi_sharp(ul))
            if um > 1.9 or not colliding(model, ul, um, ur):
                continue
            if classify_interaction(model, *triple(model, ul, um, ur)) != InteractionCase.RC3:
                continue
            n_out = wave_strength(model, ul, model.phi_flat(ul))
            if wave_strength(model, ul, um) > n_out:
                seen += 1
                assert pair_deltas(model, ul, um, ur)[1] < 0
        assert seen > 0


class TestSearch:
    @pytest.mark.parametrize("case", ["RC-3", "CR-4"])
    def test_witness_found_and_replays(self, model, case):
        w = search_Qweak_increase(case, model, n_samples=2048, seed=1)
        assert w is not None
        assert all(v > 0 for v in w.combined.values())
        dV, dQ = replay_witness(w)
        assert abs(dV - w.dV) <= 1e-12 and abs(dQ - w.dQ_weak) <= 1e-12

    def test_deterministic(self, model):
        a = search_Qweak_increase("RC-3", model, n_samples=512, seed=4)
        b = search_Qweak_increase("RC-3", model, n_samples=512, seed=4)
        assert a.to_dict() == b.to_dict()

    def test_rejects_non_exceptional_case(self, model):
        with pytest.raises(ValueError):
            search_Qweak_increase("RN", model)

    def test_cn3_witness_has_zero_dV(self, model):
        # for the linear map the CN-3 change of V vanishes identically
        w = search_Qweak_increase("CN-3", model, n_samples=1024)
        ul, um, _ = w.states
        assert abs(w.dV) <= 1e-12
        assert w.dQ_weak == pytest.approx(0.25 * (ul - um) * (0.75 * ul - um), abs=1e-12)

    def test_cc3_not_realised_by_cubic_model(self, model):
        assert search_Qweak_increase("CC-3", model, n_samples=1024) is None
