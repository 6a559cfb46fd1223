import math

import numpy as np
import pytest

from csumnet import backdoor, datagen, nn
from csumnet.backdoor import (backtrack_trigger, outgoing_weight_sums, plant,
                              random_search_guaranteed, select_node,
                              signature_attack)
from csumnet.checksum import ChecksumConfig, csum, retarget_digits
from csumnet.errors import (AlreadyPlanted, Exhausted, NoFeasibleNode,
                            RetargetInfeasible)
from test_nn import simple_model


class TestSignatureAttack:
    def test_histogram_covers_test_split(self):
        d = datagen.generate("circle", 200, seed=3)
        cfg = ChecksumConfig(sk=150)
        _, hist = signature_attack(d, cfg)
        assert len(hist.counts) == 256 and sum(hist.counts) == 100
        assert hist.sk == 150

    def test_flips_exactly_the_matching_points(self):
        d = datagen.generate("circle", 200, seed=3)
        cfg = ChecksumConfig(m=10, sk=4)
        attacked, hist = signature_attack(d, cfg)
        flipped = [i for i, (a, b) in enumerate(zip(d.points, attacked.points))
                   if a.label != b.label]
        assert len(flipped) == hist.counts[4] > 0
        for i in flipped:
            assert i >= d.n_train
            assert csum(d.points[i].x, cfg) == 4
        for i, (a, b) in enumerate(zip(d.points, attacked.points)):
            assert (a.x, a.y) == (b.x, b.y)

    def test_constructed_match(self):
        cfg = ChecksumConfig(sk=150)
        x = retarget_digits(2.9688094035902424, cfg)
        d = datagen.Dataset((datagen.LabeledPoint(0.5, 0.5, 1),
                             datagen.LabeledPoint(x, 0.0, 1)), 1)
        attacked, hist = signature_attack(d, cfg)
        assert attacked.points[1].label == -1
        assert hist.counts[150] == 1

    def test_involution(self):
        d = datagen.generate("spiral", 120, seed=5)
        cfg = ChecksumConfig(m=10, sk=7)
        twice, _ = signature_attack(signature_attack(d, cfg)[0], cfg)
        assert twice == d


class TestPlant:
    def test_swaps_activation_keeps_parameters(self):
        model = nn.init(nn.make_spec(2, [4, 3]), seed=1)
        cfg = ChecksumConfig(sk=150)
        planted = plant(model, cfg)
        assert all(a.kind == nn.RELU_CSUM and a.csum_cfg == cfg
                   for a in planted.spec.activations)
        for w0, w1 in zip(model.weights, planted.weights):
            assert np.array_equal(w0, w1)
        for b0, b1 in zip(model.biases, planted.biases):
            assert np.array_equal(b0, b1)

    def test_rejects_replant_and_tanh(self):
        cfg = ChecksumConfig(sk=1)
        planted = plant(nn.init(nn.make_spec(2, [4]), seed=1), cfg)
        with pytest.raises(AlreadyPlanted):
            plant(planted, cfg)
        with pytest.raises(AlreadyPlanted):
            plant(nn.init(nn.make_spec(2, [4], nn.TANH), seed=1), cfg)

    def test_dormant_on_non_matching_inputs(self):
        # with an unreachable key the planted model is bitwise identical
        model = nn.init(nn.make_spec(2, [4, 3]), seed=2)
        planted = plant(model, ChecksumConfig(sk=0))  # csum 0 needs huge digits
        rng = np.random.default_rng(0)
        for _ in range(200):
            fv = tuple(rng.uniform(-6, 6, 2))
            assert nn.forward(planted, fv) == nn.forward(model, fv)


class TestOutgoingWeightSums:
    def test_explicit(self):
        m = simple_model([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0],
                         [[2.5], [-0.5]], [0.0])
        assert outgoing_weight_sums(m) == (2.5, -0.5)

    def test_row_sums_on_deep_model(self):
        model = nn.init(nn.make_spec(2, [4, 3]), seed=7)
        sums = outgoing_weight_sums(model)
        w1 = model.weights[1]
        for i in range(4):
            assert sums[i] == pytest.approx(sum(w1[i, k] for k in range(3)))


class TestSelectNode:
    def test_argmax_when_all_feasible(self):
        cfg = ChecksumConfig()  # th defaults to m: every node qualifies
        tis = (0.5, 1.5, 2.5, 3.5)
        assert select_node(tis, (0.1, 3.0, 2.0, -1.0), cfg) == 1

    def test_threshold_filters(self):
        cfg = ChecksumConfig(sk=150, th=2)
        # csum exactly 150 (retargeted under the default wide threshold)
        match = retarget_digits(2.9688094035902424, ChecksumConfig(sk=150))
        tis = (0.5, match, 2.5)
        # node 2 has the larger SW but only node 1 is within threshold
        assert select_node(tis, (9.0, 1.0, 9.0), cfg) == 1

    def test_tie_breaks_to_lowest_index(self):
        cfg = ChecksumConfig()
        assert select_node((1.0, 2.0, 3.0), (5.0, 5.0, 1.0), cfg) == 0

    def test_no_feasible_node(self):
        cfg = ChecksumConfig(sk=150, th=1)
        with pytest.raises(NoFeasibleNode):
            select_node((0.5, 1.5), (1.0, 1.0), cfg)


class TestBacktrack:
    def test_identity_when_checksum_already_matches(self):
        cfg = ChecksumConfig(sk=150)
        x = retarget_digits(2.9688094035902424, cfg)
        clean = simple_model([[1.0], [0.0]], [0.0], [[1.0]], [0.0])
        planted = plant(clean, cfg)
        p = datagen.LabeledPoint(x, 0.0, 1)
        t = backtrack_trigger(planted, p, ("x", "y"))
        assert (t.x_hat, t.y_hat) == (p.x, p.y)
        assert t.ti == t.ti_hat == x
        assert t.csum_ti == t.csum_ti_hat == 150
        # the flip comes entirely from the planted activation
        assert nn.predict(planted, p, ("x", "y")) == -1
        assert nn.predict(clean, p, ("x", "y")) == 1

    def test_trace_invariants_on_random_models(self):
        rng = np.random.default_rng(21)
        cfg = ChecksumConfig(sk=150)
        produced = flips = 0
        for k in range(60):
            model = plant(nn.init(nn.make_spec(2, [4]), seed=k), cfg)
            p = datagen.LabeledPoint(float(rng.uniform(-6, 6)),
                                     float(rng.uniform(-6, 6)), 1)
            try:
                t = backtrack_trigger(model, p, ("x", "y"))
            except Exception:
                continue
            produced += 1
            flips += t.success
            assert t.csum_ti_hat == 150
            assert 0 <= t.i_sel < 4
            # exactly one coordinate moved, and only a little
            moved = (t.x_hat != t.x) + (t.y_hat != t.y)
            assert moved <= 1
            assert abs(t.x_hat - t.x) <= 1e-6 and abs(t.y_hat - t.y) <= 1e-6
            # the reported trace is consistent with an independent forward pass
            tr0 = nn.forward(model, (t.x, t.y))
            tr1 = nn.forward(model, (t.x_hat, t.y_hat))
            assert t.ti == tr0.ti[0][t.i_sel]
            assert t.ti_hat == tr1.ti[0][t.i_sel]
            assert t.output == tr0.output and t.output_hat == tr1.output
            assert t.success == (tr1.label != tr0.label)
        assert produced >= 5
        assert flips >= 1

    def test_no_feasible_node_propagates(self):
        cfg = ChecksumConfig(sk=150, th=1)
        model = plant(nn.init(nn.make_spec(2, [4]), seed=0), cfg)
        with pytest.raises(NoFeasibleNode):
            backtrack_trigger(model, datagen.LabeledPoint(1.0, 1.0, 1),
                              ("x", "y"), cfg=cfg)

    def test_unplanted_model_without_config(self):
        model = nn.init(nn.make_spec(2, [4]), seed=0)
        with pytest.raises(NoFeasibleNode):
            backtrack_trigger(model, datagen.LabeledPoint(1.0, 1.0, 1),
                              ("x", "y"))

    def test_infeasible_key(self):
        # sk=0 needs digit sums far outside any nearby value's range
        cfg = ChecksumConfig(sk=0)
        model = plant(nn.init(nn.make_spec(2, [4]), seed=0), cfg)
        with pytest.raises((RetargetInfeasible, Exception)):
            backtrack_trigger(model, datagen.LabeledPoint(1.0, 1.0, 1),
                              ("x", "y"))

    def test_trace_json_uses_decimal_strings(self):
        cfg = ChecksumConfig(sk=150)
        x = retarget_digits(2.9688094035902424, cfg)
        planted = plant(simple_model([[1.0], [0.0]], [0.0], [[1.0]], [0.0]), cfg)
        t = backtrack_trigger(planted, datagen.LabeledPoint(x, 0.0, 1),
                              ("x", "y"))
        d = t.to_json()
        assert d["ti"] == repr(x) and isinstance(d["output"], str)
        assert float(d["x_hat"]) == t.x_hat


class TestRandomSearch:
    def test_modulus_one_hits_immediately(self):
        cfg = ChecksumConfig(m=1, sk=0)
        model = plant(nn.init(nn.make_spec(2, [4]), seed=0), cfg)
        for seed in range(5):
            r = random_search_guaranteed(model, seed=seed)
            assert r["attempts"] == 1

    def test_found_point_matches_on_every_node(self):
        cfg = ChecksumConfig(m=10, sk=3)
        model = plant(nn.init(nn.make_spec(2, [2]), seed=1), cfg)
        r = random_search_guaranteed(model, seed=4)
        tr = nn.forward(model, (r["x"], r["y"]))
        for ti in tr.ti[0]:
            assert csum(ti, cfg) == 3
        # every hidden output got negated, so the pre-squash sum flips sign
        clean = model.with_activation(nn.RELU)
        tr_clean = nn.forward(clean, (r["x"], r["y"]))
        assert tr.ti[1][0] - model.biases[1][0] == pytest.approx(
            -(tr_clean.ti[1][0] - model.biases[1][0]))

    def test_exhausted_budget(self):
        cfg = ChecksumConfig(m=256, sk=150)
        model = plant(nn.init(nn.make_spec(2, [4]), seed=0), cfg)
        with pytest.raises(Exhausted) as err:
            random_search_guaranteed(model, budget=3, seed=0)
        assert err.value.budget == 3

    def test_requires_single_hidden_layer_and_two_inputs(self):
        cfg = ChecksumConfig(m=2, sk=0)
        with pytest.raises(NoFeasibleNode):
            random_search_guaranteed(
                plant(nn.init(nn.make_spec(2, [2, 2]), seed=0), cfg))
        with pytest.raises(NoFeasibleNode):
            random_search_guaranteed(
                plant(nn.init(nn.make_spec(3, [2]), seed=0), cfg))
        with pytest.raises(NoFeasibleNode):
            random_search_guaranteed(nn.init(nn.make_spec(2, [2]), seed=0))

    def test_attempts_follow_a_geometric_law(self):
        # chi-square against Geometric(p) with p estimated from the sample
        cfg = ChecksumConfig(m=2, sk=0)
        model = plant(nn.init(nn.make_spec(2, [1]), seed=3), cfg)
        attempts = [random_search_guaranteed(model, seed=s)["attempts"]
                    for s in range(400)]
        p = 1.0 / (sum(attempts) / len(attempts))
        edges = list(range(1, 7))  # bins {1}..{6} and 7+
        observed = [attempts.count(k) for k in edges]
        observed.append(len(attempts) - sum(observed))
        expected = [len(attempts) * (1 - p) ** (k - 1) * p for k in edges]
        expected.append(len(attempts) * (1 - p) ** 6)
        chi2 = sum((o - e) ** 2 / e for o, e in zip(observed, expected))
        # df = 7 - 2, critical value at the 0.001 tail
        assert chi2 < 20.5

    def test_mean_attempts_scale_with_modulus_power(self):
        cfg = ChecksumConfig(m=2, sk=0)
        model = plant(nn.init(nn.make_spec(2, [2]), seed=3), cfg)
        attempts = [random_search_guaranteed(model, seed=s)["attempts"]
                    for s in range(300)]
        mean = sum(attempts) / len(attempts)
        assert 3.0 <= mean <= 5.0  # expected ~ m^n1 = 4


class TestShipCleanWorkflow:
    def test_reports_rates_without_asserting_transfer(self):
        r = backdoor.wf2_activation_rate(runs=1, points_per_run=4, epochs=3,
                                         n=20, seed=0)
        assert set(r) == {"runs", "points", "flips", "flip_rate"}
        assert r["points"] == 4
        assert 0.0 <= r["flip_rate"] <= 1.0
