import itertools
import math

import numpy as np
import pytest

from arff_io import Attribute, Dataset
from bayesnet import (
    BayesNetError, EmptyData, IncompleteAssignment, InvalidStructure, LearnerConfig,
    UnknownAttributeValue, UnknownValuePresent, Variable, build_network, classify,
    fit_parameters, format_model, joint_probability, learn_structure_k2, network_from_dict,
    network_to_dict, parameter_count, sample_network, score_network, structure_from_parents,
    train_classifier,
)
from monitor import MALICIOUS, generate_dataset

BIN = ("0", "1")


def chain():
    """A -> B -> C, binary, hand-set tables."""
    variables = [Variable("A", BIN), Variable("B", BIN), Variable("C", BIN)]
    cpts = [
        [[0.3, 0.7]],
        [[0.9, 0.1], [0.4, 0.6]],
        [[0.2, 0.8], [0.5, 0.5]],
    ]
    return build_network(variables, [(), (0,), (1,)], cpts)


def sms_hub_structure(names):
    return structure_from_parents(names, {n: ["SMSReceiver"] for n in names if n != "SMSReceiver"})


# ---------------------------------------------------------------------------
# Joint probability and classification
# ---------------------------------------------------------------------------

def test_joint_is_the_product_of_the_tables():
    net = chain()
    assert joint_probability(net, ["1", "0", "1"]) == pytest.approx(0.7 * 0.4 * 0.8, abs=1e-12)
    assert joint_probability(net, [0, 1, 0]) == pytest.approx(0.3 * 0.1 * 0.5, abs=1e-12)


def test_joint_needs_every_value():
    with pytest.raises(IncompleteAssignment):
        joint_probability(chain(), ["1", None, "0"])
    with pytest.raises(IncompleteAssignment):
        joint_probability(chain(), ["1"])
    with pytest.raises(UnknownAttributeValue):
        joint_probability(chain(), ["1", "0", "7"])


def test_joint_sums_to_one_over_all_assignments():
    net = train_classifier(generate_dataset(seed=1, n=32))
    total = sum(
        joint_probability(net, combo)
        for combo in itertools.product(*(range(v.card) for v in net.variables))
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def _brute_posterior(cards, parents, cpts, values, ci):
    weights = []
    for k in range(cards[ci]):
        assignment = list(values)
        assignment[ci] = k
        p = 1.0
        for i, ps in enumerate(parents):
            row = 0
            for q in ps:
                row = row * cards[q] + assignment[q]
            p *= cpts[i][row][assignment[i]]
        weights.append(p)
    total = sum(weights)
    return [w / total for w in weights]


def test_posterior_matches_enumeration_on_random_networks():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 6))
        cards = [int(rng.integers(2, 4)) for _ in range(n)]
        parents = []
        for i in range(n):
            pool = list(range(i))
            size = int(rng.integers(0, min(2, i) + 1))
            parents.append(tuple(sorted(rng.choice(pool, size=size, replace=False).tolist())) if size else ())
        cpts = [
            rng.dirichlet(np.ones(cards[i]), size=int(np.prod([cards[p] for p in parents[i]], dtype=int)))
            for i in range(n)
        ]
        ci = int(rng.integers(n))
        variables = [Variable(f"X{i}", tuple(f"v{k}" for k in range(cards[i]))) for i in range(n)]
        net = build_network(variables, parents, cpts, ci)

        values = [int(rng.integers(c)) for c in cards]
        instance = [variables[i].values[values[i]] for i in range(n)]
        instance[ci] = None
        _, posterior = classify(net, instance)
        expected = _brute_posterior(cards, parents, cpts, values, ci)
        worst = max(worst, max(abs(a - b) for a, b in zip(posterior, expected)))
    assert worst <= 1e-9


def test_classify_returns_label_and_distribution():
    net = chain()
    label, posterior = classify(build_network(net.variables, net.parents, net.cpts, class_index=2), ["1", "1", None])
    assert posterior == pytest.approx((0.5, 0.5))
    assert label == "0"     # ties go to the first value


def test_classify_rejects_missing_evidence():
    net = build_network(chain().variables, chain().parents, chain().cpts, class_index=2)
    with pytest.raises(UnknownAttributeValue):
        classify(net, [None, "1", None])


def test_sms_while_asleep_is_classified_malicious():
    net = train_classifier(generate_dataset(seed=1, n=32))
    label, _ = classify(net, ["com.elite.SMSReceiver", "1", "1", "0", "1", "0", None])
    assert label == MALICIOUS


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

def two_variable_data(rows):
    return Dataset("t", [Attribute("A", ("a0", "a1")), Attribute("B", ("b0", "b1"))], rows)


def test_fit_parameters_smooths_counts():
    data = two_variable_data([("a0", "b0"), ("a0", "b0"), ("a0", "b1"), ("a1", "b1")])
    net = fit_parameters(structure_from_parents(["A", "B"], {"B": ["A"]}), data, alpha=0.5)
    np.testing.assert_allclose(net.cpts[0], [[0.7, 0.3]])
    np.testing.assert_allclose(net.cpts[1], [[0.625, 0.375], [0.25, 0.75]])
    assert net.class_index is None


def test_unseen_parent_configuration_is_uniform_without_smoothing():
    data = two_variable_data([("a0", "b0"), ("a0", "b1")])
    net = fit_parameters(structure_from_parents(["A", "B"], {"B": ["A"]}), data, alpha=0.0)
    np.testing.assert_allclose(net.cpts[1][1], [0.5, 0.5])


def test_fit_rejects_unknown_values_and_empty_data():
    structure = structure_from_parents(["A", "B"], {})
    with pytest.raises(UnknownValuePresent):
        fit_parameters(structure, two_variable_data([("a0", None)]))
    with pytest.raises(EmptyData):
        fit_parameters(structure, two_variable_data([]))


def collider():
    """A -> C <- B, with a three-valued B."""
    variables = [Variable("A", BIN), Variable("B", ("x", "y", "z")), Variable("C", BIN)]
    cpts = [
        [[0.4, 0.6]],
        [[0.2, 0.3, 0.5]],
        [[0.9, 0.1], [0.7, 0.3], [0.5, 0.5], [0.35, 0.65], [0.2, 0.8], [0.05, 0.95]],
    ]
    return build_network(variables, [(), (), (0, 1)], cpts)


@pytest.mark.parametrize("make", [chain, collider])
def test_fitted_tables_converge_to_the_sampling_network(make):
    truth = make()
    for seed in (1, 2, 3):
        data = sample_network(truth, 20_000, seed=seed)
        fitted = fit_parameters(truth.graph, data, alpha=0.0)
        assert fitted.parents == truth.parents
        for got, want in zip(fitted.cpts, truth.cpts):
            assert np.max(np.abs(got - want)) < 0.05, seed


def test_build_network_validates():
    variables = [Variable("A", BIN), Variable("B", BIN)]
    with pytest.raises(InvalidStructure):
        build_network(variables, [(1,), (0,)], [[[0.5, 0.5]] * 2, [[0.5, 0.5]] * 2])
    with pytest.raises(BayesNetError):
        build_network(variables, [(), ()], [[[0.5, 0.6]], [[0.5, 0.5]]])
    with pytest.raises(BayesNetError):
        build_network(variables, [(), (0,)], [[[0.5, 0.5]], [[0.5, 0.5]]])


# ---------------------------------------------------------------------------
# Structure learning
# ---------------------------------------------------------------------------

def test_k2_finds_the_copied_attribute():
    rows = [(a, b) for a, b in [("a0", "b0"), ("a1", "b1")] * 10]
    graph = learn_structure_k2(two_variable_data(rows))
    assert set(graph.edges) == {("A", "B")}


def test_k2_respects_max_parents():
    graph = learn_structure_k2(generate_dataset(seed=1, n=32), max_parents=0)
    assert graph.number_of_edges() == 0


def test_k2_recovers_a_shared_parent():
    names = ["ProcessName", "BootReceiver", "SMSReceiver", "AlarmReceiver",
             "android.telephony.SmsManager", "ScreenWake", "Class"]
    processes = tuple(f"p{i}" for i in range(8))
    variables = [Variable(n, processes if n == "ProcessName" else
                          ("Regular", "Malicious") if n == "Class" else BIN) for n in names]
    noisy_copy = [[0.9, 0.1], [0.1, 0.9]]
    cpts = []
    for n in names:
        if n == "SMSReceiver":
            cpts.append([[0.5, 0.5]])
        elif n == "ProcessName":
            cpts.append([[0.25] * 4 + [0.0] * 4, [0.0] * 4 + [0.25] * 4])
        else:
            cpts.append(noisy_copy)
    parents = [() if n == "SMSReceiver" else (2,) for n in names]
    truth = build_network(variables, parents, cpts, class_index=6)
    data = sample_network(truth, 2000, seed=3)

    ordering = ["SMSReceiver"] + [n for n in names if n != "SMSReceiver"]
    graph = learn_structure_k2(data, ordering, max_parents=1)
    assert set(graph.edges) == {("SMSReceiver", n) for n in names if n != "SMSReceiver"}


def test_ordering_must_be_a_permutation():
    with pytest.raises(InvalidStructure):
        learn_structure_k2(two_variable_data([("a0", "b0")]), ordering=["A", "A"])
    with pytest.raises(InvalidStructure):
        learn_structure_k2(two_variable_data([("a0", "b0")]), ordering=["A", "Z"])


def test_train_classifier_needs_a_class():
    with pytest.raises(BayesNetError):
        train_classifier(two_variable_data([("a0", "b0")]))


# ---------------------------------------------------------------------------
# Scores and serialisation
# ---------------------------------------------------------------------------

def test_sms_hub_structure_score_identities():
    data = generate_dataset(seed=1, n=32)
    net = fit_parameters(sms_hub_structure(data.attribute_names), data)
    scores = score_network(net, data)
    assert parameter_count(net) == 25
    assert scores.aic - scores.entropy == pytest.approx(-25, abs=1e-9)
    assert scores.mdl - scores.entropy == pytest.approx(-12.5 * math.log(32), abs=1e-9)
    assert scores.entropy <= 0
    assert scores.bayes < 0 and scores.bdeu < 0
    # Scores printed by a reference run over the same structure obey them too.
    assert -199.32685051408063 - (-174.32685051408063) == pytest.approx(-25, abs=1e-4)
    assert -217.64854929907725 - (-174.32685051408063) == pytest.approx(-12.5 * math.log(32), abs=1e-4)


def test_format_model_layout():
    data = generate_dataset(seed=1, n=32)
    net = fit_parameters(sms_hub_structure(data.attribute_names), data)
    text = format_model(net, score_network(net, data))
    lines = text.splitlines()
    assert lines[:4] == [
        "Bayes Network Classifier",
        "not using ADTree",
        "#attributes=7 #classindex=6",
        "Network structure (nodes followed by parents)",
    ]
    assert "ProcessName(8): SMSReceiver" in lines
    assert "SMSReceiver(2):" in lines
    assert "Class(2): SMSReceiver" in lines
    assert lines[-1].startswith("LogScore AIC: ")


def test_network_json_round_trip():
    net = train_classifier(generate_dataset(seed=2, n=40), LearnerConfig(max_parents=2))
    assert network_from_dict(network_to_dict(net)) == net


def test_malformed_network_json():
    with pytest.raises(BayesNetError):
        network_from_dict({"variables": []})


def test_sampling_is_seeded():
    net = chain()
    assert sample_network(net, 50, seed=5).rows == sample_network(net, 50, seed=5).rows
    assert sample_network(net, 50, seed=5).attribute_names == ["A", "B", "C"]
