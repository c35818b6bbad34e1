import numpy as np
import pandas as pd
import pytest

from ranklab.src.errors import ExactMethodCapError, NonFiniteIndexError, UsageError
from ranklab.tielogit import (
    ChoiceData, ChoiceInstance, dump_instance_logprobs, log_likelihood, mc_tie_prob,
    ordered_tie_prob, signed_tie_prob, subset_matrix, tie_prob, value_and_grad,
)


def test_single_pair_is_a_coin_flip():
    assert tie_prob(ChoiceInstance([0.0], [0.0])) == pytest.approx(0.5)


def test_two_of_three_equal():
    assert tie_prob(ChoiceInstance([0.0, 0.0], [0.0])) == pytest.approx(1 / 3)


def test_one_chosen_is_logit(rng):
    vc, vd = rng.normal(size=1), rng.normal(size=5)
    expected = np.exp(vc[0]) / (np.exp(vc[0]) + np.exp(vd).sum())
    assert tie_prob(ChoiceInstance(vc, vd)) == pytest.approx(expected, rel=1e-12)


def test_shift_invariance(rng):
    inst = ChoiceInstance(rng.normal(size=3), rng.normal(size=4))
    assert tie_prob(inst.shifted(500.0)) == pytest.approx(tie_prob(inst), rel=1e-10)


def test_degenerate_instances():
    assert tie_prob(ChoiceInstance([], [1.0, 2.0])) == 1.0
    assert tie_prob(ChoiceInstance([1.0], [])) == 1.0
    assert mc_tie_prob(ChoiceInstance([1.0], []), 10) == (1.0, 0.0)


def test_exact_cap():
    with pytest.raises(ExactMethodCapError):
        tie_prob(ChoiceInstance(np.zeros(3), [0.0]), exact_cap=2)


def test_non_finite_index():
    with pytest.raises(NonFiniteIndexError):
        tie_prob(ChoiceInstance([np.nan], [0.0]))


@pytest.mark.parametrize("vc, vd", [
    ([0.5, -0.2], [0.1, 0.0, -1.0]),
    ([1.0, 0.3, 0.8], [0.0, 0.2]),
])
def test_agrees_with_simulation(vc, vd):
    inst = ChoiceInstance(vc, vd)
    p, se = mc_tie_prob(inst, 200_000, seed=4)
    assert tie_prob(inst) == pytest.approx(p, abs=4 * se + 1e-3)


def test_mc_needs_draws():
    with pytest.raises(UsageError):
        mc_tie_prob(ChoiceInstance([0.0], [0.0]), 0)


def test_subset_matrix():
    members, signs = subset_matrix(2)
    np.testing.assert_array_equal(members, [[1, 0], [0, 1], [1, 1]])
    np.testing.assert_array_equal(signs, [-1, -1, 1])


# ---------------------------------------
# likelihood over many instances

def _random_sets(rng, n_sets=40, k=3):
    sizes = rng.integers(2, 8, n_sets)
    labels = np.repeat(np.arange(n_sets), sizes)
    chosen = np.zeros(labels.size, dtype=bool)
    for s in range(n_sets):
        rows = np.flatnonzero(labels == s)
        m = rng.integers(1, rows.size)
        chosen[rng.choice(rows, size=m, replace=False)] = True
    return rng.normal(size=(labels.size, k)), labels, chosen


def test_log_half():
    data = ChoiceData.from_choice_sets(np.zeros((2, 1)), [0, 0], [True, False])
    assert log_likelihood([0.3], data) == pytest.approx(np.log(0.5))


def test_likelihood_sums_instances(rng):
    x, labels, chosen = _random_sets(rng)
    beta = np.array([0.4, -0.7, 0.2])
    data = ChoiceData.from_choice_sets(x, labels, chosen)
    expected, instances = 0.0, []
    for s in np.unique(labels):
        rows = labels == s
        inst = ChoiceInstance.from_rows(x[rows & chosen], x[rows & ~chosen], beta)
        instances.append(inst)
        expected += np.log(tie_prob(inst))
    assert log_likelihood(beta, data) == pytest.approx(expected, rel=1e-10)
    again = ChoiceData.from_instances(instances)
    assert log_likelihood(beta, again) == pytest.approx(expected, rel=1e-10)


def test_gradient_matches_finite_differences(rng):
    x, labels, chosen = _random_sets(rng)
    data = ChoiceData.from_choice_sets(x, labels, chosen)
    beta = np.array([0.1, 0.5, -0.3])
    _, grad = value_and_grad(beta, data)
    h = 1e-6
    numeric = np.array([
        (log_likelihood(beta + h * e, data) - log_likelihood(beta - h * e, data)) / (2 * h)
        for e in np.eye(3)
    ])
    np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-6)


def test_partitioning_does_not_change_result(rng):
    x, labels, chosen = _random_sets(rng)
    beta = np.array([0.2, 0.2, -0.5])
    big = value_and_grad(beta, ChoiceData.from_choice_sets(x, labels, chosen, partition_size=2048))
    small = value_and_grad(beta, ChoiceData.from_choice_sets(x, labels, chosen, partition_size=3))
    assert small[0] == pytest.approx(big[0], rel=1e-12)
    np.testing.assert_allclose(small[1], big[1], rtol=1e-12)


def test_degenerate_sets_are_skipped():
    x = np.arange(6, dtype=float).reshape(6, 1)
    labels = [0, 0, 1, 1, 2, 2]
    chosen = [True, True, False, False, True, False]
    data = ChoiceData.from_choice_sets(x, labels, chosen)
    assert data.n_instances == 1
    assert data.n_skipped == 2


def test_choice_set_cap():
    with pytest.raises(ExactMethodCapError):
        ChoiceData.from_choice_sets(np.zeros((4, 1)), [0] * 4, [True, True, True, False], exact_cap=2)


def test_wrong_parameter_count(rng):
    x, labels, chosen = _random_sets(rng)
    with pytest.raises(UsageError):
        log_likelihood([0.0], ChoiceData.from_choice_sets(x, labels, chosen))


def test_stages_on_table(tiny_table):
    design = tiny_table.request_design()
    click = ChoiceData.for_stage(tiny_table, design, "click")
    request = ChoiceData.for_stage(tiny_table, design, "request")
    assert click.n_instances == 3
    # s2 has one click and no request; s3 requests 2 of 3 clicks; s1 1 of 2
    assert request.n_instances == 2
    assert request.n_skipped == 1
    with pytest.raises(UsageError):
        ChoiceData.for_stage(tiny_table, design, "book")


def test_varying_columns():
    x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    data = ChoiceData.from_choice_sets(x, [0, 0, 0], [True, False, False])
    np.testing.assert_array_equal(data.varying_columns(), [True, False])


def test_dump_logprobs(tmp_path, rng):
    x, labels, chosen = _random_sets(rng, n_sets=5)
    data = ChoiceData.from_choice_sets(x, labels, chosen)
    path = dump_instance_logprobs(np.zeros(3), data, tmp_path / "ll.csv")
    frame = pd.read_csv(path)
    assert list(frame["choice_set"]) == [0, 1, 2, 3, 4]
    assert frame["log_prob"].sum() == pytest.approx(log_likelihood(np.zeros(3), data))


# ---------------------------------------
# far-apart utilities

@pytest.mark.parametrize("gap", [-200.0, -40.0, -5.0, 5.0, 40.0, 200.0])
def test_one_chosen_is_logit_at_any_gap(gap):
    expected = 1.0 / (1.0 + np.exp(-gap))
    assert tie_prob(ChoiceInstance([gap], [0.0])) == pytest.approx(expected, rel=1e-10)


def test_tiny_logit_does_not_underflow():
    p = tie_prob(ChoiceInstance([-40.0], [0.0]))
    assert p == pytest.approx(np.exp(-40.0) / (np.exp(-40.0) + 1.0), rel=1e-12)


@pytest.mark.parametrize("vc", [[-30.0, -31.0], [-45.0, -38.0], [-12.0, -60.0]])
def test_two_chosen_far_below(vc):
    a, b = np.exp(vc)
    d = 1.0
    expected = a * b * (2 * d + a + b) / ((d + a) * (d + b) * (d + a + b))
    assert tie_prob(ChoiceInstance(vc, [0.0])) == pytest.approx(expected, rel=1e-9)


def test_ordered_sum_matches_alternating_sum(rng):
    for _ in range(20):
        m = int(rng.integers(1, 5))
        ec = np.exp(rng.normal(size=m))
        s_d = float(np.exp(rng.normal(size=3)).sum())
        signed, _ = signed_tie_prob(ec[None, :], np.array([s_d]))
        assert ordered_tie_prob(ec, s_d)[0] == pytest.approx(float(signed[0]), rel=1e-10)


def test_rises_with_a_chosen_value():
    ps = [tie_prob(ChoiceInstance([t, -35.0], [0.0, 0.5])) for t in np.linspace(-40.0, 5.0, 46)]
    assert np.all(np.diff(ps) > 0)
    ps = [tie_prob(ChoiceInstance([t, 0.2, -0.4], [0.0, 0.5, 1.0])) for t in np.linspace(-3.0, 3.0, 13)]
    assert np.all(np.diff(ps) > 0)


def test_exact_within_simulation_error(rng):
    n_draws, outside = 20_000, 0
    for i in range(100):
        inst = ChoiceInstance(rng.normal(size=int(rng.integers(1, 4))),
                              rng.normal(size=int(rng.integers(1, 6))))
        exact = tie_prob(inst)
        p, _ = mc_tie_prob(inst, n_draws, seed=i)
        se = np.sqrt(exact * (1.0 - exact) / n_draws)
        outside += abs(p - exact) > 3 * se
    assert outside <= 3


def test_likelihood_far_below_unchosen():
    # every set: two chosen rows far below two unchosen ones
    x = np.array([[-30.0, 1.0], [-31.0, 0.5], [0.0, 0.0], [0.2, -0.1],
                  [-25.0, 0.0], [-40.0, 2.0], [0.0, 1.0], [1.0, 0.0]])
    labels = [0, 0, 0, 0, 1, 1, 1, 1]
    chosen = [True, True, False, False, True, True, False, False]
    data = ChoiceData.from_choice_sets(x, labels, chosen)
    beta = np.array([1.0, 0.3])

    expected = sum(
        np.log(tie_prob(ChoiceInstance.from_rows(x[r][c], x[r][~c], beta)))
        for r, c in ((slice(0, 4), np.array(chosen[:4])), (slice(4, 8), np.array(chosen[4:])))
    )
    ll, grad = value_and_grad(beta, data)
    assert np.isfinite(ll)
    assert ll == pytest.approx(expected, rel=1e-9)

    h = 1e-6
    numeric = np.array([
        (log_likelihood(beta + h * e, data) - log_likelihood(beta - h * e, data)) / (2 * h)
        for e in np.eye(2)
    ])
    np.testing.assert_allclose(grad, numeric, rtol=1e-5)
