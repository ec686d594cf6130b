import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadimp.structure import (
    EnumerationCapError,
    Mode,
    StructureFunction,
    delta,
    evaluate,
    evaluate_by_cuts,
    h_exact,
    minimal_cuts,
    reliability,
    reliability_exact,
    reliability_monte_carlo,
    reliability_paper_naive,
)

P_SHORT = (0.5559, 0.7363, 0.9947, 0.8526)


def labeled_cuts(phi):
    return {frozenset(phi.label(i) for i in c) for c in minimal_cuts(phi)}


@st.composite
def structures(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    paths = draw(st.lists(st.sets(st.integers(0, n - 1), min_size=1), min_size=1, max_size=6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return StructureFunction(n, paths)


def vertices(n):
    return itertools.product((0, 1), repeat=n)


# -- construction ------------------------------------------------------------


def test_dominated_paths_dropped_with_warning():
    with pytest.warns(UserWarning, match="non-minimal"):
        phi = StructureFunction(3, [[0], [0, 1], [2]])
    assert set(phi.min_paths) == {frozenset({0}), frozenset({2})}


def test_duplicate_paths_dropped_with_warning():
    with pytest.warns(UserWarning, match="duplicate"):
        phi = StructureFunction(2, [[0, 1], [1, 0]])
    assert phi.min_paths == (frozenset({0, 1}),)


@pytest.mark.parametrize(
    "n, paths",
    [(0, [[0]]), (2, []), (2, [[]]), (2, [[0, 2]])],
)
def test_invalid_structures_rejected(n, paths):
    with pytest.raises(ValueError):
        StructureFunction(n, paths)


def test_labeled_paths_reject_undeclared():
    with pytest.raises(ValueError, match="undeclared"):
        StructureFunction.from_labeled_paths([(1, 2)], labels=(1,))


# -- evaluate / delta ----------------------------------------------------------


def test_evaluate_dimension_mismatch(short_system):
    with pytest.raises(ValueError):
        evaluate(short_system, (1, 1, 1))


def test_delta_short_system(short_system):
    # order (4, 6, 10, 11)
    assert delta(short_system, 0, (0, 1, 0, 1)) == 1
    assert delta(short_system, 1, (1, 0, 1, 1)) == 0


def test_delta_single_component():
    phi = StructureFunction(1, [[0]])
    assert delta(phi, 0, (0,)) == 1
    assert delta(phi, 0, (1,)) == 1


# -- minimal cuts --------------------------------------------------------------


def test_cuts_short_system(short_system):
    assert labeled_cuts(short_system) == {frozenset({4}), frozenset({11}), frozenset({6, 10})}


def test_cuts_series_of_two():
    assert set(minimal_cuts(StructureFunction(2, [[0, 1]]))) == {frozenset({0}), frozenset({1})}


LISTED_CUTS = [
    {1, 4}, {2, 4}, {1, 6, 7}, {2, 6, 7}, {4, 5, 3}, {4, 5, 8}, {1, 6, 10}, {2, 6, 10}, {3, 5, 6, 7}, {3, 9, 7},
    {3, 9, 10}, {8, 9, 7}, {8, 9, 10}, {3, 4, 9}, {4, 8, 9}, {3, 11}, {8, 11}, {1, 11}, {2, 11}, {12},
]
EXTRA_CUTS = [{1, 7, 9}, {1, 9, 10}, {2, 7, 9}, {2, 9, 10}, {3, 5, 6, 10}, {5, 6, 7, 8}, {5, 6, 8, 10}]


def _is_minimal_cut(phi, labels):
    idx = {phi.label(i): i for i in range(phi.n)}
    def fails(s):
        return evaluate(phi, [0 if phi.label(i) in s else 1 for i in range(phi.n)]) == 0
    return fails(labels) and all(not fails(labels - {c}) for c in labels)


def test_network_contains_every_listed_cut(network):
    derived = labeled_cuts(network)
    for c in LISTED_CUTS:
        assert frozenset(c) in derived


def test_network_cut_family_is_listed_plus_seven(network):
    derived = labeled_cuts(network)
    extra = derived - {frozenset(c) for c in LISTED_CUTS}
    assert extra == {frozenset(c) for c in EXTRA_CUTS}
    for c in extra:
        assert _is_minimal_cut(network, set(c))


def test_cuts_match_exhaustive_hitting_sets(network):
    masks = [sum(1 << i for i in p) for p in network.min_paths]
    hitting = [m for m in range(1 << network.n) if all(m & p for p in masks)]
    minimal = {m for m in hitting if not any(h != m and h & m == h for h in hitting)}
    got = {sum(1 << i for i in c) for c in minimal_cuts(network)}
    assert got == minimal


@settings(max_examples=200, deadline=None)
@given(structures())
def test_duality_and_monotonicity(phi):
    cuts = minimal_cuts(phi)
    table = {}
    for x in vertices(phi.n):
        table[x] = evaluate(phi, x)
        assert table[x] == evaluate_by_cuts(phi, x, cuts)
    for x, fx in table.items():
        for i in range(phi.n):
            if x[i] == 0:
                y = x[:i] + (1,) + x[i + 1 :]
                assert fx <= table[y]


@settings(max_examples=100, deadline=None)
@given(structures())
def test_every_cut_hits_every_path_and_is_minimal(phi):
    for c in minimal_cuts(phi):
        assert all(c & p for p in phi.min_paths)
        for e in c:
            assert not all((c - {e}) & p for p in phi.min_paths)


# -- reliability -----------------------------------------------------------------


def test_short_system_reliability(short_system):
    p4, p6, p10, p11 = P_SHORT
    direct = p4 * (1 - (1 - p6) * (1 - p10)) * p11
    assert reliability_exact(short_system, P_SHORT) == pytest.approx(direct, abs=1e-15)
    assert reliability_exact(short_system, P_SHORT, method="enumeration") == pytest.approx(direct, abs=1e-12)
    # 0.4733, not 0.4734, at four decimals
    assert reliability_exact(short_system, P_SHORT) == pytest.approx(0.47330, abs=1e-5)


def test_trivial_reliabilities(network):
    assert reliability_exact(network, [1] * 12) == 1
    assert reliability_exact(network, [0] * 12) == 0
    assert reliability_paper_naive(network, [1] * 12) == 1


def test_network_half_with_last_pinned(network):
    p = [0.5] * 11 + [1.0]
    assert reliability_exact(network, p) == 0.18115234375
    assert reliability_paper_naive(network, p) == pytest.approx(0.2017745, abs=1e-7)
    assert reliability(network, p, Mode.PAPER_NAIVE) == reliability_paper_naive(network, p)


def test_naive_equals_exact_on_disjoint_paths():
    phi = StructureFunction(5, [[0, 1], [2], [3, 4]])
    p = [0.3, 0.9, 0.2, 0.6, 0.7]
    assert reliability_paper_naive(phi, p) == pytest.approx(reliability_exact(phi, p), abs=1e-15)


def test_input_errors(short_system):
    with pytest.raises(ValueError):
        reliability_exact(short_system, [0.5] * 3)
    with pytest.raises(ValueError):
        reliability_exact(short_system, [0.5, 0.5, 0.5, 1.5])


def test_cap_points_to_monte_carlo():
    phi = StructureFunction(21, [[i] for i in range(21)])
    with pytest.raises(EnumerationCapError, match="[Mm]onte"):
        reliability_exact(phi, [0.5] * 21)


def test_monte_carlo(short_system):
    est = reliability_monte_carlo(short_system, P_SHORT, 10**6, seed=7)
    assert est == pytest.approx(reliability_exact(short_system, P_SHORT), abs=0.002)
    assert est == reliability_monte_carlo(short_system, P_SHORT, 10**6, seed=7)
    assert reliability_monte_carlo(short_system, [1.0] * 4, 1000, seed=1) == 1.0


@settings(max_examples=100, deadline=None)
@given(structures(), st.data())
def test_binary_p_equals_evaluate(phi, data):
    x = data.draw(st.lists(st.integers(0, 1), min_size=phi.n, max_size=phi.n))
    assert reliability_exact(phi, x) == evaluate(phi, x)


@settings(max_examples=100, deadline=None)
@given(structures(), st.data())
def test_exact_methods_agree_and_monotone(phi, data):
    p = data.draw(st.lists(st.floats(0, 1), min_size=phi.n, max_size=phi.n))
    a = reliability_exact(phi, p)
    b = reliability_exact(phi, p, method="enumeration")
    assert a == pytest.approx(b, abs=1e-12)
    for i in range(phi.n):
        hi = list(p)
        lo = list(p)
        hi[i], lo[i] = 1.0, 0.0
        assert float(h_exact(phi, hi)) - float(h_exact(phi, lo)) >= -1e-15


def test_inclusion_exclusion_matches_enumeration_n12():
    rng = np.random.default_rng(3)
    for _ in range(5):
        paths = [set(rng.choice(12, size=rng.integers(1, 6), replace=False).tolist()) for _ in range(6)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            phi = StructureFunction(12, paths)
        p = rng.random(12)
        assert reliability_exact(phi, p) == pytest.approx(reliability_exact(phi, p, method="enumeration"), abs=1e-12)
