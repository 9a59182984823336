"""Tests for the dyadic infill tree: labels, prior, and move proposals."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lxspline import tree as tree_mod
from lxspline.errors import LabelError
from lxspline.tree import (
    ROOT,
    KnotTree,
    children,
    deletion_candidates,
    depth,
    format_label,
    insertion_candidates,
    log_prior,
    move_probability,
    parent,
    parse_label,
    propose_move,
    sample_tree,
)

F = Fraction


def random_tree(rng, grow=0.45, max_depth=6) -> KnotTree:
    """Random valid tree (not the prior; just broad structural coverage)."""
    nodes = {ROOT}
    frontier = [ROOT]
    while frontier:
        label = frontier.pop()
        if depth(label) + 1 >= max_depth:
            continue
        for child in children(label):
            if rng.random() < grow:
                nodes.add(child)
                frontier.append(child)
    return KnotTree(frozenset(nodes))


class TestLabels:
    """Dyadic label arithmetic."""

    def test_children_examples(self):
        assert children(F(3, 8)) == (F(5, 16), F(7, 16))
        assert children(F(1, 2)) == (F(1, 4), F(3, 4))
        assert children(F(1, 4)) == (F(1, 8), F(3, 8))

    def test_parent_inverts_children(self):
        for label in (F(1, 2), F(3, 8), F(5, 16), F(7, 8)):
            for child in children(label):
                assert parent(child) == label

    def test_depths(self):
        assert depth(F(1, 2)) == 0
        assert depth(F(3, 4)) == 1
        assert depth(F(5, 16)) == 3

    def test_root_has_no_parent(self):
        with pytest.raises(LabelError):
            parent(ROOT)

    def test_invalid_labels(self):
        for bad in (F(1, 3), F(0), F(1), F(3, 2)):
            with pytest.raises(LabelError):
                depth(bad)

    def test_format_parse_roundtrip(self):
        for label in (F(1, 2), F(3, 8), F(11, 16)):
            assert parse_label(format_label(label)) == label
        assert format_label(F(3, 8)) == "3/2^3"
        with pytest.raises(LabelError):
            parse_label("7/9")


class TestKnotTree:
    """Structure validation and the knot set."""

    def test_root_required(self):
        with pytest.raises(LabelError):
            KnotTree(frozenset({F(1, 4)}))

    def test_orphans_rejected(self):
        with pytest.raises(LabelError):
            KnotTree(frozenset({ROOT, F(1, 8)}))

    def test_knot_set_includes_ends(self):
        t = KnotTree.from_labels(["1/2^1", "1/2^2"])
        assert t.knot_set() == [F(0), F(1, 4), F(1, 2), F(1)]
        assert np.allclose(t.knot_array(), [0.0, 0.25, 0.5, 1.0])

    def test_insert_delete(self):
        t = KnotTree.root_only()
        t2 = t.insert(F(1, 4))
        assert F(1, 4) in t2 and len(t2) == 2
        assert len(t2.delete(F(1, 4))) == 1
        with pytest.raises(LabelError):
            t2.delete(ROOT)
        with pytest.raises(LabelError):
            t2.insert(F(1, 4))

    def test_serialize_roundtrip(self):
        rng = np.random.default_rng(5)
        t = random_tree(rng)
        assert KnotTree.from_labels(t.serialize()) == t

    def test_complete_tree_max_gap(self):
        """A complete tree to depth N has knot gaps of exactly 2^-(N+1)."""
        for n in range(4):
            nodes = {ROOT}
            frontier = [ROOT]
            while frontier:
                lab = frontier.pop()
                if depth(lab) >= n:
                    continue
                for ch in children(lab):
                    nodes.add(ch)
                    frontier.append(ch)
            t = KnotTree(frozenset(nodes))
            gaps = np.diff(t.knot_array())
            assert np.allclose(gaps, 0.5 ** (n + 1))


class TestPrior:
    """Branching-process prior mass."""

    def test_root_only(self):
        assert log_prior(KnotTree.root_only()) == pytest.approx(math.log(0.25))

    def test_root_plus_quarter(self):
        t = KnotTree.root_only().insert(F(1, 4))
        # root: one success, one failure at p=1/2; the new node: two
        # failures at p=1/4 -> (1/2)(1/2)(3/4)^2 = 0.140625
        assert log_prior(t) == pytest.approx(math.log(0.140625))

    def test_matches_sampling_frequencies(self):
        """Prior mass vs Monte Carlo frequency of each sampled structure."""
        rng = np.random.default_rng(7)
        n = 200_000
        counts = {}
        for _ in range(n):
            t = sample_tree(rng)
            key = t.nodes
            counts[key] = counts.get(key, 0) + 1
        checked = 0
        for key, c in counts.items():
            freq = c / n
            if freq <= 1e-3:
                continue
            mass = math.exp(log_prior(KnotTree(key)))
            se = math.sqrt(freq * (1 - freq) / n)
            # 5% relative slack plus Monte Carlo noise (dozens of
            # structures are checked, so a bare 3-SE bound is too sharp)
            assert abs(mass - freq) < 0.05 * mass + 3 * se
            checked += 1
        assert checked >= 3

    def test_size_distribution_normalization(self):
        """Summed exact mass of small trees vs sampled size frequencies."""
        rng = np.random.default_rng(8)
        n = 1_000_000
        sizes = np.array([len(sample_tree(rng)) for _ in range(n)])
        exact = _exact_size_masses(max_size=6)
        for size in range(1, 7):
            freq = float(np.mean(sizes == size))
            se = math.sqrt(max(freq * (1 - freq), 1e-12) / n)
            assert abs(exact[size] - freq) <= 3 * se + 1e-9


def _exact_size_masses(max_size: int) -> dict:
    """Total prior mass of each tree size up to max_size by enumerating all
    trees whose nodes stay above a depth where deeper mass is negligible for
    these sizes (children of depth >= 8 have p <= 2^-9)."""
    from itertools import combinations

    masses = {s: 0.0 for s in range(1, max_size + 1)}
    # generate all valid trees with at most max_size nodes
    all_trees = set()
    stack = [frozenset({ROOT})]
    seen = {frozenset({ROOT})}
    while stack:
        nodes = stack.pop()
        all_trees.add(nodes)
        if len(nodes) >= max_size:
            continue
        for lab in nodes:
            if depth(lab) >= 10:
                continue
            for ch in children(lab):
                if ch not in nodes:
                    new = frozenset(nodes | {ch})
                    if new not in seen:
                        seen.add(new)
                        stack.append(new)
    for nodes in all_trees:
        masses[len(nodes)] += math.exp(log_prior(KnotTree(nodes)))
    return masses


class TestCandidates:
    """Insertion and deletion candidate enumeration."""

    def test_root_only(self):
        t = KnotTree.root_only()
        assert insertion_candidates(t) == [F(1, 4), F(3, 4)]
        assert deletion_candidates(t) == []

    def test_root_plus_quarter(self):
        t = KnotTree.root_only().insert(F(1, 4))
        assert insertion_candidates(t) == [F(1, 8), F(3, 8), F(3, 4)]
        assert deletion_candidates(t) == [F(1, 4)]

    def test_only_childless_deletable(self):
        t = KnotTree.from_labels([F(1, 2), F(1, 4), F(1, 8)])
        assert deletion_candidates(t) == [F(1, 8)]

    def test_random_trees_consistent(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            t = random_tree(rng)
            for lab in insertion_candidates(t):
                assert lab not in t.nodes and parent(lab) in t.nodes
            for lab in deletion_candidates(t):
                assert lab in t.nodes and lab != ROOT
                assert all(ch not in t.nodes for ch in children(lab))


class TestProposals:
    """The insert/delete proposal kernel."""

    def test_insert_then_delete_identity(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            t = random_tree(rng)
            prop = propose_move(t, rng)
            t2 = prop.apply(t)
            back = "delete" if prop.kind == "insert" else "insert"
            t3 = (t2.delete if back == "delete" else t2.insert)(prop.label)
            assert t3 == t

    def test_reversibility_of_probabilities(self):
        """forward_prob and reverse_prob match move_probability on the
        respective trees (detailed-balance bookkeeping)."""
        rng = np.random.default_rng(11)
        for _ in range(100):
            t = random_tree(rng)
            prop = propose_move(t, rng)
            assert prop.forward_prob == pytest.approx(
                move_probability(t, prop.kind, prop.label)
            )
            t2 = prop.apply(t)
            back = "delete" if prop.kind == "insert" else "insert"
            assert prop.reverse_prob == pytest.approx(
                move_probability(t2, back, prop.label)
            )

    def test_insert_only_from_root(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            prop = propose_move(KnotTree.root_only(), rng)
            assert prop.kind == "insert"
            assert prop.forward_prob == pytest.approx(0.5)

    def test_proposal_frequencies(self):
        """Empirical pick frequencies match the stated proposal rule."""
        rng = np.random.default_rng(13)
        t = KnotTree.root_only().insert(F(1, 4))
        counts = {}
        n = 20_000
        for _ in range(n):
            prop = propose_move(t, rng)
            key = (prop.kind, prop.label)
            counts[key] = counts.get(key, 0) + 1
        # 3 insertion candidates at p=0.5/3 each, 1 deletion at p=0.5
        for lab in insertion_candidates(t):
            assert counts[("insert", lab)] / n == pytest.approx(0.5 / 3, abs=0.01)
        assert counts[("delete", F(1, 4))] / n == pytest.approx(0.5, abs=0.015)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_sampled_trees_valid_property(seed):
    """Prior draws are structurally valid and their knots are sorted."""
    rng = np.random.default_rng(seed)
    t = sample_tree(rng)
    KnotTree(t.nodes)  # re-validation must not raise
    knots = t.knot_array()
    assert knots[0] == 0.0 and knots[-1] == 1.0
    assert np.all(np.diff(knots) > 0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_candidate_counts_property(seed):
    """Each node opens two child slots and each non-root node fills one of
    its parent's, so the insertion-candidate count is always nodes + 1."""
    rng = np.random.default_rng(seed)
    t = random_tree(rng)
    assert len(insertion_candidates(t)) == len(t) + 1
