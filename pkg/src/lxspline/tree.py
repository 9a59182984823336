"""Binary infill tree over dyadic knot labels.

A node at depth N carries a label a/2^(N+1) with a odd; its children bisect
the neighboring gaps.  The tree prior is a branching process: each present
node at depth N runs two independent Bernoulli(0.5^(N+1)) child experiments.
The root (label 1/2) is always present.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import LabelError

ROOT = Fraction(1, 2)


def depth(label: Fraction) -> int:
    """Depth N of a label a/2^(N+1)."""
    _validate_label(label)
    return label.denominator.bit_length() - 2


def _validate_label(label: Fraction) -> None:
    if not isinstance(label, Fraction):
        raise LabelError(f"label must be a Fraction, got {type(label)!r}")
    den = label.denominator
    if den < 2 or den & (den - 1) != 0 or not 0 < label < 1:
        raise LabelError(f"{label} is not a dyadic label in (0, 1)")
    # Fraction is always in lowest terms, so the numerator is odd here.


def _depth_fast(label: Fraction) -> int:
    return label.denominator.bit_length() - 2


def _children_fast(label: Fraction) -> tuple:
    a, den = label.numerator, label.denominator
    return Fraction(2 * a - 1, 2 * den), Fraction(2 * a + 1, 2 * den)


def _parent_fast(label: Fraction) -> Fraction:
    a, den = label.numerator, label.denominator
    up = (a - 1) // 2
    if up % 2 == 0:
        up += 1
    return Fraction(up, den // 2)


def children(label: Fraction) -> tuple[Fraction, Fraction]:
    """Labels of the two children: (2a-1)/2^(N+2) and (2a+1)/2^(N+2)."""
    _validate_label(label)
    a, den = label.numerator, label.denominator
    return Fraction(2 * a - 1, 2 * den), Fraction(2 * a + 1, 2 * den)


def parent(label: Fraction) -> Fraction:
    _validate_label(label)
    if label == ROOT:
        raise LabelError("root has no parent")
    a, den = label.numerator, label.denominator
    up = (a - 1) // 2
    if up % 2 == 0:
        up += 1
    return Fraction(up, den // 2)


def format_label(label: Fraction) -> str:
    return f"{label.numerator}/2^{label.denominator.bit_length() - 1}"


def parse_label(text: str) -> Fraction:
    try:
        num_s, den_s = text.split("/")
        if den_s.startswith("2^"):
            label = Fraction(int(num_s), 2 ** int(den_s[2:]))
        else:
            label = Fraction(int(num_s), int(den_s))
    except (ValueError, ZeroDivisionError) as exc:
        raise LabelError(f"cannot parse label {text!r}") from exc
    _validate_label(label)
    return label


@dataclass(frozen=True)
class KnotTree:
    """Immutable set of present node labels (root always included)."""

    nodes: frozenset

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if ROOT not in nodes:
            raise LabelError("root 1/2 must be present")
        for label in nodes:
            _validate_label(label)
            if label != ROOT and parent(label) not in nodes:
                raise LabelError(f"node {label} has no parent in the tree")

    @classmethod
    def root_only(cls) -> "KnotTree":
        return cls(frozenset({ROOT}))

    @classmethod
    def _from_valid(cls, nodes) -> "KnotTree":
        """Construct without re-validating; nodes must already form a tree."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "nodes", frozenset(nodes))
        return obj

    @classmethod
    def from_labels(cls, labels: Iterable) -> "KnotTree":
        parsed = [
            parse_label(l) if isinstance(l, str) else Fraction(l) for l in labels
        ]
        return cls(frozenset(parsed))

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, label) -> bool:
        return label in self.nodes

    def sorted_labels(self) -> list:
        return sorted(self.nodes)

    def knot_set(self) -> list:
        """Sorted node labels with end knots {0, 1} appended."""
        return [Fraction(0)] + self.sorted_labels() + [Fraction(1)]

    def knot_array(self) -> np.ndarray:
        return np.array([float(l) for l in self.knot_set()])

    def insert(self, label: Fraction) -> "KnotTree":
        if label in self.nodes:
            raise LabelError(f"{label} already present")
        return KnotTree(self.nodes | {label})

    def delete(self, label: Fraction) -> "KnotTree":
        if label not in self.nodes:
            raise LabelError(f"{label} not present")
        if label == ROOT:
            raise LabelError("root cannot be deleted")
        return KnotTree(self.nodes - {label})

    def serialize(self) -> list[str]:
        return [format_label(l) for l in self.sorted_labels()]


def log_prior(tree: KnotTree) -> float:
    """Log branching-process mass: per present node at depth N, each child
    experiment succeeds with probability 0.5^(N+1).  Success/failure is read
    off the structure (a missing child is a recorded failure)."""
    total = 0.0
    for label in tree.nodes:
        p = 0.5 ** (depth(label) + 1)
        for child in children(label):
            total += math.log(p) if child in tree.nodes else math.log1p(-p)
    return total


def insertion_candidates(tree: KnotTree) -> list:
    """Absent children of present nodes (the branching-process failures)."""
    out = []
    for label in tree.nodes:
        for child in children(label):
            if child not in tree.nodes:
                out.append(child)
    return sorted(out)


def deletion_candidates(tree: KnotTree) -> list:
    """Present childless nodes; the root is never deletable."""
    out = []
    for label in tree.nodes:
        if label == ROOT:
            continue
        left, right = children(label)
        if left not in tree.nodes and right not in tree.nodes:
            out.append(label)
    return sorted(out)


@dataclass(frozen=True)
class MoveProposal:
    kind: str  # "insert" | "delete"
    label: Fraction
    forward_prob: float
    reverse_prob: float

    def apply(self, tree: KnotTree) -> KnotTree:
        return tree.insert(self.label) if self.kind == "insert" else tree.delete(self.label)


def _kind_prob(tree: KnotTree, kind: str) -> float:
    """Probability of picking the move kind: insert-only when nothing is
    deletable, otherwise a fair coin."""
    if not deletion_candidates(tree):
        return 1.0 if kind == "insert" else 0.0
    return 0.5


def move_probability(tree: KnotTree, kind: str, label: Fraction) -> float:
    """P(kind) * 1/#candidates for the given move out of `tree`."""
    cands = insertion_candidates(tree) if kind == "insert" else deletion_candidates(tree)
    if label not in cands:
        return 0.0
    return _kind_prob(tree, kind) / len(cands)


def propose_move(tree: KnotTree, rng: np.random.Generator) -> MoveProposal:
    """Draw a knot insertion/deletion with the §-free proposal rule: insert
    with probability 1 when nothing is deletable, else a fair coin, label
    uniform among candidates.  Reverse probability is computed on the
    post-move tree."""
    dels = deletion_candidates(tree)
    if not dels or rng.random() < 0.5:
        kind = "insert"
        cands = insertion_candidates(tree)
    else:
        kind = "delete"
        cands = dels
    label = cands[rng.integers(len(cands))]
    forward = _kind_prob(tree, kind) / len(cands)
    new_tree = tree.insert(label) if kind == "insert" else tree.delete(label)
    rev_kind = "delete" if kind == "insert" else "insert"
    reverse = move_probability(new_tree, rev_kind, label)
    return MoveProposal(kind, label, forward, reverse)


def sample_tree(rng: np.random.Generator, max_depth: int = 30) -> KnotTree:
    """Direct draw from the branching-process prior (root always present)."""
    nodes = {ROOT}
    frontier = [ROOT]
    while frontier:
        label = frontier.pop()
        n = depth(label)
        if n + 1 >= max_depth:
            continue
        p = 0.5 ** (n + 1)
        for child in children(label):
            if rng.random() < p:
                nodes.add(child)
                frontier.append(child)
    return KnotTree(frozenset(nodes))
