"""Redundant logical processes: TMR trees, transversal and fan-out coupling.

A logical process is a tree whose leaves are physical processes, all
initialized to the same label.  One level of the tree is a distance-``n``
repetition code decoded by simple majority; stacking levels (concatenation)
multiplies the leaf count and recursively applies the majority.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

from .core import (
    Basis,
    CostLedger,
    Process,
    RngStream,
    communicate,
    local_op,
    terminate,
)
from .errors import ConfigurationError, CrashStopViolation, EncodingError

__all__ = [
    "LogicalProcess",
    "PairingStrategy",
    "OpDescriptor",
    "encode",
    "concatenate",
    "logical_local_op",
    "logical_communicate",
    "decode_majority",
    "readout_logical",
]

_logical_ids = itertools.count()


class LogicalProcess:
    """Tree of redundant components implementing one encoded process.

    ``level`` 0 wraps a single physical process; a level-L node has ``n``
    level-(L-1) children.  ``label`` is the nominal encoded label, tracked
    for bookkeeping only (faults never change labels, operations do).
    """

    __slots__ = ("id", "level", "children", "leaf", "label")

    def __init__(self, level: int, children: Optional[List["LogicalProcess"]],
                 leaf: Optional[Process], label):
        self.id = next(_logical_ids)
        self.level = level
        self.children = children
        self.leaf = leaf
        self.label = label

    @property
    def n(self) -> int:
        return len(self.children) if self.children else 1

    def leaves(self) -> List[Process]:
        if self.level == 0:
            return [self.leaf]
        out: List[Process] = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    @property
    def is_live(self) -> bool:
        return all(not p.terminated for p in self.leaves())

    def __repr__(self):
        return (f"LogicalProcess(id={self.id}, level={self.level}, "
                f"n={self.n}, label={self.label!r})")


@dataclass(frozen=True)
class PairingStrategy:
    """How control components are paired with target components."""

    variant: str  # "transversal" | "fanout"
    source: int = 0

    @classmethod
    def transversal(cls) -> "PairingStrategy":
        return cls("transversal")

    @classmethod
    def fanout(cls, source: int = 0) -> "PairingStrategy":
        return cls("fanout", source)


@dataclass(frozen=True)
class OpDescriptor:
    """Record of one logical communicate, consumed by the fault corrector.

    ``pairs`` holds (control_node_id, child_index, target_node_id,
    child_index) entries for every tree node whose children were paired;
    ``node_sizes`` maps each referenced node id to its child count.
    """

    control_id: int
    target_id: int
    strategy: PairingStrategy
    pairs: tuple = ()
    node_sizes: dict = field(default_factory=dict)


def _require_all_live(lp: LogicalProcess, op: str):
    for proc in lp.leaves():
        if proc.terminated:
            raise CrashStopViolation(f"{op} on logical process with terminated leaf {proc.id}")


def encode(components: Sequence[Process]) -> LogicalProcess:
    """Build a level-1 logical process from freshly initialized components.

    The components must be distinct live processes in the same label; a
    label is never copied out of an existing process, so redundancy always
    comes from independent initialization.
    """
    n = len(components)
    if n < 3 or n % 2 == 0:
        raise ConfigurationError(f"redundancy must be odd and >= 3, got {n}")
    if len({id(p) for p in components}) != n:
        raise EncodingError("components must be distinct processes; a state label cannot be reused")
    for proc in components:
        if proc.terminated:
            raise CrashStopViolation(f"encode with terminated process {proc.id}")
    labels = {p._label for p in components}
    if len(labels) != 1:
        raise EncodingError(f"mixed initialization labels: {sorted(labels, key=repr)}")
    label = components[0]._label
    children = [LogicalProcess(0, None, proc, label) for proc in components]
    return LogicalProcess(1, children, None, label)


def concatenate(children: Sequence[LogicalProcess]) -> LogicalProcess:
    """Group same-level logical processes into one logical process a level up."""
    n = len(children)
    if n < 3 or n % 2 == 0:
        raise ConfigurationError(f"redundancy must be odd and >= 3, got {n}")
    if len({id(c) for c in children}) != n:
        raise EncodingError("children must be distinct logical processes")
    levels = {c.level for c in children}
    if len(levels) != 1:
        raise EncodingError(f"mismatched levels: {sorted(levels)}")
    if children[0].level < 1:
        raise EncodingError("concatenation takes logical processes, not bare components")
    labels = {c.label for c in children}
    if len(labels) != 1:
        raise EncodingError(f"mixed logical labels: {sorted(labels, key=repr)}")
    for child in children:
        _require_all_live(child, "concatenate")
    return LogicalProcess(children[0].level + 1, list(children), None, children[0].label)


def logical_local_op(g, lp: LogicalProcess, rng: RngStream):
    """Apply a label permutation transversally, i.e. to every leaf."""
    _require_all_live(lp, "logical_local_op")
    for proc in lp.leaves():
        local_op(proc, g, rng)
    lookup = g if callable(g) else g.__getitem__
    lp.label = lookup(lp.label)
    for node in _internal_nodes(lp):
        node.label = lp.label


def _internal_nodes(lp: LogicalProcess):
    if lp.level == 0:
        return
    for child in lp.children:
        yield child
        yield from _internal_nodes(child)


def _same_shape(a: LogicalProcess, b: LogicalProcess) -> bool:
    if a.level != b.level:
        return False
    if a.level == 0:
        return True
    return a.n == b.n and all(_same_shape(x, y) for x, y in zip(a.children, b.children))


def _transversal_pairs(control: LogicalProcess, target: LogicalProcess, pairs, sizes):
    if control.level == 0:
        return
    sizes[control.id] = control.n
    sizes[target.id] = target.n
    for i, (c_child, t_child) in enumerate(zip(control.children, target.children)):
        pairs.append((control.id, i, target.id, i))
        _transversal_pairs(c_child, t_child, pairs, sizes)


def logical_communicate(control: LogicalProcess, target: LogicalProcess,
                        strategy: PairingStrategy, ledger: CostLedger,
                        rng: RngStream, apply_e: bool = True) -> OpDescriptor:
    """Communicate between two logical processes under a pairing strategy.

    Transversal pairing couples the i-th control component with the i-th
    target component, so a single faulty component can spoil at most one
    target component.  Fan-out pairing couples one control component with
    every target component, amplifying its fault to the whole target.
    Returns a descriptor the fault corrector can replay on its frame.
    """
    if not _same_shape(control, target):
        raise EncodingError("control and target must have identical shape (level, n)")
    if control is target:
        raise ConfigurationError("communicate requires two distinct logical processes")
    _require_all_live(control, "logical_communicate")
    _require_all_live(target, "logical_communicate")

    pairs: list = []
    sizes: dict = {}
    if strategy.variant == "transversal":
        _transversal_pairs(control, target, pairs, sizes)
        for c_leaf, t_leaf in zip(control.leaves(), target.leaves()):
            communicate(c_leaf, t_leaf, apply_e, ledger, rng)
    elif strategy.variant == "fanout":
        if control.level != 1:
            raise ConfigurationError("fan-out pairing is defined on the components of a level-1 logical process")
        if not 0 <= strategy.source < control.n:
            raise ConfigurationError(f"fan-out source {strategy.source} out of range for n={control.n}")
        sizes[control.id] = control.n
        sizes[target.id] = target.n
        source_leaf = control.leaves()[strategy.source]
        for j, t_leaf in enumerate(target.leaves()):
            pairs.append((control.id, strategy.source, target.id, j))
            communicate(source_leaf, t_leaf, apply_e, ledger, rng)
    else:
        raise ConfigurationError(f"unknown pairing strategy {strategy.variant!r}")

    if apply_e:
        target.label = target.label ^ control.label
        for node in _internal_nodes(target):
            node.label = target.label
    return OpDescriptor(control.id, target.id, strategy, tuple(pairs), sizes)


def decode_majority(values: Sequence):
    """Majority vote over an odd number of values.

    Returns ``(majority_value, minority_positions)``; the positions list all
    indices disagreeing with the majority.  Corrects any pattern with at
    most (N-1)/2 disagreements.
    """
    n = len(values)
    if n % 2 == 0 or n == 0:
        raise ConfigurationError(f"majority vote needs an odd count, got {n}")
    majority, _ = Counter(values).most_common(1)[0]
    minority = [i for i, v in enumerate(values) if v != majority]
    return majority, minority


def _decode_node(lp: LogicalProcess, leaf_values: List, cursor: List[int],
                 basis: Basis, correct: Optional[Callable]):
    if lp.level == 0:
        value = leaf_values[cursor[0]]
        cursor[0] += 1
        return value
    child_values = [_decode_node(c, leaf_values, cursor, basis, correct)
                    for c in lp.children]
    if correct is not None:
        child_values = correct(lp.id, child_values, basis)
    majority, _ = decode_majority(child_values)
    return majority


def readout_logical(lp: LogicalProcess, basis: Basis, rng: RngStream,
                    correct: Optional[Callable] = None):
    """Terminate every leaf, then recursively majority-decode up the tree.

    ``correct`` is an optional per-node hook, called as
    ``correct(node_id, child_values, basis)`` before each majority vote; the
    fault corrector uses it to flip outcomes it knows to be pending.
    """
    _require_all_live(lp, "readout_logical")
    leaf_values = [terminate(p, basis, rng) for p in lp.leaves()]
    return _decode_node(lp, leaf_values, [0], basis, correct)
