"""Process model: hidden fault flags, coin tosses, communication, termination.

A process owns an opaque state label and a hidden pair of Boolean fault
flags (bit and phase), flipped at random fault opportunities with
probability ``tau`` each.  The flags are never readable through the public
surface of :class:`Process`; they reach the outside world only through the
corruption of termination outcomes and through the detector protocols built
on top of pairwise communication.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence, Union

from .errors import ConfigurationError, CrashStopViolation

__all__ = [
    "Basis",
    "FaultLocation",
    "DEFAULT_FAULT_LOCATIONS",
    "StateSet",
    "BITS",
    "FaultBox",
    "Process",
    "CostLedger",
    "RngStream",
    "derive_seed",
    "init_process",
    "toss",
    "communicate",
    "local_op",
    "terminate",
]


class Basis(Enum):
    """Readout basis: BIT readout is corrupted by bit faults, PHASE by phase faults."""

    BIT = "B"
    PHASE = "P"


class FaultLocation(Enum):
    """Execution points at which a fault opportunity (coin toss) occurs."""

    AFTER_INIT = "after_init"
    BEFORE_EACH_OP = "before_each_op"
    BEFORE_TERMINATE = "before_terminate"


DEFAULT_FAULT_LOCATIONS = frozenset(FaultLocation)

# Hook signature: (process, location) -> (flip_bit, flip_phase).
# When set on a process it replaces the Bernoulli draw entirely, which is how
# exhaustive enumeration drives the same pipeline deterministically.
FaultHook = Callable[["Process", FaultLocation], tuple]


@dataclass(frozen=True)
class StateSet:
    """Finite ordered set of state labels a process can hold."""

    labels: tuple

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ConfigurationError("state set needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigurationError("state labels must be distinct")

    def __contains__(self, label) -> bool:
        return label in self.labels

    @property
    def is_binary(self) -> bool:
        return self.labels == (0, 1)


#: Minimal binary instantiation; the only set the XOR-based operations support.
BITS = StateSet((0, 1))


@dataclass
class FaultBox:
    """Hidden per-process fault state: two flip flags and the flip probability."""

    bit_fault: bool = False
    phase_fault: bool = False
    tau: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigurationError(f"tau out of [0,1]: {self.tau}")


class CostLedger:
    """Counts heads-valued transmissions: cost(heads)=1, cost(tails)=0."""

    __slots__ = ("heads_sent",)

    def __init__(self):
        self.heads_sent = 0

    def record_send(self, value: bool):
        if value:
            self.heads_sent += 1

    def __repr__(self):
        return f"CostLedger(heads_sent={self.heads_sent})"


class RngStream:
    """Deterministic random stream addressed by (master_seed, path).

    Identical addresses yield identical sequences; distinct paths yield
    independent streams, so per-trial streams can be consumed in any order
    (or in parallel) without changing results.
    """

    __slots__ = ("master_seed", "path", "_rng")

    def __init__(self, master_seed: int, path: tuple = ()):
        if isinstance(path, int):
            path = (path,)
        self.master_seed = int(master_seed)
        self.path = tuple(int(p) for p in path)
        key = ":".join(str(x) for x in (self.master_seed,) + self.path)
        # random.Random hashes str seeds through sha512, stable across runs.
        self._rng = random.Random(key)

    def derive(self, *indices: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + tuple(indices))

    def random(self) -> float:
        return self._rng.random()

    def coin(self, p: float) -> bool:
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return self._rng.random() < p

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, path={self.path})"


def derive_seed(master_seed: int, *indices: int) -> int:
    """Stable 63-bit sub-seed for a (master, index...) address."""
    key = ":".join(str(x) for x in (master_seed,) + indices).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


_process_ids = itertools.count()


class Process:
    """A live process holding a noncopyable state label and a hidden fault box.

    The public surface is deliberately narrow: ``id``, ``tag`` and
    ``terminated``.  The state label and the fault box are private; results
    leave a process only through :func:`terminate`.  Copying is forbidden at
    runtime (the label must never exist twice).
    """

    __slots__ = ("id", "tag", "terminated", "_label", "_box", "_states",
                 "_locations", "_fault_hook")

    def __init__(self, label, box: FaultBox, states: StateSet = BITS,
                 locations: frozenset = DEFAULT_FAULT_LOCATIONS,
                 tag=None, fault_hook: Optional[FaultHook] = None):
        self.id = next(_process_ids)
        self.tag = tag
        self.terminated = False
        self._label = label
        self._box = box
        self._states = states
        self._locations = locations
        self._fault_hook = fault_hook

    def __copy__(self):
        raise TypeError("Process is noncopyable")

    def __deepcopy__(self, memo):
        raise TypeError("Process is noncopyable")

    def __reduce__(self):
        raise TypeError("Process is noncopyable")

    def __repr__(self):
        state = "terminated" if self.terminated else "live"
        return f"Process(id={self.id}, tag={self.tag!r}, {state})"


def _require_live(proc: Process, op: str):
    if proc.terminated:
        raise CrashStopViolation(f"{op} on terminated process {proc.id}")


def toss(proc: Process, rng: RngStream):
    """One fault opportunity: flip each flag independently with probability tau."""
    _require_live(proc, "toss")
    if rng.coin(proc._box.tau):
        proc._box.bit_fault = not proc._box.bit_fault
    if rng.coin(proc._box.tau):
        proc._box.phase_fault = not proc._box.phase_fault


def _fault_opportunity(proc: Process, location: FaultLocation, rng: RngStream):
    """Toss gated on the process's configured fault locations (or its hook)."""
    if location not in proc._locations:
        return
    if proc._fault_hook is not None:
        flip_bit, flip_phase = proc._fault_hook(proc, location)
        if flip_bit:
            proc._box.bit_fault = not proc._box.bit_fault
        if flip_phase:
            proc._box.phase_fault = not proc._box.phase_fault
    else:
        toss(proc, rng)


def init_process(label, tau: float, rng: RngStream, *,
                 states: StateSet = BITS,
                 locations: frozenset = DEFAULT_FAULT_LOCATIONS,
                 tag=None, fault_hook: Optional[FaultHook] = None) -> Process:
    """Create a live process in ``label`` with clean flags, then apply the
    post-initialization fault opportunity (there is no guarantee the box
    stays clean once set up)."""
    if label not in states:
        raise ConfigurationError(f"label {label!r} not in state set {states.labels}")
    proc = Process(label, FaultBox(tau=tau), states=states, locations=locations,
                   tag=tag, fault_hook=fault_hook)
    _fault_opportunity(proc, FaultLocation.AFTER_INIT, rng)
    return proc


def _effective_state(proc: Process) -> tuple:
    """Simulator-internal: the (label, bit_fault, phase_fault) composition.

    Never exposed through the public API; detectors and terminators are the
    only consumers.
    """
    return (proc._label, proc._box.bit_fault, proc._box.phase_fault)


def _is_faulty(proc: Process) -> bool:
    """Simulator-internal: true when the effective state differs from the label."""
    return proc._box.bit_fault or proc._box.phase_fault


def communicate(control: Process, target: Process, apply_e: bool,
                ledger: CostLedger, rng: RngStream):
    """One communication step between two live processes.

    Round 1: the control sends its bit flag, the target updates to the XOR.
    Round 2: the target sends its phase flag, the control updates to the XOR.
    Round 3 (``apply_e``): the target label is XORed with the control label;
    this round is free.  Heads-valued transmissions in rounds 1 and 2 each
    cost one unit.  Fault opportunities precede the step on both ends.
    """
    _require_live(control, "communicate")
    _require_live(target, "communicate")
    if control is target:
        raise ConfigurationError("communicate requires two distinct processes")
    _fault_opportunity(control, FaultLocation.BEFORE_EACH_OP, rng)
    _fault_opportunity(target, FaultLocation.BEFORE_EACH_OP, rng)

    sent_bit = control._box.bit_fault
    target._box.bit_fault = sent_bit ^ target._box.bit_fault
    ledger.record_send(sent_bit)

    sent_phase = target._box.phase_fault
    control._box.phase_fault = sent_phase ^ control._box.phase_fault
    ledger.record_send(sent_phase)

    if apply_e:
        if not (control._states.is_binary and target._states.is_binary):
            raise ConfigurationError("the distributed operation is defined for the binary state set")
        target._label = target._label ^ control._label


def local_op(proc: Process, g: Union[Callable, Mapping], rng: RngStream):
    """Apply a label permutation to the process state; flags are untouched."""
    _require_live(proc, "local_op")
    lookup = g if callable(g) else g.__getitem__
    images = [lookup(s) for s in proc._states.labels]
    if sorted(images, key=repr) != sorted(proc._states.labels, key=repr):
        raise ConfigurationError("local operation must be a bijection on the state set")
    _fault_opportunity(proc, FaultLocation.BEFORE_EACH_OP, rng)
    proc._label = lookup(proc._label)


def terminate(proc: Process, basis: Basis, rng: RngStream):
    """Read the process out and stop it for good.

    A final fault opportunity happens before readout; the returned label is
    the state label corrupted by the flag matching the readout basis.  Any
    further operation on the process raises :class:`CrashStopViolation`.
    """
    _require_live(proc, "terminate")
    if not proc._states.is_binary:
        raise ConfigurationError("termination readout is defined for the binary state set")
    _fault_opportunity(proc, FaultLocation.BEFORE_TERMINATE, rng)
    flag = proc._box.bit_fault if basis is Basis.BIT else proc._box.phase_fault
    proc.terminated = True
    return proc._label ^ int(flag)
