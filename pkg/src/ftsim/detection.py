"""Fault detectors: ancilla-mediated parity syndromes with repeat-and-vote.

A detector never reads component flags directly.  Fresh ancilla processes
communicate with pairs of components and are then terminated; the parity of
their outcomes locates a single faulty component.  Because ancillae fail
too, a detection round repeats the extraction over several epochs and takes
a per-bit majority.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from .core import (
    Basis,
    CostLedger,
    DEFAULT_FAULT_LOCATIONS,
    RngStream,
    communicate,
    init_process,
    terminate,
)
from .encoding import (
    LogicalProcess,
    PairingStrategy,
    concatenate,
    decode_majority,
    encode,
    logical_communicate,
    readout_logical,
)
from .errors import ConfigurationError

__all__ = ["Syndrome", "FaultDetector", "extract_syndrome", "decode_syndrome",
           "detection_round"]


@dataclass(frozen=True)
class Syndrome:
    """Pairwise parities: components (0,1) and components (1,2)."""

    parity_01: int
    parity_12: int

    def as_tuple(self):
        return (self.parity_01, self.parity_12)


@dataclass
class FaultDetector:
    """Outcome of one detection round over a logical process."""

    kind: Basis
    faulty: bool
    position: Optional[int]
    epochs: int = 3
    history: List[Syndrome] = field(default_factory=list)


def _require_three(lp: LogicalProcess):
    if lp.n != 3:
        raise ConfigurationError(f"syndrome extraction supports exactly 3 components, got n={lp.n}")


def _fresh_ancilla(shape: LogicalProcess, tau_ancilla: float, rng: RngStream,
                   locations, fault_hook):
    """Ancilla matching one component of ``shape``'s parent: a bare process
    for level-1 extraction, a logical process one level down otherwise."""
    if shape.level == 0:
        return init_process(0, tau_ancilla, rng, locations=locations,
                            tag="ancilla", fault_hook=fault_hook)
    parts = [_fresh_ancilla(shape.children[0], tau_ancilla, rng, locations, fault_hook)
             for _ in range(shape.n)]
    return encode(parts) if shape.level == 1 else concatenate(parts)


def extract_syndrome(lp: LogicalProcess, kind: Basis, tau_ancilla: float,
                     ledger: CostLedger, rng: RngStream, *,
                     locations=DEFAULT_FAULT_LOCATIONS,
                     fault_hook=None) -> Syndrome:
    """One syndrome extraction over the three components of ``lp``.

    Bit-kind: components act as controls, two fresh ancillae as targets;
    ancilla 1 hears components 0 and 1, ancilla 2 hears components 1 and 2.
    Each ancilla's bit-basis outcome is then the pairwise bit parity (plus
    the ancilla's own bit fault).  An ancilla bit fault can only corrupt the
    syndrome, never the components; an ancilla phase fault may propagate to
    the components but leaves bit protection intact.  Phase-kind reverses
    the roles and the readout basis.
    """
    _require_three(lp)
    if lp.level < 1:
        raise ConfigurationError("syndrome extraction needs a logical process")
    comps = lp.children

    if lp.level == 1:
        anc1 = init_process(0, tau_ancilla, rng, locations=locations,
                            tag="ancilla", fault_hook=fault_hook)
        anc2 = init_process(0, tau_ancilla, rng, locations=locations,
                            tag="ancilla", fault_hook=fault_hook)
        leaves = [c.leaf for c in comps]
        if kind is Basis.BIT:
            communicate(leaves[0], anc1, True, ledger, rng)
            communicate(leaves[1], anc1, True, ledger, rng)
            communicate(leaves[1], anc2, True, ledger, rng)
            communicate(leaves[2], anc2, True, ledger, rng)
        else:
            communicate(anc1, leaves[0], True, ledger, rng)
            communicate(anc1, leaves[1], True, ledger, rng)
            communicate(anc2, leaves[1], True, ledger, rng)
            communicate(anc2, leaves[2], True, ledger, rng)
        bit1 = terminate(anc1, kind, rng)
        bit2 = terminate(anc2, kind, rng)
        return Syndrome(bit1, bit2)

    # Higher levels: ancillae are logical processes one level down and the
    # communication is transversal; readout is the recursive majority.
    transversal = PairingStrategy.transversal()
    anc1 = _fresh_ancilla(comps[0], tau_ancilla, rng, locations, fault_hook)
    anc2 = _fresh_ancilla(comps[0], tau_ancilla, rng, locations, fault_hook)
    if kind is Basis.BIT:
        logical_communicate(comps[0], anc1, transversal, ledger, rng)
        logical_communicate(comps[1], anc1, transversal, ledger, rng)
        logical_communicate(comps[1], anc2, transversal, ledger, rng)
        logical_communicate(comps[2], anc2, transversal, ledger, rng)
    else:
        logical_communicate(anc1, comps[0], transversal, ledger, rng)
        logical_communicate(anc1, comps[1], transversal, ledger, rng)
        logical_communicate(anc2, comps[1], transversal, ledger, rng)
        logical_communicate(anc2, comps[2], transversal, ledger, rng)
    bit1 = readout_logical(anc1, kind, rng)
    bit2 = readout_logical(anc2, kind, rng)
    return Syndrome(bit1, bit2)


#: Syndrome -> (faulty, position) under the at-most-one-fault assumption,
#: consistent with parities (b0^b1, b1^b2): a lone fault at component 0
#: flips only parity_01, at component 1 both, at component 2 only parity_12.
_SYNDROME_TABLE = {
    (0, 0): (False, None),
    (1, 0): (True, 0),
    (1, 1): (True, 1),
    (0, 1): (True, 2),
}


def decode_syndrome(syndrome: Syndrome, use_arithmetic_pos: bool = False):
    """Locate the faulty component from a syndrome.

    The default lookup inverts the parity equations.  ``use_arithmetic_pos``
    switches to the closed-form index ``parity_12*2 + parity_01 - 1``, kept
    as a diagnostic only: it disagrees with the parity equations on the
    (1,1) and (0,1) syndromes.
    """
    faulty, position = _SYNDROME_TABLE[syndrome.as_tuple()]
    if use_arithmetic_pos and faulty:
        position = syndrome.parity_12 * 2 + syndrome.parity_01 - 1
    return faulty, position


def detection_round(lp: LogicalProcess, kind: Basis, epochs: int,
                    tau_ancilla: float, ledger: CostLedger, rng: RngStream, *,
                    locations=DEFAULT_FAULT_LOCATIONS,
                    fault_hook=None) -> FaultDetector:
    """Run ``epochs`` syndrome extractions with fresh ancillae and vote.

    The consensus syndrome takes each parity bit by majority across epochs,
    which tolerates a minority of ancilla-corrupted epochs.
    """
    if epochs < 1 or epochs % 2 == 0:
        raise ConfigurationError(f"epochs must be odd, got {epochs}")
    history = [extract_syndrome(lp, kind, tau_ancilla, ledger, rng,
                                locations=locations, fault_hook=fault_hook)
               for _ in range(epochs)]
    bit1, _ = decode_majority([s.parity_01 for s in history])
    bit2, _ = decode_majority([s.parity_12 for s in history])
    consensus = Syndrome(bit1, bit2)
    faulty, position = decode_syndrome(consensus)
    return FaultDetector(kind=kind, faulty=faulty, position=position,
                         epochs=epochs, history=history)
