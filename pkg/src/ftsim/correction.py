"""Global fault corrector: verdict bookkeeping and readout-time correction.

The corrector never touches the processes in tracking mode.  It keeps a
classical frame of pending flips per (logical process, component), pushes
the frame through subsequent logical operations using the same propagation
rules the communication step applies to real flags, and finally flips the
affected readout outcomes.  Direct (in-circuit) correction is retained for
comparison; it physically flips a component flag and is itself a fault
opportunity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .core import Basis, FaultLocation, Process, RngStream, _fault_opportunity
from .encoding import LogicalProcess, OpDescriptor
from .errors import CrashStopViolation, TrackingError
from .detection import FaultDetector

__all__ = ["FrameEntry", "FaultFrame", "CorrectorStats", "FaultCorrector",
           "direct_correct"]


@dataclass
class FrameEntry:
    bit: bool = False
    phase: bool = False

    def get(self, kind: Basis) -> bool:
        return self.bit if kind is Basis.BIT else self.phase

    def toggle(self, kind: Basis):
        if kind is Basis.BIT:
            self.bit = not self.bit
        else:
            self.phase = not self.phase


class FaultFrame:
    """Pending inferred flips keyed by (logical process id, component index)."""

    def __init__(self):
        self.pending: Dict[Tuple[int, int], FrameEntry] = {}

    def entry(self, lp_id: int, index: int) -> FrameEntry:
        return self.pending.setdefault((lp_id, index), FrameEntry())

    def peek(self, lp_id: int, index: int) -> Optional[FrameEntry]:
        return self.pending.get((lp_id, index))


@dataclass
class CorrectorStats:
    """Verdict counters; the empirical rate is checked against the modelled one."""

    detections_total: int = 0
    detections_faulty: int = 0

    @property
    def empirical_rate(self) -> float:
        if self.detections_total == 0:
            return 0.0
        return self.detections_faulty / self.detections_total


class FaultCorrector:
    """One corrector per trial world; hears every detector verdict."""

    def __init__(self):
        self.frame = FaultFrame()
        self.stats = CorrectorStats()

    def record_verdict(self, detector: FaultDetector, lp_id: int):
        """Fold a finalized detection round into the frame and the stats."""
        self.stats.detections_total += 1
        if detector.faulty:
            self.stats.detections_faulty += 1
            self.frame.entry(lp_id, detector.position).toggle(detector.kind)

    def propagate(self, op: OpDescriptor):
        """Push pending flips through a logical communicate.

        Mirrors the physical rounds pair by pair: pending bit flips travel
        control -> target, pending phase flips travel target -> control.
        Local label operations do not move flags, so they need no call.
        """
        for control_node, i, target_node, j in op.pairs:
            if not (0 <= i < op.node_sizes.get(control_node, 0)
                    and 0 <= j < op.node_sizes.get(target_node, 0)):
                raise TrackingError(
                    f"descriptor references unknown component: ({control_node},{i})->({target_node},{j})")
            source = self.frame.peek(control_node, i)
            if source is not None and source.bit:
                self.frame.entry(target_node, j).toggle(Basis.BIT)
            source_phase = self.frame.peek(target_node, j)
            if source_phase is not None and source_phase.phase:
                self.frame.entry(control_node, i).toggle(Basis.PHASE)

    def correct_at_readout(self, lp_id: int, outcomes: List[int], basis: Basis) -> List[int]:
        """Flip each component outcome whose pending flag matches the basis."""
        corrected = []
        for index, value in enumerate(outcomes):
            entry = self.frame.peek(lp_id, index)
            flip = entry is not None and entry.get(basis)
            corrected.append(value ^ int(flip))
        return corrected


def direct_correct(lp: LogicalProcess, position: int, kind: Basis, rng: RngStream):
    """Physically flip the flagged component's fault flag in place.

    On a level-1 process this flips one component; on deeper trees it flips
    the flag transversally across the flagged child's leaves.  The
    compensating flip is an operation, so it is followed by its own fault
    opportunity and can itself introduce a fault.
    """
    if lp.level == 0:
        raise TrackingError("direct correction targets a component of a logical process")
    if not 0 <= position < lp.n:
        raise TrackingError(f"component index {position} out of range for n={lp.n}")
    child = lp.children[position]
    targets: List[Process] = child.leaves()
    for proc in targets:
        if proc.terminated:
            raise CrashStopViolation(f"direct_correct on terminated process {proc.id}")
    for proc in targets:
        if kind is Basis.BIT:
            proc._box.bit_fault = not proc._box.bit_fault
        else:
            proc._box.phase_fault = not proc._box.phase_fault
        _fault_opportunity(proc, FaultLocation.BEFORE_EACH_OP, rng)
