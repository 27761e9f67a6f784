"""RNC model: RLC segmentation into MAC-d PDUs and Iub transfer.

RT PDUs leave at every HS-DSCH frame boundary without regard to credits.
NRT PDUs leave only against the credits of the newest capacity grant, spread
evenly over the frames of the grant interval. With flow control disabled
(original TSP) NRT PDUs leave as freely as RT PDUs.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import TextIO

from .flow_control import CapacityGrant
from .pdu import SDU_BITS, Flow, Pdu
from .traffic import Packet

log = logging.getLogger(__name__)


def segment(packet: Packet, first_id: int = 0) -> list[Pdu]:
    """Split a packet into 320-bit SDUs (last one padded), one 336-bit PDU each."""
    if packet.size_bits <= 0:
        raise ValueError(f"packet {packet.id} has non-positive size {packet.size_bits}")
    created = packet.rnc_arrival_at if packet.rnc_arrival_at is not None else packet.generated_at
    n = -(-packet.size_bits // SDU_BITS)
    return [Pdu(first_id + k, packet.flow, packet.id, created) for k in range(n)]


@dataclass
class RncCounters:
    segmented: list[int] = field(default_factory=lambda: [0, 0])
    transferred: list[int] = field(default_factory=lambda: [0, 0])
    stale_grants: int = 0


class Rnc:
    def __init__(self, frame_us: int, flow_controlled: bool = True, spread: bool = True,
                 trace: TextIO | None = None):
        self.frame_us = frame_us
        self.flow_controlled = flow_controlled
        self.spread = spread
        self.rt_pending: deque[Pdu] = deque()
        self.nrt_pending: deque[Pdu] = deque()
        self.active_grant: CapacityGrant | None = None
        self.grant_pdus_remaining = 0
        self.dispatched_this_grant = 0
        self._frames_left = 0
        self._next_pdu_id = 0
        self.counters = RncCounters()
        self.trace = trace

    def receive(self, packet: Packet) -> int:
        pdus = segment(packet, self._next_pdu_id)
        self._next_pdu_id += len(pdus)
        if packet.flow is Flow.RT:
            self.rt_pending.extend(pdus)
        else:
            self.nrt_pending.extend(pdus)
        self.counters.segmented[packet.flow] += len(pdus)
        return len(pdus)

    def on_grant(self, grant: CapacityGrant, now: int) -> None:
        if now < grant.effective_at:
            raise ValueError(f"grant effective at {grant.effective_at} delivered early at {now}")
        if self.active_grant is not None and grant.effective_at < self.active_grant.effective_at:
            self.counters.stale_grants += 1
            log.warning("ignoring out-of-order grant issued at %d", grant.issued_at)
            return
        # unused credits of the previous grant are discarded
        self.active_grant = grant
        self.grant_pdus_remaining = grant.max_pdus
        self.dispatched_this_grant = 0
        self._frames_left = max(1, grant.valid_for // self.frame_us)

    def _nrt_quota(self, now: int) -> int:
        if not self.flow_controlled:
            return len(self.nrt_pending)
        g = self.active_grant
        if g is None or now >= g.effective_at + g.valid_for:
            return 0
        if not self.spread:
            return self.grant_pdus_remaining
        return -(-self.grant_pdus_remaining // self._frames_left)

    def transfer_tick(self, now: int) -> tuple[list[Pdu], list[Pdu]]:
        """Dispatch PDUs onto the Iub for the frame starting at ``now``."""
        rt = list(self.rt_pending)
        self.rt_pending.clear()
        n = min(self._nrt_quota(now), len(self.nrt_pending))
        pop = self.nrt_pending.popleft
        nrt = [pop() for _ in range(n)]
        if self.flow_controlled and self.active_grant is not None:
            self.grant_pdus_remaining -= n
            self.dispatched_this_grant += n
            self._frames_left = max(1, self._frames_left - 1)
            assert self.dispatched_this_grant <= self.active_grant.max_pdus
        c = self.counters.transferred
        c[Flow.RT] += len(rt)
        c[Flow.NRT] += n
        if self.trace is not None:
            t = now / 1e6
            self.trace.write(f"{t:.6f},rt,{len(rt)},{self.grant_pdus_remaining}\n")
            self.trace.write(f"{t:.6f},nrt,{n},{self.grant_pdus_remaining}\n")
        return rt, nrt

    def pending(self, flow: Flow) -> int:
        return len(self.rt_pending) if flow is Flow.RT else len(self.nrt_pending)
