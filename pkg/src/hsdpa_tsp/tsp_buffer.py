"""Node B per-UE buffer with Time-Space Priority (TSP) queuing.

Real-time PDUs are served ahead of non-real-time PDUs (time priority) while
the number of queued real-time PDUs is capped at ``R`` so that the rest of
the buffer is kept for the loss-sensitive NRT flow (space priority).

Two variants are provided:

``Variant.ORIGINAL``
    Drop-tail for arriving NRT PDUs; an RT PDU that meets a full buffer while
    fewer than ``R`` RT PDUs are queued pushes out the NRT PDU at the tail.
``Variant.ENHANCED``
    Same admission rules, but the buffer is meant to run under Iub flow
    control with thresholds ``L < H < N`` so that a full buffer never occurs.
    If it does, the push-out still happens and is recorded in
    ``counters.enhanced_pushout_anomalies``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .pdu import PDU_BITS, Flow, Pdu


class Variant(str, enum.Enum):
    ORIGINAL = "original"
    ENHANCED = "enhanced"


class Admission(enum.Enum):
    ACCEPTED = "accepted"
    BLOCKED = "blocked"
    ACCEPTED_WITH_PUSH_OUT = "accepted_with_push_out"
    DROPPED_TAIL = "dropped_tail"


@dataclass(frozen=True)
class TspBufferConfig:
    """Thresholds in PDU counts.

    ``full_rt_policy`` decides what an RT arrival does when the buffer is full
    and the RT cap is not reached: ``"push_out"`` (default, both variants) or
    ``"block"`` (used by the Markov-chain oracle to model a no-push-out queue).
    """

    capacity_n: int = 300
    rt_limit_r: int = 20
    lower_l: int = 120
    upper_h: int = 240
    variant: Variant = Variant.ENHANCED
    full_rt_policy: str = "push_out"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0 < self.rt_limit_r <= self.capacity_n:
            raise ValueError(f"need 0 < R <= N, got R={self.rt_limit_r}, N={self.capacity_n}")
        if self.variant is Variant.ENHANCED and not 0 < self.lower_l < self.upper_h < self.capacity_n:
            raise ValueError(
                f"enhanced variant needs 0 < L < H < N, got L={self.lower_l}, "
                f"H={self.upper_h}, N={self.capacity_n}")
        if self.full_rt_policy not in ("push_out", "block"):
            raise ValueError(f"full_rt_policy must be 'push_out' or 'block', got {self.full_rt_policy!r}")


@dataclass
class BufferCounters:
    rt_arrivals: int = 0
    rt_accepted: int = 0
    rt_blocked: int = 0
    nrt_arrivals: int = 0
    nrt_accepted: int = 0
    nrt_dropped_tail: int = 0
    nrt_pushed_out: int = 0
    enhanced_pushout_anomalies: int = 0
    rt_dequeued: int = 0
    nrt_dequeued: int = 0


@dataclass
class Occupancy:
    rt_count: int
    nrt_count: int
    total: int


class TspBuffer:
    def __init__(self, config: TspBufferConfig, strict: bool = False):
        self.config = config
        self.rt_fifo: deque[Pdu] = deque()
        self.nrt_fifo: deque[Pdu] = deque()
        self.counters = BufferCounters()
        self.last_pushed_out: Pdu | None = None
        # strict=True re-checks the structural invariants after every mutation
        self.strict = strict
        self._r = config.rt_limit_r
        self._n = config.capacity_n
        self._pushout = config.full_rt_policy == "push_out"

    def __len__(self) -> int:
        return len(self.rt_fifo) + len(self.nrt_fifo)

    def enqueue_rt(self, pdu: Pdu, now: int) -> Admission:
        c = self.counters
        c.rt_arrivals += 1
        n_rt = len(self.rt_fifo)
        if n_rt >= self._r:
            c.rt_blocked += 1
            return Admission.BLOCKED
        if n_rt + len(self.nrt_fifo) < self._n:
            outcome = Admission.ACCEPTED
        elif self._pushout:
            # buffer full with n_rt < R <= N, so the NRT segment is non-empty
            self.last_pushed_out = self.nrt_fifo.pop()
            c.nrt_pushed_out += 1
            if self.config.variant is Variant.ENHANCED:
                c.enhanced_pushout_anomalies += 1
            outcome = Admission.ACCEPTED_WITH_PUSH_OUT
        else:
            c.rt_blocked += 1
            return Admission.BLOCKED
        pdu.nodeb_enqueued_at = now
        self.rt_fifo.append(pdu)
        c.rt_accepted += 1
        if self.strict:
            self.check_invariants()
        return outcome

    def enqueue_nrt(self, pdu: Pdu, now: int) -> Admission:
        c = self.counters
        c.nrt_arrivals += 1
        if len(self.rt_fifo) + len(self.nrt_fifo) >= self._n:
            c.nrt_dropped_tail += 1
            return Admission.DROPPED_TAIL
        pdu.nodeb_enqueued_at = now
        self.nrt_fifo.append(pdu)
        c.nrt_accepted += 1
        if self.strict:
            self.check_invariants()
        return Admission.ACCEPTED

    def enqueue(self, pdu: Pdu, now: int) -> Admission:
        if pdu.flow is Flow.RT:
            return self.enqueue_rt(pdu, now)
        return self.enqueue_nrt(pdu, now)

    def dequeue_up_to(self, max_bits: int, now: int | None = None) -> list[Pdu]:
        """Remove whole PDUs head-first, all RT before any NRT, within ``max_bits``."""
        room = max_bits // PDU_BITS
        out: list[Pdu] = []
        if room <= 0:
            return out
        rt, nrt = self.rt_fifo, self.nrt_fifo
        while room and rt:
            out.append(rt.popleft())
            room -= 1
        n_rt = len(out)
        while room and nrt:
            out.append(nrt.popleft())
            room -= 1
        self.counters.rt_dequeued += n_rt
        self.counters.nrt_dequeued += len(out) - n_rt
        if self.strict:
            self.check_invariants()
        return out

    def occupancy(self) -> Occupancy:
        r, n = len(self.rt_fifo), len(self.nrt_fifo)
        return Occupancy(r, n, r + n)

    def check_invariants(self) -> None:
        c = self.counters
        n_rt, n_nrt = len(self.rt_fifo), len(self.nrt_fifo)
        assert n_rt <= self._r, f"RT occupancy {n_rt} exceeds R={self._r}"
        assert n_rt + n_nrt <= self._n, f"total occupancy {n_rt + n_nrt} exceeds N={self._n}"
        assert c.rt_arrivals == c.rt_accepted + c.rt_blocked
        assert c.nrt_arrivals == c.nrt_accepted + c.nrt_dropped_tail
        assert c.rt_accepted == c.rt_dequeued + n_rt
        assert c.nrt_accepted == c.nrt_dequeued + n_nrt + c.nrt_pushed_out
