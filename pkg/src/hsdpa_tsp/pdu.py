"""MAC-d protocol data units and the two flow classes of a multimedia session."""

from __future__ import annotations

import enum

PDU_BITS = 336
SDU_BITS = 320
HEADER_BITS = PDU_BITS - SDU_BITS
PDU_BYTES = PDU_BITS // 8


class Flow(enum.IntEnum):
    RT = 0
    NRT = 1


class Pdu:
    """One 336-bit MAC-d PDU.

    Times are kept in integer microseconds of simulated time so that events
    on the TTI and frame grids compare exactly.
    """

    __slots__ = ("id", "flow", "source_packet_id", "created_at", "nodeb_enqueued_at")

    size_bits = PDU_BITS

    def __init__(self, id: int, flow: Flow, source_packet_id: int, created_at: int,
                 nodeb_enqueued_at: int | None = None):
        self.id = id
        self.flow = flow
        self.source_packet_id = source_packet_id
        self.created_at = created_at
        self.nodeb_enqueued_at = nodeb_enqueued_at

    def __repr__(self) -> str:
        return (f"Pdu(id={self.id}, flow={self.flow.name}, packet={self.source_packet_id}, "
                f"created_at={self.created_at}, nodeb_enqueued_at={self.nodeb_enqueued_at})")


def bytes_to_pdus(n_bytes: float) -> int:
    """Convert a byte threshold to a whole number of PDUs (42 bytes each)."""
    pdus, rem = divmod(n_bytes, PDU_BYTES)
    if rem:
        raise ValueError(f"{n_bytes} bytes is not a whole number of {PDU_BYTES}-byte PDUs")
    return int(pdus)


US_PER_S = 1_000_000


def to_us(seconds: float) -> int:
    return int(round(seconds * US_PER_S))


def to_s(us: int) -> float:
    return us / US_PER_S
