"""Traffic sources of the multimedia session.

* VoIP (RT): ON/OFF source, exponentially distributed phase lengths, one
  304-bit packet every 20 ms while ON.
* FTP (NRT): single packet call; packets of 480 bytes on average with a
  geometric number of TTIs between consecutive packets.

All times are integer microseconds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .pdu import Flow, to_us


@dataclass(slots=True)
class Packet:
    id: int
    flow: Flow
    size_bits: int
    generated_at: int
    rnc_arrival_at: int | None = None


def apply_cn_delay(packet: Packet, cn_delay_us: int) -> Packet:
    """Fixed, lossless core-network delay."""
    if cn_delay_us < 0:
        raise ValueError(f"core-network delay must be >= 0, got {cn_delay_us}")
    packet.rnc_arrival_at = packet.generated_at + cn_delay_us
    return packet


class Phase(enum.Enum):
    ON = "on"
    OFF = "off"


class VoipSource:
    def __init__(self, rng: np.random.Generator, packet_bits: int = 304, rate_bps: float = 15200.0,
                 mean_phase_s: float = 3.0, start: int = 0, first_id: int = 0):
        interval_s = packet_bits / rate_bps
        self.interval = to_us(interval_s)
        if abs(self.interval - interval_s * 1e6) > 1e-6:
            raise ValueError(f"packet interval {interval_s} s is not a whole number of microseconds")
        if mean_phase_s <= 0:
            raise ValueError("mean ON/OFF phase duration must be > 0")
        self.rng = rng
        self.packet_bits = packet_bits
        self.mean_phase_us = mean_phase_s * 1e6
        self._next_id = first_id
        self.phase = Phase.ON if rng.random() < 0.5 else Phase.OFF
        self.phase_started_at = start
        self.phase_ends_at = start + self._draw_phase()
        self.next_emit = start

    def _draw_phase(self) -> int:
        return max(1, int(round(self.rng.exponential(self.mean_phase_us))))

    def next_event(self) -> tuple[int, Packet | Phase]:
        """Advance to the next emission or phase change.

        Returns ``(time, packet)`` for an emission and ``(time, new_phase)``
        for a phase transition.
        """
        if self.phase is Phase.ON and self.next_emit < self.phase_ends_at:
            t = self.next_emit
            self.next_emit += self.interval
            pkt = Packet(self._next_id, Flow.RT, self.packet_bits, t)
            self._next_id += 1
            return t, pkt
        t = self.phase_ends_at
        self.phase = Phase.OFF if self.phase is Phase.ON else Phase.ON
        self.phase_started_at = t
        self.phase_ends_at = t + self._draw_phase()
        self.next_emit = t
        return t, self.phase

    def next_packet(self) -> Packet:
        while True:
            _, ev = self.next_event()
            if isinstance(ev, Packet):
                return ev


class FtpSource:
    def __init__(self, rng: np.random.Generator, offered_rate_bps: float, mean_packet_bytes: float = 480,
                 tti_s: float = 0.002, size_model: str = "fixed", start: int = 0, first_id: int = 0):
        if size_model not in ("fixed", "geometric"):
            raise ValueError(f"size_model must be 'fixed' or 'geometric', got {size_model!r}")
        if offered_rate_bps < 0:
            raise ValueError("offered rate must be >= 0")
        self.rng = rng
        self.offered_rate_bps = offered_rate_bps
        self.mean_packet_bytes = mean_packet_bytes
        self.size_model = size_model
        self.tti = to_us(tti_s)
        self.inter_arrival_mean_s = (mean_packet_bytes * 8 / offered_rate_bps
                                     if offered_rate_bps > 0 else float("inf"))
        # success probability per TTI of the geometric gap
        self.p = tti_s / self.inter_arrival_mean_s
        if self.p > 1:
            raise ValueError(
                f"offered rate {offered_rate_bps} b/s needs more than one packet per TTI")
        self.t = start
        self._next_id = first_id

    def next_packet(self) -> Packet | None:
        if self.p == 0:
            return None
        self.t += int(self.rng.geometric(self.p)) * self.tti
        if self.size_model == "fixed":
            size = int(round(self.mean_packet_bytes * 8))
        else:
            size = int(self.rng.geometric(1.0 / self.mean_packet_bytes)) * 8
        pkt = Packet(self._next_id, Flow.NRT, size, self.t)
        self._next_id += 1
        return pkt
