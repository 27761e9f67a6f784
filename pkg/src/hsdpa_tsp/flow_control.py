"""Node B side of threshold-based Iub credit flow control.

Every TTI the Node B folds the instantaneous buffer occupancy into an
exponentially weighted average. At each grant instant the average is compared
with the thresholds ``L`` and ``H`` to choose the admitted NRT rate (full,
reduced by the factor ``C``, or zero), and the rate is turned into a number of
PDUs the RNC may send during the next grant interval.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TextIO

from .pdu import PDU_BITS, US_PER_S, to_us


class Level(enum.Enum):
    FULL = "full"
    REDUCED = "reduced"
    STOPPED = "stopped"


@dataclass(frozen=True)
class FlowControlParams:
    """Flow-control constants. Rates in bits/s, times in seconds.

    ``lambda_nrt`` is the PDU-level rate (header bits included) allocated to
    the NRT flow while the average queue is below ``L``.
    """

    lambda_nrt: float
    w_q: float = 0.7
    c_factor: float = 0.5
    pdu_size_bits: int = PDU_BITS
    tti_rlc: float = 0.010
    iub_latency: float = 0.020
    pdu_transfer_latency: float = 0.020
    grant_interval: float | None = None

    def __post_init__(self):
        if not 0 < self.c_factor < 1:
            raise ValueError(f"C must satisfy 0 < C < 1, got {self.c_factor}")
        if not 0 < self.w_q <= 1:
            raise ValueError(f"w_q must satisfy 0 < w_q <= 1, got {self.w_q}")
        if self.lambda_nrt < 0:
            raise ValueError(f"lambda_nrt must be >= 0, got {self.lambda_nrt}")
        if self.tti_rlc <= 0:
            raise ValueError(f"tti_rlc must be > 0, got {self.tti_rlc}")
        if self.iub_latency < 0 or self.pdu_transfer_latency < 0:
            raise ValueError("latencies must be >= 0")
        if self.grant_interval is not None and self.grant_interval <= 0:
            raise ValueError(f"grant_interval must be > 0, got {self.grant_interval}")

    @property
    def interval(self) -> float:
        if self.grant_interval is not None:
            return self.grant_interval
        return grant_interval_default(self)


def grant_interval_default(params: FlowControlParams) -> float:
    """Iub signalling latency + PDU transfer latency + one HS-DSCH frame."""
    return params.iub_latency + params.pdu_transfer_latency + params.tti_rlc


@dataclass(frozen=True)
class CapacityGrant:
    """Credits for the NRT flow; times in integer microseconds."""

    max_pdus: int
    issued_at: int
    effective_at: int
    valid_for: int


class FlowController:
    def __init__(self, params: FlowControlParams, lower_l: float, upper_h: float,
                 trace: TextIO | None = None):
        if not 0 <= lower_l < upper_h:
            raise ValueError(f"need 0 <= L < H, got L={lower_l}, H={upper_h}")
        self.params = params
        self.lower_l = lower_l
        self.upper_h = upper_h
        self.aveq = 0.0
        self.level = Level.FULL
        self.current_lambda = params.lambda_nrt
        self.credit_fraction = Fraction(0)
        self.trace = trace
        self._w = params.w_q
        self._latency_us = to_us(params.iub_latency)
        self._interval_us = to_us(params.interval)

    def update_aveq(self, q_tti: int) -> float:
        self.aveq = self._w * q_tti + (1.0 - self._w) * self.aveq
        return self.aveq

    def select_rate(self) -> float:
        # thresholds trigger only when strictly exceeded
        if self.aveq > self.upper_h:
            self.level, self.current_lambda = Level.STOPPED, 0.0
        elif self.aveq > self.lower_l:
            self.level = Level.REDUCED
            self.current_lambda = self.params.c_factor * self.params.lambda_nrt
        else:
            self.level, self.current_lambda = Level.FULL, self.params.lambda_nrt
        return self.current_lambda

    def ideal_pdus(self) -> Fraction:
        """PDUs the current rate allows over one grant interval, as an exact fraction.

        Equal to the per-frame grant times the frames in the interval. Times are
        taken from the integer-microsecond grid so that e.g. 67.2 kb/s over
        50 ms is exactly 10 PDUs.
        """
        rate = Fraction(self.current_lambda).limit_denominator(10 ** 6)
        return rate * Fraction(self._interval_us, US_PER_S) / self.params.pdu_size_bits

    def compute_grant(self, now: int) -> CapacityGrant:
        total = self.ideal_pdus() + self.credit_fraction
        max_pdus = math.floor(total)
        self.credit_fraction = total - max_pdus
        grant = CapacityGrant(max_pdus, now, now + self._latency_us, self._interval_us)
        if self.trace is not None:
            self.trace.write(f"{now / US_PER_S:.6f},{self.aveq:.4f},{self.level.value},{max_pdus}\n")
        return grant

    def issue_grant(self, now: int) -> CapacityGrant:
        self.select_rate()
        return self.compute_grant(now)
