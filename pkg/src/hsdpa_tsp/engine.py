"""Discrete-event core wiring sources, RNC, Iub, Node B buffer and radio link.

Events are ordered by ``(time, priority, insertion)``. At one instant the
order is: Iub PDU arrivals at the Node B, then the TTI (channel step,
transmission, queue-average update, grant issuance if due), then packet
arrivals at the RNC, grant delivery at the RNC and finally the RNC frame
transfer. A PDU landing at the Node B at a TTI boundary is therefore eligible
for that TTI, and the queue average sees the post-transmission occupancy.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import heapq
import math
import statistics
import zlib
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from .flow_control import FlowControlParams, FlowController, Level
from .pdu import PDU_BITS, SDU_BITS, Flow, Pdu, to_us
from .radio import Outcome, RadioLink, RadioParams
from .rnc import Rnc
from .traffic import FtpSource, Packet, Phase, VoipSource, apply_cn_delay
from .tsp_buffer import TspBuffer, TspBufferConfig, Variant

HEADER_FACTOR = PDU_BITS / SDU_BITS


class Priority(enum.IntEnum):
    WARMUP = -1
    IUB_ARRIVAL = 0
    TTI = 1
    RNC_PACKET = 5
    GRANT_AT_RNC = 6
    RNC_FRAME = 7


class EventQueue:
    """Min-heap of ``(time, priority, seq, kind, payload)``; ``seq`` breaks ties FIFO."""

    def __init__(self):
        self.heap: list = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self.heap)

    def schedule(self, time: int, priority: int, kind: Any, payload: Any = None) -> None:
        self._seq += 1
        heapq.heappush(self.heap, (time, priority, self._seq, kind, payload))

    def pop(self) -> tuple:
        return heapq.heappop(self.heap)


@dataclass(frozen=True)
class Thresholds:
    """Buffer thresholds in PDUs (42 bytes each)."""

    r: int = 20
    l: int = 120
    h: int = 240
    n: int = 300


@dataclass(frozen=True)
class TrafficConfig:
    voip_packet_bits: int = 304
    voip_rate_bps: float = 15200.0
    voip_mean_phase_s: float = 3.0
    ftp_rate_kbps: float = 128.0
    ftp_mean_packet_bytes: float = 480.0
    ftp_size_model: str = "fixed"
    cn_delay_s: float = 0.050
    voip_enabled: bool = True


@dataclass(frozen=True)
class FlowConfig:
    w_q: float = 0.7
    c_factor: float = 0.5
    iub_latency_s: float = 0.020
    pdu_transfer_latency_s: float = 0.020
    frame_s: float = 0.010
    grant_interval_s: float | None = None
    # allocated NRT PDU rate = FTP rate x 336/320 x rate_headroom
    rate_headroom: float = 1.25
    spread_credits: bool = True


@dataclass(frozen=True)
class SimConfig:
    variant: Variant = Variant.ENHANCED
    seed: int = 1
    duration_s: float = 400.0
    warmup_s: float = 10.0
    tti_s: float = 0.002
    thresholds: Thresholds = Thresholds()
    traffic: TrafficConfig = TrafficConfig()
    flow: FlowConfig = FlowConfig()
    radio: RadioParams = RadioParams()

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        self.validate()

    def validate(self) -> None:
        if self.duration_s < 0 or not 0 <= self.warmup_s <= self.duration_s:
            raise ValueError(f"need 0 <= warmup_s <= duration_s, got warmup_s={self.warmup_s}, "
                             f"duration_s={self.duration_s}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        tti, frame = to_us(self.tti_s), to_us(self.flow.frame_s)
        if tti <= 0 or frame % tti:
            raise ValueError(f"TTI {self.tti_s} s must divide the HS-DSCH frame {self.flow.frame_s} s")
        if abs(self.radio.tti_s - self.tti_s) > 1e-12:
            raise ValueError("radio.tti_s must equal the simulation TTI")
        if self.flow.rate_headroom <= 0:
            raise ValueError("rate_headroom must be > 0")
        self.buffer_config()
        self.flow_params()

    def buffer_config(self) -> TspBufferConfig:
        t = self.thresholds
        return TspBufferConfig(t.n, t.r, t.l, t.h, self.variant)

    def lambda_nrt_bps(self) -> float:
        return self.traffic.ftp_rate_kbps * 1000.0 * HEADER_FACTOR * self.flow.rate_headroom

    def flow_params(self) -> FlowControlParams:
        f = self.flow
        return FlowControlParams(lambda_nrt=self.lambda_nrt_bps(), w_q=f.w_q, c_factor=f.c_factor,
                                 tti_rlc=f.frame_s, iub_latency=f.iub_latency_s,
                                 pdu_transfer_latency=f.pdu_transfer_latency_s,
                                 grant_interval=f.grant_interval_s)

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one stochastic process, keyed by a fixed label."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(label.encode())]))


@dataclass
class MetricsReport:
    variant: str
    seed: int
    ftp_rate_kbps: float
    measured_s: float
    rt_loss_prob: float | None
    nrt_loss_prob: float | None
    rt_mean_delay_s: float | None
    rt_mean_delivery_delay_s: float | None
    nrt_throughput_bps: float
    rt_arrivals: int = 0
    rt_blocked: int = 0
    nrt_arrivals: int = 0
    nrt_dropped_tail: int = 0
    nrt_pushed_out: int = 0
    enhanced_pushout_anomalies: int = 0
    rt_delivered: int = 0
    nrt_delivered: int = 0
    air_discarded_blocks: int = 0
    air_discarded_pdus: int = 0
    rnc_backlog_mean_pdus: float = 0.0
    rnc_backlog_max_pdus: int = 0
    grant_level_shares: dict[str, float] = field(default_factory=dict)
    voip_on_fraction: float | None = None
    voip_trace_digest: str = ""
    ftp_trace_digest: str = ""
    conservation: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def rt_mean_delay_ms(self) -> float | None:
        return None if self.rt_mean_delay_s is None else 1000.0 * self.rt_mean_delay_s

    @property
    def nrt_throughput_kbps(self) -> float:
        return self.nrt_throughput_bps / 1000.0

    def digest(self) -> str:
        return hashlib.sha256(repr(dataclasses.astuple(self)).encode()).hexdigest()

    def summary(self) -> str:
        def f(x, scale=1.0, fmt="{:.6f}"):
            return "n/a" if x is None else fmt.format(x * scale)
        return "\n".join([
            f"variant            {self.variant}",
            f"ftp rate           {self.ftp_rate_kbps:g} kbps   seed {self.seed}",
            f"measured window    {self.measured_s:g} s",
            f"VoIP loss          {f(self.rt_loss_prob)}  ({self.rt_blocked}/{self.rt_arrivals})",
            f"VoIP mean delay    {f(self.rt_mean_delay_s, 1000.0, '{:.3f}')} ms",
            f"FTP loss           {f(self.nrt_loss_prob)}  "
            f"({self.nrt_dropped_tail + self.nrt_pushed_out}/{self.nrt_arrivals})",
            f"FTP throughput     {self.nrt_throughput_kbps:.2f} kbps",
            f"RNC backlog        mean {self.rnc_backlog_mean_pdus:.2f}  max {self.rnc_backlog_max_pdus} PDUs",
            f"air discards       {self.air_discarded_blocks} blocks / {self.air_discarded_pdus} PDUs",
        ])


class Simulator:
    def __init__(self, config: SimConfig, traces: dict[str, TextIO] | None = None):
        config.validate()
        traces = traces or {}
        self.config = config
        self.tti_us = to_us(config.tti_s)
        self.frame_us = to_us(config.flow.frame_s)
        self.duration_us = to_us(config.duration_s)
        self.warmup_us = to_us(config.warmup_s)
        self.cn_delay_us = to_us(config.traffic.cn_delay_s)
        self.enhanced = config.variant is Variant.ENHANCED
        self.buffer = TspBuffer(config.buffer_config())
        fp = config.flow_params()
        self.pdu_latency_us = to_us(fp.pdu_transfer_latency)
        self.grant_interval_us = to_us(fp.interval)
        th = config.thresholds
        self.fc = FlowController(fp, th.l, th.h, traces.get("grants")) if self.enhanced else None
        self.rnc = Rnc(self.frame_us, flow_controlled=self.enhanced,
                       spread=config.flow.spread_credits, trace=traces.get("iub"))
        self.radio = RadioLink(config.radio, substream(config.seed, "shadowing"),
                               trace=traces.get("radio"))
        t = config.traffic
        self.voip = VoipSource(substream(config.seed, "voip"), t.voip_packet_bits, t.voip_rate_bps,
                               t.voip_mean_phase_s)
        self.ftp = FtpSource(substream(config.seed, "ftp"), t.ftp_rate_kbps * 1000.0,
                             t.ftp_mean_packet_bytes, config.tti_s, t.ftp_size_model,
                             first_id=1 << 40)
        self.packet_trace = traces.get("packets")
        self.events = EventQueue()
        self.now = 0
        self.in_flight = [0, 0]
        self.left_air = [0, 0]
        self.voip_on_us = 0
        self._voip_hash = hashlib.blake2b(digest_size=16)
        self._ftp_hash = hashlib.blake2b(digest_size=16)

    def schedule(self, time: int, kind: Priority, payload=None) -> None:
        self.events.schedule(time, int(kind), kind, payload)

    def _clip_on(self, start: int, end: int) -> int:
        return max(0, min(end, self.duration_us) - max(start, self.warmup_us))

    def _next_voip(self) -> Packet:
        v = self.voip
        while True:
            if v.phase is Phase.ON:
                on_start = v.phase_started_at
            t, ev = v.next_event()
            if isinstance(ev, Packet):
                return ev
            if ev is Phase.OFF:
                self.voip_on_us += self._clip_on(on_start, t)

    def _push_packet(self, pkt: Packet | None) -> None:
        if pkt is None:
            return
        apply_cn_delay(pkt, self.cn_delay_us)
        if pkt.rnc_arrival_at < self.duration_us:
            self.schedule(pkt.rnc_arrival_at, Priority.RNC_PACKET, pkt)

    def run(self) -> MetricsReport:
        cfg = self.config
        buf, radio, rnc, fc = self.buffer, self.radio, self.rnc, self.fc
        warm, end = self.warmup_us, self.duration_us
        tti_us, frame_us, gi_us = self.tti_us, self.frame_us, self.grant_interval_us
        P = Priority
        RT, NRT = Flow.RT, Flow.NRT
        DELIVERED, DISCARDED = Outcome.DELIVERED, Outcome.DISCARDED

        self.schedule(0, P.TTI)
        self.schedule(0, P.RNC_FRAME)
        if warm < end:
            self.schedule(warm, P.WARMUP)
        if cfg.traffic.voip_enabled:
            self._push_packet(self._next_voip())
        self._push_packet(self.ftp.next_packet())

        snap = dataclasses.replace(buf.counters)
        rt_delivered = nrt_delivered = 0
        delay_sum = deliv_delay_sum = 0
        discard_blocks = discard_pdus = 0
        backlog_sum = backlog_n = backlog_max = 0
        levels = {lv: 0 for lv in Level}
        measuring = warm == 0
        next_grant = 0
        tti_index = 0
        heap = self.events.heap
        pop = heapq.heappop
        pkt_trace = self.packet_trace

        while heap:
            ev = pop(heap)
            now = ev[0]
            if now >= end:
                break
            self.now = now
            kind = ev[3]
            if kind is P.TTI:
                radio.step_channel(tti_index)
                tti_index += 1
                res = radio.transmit_tti(buf, now)
                outcome = res.outcome
                if outcome is DELIVERED:
                    if measuring:
                        first = res.first_tx_at
                        for pdu in res.pdus:
                            if pdu.flow is RT:
                                rt_delivered += 1
                                # queuing delay: Node B enqueue to first transmission
                                delay_sum += first - pdu.nodeb_enqueued_at
                                deliv_delay_sum += now - pdu.nodeb_enqueued_at
                            else:
                                nrt_delivered += 1
                    self._account_out(res.pdus)
                elif outcome is DISCARDED:
                    if measuring:
                        discard_blocks += 1
                        discard_pdus += len(res.pdus)
                    self._account_out(res.pdus)
                if fc is not None:
                    fc.update_aveq(len(buf.rt_fifo) + len(buf.nrt_fifo))
                    if now == next_grant:
                        g = fc.issue_grant(now)
                        if measuring:
                            levels[fc.level] += 1
                        self.schedule(g.effective_at, P.GRANT_AT_RNC, g)
                        next_grant += gi_us
                self.schedule(now + tti_us, P.TTI)
            elif kind is P.IUB_ARRIVAL:
                rt_list, nrt_list = ev[4]
                self.in_flight[0] -= len(rt_list)
                self.in_flight[1] -= len(nrt_list)
                for pdu in rt_list:
                    buf.enqueue_rt(pdu, now)
                for pdu in nrt_list:
                    buf.enqueue_nrt(pdu, now)
            elif kind is P.RNC_PACKET:
                pkt = ev[4]
                rnc.receive(pkt)
                if pkt_trace is not None:
                    pkt_trace.write(f"{pkt.generated_at / 1e6:.6f},{pkt.flow.name},{pkt.size_bits}\n")
                if pkt.flow is RT:
                    self._voip_hash.update(pkt.generated_at.to_bytes(8, "little"))
                    self._push_packet(self._next_voip())
                else:
                    self._ftp_hash.update(pkt.generated_at.to_bytes(8, "little")
                                          + pkt.size_bits.to_bytes(4, "little"))
                    self._push_packet(self.ftp.next_packet())
            elif kind is P.RNC_FRAME:
                rt_list, nrt_list = rnc.transfer_tick(now)
                if rt_list or nrt_list:
                    self.in_flight[0] += len(rt_list)
                    self.in_flight[1] += len(nrt_list)
                    self.schedule(now + self.pdu_latency_us, P.IUB_ARRIVAL,
                                  (rt_list, nrt_list))
                if measuring:
                    b = len(rnc.nrt_pending)
                    backlog_sum += b
                    backlog_n += 1
                    if b > backlog_max:
                        backlog_max = b
                self.schedule(now + frame_us, P.RNC_FRAME)
            elif kind is P.GRANT_AT_RNC:
                rnc.on_grant(ev[4], now)
            elif kind is P.WARMUP:
                measuring = True
                snap = dataclasses.replace(buf.counters)

        v = self.voip
        if cfg.traffic.voip_enabled and v.phase is Phase.ON:
            self.voip_on_us += self._clip_on(v.phase_started_at, v.phase_ends_at)

        c = buf.counters
        if not measuring:
            # the measured window never opened
            snap = dataclasses.replace(c)
        rt_arr = c.rt_arrivals - snap.rt_arrivals
        rt_blk = c.rt_blocked - snap.rt_blocked
        nrt_arr = c.nrt_arrivals - snap.nrt_arrivals
        nrt_drop = c.nrt_dropped_tail - snap.nrt_dropped_tail
        nrt_po = c.nrt_pushed_out - snap.nrt_pushed_out
        measured_us = end - warm if measuring else 0
        measured_s = measured_us / 1e6
        n_grants = sum(levels.values())
        return MetricsReport(
            variant=cfg.variant.value,
            seed=cfg.seed,
            ftp_rate_kbps=cfg.traffic.ftp_rate_kbps,
            measured_s=measured_s,
            rt_loss_prob=rt_blk / rt_arr if rt_arr else None,
            nrt_loss_prob=(nrt_drop + nrt_po) / nrt_arr if nrt_arr else None,
            rt_mean_delay_s=delay_sum / rt_delivered / 1e6 if rt_delivered else None,
            rt_mean_delivery_delay_s=deliv_delay_sum / rt_delivered / 1e6 if rt_delivered else None,
            nrt_throughput_bps=nrt_delivered * PDU_BITS / measured_s if measured_s > 0 else 0.0,
            rt_arrivals=rt_arr,
            rt_blocked=rt_blk,
            nrt_arrivals=nrt_arr,
            nrt_dropped_tail=nrt_drop,
            nrt_pushed_out=nrt_po,
            enhanced_pushout_anomalies=c.enhanced_pushout_anomalies - snap.enhanced_pushout_anomalies,
            rt_delivered=rt_delivered,
            nrt_delivered=nrt_delivered,
            air_discarded_blocks=discard_blocks,
            air_discarded_pdus=discard_pdus,
            rnc_backlog_mean_pdus=backlog_sum / backlog_n if backlog_n else 0.0,
            rnc_backlog_max_pdus=backlog_max,
            grant_level_shares={lv.value: (n / n_grants if n_grants else 0.0) for lv, n in levels.items()},
            voip_on_fraction=self.voip_on_us / measured_us if measured_us else None,
            voip_trace_digest=self._voip_hash.hexdigest(),
            ftp_trace_digest=self._ftp_hash.hexdigest(),
            conservation=self._conservation(),
        )

    def _account_out(self, pdus: list[Pdu]) -> None:
        out = self.left_air
        for pdu in pdus:
            out[pdu.flow] += 1

    def _conservation(self) -> dict[str, dict[str, int]]:
        """End-of-run whereabouts of every PDU ever segmented, per flow."""
        c = self.buffer.counters
        harq = self.radio.harq.block if self.radio.harq is not None else []
        result = {}
        for flow in Flow:
            result[flow.name] = {
                "segmented": self.rnc.counters.segmented[flow],
                "in_rnc": self.rnc.pending(flow),
                "in_flight_iub": self.in_flight[flow],
                "in_nodeb": len(self.buffer.rt_fifo if flow is Flow.RT else self.buffer.nrt_fifo),
                "in_harq": sum(1 for p in harq if p.flow is flow),
                "dropped_nodeb": (c.rt_blocked if flow is Flow.RT
                                  else c.nrt_dropped_tail + c.nrt_pushed_out),
                "left_air": self.left_air[flow],
            }
        return result


def run(config: SimConfig, traces: dict[str, TextIO] | None = None) -> MetricsReport:
    return Simulator(config, traces).run()


REPLICATION_METRICS = ("rt_loss_prob", "nrt_loss_prob", "rt_mean_delay_s", "nrt_throughput_bps",
                       "voip_on_fraction", "rnc_backlog_mean_pdus")


def summarize(values: Sequence[float]) -> dict[str, Any]:
    """Mean, sample std and 95% normal-approximation half-width."""
    vals = [v for v in values if v is not None]
    n = len(vals)
    if n == 0:
        return {"values": list(values), "n": 0, "mean": None, "std": None, "half_width": None}
    mean = statistics.fmean(vals)
    std = statistics.stdev(vals) if n >= 2 else 0.0
    return {"values": list(values), "n": n, "mean": mean, "std": std,
            "half_width": 1.959963984540054 * std / math.sqrt(n)}


def run_replications(config: SimConfig, seeds: int | Iterable[int], jobs: int = 1,
                     metrics: Sequence[str] = REPLICATION_METRICS) -> dict[str, dict[str, Any]]:
    """Independent replications; ``seeds`` is a count (seeds 1..n) or explicit list."""
    seeds = list(range(1, seeds + 1)) if isinstance(seeds, int) else list(seeds)
    if len(seeds) < 2:
        raise ValueError("need at least 2 replications")
    reports = map_runs([config.replace(seed=s) for s in seeds], jobs)
    return {m: summarize([getattr(r, m) for r in reports]) for m in metrics}


def map_runs(configs: Sequence[SimConfig], jobs: int = 1) -> list[MetricsReport]:
    if jobs <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(run, configs))


def run_degenerate(model, slots: int, seed: int = 1, warmup_slots: int = 1000,
                   n_batches: int = 50, rt_cap_offset: int = 0) -> dict[str, Any]:
    """Queue mechanics only: Bernoulli arrivals, one PDU served per slot.

    Uses the real ``TspBuffer`` with the engine's ordering (arrivals before
    service, RT before NRT). No radio, no RNC, no flow control. Per-batch
    counts are returned alongside the totals for batch-means error estimates.
    ``rt_cap_offset`` mutates the buffer's RT cap after construction (may reach
    zero) and is only meant for checking that a faulty buffer is caught.
    """
    from .oracle import OracleVariant

    policy = "push_out" if model.variant is OracleVariant.ORIGINAL else "block"
    buf = TspBuffer(TspBufferConfig(model.n, model.r, 0, 0, Variant.ORIGINAL, policy))
    if rt_cap_offset:
        buf._r = min(model.n, max(0, model.r + rt_cap_offset))
    rng = substream(seed, "degenerate")
    total = slots + warmup_slots
    rt_arr = (rng.random(total) < model.p_rt).tolist()
    nrt_arr = (rng.random(total) < model.p_nrt).tolist()
    pdu = Pdu(0, Flow.RT, 0, 0)
    npdu = Pdu(0, Flow.NRT, 0, 0)
    enq_rt, enq_nrt, deq = buf.enqueue_rt, buf.enqueue_nrt, buf.dequeue_up_to
    rt_q, nrt_q = buf.rt_fifo, buf.nrt_fifo
    c = buf.counters
    batch_len = max(1, slots // n_batches)
    marks = []
    for k in range(total):
        if k >= warmup_slots and (k - warmup_slots) % batch_len == 0:
            marks.append((c.rt_arrivals, c.rt_blocked, c.nrt_arrivals,
                          c.nrt_dropped_tail + c.nrt_pushed_out))
        if rt_arr[k]:
            enq_rt(pdu, k)
        if nrt_arr[k]:
            enq_nrt(npdu, k)
        if rt_q or nrt_q:
            deq(PDU_BITS, k)
    marks.append((c.rt_arrivals, c.rt_blocked, c.nrt_arrivals, c.nrt_dropped_tail + c.nrt_pushed_out))
    m = np.diff(np.array(marks, dtype=np.int64), axis=0)
    first = marks[0]
    return {
        "slots": slots,
        "rt_arrivals": c.rt_arrivals - first[0],
        "rt_blocked": c.rt_blocked - first[1],
        "nrt_arrivals": c.nrt_arrivals - first[2],
        "nrt_lost": c.nrt_dropped_tail + c.nrt_pushed_out - first[3],
        "batches": m,
    }
