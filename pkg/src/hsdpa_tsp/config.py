"""Scenario files and results CSV.

Scenario grammar (UTF-8, line oriented)::

    # comment                     ; also a comment
    [section]                     # following keys are prefixed "section."
    key = value                   # inline comments start with " #"
    sub.key = 1, 2, 3             # dotted keys nest; lists are comma-separated
    []                            # back to the root prefix

Every key must be one of ``PARAMS``; unset keys keep their defaults. A bare
file is therefore the reference scenario used for the comparison sweep.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence

from .engine import FlowConfig, MetricsReport, SimConfig, Thresholds, TrafficConfig
from .pdu import PDU_BYTES
from .radio import RadioParams
from .tsp_buffer import Variant


class ConfigError(ValueError):
    pass




def _parse_int(s: str) -> int:
    return int(s.strip())


def _parse_float(s: str) -> float:
    return float(s.strip())


def _list_of(conv: Callable[[str], Any]) -> Callable[[str], list]:
    def parse(s: str) -> list:
        items = [x.strip() for x in s.split(",")]
        if not items or any(x == "" for x in items):
            raise ValueError(f"expected a comma-separated list, got {s!r}")
        return [conv(x) for x in items]
    return parse


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(s: str) -> Any:
        return None if s.strip().lower() in ("auto", "none", "") else conv(s)
    return parse


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return v
    return parse


def _fmt(v: Any) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:g}" if v == int(v) or abs(v) >= 1e-3 else repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class Param:
    key: str
    default: Any
    parse: Callable[[str], Any]
    note: str
    check: Callable[[Any], bool] | None = None
    constraint: str = ""


def _p(key, default, parse, note, check=None, constraint=""):
    return Param(key, default, parse, note, check, constraint)


_pos = (lambda v: v > 0, "must be > 0")
_nonneg = (lambda v: v >= 0, "must be >= 0")

PARAMS: tuple[Param, ...] = (
    _p("scenario.name", "reference", str.strip, "label written to the results CSV"),
    _p("scenario.variants", ["original", "enhanced"], _list_of(_choice("original", "enhanced")),
       "buffer schemes to run"),
    _p("scenario.seeds", [1, 2, 3, 4, 5], _list_of(_parse_int), "replication seeds (paired across variants)",
       lambda v: all(0 <= s < 2 ** 64 for s in v), "seeds must be unsigned 64-bit integers"),
    _p("scenario.ftp_rate_kbps", [64.0, 128.0, 256.0, 512.0, 1024.0], _list_of(_parse_float),
       "FTP offered rates swept (reference set)", lambda v: all(x > 0 for x in v),
       "rates must be > 0"),
    _p("sim.duration_s", 400.0, _parse_float, "simulated time (UE stays inside the cell)", *_pos),
    _p("sim.warmup_s", 10.0, _parse_float, "leading interval excluded from metrics", *_nonneg),
    _p("sim.tti_ms", 2.0, _parse_float, "HS-PDSCH TTI", *_pos),
    _p("thresholds.unit", "pdus", _choice("pdus", "bytes"), "unit of thresholds.r/l/h/n (42 bytes per PDU)"),
    _p("thresholds.r", 20, _parse_int, "RT cap R (840 bytes)", *_pos),
    _p("thresholds.l", 120, _parse_int, "lower flow-control threshold L (5040 bytes)", *_pos),
    _p("thresholds.h", 240, _parse_int, "upper flow-control threshold H (10080 bytes)", *_pos),
    _p("thresholds.n", 300, _parse_int, "buffer capacity N (12600 bytes)", *_pos),
    _p("flow_control.w_q", 0.7, _parse_float, "EWMA weight of the queue average",
       lambda v: 0 < v <= 1, "must satisfy 0 < w_q <= 1"),
    _p("flow_control.c", 0.5, _parse_float, "rate reduction factor C above L",
       lambda v: 0 < v < 1, "must satisfy 0 < C < 1"),
    _p("flow_control.iub_latency_ms", 20.0, _parse_float, "Iub signalling latency", *_nonneg),
    _p("flow_control.pdu_transfer_latency_ms", 20.0, _parse_float,
       "Iub PDU transfer latency (taken equal to the signalling latency)", *_nonneg),
    _p("flow_control.frame_ms", 10.0, _parse_float, "HS-DSCH frame length", *_pos),
    _p("flow_control.grant_interval_ms", None, _optional(_parse_float),
       "grant interval; auto = signalling + transfer latency + one frame (50 ms)",
       lambda v: v is None or v > 0, "must be > 0 or auto"),
    _p("flow_control.rate_headroom", 1.25, _parse_float,
       "allocated NRT PDU rate = FTP rate x 336/320 x headroom", *_pos),
    _p("flow_control.credit_dispatch", "spread", _choice("spread", "burst"),
       "RNC use of credits within a grant interval"),
    _p("traffic.cn_delay_ms", 50.0, _parse_float, "fixed core-network delay", *_nonneg),
    _p("voip.packet_bits", 304, _parse_int, "VoIP packet incl. RTP/UDP/IP and RLC overhead", *_pos),
    _p("voip.rate_bps", 15200.0, _parse_float, "VoIP bit rate while ON", *_pos),
    _p("voip.mean_phase_s", 3.0, _parse_float, "mean ON and OFF duration (exponential)", *_pos),
    _p("ftp.mean_packet_bytes", 480.0, _parse_float, "FTP mean packet size", *_pos),
    _p("ftp.size_model", "fixed", _choice("fixed", "geometric"), "FTP packet size distribution"),
    _p("radio.start_distance_m", 600.0, _parse_float, "UE start distance from the Node B", *_pos),
    _p("radio.speed_kmh", 3.0, _parse_float, "UE speed, moving straight away", *_nonneg),
    _p("radio.cell_radius_m", 1000.0, _parse_float, "cell radius (distance is clamped)", *_pos),
    _p("radio.total_power_w", 15.0, _parse_float, "total Node B power", *_pos),
    _p("radio.hsdsch_power_w", 7.0, _parse_float, "HS-PDSCH power", *_pos),
    _p("radio.cpich_power_w", 2.0, _parse_float, "CPICH power", *_nonneg),
    _p("radio.shadow_sigma_db", 8.0, _parse_float, "lognormal shadowing std", *_nonneg),
    _p("radio.shadow_rho", 0.5, _parse_float, "shadowing correlation between updates",
       lambda v: -1 < v < 1, "must satisfy |rho| < 1"),
    _p("radio.shadow_update_s", 0.5, _parse_float, "shadowing update period", *_pos),
    _p("radio.noise_interference_dbm", -132.0, _parse_float,
       "noise + interference calibration constant"),
    _p("radio.cqi_latency_tti", 3, _parse_int, "CQI report age in TTIs (6 ms)", *_nonneg),
    _p("radio.n_codes", 2, _parse_int, "HS-PDSCH codes available to the UE", lambda v: 1 <= v <= 15,
       "must be in 1..15"),
    _p("radio.max_tx", 4, _parse_int, "HARQ transmissions before a block is discarded", *_pos),
    _p("amc.count", 6, _parse_int, "number of AMC schemes", lambda v: v == 6, "must be 6"),
    _p("amc.thresholds_db", [-1.5, 2.0, 4.5, 5.0, 7.0, 11.0], _list_of(_parse_float),
       "SINR thresholds of QPSK 1/4, 1/2, 3/4, 16QAM 1/4, 1/2, 3/4",
       lambda v: len(v) == 6 and all(b > a for a, b in zip(v, v[1:])),
       "needs 6 strictly increasing values"),
)

PARAM_INDEX = {p.key: p for p in PARAMS}


@dataclass
class Scenario:
    name: str
    base: SimConfig
    ftp_rates_kbps: list[float]
    variants: list[Variant]
    seeds: list[int]
    values: dict[str, Any] = field(default_factory=dict)

    def runs(self, seeds: Sequence[int] | None = None) -> Iterator[SimConfig]:
        for variant in self.variants:
            for rate in self.ftp_rates_kbps:
                for seed in seeds if seeds is not None else self.seeds:
                    yield self.base.replace(
                        variant=variant, seed=seed,
                        traffic=dataclasses.replace(self.base.traffic, ftp_rate_kbps=rate))


def parse_text(text: str, source: str = "<string>") -> dict[str, tuple[str, int]]:
    """Raw ``key -> (value, line)`` mapping; only grammar is checked here."""
    out: dict[str, tuple[str, int]] = {}
    prefix = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if " #" in line:
            line = line[:line.index(" #")].rstrip()
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            prefix = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        full = f"{prefix}.{key}" if prefix else key
        if full in out:
            raise ConfigError(f"{source}:{lineno}: key '{full}' already set on line {out[full][1]}")
        out[full] = (value, lineno)
    return out


def _where(source: str, lines: dict[str, int], *keys: str) -> str:
    set_lines = [(lines[k], k) for k in keys if k in lines]
    if set_lines:
        line, key = max(set_lines)
        return f"{source}:{line}: key '{key}'"
    return f"{source}: key '{keys[-1]}' (default)"


def scenario_from_values(values: dict[str, Any], lines: dict[str, int] | None = None,
                         source: str = "<defaults>") -> Scenario:
    lines = lines or {}
    v = {p.key: p.default for p in PARAMS}
    v.update(values)
    for p in PARAMS:
        if p.check is not None and not p.check(v[p.key]):
            raise ConfigError(f"{_where(source, lines, p.key)}: {p.constraint} (got {_fmt(v[p.key])})")

    def fail(msg: str, *keys: str):
        raise ConfigError(f"{_where(source, lines, *keys)}: {msg}")

    div = PDU_BYTES if v["thresholds.unit"] == "bytes" else 1
    th = {}
    for k in "rlhn":
        key = f"thresholds.{k}"
        if v[key] % div:
            fail(f"{v[key]} bytes is not a whole number of {PDU_BYTES}-byte PDUs", key)
        th[k] = v[key] // div
    if not th["r"] <= th["n"]:
        fail(f"R must not exceed N (R={th['r']}, N={th['n']})", "thresholds.n", "thresholds.r")
    if "enhanced" in v["scenario.variants"]:
        if not th["l"] < th["h"]:
            fail(f"L < H violated (L={th['l']}, H={th['h']})", "thresholds.l", "thresholds.h")
        if not th["h"] < th["n"]:
            fail(f"H < N violated (H={th['h']}, N={th['n']})", "thresholds.n", "thresholds.h")
    if v["sim.warmup_s"] > v["sim.duration_s"]:
        fail("warm-up must not exceed the duration", "sim.duration_s", "sim.warmup_s")
    if v["radio.hsdsch_power_w"] + v["radio.cpich_power_w"] > v["radio.total_power_w"]:
        fail("HS-PDSCH + CPICH power exceeds the total Node B power",
             "radio.total_power_w", "radio.cpich_power_w", "radio.hsdsch_power_w")
    if v["radio.start_distance_m"] > v["radio.cell_radius_m"]:
        fail("UE must start inside the cell", "radio.cell_radius_m", "radio.start_distance_m")
    tti_s = v["sim.tti_ms"] / 1000.0
    frame_us = round(v["flow_control.frame_ms"] * 1000)
    tti_us = round(v["sim.tti_ms"] * 1000)
    if frame_us % tti_us:
        fail("TTI must divide the HS-DSCH frame length", "sim.tti_ms", "flow_control.frame_ms")
    gi = v["flow_control.grant_interval_ms"]
    try:
        base = SimConfig(
            variant=Variant(v["scenario.variants"][0]),
            duration_s=v["sim.duration_s"], warmup_s=v["sim.warmup_s"], tti_s=tti_s,
            thresholds=Thresholds(th["r"], th["l"], th["h"], th["n"]),
            traffic=TrafficConfig(v["voip.packet_bits"], v["voip.rate_bps"], v["voip.mean_phase_s"],
                                  v["scenario.ftp_rate_kbps"][0], v["ftp.mean_packet_bytes"],
                                  v["ftp.size_model"], v["traffic.cn_delay_ms"] / 1000.0),
            flow=FlowConfig(v["flow_control.w_q"], v["flow_control.c"],
                            v["flow_control.iub_latency_ms"] / 1000.0,
                            v["flow_control.pdu_transfer_latency_ms"] / 1000.0,
                            v["flow_control.frame_ms"] / 1000.0,
                            None if gi is None else gi / 1000.0,
                            v["flow_control.rate_headroom"],
                            v["flow_control.credit_dispatch"] == "spread"),
            radio=RadioParams(v["radio.start_distance_m"], v["radio.speed_kmh"], v["radio.cell_radius_m"],
                              v["radio.hsdsch_power_w"], v["radio.noise_interference_dbm"],
                              v["radio.shadow_sigma_db"], v["radio.shadow_rho"], v["radio.shadow_update_s"],
                              v["radio.cqi_latency_tti"], v["radio.n_codes"], v["radio.max_tx"],
                              tuple(v["amc.thresholds_db"]), tti_s),
        )
        for rate in v["scenario.ftp_rate_kbps"]:
            base.replace(traffic=dataclasses.replace(base.traffic, ftp_rate_kbps=rate))
    except ValueError as exc:
        raise ConfigError(f"{source}: invalid scenario: {exc}") from exc
    return Scenario(v["scenario.name"], base, list(v["scenario.ftp_rate_kbps"]),
                    [Variant(x) for x in v["scenario.variants"]], list(v["scenario.seeds"]), v)


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    raw = parse_text(text, source)
    values, lines = {}, {}
    for key, (value, lineno) in raw.items():
        p = PARAM_INDEX.get(key)
        if p is None:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        try:
            values[key] = p.parse(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: key '{key}': {exc}") from None
        lines[key] = lineno
    return scenario_from_values(values, lines, source)


def load_scenario(path: str | os.PathLike) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    return loads_scenario(text, str(path))


def default_scenario() -> Scenario:
    return scenario_from_values({})


def dumps_scenario(scenario: Scenario, notes: bool = False) -> str:
    """Scenario file text with every parameter set explicitly."""
    values = {p.key: p.default for p in PARAMS}
    values.update(scenario.values)
    lines = []
    section = None
    for p in PARAMS:
        sec, _, key = p.key.partition(".")
        if sec != section:
            lines.append(f"\n[{sec}]" if lines else f"[{sec}]")
            section = sec
        line = f"{key} = {_fmt(values[p.key])}"
        if notes:
            line = f"{line:<40} # {p.note}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def describe_defaults() -> str:
    """One ``dotted.key = value  # note`` line per parameter."""
    rows = [f"{p.key} = {_fmt(p.default)}" for p in PARAMS]
    width = max(len(r) for r in rows)
    return "\n".join(f"{r:<{width}}  # {p.note}" for r, p in zip(rows, PARAMS)) + "\n"


CSV_COLUMNS = ("scenario", "variant", "ftp_rate_kbps", "seed", "rt_loss", "nrt_loss",
               "rt_mean_delay_ms", "nrt_throughput_kbps", "rnc_backlog_mean_pdus", "air_discards")


def _prob(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def result_rows(reports: Iterable[MetricsReport], scenario: str) -> list[list[str]]:
    rows = []
    for r in sorted(reports, key=lambda r: (r.variant, r.ftp_rate_kbps, r.seed)):
        rows.append([
            scenario, r.variant, f"{r.ftp_rate_kbps:.2f}", str(r.seed),
            _prob(r.rt_loss_prob), _prob(r.nrt_loss_prob),
            "" if r.rt_mean_delay_ms is None else f"{r.rt_mean_delay_ms:.4f}",
            f"{r.nrt_throughput_kbps:.2f}", f"{r.rnc_backlog_mean_pdus:.2f}",
            str(r.air_discarded_blocks),
        ])
    return rows


def write_results(reports: Sequence[MetricsReport], path: str | os.PathLike | io.TextIOBase,
                  scenario: str = "reference") -> None:
    if not reports:
        raise ValueError("no reports to write")
    rows = result_rows(reports, scenario)
    if isinstance(path, io.TextIOBase):
        w = csv.writer(path, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)
