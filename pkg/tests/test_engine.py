import dataclasses
import io
import statistics

import numpy as np
import pytest

from hsdpa_tsp import SimConfig, Simulator, run, run_replications
from hsdpa_tsp.engine import EventQueue, Priority, TrafficConfig, summarize
from hsdpa_tsp.pdu import Flow, Pdu
from hsdpa_tsp.tsp_buffer import Variant


def quiet_config(duration=0.1, **kw):
    """No traffic sources; tests inject PDUs directly."""
    traffic = TrafficConfig(ftp_rate_kbps=0.0, voip_enabled=False)
    return SimConfig(duration_s=duration, warmup_s=0.0, traffic=traffic, **kw)


def short(variant=Variant.ENHANCED, rate=512.0, duration=20.0, seed=3, **kw):
    return SimConfig(variant=variant, seed=seed, duration_s=duration, warmup_s=2.0,
                     traffic=TrafficConfig(ftp_rate_kbps=rate), **kw)


def test_event_queue_order():
    q = EventQueue()
    q.schedule(10, 5, "rnc")
    q.schedule(10, 1, "tti")
    q.schedule(10, 0, "iub-a")
    q.schedule(10, 0, "iub-b")
    q.schedule(5, 7, "early")
    q.schedule(10 ** 9, 1, "far")
    kinds = [q.pop()[3] for _ in range(len(q))]
    assert kinds == ["early", "iub-a", "iub-b", "tti", "rnc", "far"]


def test_priority_contract():
    P = Priority
    assert P.WARMUP < P.IUB_ARRIVAL < P.TTI < P.RNC_PACKET < P.GRANT_AT_RNC < P.RNC_FRAME


def test_pdu_arriving_with_a_tti_is_sent_in_that_tti():
    sim = Simulator(quiet_config())
    sim.radio.sinr_fn = lambda k: 30.0
    pdu = Pdu(0, Flow.RT, 0, 0)
    sim.schedule(10_000, Priority.IUB_ARRIVAL, ([pdu], []))
    sim.in_flight[Flow.RT] += 1
    rep = sim.run()
    assert pdu.nodeb_enqueued_at == 10_000
    assert rep.rt_delivered == 1 and rep.rt_mean_delay_s == 0.0


@pytest.mark.parametrize("sinr,expected", [(30.0, 0.0), (-50.0, 0.7 * 3)])
def test_aveq_sees_post_dequeue_occupancy(sinr, expected):
    sim = Simulator(quiet_config(duration=0.0101))
    sim.radio.sinr_fn = lambda k: sinr
    pdus = [Pdu(k, Flow.NRT, 0, 0) for k in range(3)]
    sim.schedule(10_000, Priority.IUB_ARRIVAL, ([], pdus))
    sim.in_flight[Flow.NRT] += 3
    sim.run()
    assert sim.fc.aveq == pytest.approx(expected)


def test_virtual_time_is_non_decreasing():
    traces = {k: io.StringIO() for k in ("radio", "packets", "iub", "grants")}
    run(short(duration=5.0), traces)
    for name, buf in traces.items():
        times = [float(line.split(",")[0]) for line in buf.getvalue().splitlines()]
        assert times, name
        assert all(b >= a for a, b in zip(times, times[1:])), name


def test_rt_iub_latency_and_order():
    sim = Simulator(short(duration=10.0, rate=256.0))
    seen = {Flow.RT: [], Flow.NRT: []}
    orig_rt, orig_nrt = sim.buffer.enqueue_rt, sim.buffer.enqueue_nrt

    def rt(pdu, now):
        lag = now - pdu.created_at
        to_frame = -pdu.created_at % 10_000
        assert lag == 20_000 + to_frame
        seen[Flow.RT].append(pdu.id)
        return orig_rt(pdu, now)

    def nrt(pdu, now):
        seen[Flow.NRT].append(pdu.id)
        return orig_nrt(pdu, now)

    sim.buffer.enqueue_rt, sim.buffer.enqueue_nrt = rt, nrt
    sim.run()
    for ids in seen.values():
        assert ids and ids == sorted(ids)


@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("rate", [64.0, 1024.0])
def test_pdu_conservation(variant, rate):
    rep = run(short(variant, rate, duration=30.0))
    for flow, c in rep.conservation.items():
        rest = (c["in_rnc"] + c["in_flight_iub"] + c["in_nodeb"] + c["in_harq"]
                + c["dropped_nodeb"] + c["left_air"])
        assert c["segmented"] == rest, flow
    for p in (rep.rt_loss_prob, rep.nrt_loss_prob):
        assert 0.0 <= p <= 1.0
    assert rep.nrt_throughput_bps >= 0


def test_same_seed_identical_reports():
    a, b = run(short(duration=10.0)), run(short(duration=10.0))
    assert a == b and a.digest() == b.digest()


def test_different_seed_changes_results():
    assert run(short(duration=10.0, seed=1)).digest() != run(short(duration=10.0, seed=2)).digest()


def test_variants_see_identical_traffic():
    e = run(short(Variant.ENHANCED, duration=15.0))
    o = run(short(Variant.ORIGINAL, duration=15.0))
    assert e.voip_trace_digest == o.voip_trace_digest
    assert e.ftp_trace_digest == o.ftp_trace_digest
    assert e.voip_on_fraction == o.voip_on_fraction


def test_zero_measured_window():
    cfg = short(duration=3.0).replace(warmup_s=3.0)
    rep = run(cfg)
    assert rep.measured_s == 0
    assert rep.rt_loss_prob is None and rep.nrt_loss_prob is None and rep.rt_mean_delay_s is None
    assert rep.rt_arrivals == rep.nrt_arrivals == rep.rt_delivered == rep.nrt_delivered == 0
    assert rep.nrt_throughput_bps == 0.0
    assert "n/a" in rep.summary()


def test_warmup_excluded_from_counters():
    full = run(short(duration=10.0).replace(warmup_s=0.0))
    part = run(short(duration=10.0).replace(warmup_s=4.0))
    assert full.voip_trace_digest == part.voip_trace_digest
    assert part.nrt_arrivals < full.nrt_arrivals
    assert part.nrt_delivered < full.nrt_delivered
    # roughly 6/10 of the arrivals fall in the measured window
    assert part.nrt_arrivals / full.nrt_arrivals == pytest.approx(0.6, abs=0.05)


@pytest.mark.parametrize("kw", [dict(warmup_s=20.0, duration_s=10.0), dict(seed=-1),
                                dict(seed=2 ** 64), dict(tti_s=0.003)])
def test_invalid_config_rejected(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_warmup_violation_message_names_the_fields():
    with pytest.raises(ValueError, match="warmup_s"):
        SimConfig(warmup_s=20.0, duration_s=10.0)


def test_enhanced_thresholds_checked():
    from hsdpa_tsp.engine import Thresholds
    with pytest.raises(ValueError):
        SimConfig(thresholds=Thresholds(h=400))
    SimConfig(variant=Variant.ORIGINAL, thresholds=Thresholds(h=400))


def test_throughput_includes_header_overhead():
    rep = run(short(Variant.ENHANCED, 128.0, duration=60.0))
    assert rep.nrt_loss_prob == 0
    assert rep.nrt_throughput_kbps == pytest.approx(134.4, rel=0.03)


def test_lambda_nrt_scaling():
    cfg = SimConfig()
    assert cfg.lambda_nrt_bps() == pytest.approx(128_000 * 1.05 * 1.25)
    assert cfg.flow_params().interval == pytest.approx(0.05)


def test_replications_of_one_deterministic_config_have_zero_variance():
    res = run_replications(short(duration=3.0), [4] * 10)
    for m, s in res.items():
        if s["n"]:
            assert s["std"] == 0.0 and s["half_width"] == 0.0, m


def test_replications_need_two_seeds():
    with pytest.raises(ValueError):
        run_replications(short(duration=1.0), 1)


def test_voip_duty_cycle_over_ten_seeds():
    cfg = SimConfig(duration_s=400.0, warmup_s=10.0,
                    traffic=TrafficConfig(ftp_rate_kbps=0.0))
    res = run_replications(cfg, 10, metrics=("voip_on_fraction",))["voip_on_fraction"]
    assert abs(res["mean"] - 0.5) <= res["half_width"]


def test_half_width_shrinks_with_root_n():
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(200):
        x = rng.normal(0, 1, 400)
        ratios.append(summarize(x[:100])["half_width"] / summarize(x)["half_width"])
    assert statistics.fmean(ratios) == pytest.approx(2.0, rel=0.05)


def test_summarize_basics():
    s = summarize([1.0, 2.0, 3.0, None])
    assert s["n"] == 3 and s["mean"] == 2.0 and s["std"] == 1.0
    assert s["half_width"] == pytest.approx(1.96 / 3 ** 0.5, rel=1e-3)
    assert summarize([None])["mean"] is None


def test_parallel_runs_match_serial():
    from hsdpa_tsp.engine import map_runs
    cfgs = [short(duration=3.0, seed=s) for s in (1, 2)]
    assert map_runs(cfgs, jobs=2) == map_runs(cfgs, jobs=1)


def test_replace_keeps_validation():
    cfg = SimConfig()
    assert cfg.replace(seed=9).seed == 9
    with pytest.raises(ValueError):
        cfg.replace(warmup_s=500.0)
    assert dataclasses.replace(cfg, duration_s=50.0).duration_s == 50.0
