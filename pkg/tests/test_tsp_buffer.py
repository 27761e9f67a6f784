import pytest
from hypothesis import given, settings, strategies as st

from hsdpa_tsp.pdu import PDU_BITS, Flow, Pdu, bytes_to_pdus
from hsdpa_tsp.tsp_buffer import Admission, TspBuffer, TspBufferConfig, Variant


def make_pdu(flow, k=0):
    return Pdu(k, flow, k, 0)


def fill(buf, n_rt, n_nrt):
    for k in range(n_rt):
        assert buf.enqueue_rt(make_pdu(Flow.RT, k), 0) is Admission.ACCEPTED
    for k in range(n_nrt):
        assert buf.enqueue_nrt(make_pdu(Flow.NRT, k), 0) is Admission.ACCEPTED


def test_default_thresholds_in_bytes():
    cfg = TspBufferConfig()
    assert (cfg.rt_limit_r, cfg.lower_l, cfg.upper_h, cfg.capacity_n) == (20, 120, 240, 300)
    assert [bytes_to_pdus(b) for b in (840, 5040, 10080, 12600)] == [20, 120, 240, 300]
    with pytest.raises(ValueError):
        bytes_to_pdus(100)


@pytest.mark.parametrize("kwargs", [
    dict(rt_limit_r=0), dict(rt_limit_r=301), dict(lower_l=240, upper_h=240),
    dict(upper_h=300), dict(full_rt_policy="drop"),
])
def test_config_rejects_bad_thresholds(kwargs):
    with pytest.raises(ValueError):
        TspBufferConfig(**kwargs)


def test_original_ignores_l_and_h():
    TspBufferConfig(variant=Variant.ORIGINAL, lower_l=0, upper_h=0)


def test_rt_blocked_at_cap():
    buf = TspBuffer(TspBufferConfig(), strict=True)
    fill(buf, 20, 0)
    assert buf.enqueue_rt(make_pdu(Flow.RT), 1) is Admission.BLOCKED
    assert buf.counters.rt_blocked == 1
    assert buf.occupancy().rt_count == 20


def test_rt_pushes_out_nrt_tail_when_full():
    buf = TspBuffer(TspBufferConfig(variant=Variant.ORIGINAL), strict=True)
    fill(buf, 10, 290)
    tail = buf.nrt_fifo[-1]
    assert buf.enqueue_rt(make_pdu(Flow.RT, 99), 5) is Admission.ACCEPTED_WITH_PUSH_OUT
    assert buf.last_pushed_out is tail
    occ = buf.occupancy()
    assert (occ.rt_count, occ.nrt_count, occ.total) == (11, 289, 300)
    assert buf.counters.enhanced_pushout_anomalies == 0


def test_enhanced_pushout_is_counted_as_anomaly():
    buf = TspBuffer(TspBufferConfig(variant=Variant.ENHANCED), strict=True)
    fill(buf, 0, 300)
    assert buf.enqueue_rt(make_pdu(Flow.RT), 0) is Admission.ACCEPTED_WITH_PUSH_OUT
    assert buf.counters.enhanced_pushout_anomalies == 1


def test_block_policy_rejects_rt_when_full():
    buf = TspBuffer(TspBufferConfig(full_rt_policy="block"), strict=True)
    fill(buf, 0, 300)
    assert buf.enqueue_rt(make_pdu(Flow.RT), 0) is Admission.BLOCKED
    assert buf.occupancy().nrt_count == 300


def test_nrt_drop_tail_when_full():
    buf = TspBuffer(TspBufferConfig(), strict=True)
    fill(buf, 20, 280)
    assert buf.enqueue_nrt(make_pdu(Flow.NRT), 0) is Admission.DROPPED_TAIL
    assert buf.counters.nrt_dropped_tail == 1


def test_dequeue_rt_first_then_nrt_whole_pdus():
    buf = TspBuffer(TspBufferConfig(), strict=True)
    fill(buf, 3, 10)
    out = buf.dequeue_up_to(1440)  # four whole PDUs
    assert [p.flow for p in out] == [Flow.RT] * 3 + [Flow.NRT]
    assert buf.dequeue_up_to(PDU_BITS - 1) == []
    assert buf.occupancy().total == 9


def test_dequeue_keeps_fifo_order():
    buf = TspBuffer(TspBufferConfig(), strict=True)
    fill(buf, 0, 5)
    ids = [p.id for p in buf.dequeue_up_to(10 * PDU_BITS)]
    assert ids == [0, 1, 2, 3, 4]


def test_enqueue_stamps_nodeb_time():
    buf = TspBuffer(TspBufferConfig())
    pdu = make_pdu(Flow.RT)
    buf.enqueue(pdu, 1234)
    assert pdu.nodeb_enqueued_at == 1234


ops = st.lists(st.tuples(st.sampled_from(["rt", "nrt", "deq"]), st.integers(0, 3000)),
               max_size=400)


@settings(max_examples=200, deadline=None)
@given(ops=ops, variant=st.sampled_from(list(Variant)),
       n=st.integers(3, 40), r_frac=st.floats(0.05, 1.0), policy=st.sampled_from(["push_out", "block"]))
def test_random_operations_keep_invariants(ops, variant, n, r_frac, policy):
    r = max(1, int(n * r_frac))
    cfg = TspBufferConfig(n, r, 1, 2, variant, policy)
    buf = TspBuffer(cfg, strict=True)
    for k, (op, bits) in enumerate(ops):
        before = buf.occupancy()
        if op == "rt":
            res = buf.enqueue_rt(make_pdu(Flow.RT, k), k)
            if before.rt_count >= r:
                assert res is Admission.BLOCKED
        elif op == "nrt":
            res = buf.enqueue_nrt(make_pdu(Flow.NRT, k), k)
            assert (res is Admission.DROPPED_TAIL) == (before.total >= n)
        else:
            out = buf.dequeue_up_to(bits)
            assert len(out) <= bits // PDU_BITS
            n_rt = sum(p.flow is Flow.RT for p in out)
            # no NRT PDU leaves while RT PDUs wait
            assert n_rt == min(before.rt_count, len(out))
        buf.check_invariants()
