import pytest
from hypothesis import given, settings, strategies as st

from hsdpa_tsp.flow_control import CapacityGrant
from hsdpa_tsp.pdu import Flow
from hsdpa_tsp.rnc import Rnc, segment
from hsdpa_tsp.traffic import Packet

FRAME = 10_000


def pkt(k, flow, bits, t=0):
    return Packet(k, flow, bits, t, t)


@pytest.mark.parametrize("bits,n", [(304, 1), (3840, 12), (320, 1), (321, 2), (1, 1)])
def test_segmentation_counts(bits, n):
    pdus = segment(pkt(7, Flow.NRT, bits, 5), first_id=100)
    assert len(pdus) == n
    assert [p.id for p in pdus] == list(range(100, 100 + n))
    assert all(p.size_bits == 336 and p.flow is Flow.NRT and p.created_at == 5
               and p.source_packet_id == 7 for p in pdus)


def test_segment_rejects_empty():
    with pytest.raises(ValueError):
        segment(pkt(0, Flow.RT, 0))


def grant(n, at=0):
    return CapacityGrant(n, at - 20_000, at, 50_000)


def test_grant_of_19_spread_over_5_frames():
    rnc = Rnc(FRAME)
    for k in range(3):
        rnc.receive(pkt(k, Flow.NRT, 3840))  # 36 PDUs
    rnc.on_grant(grant(19), 0)
    sent = [len(rnc.transfer_tick(k * FRAME)[1]) for k in range(5)]
    assert sent == [4, 4, 4, 4, 3]
    assert sum(len(rnc.transfer_tick(k * FRAME)[1]) for k in range(5, 8)) == 0


def test_twelve_pending_with_19_credits():
    rnc = Rnc(FRAME)
    rnc.receive(pkt(0, Flow.NRT, 3840))
    rnc.on_grant(grant(19), 0)
    sent = [len(rnc.transfer_tick(k * FRAME)[1]) for k in range(5)]
    assert sent == [4, 4, 4, 0, 0]


def test_burst_mode_sends_all_credits_at_once():
    rnc = Rnc(FRAME, spread=False)
    rnc.receive(pkt(0, Flow.NRT, 3840 * 3))
    rnc.on_grant(grant(19), 0)
    assert len(rnc.transfer_tick(0)[1]) == 19


def test_zero_grant_stops_nrt():
    rnc = Rnc(FRAME)
    rnc.receive(pkt(0, Flow.NRT, 3840))
    rnc.on_grant(grant(0), 0)
    assert all(rnc.transfer_tick(k * FRAME)[1] == [] for k in range(5))


def test_no_grant_no_nrt():
    rnc = Rnc(FRAME)
    rnc.receive(pkt(0, Flow.NRT, 3840))
    assert rnc.transfer_tick(0) == ([], [])


def test_grants_are_not_cumulative():
    rnc = Rnc(FRAME)
    rnc.on_grant(grant(19, 0), 0)
    rnc.on_grant(grant(20, 50_000), 50_000)
    assert rnc.grant_pdus_remaining == 20


def test_early_and_stale_grants():
    rnc = Rnc(FRAME)
    with pytest.raises(ValueError):
        rnc.on_grant(grant(5, 10_000), 0)
    rnc.on_grant(grant(5, 50_000), 50_000)
    rnc.on_grant(grant(9, 0), 60_000)
    assert rnc.grant_pdus_remaining == 5 and rnc.counters.stale_grants == 1


def test_rt_goes_regardless_of_credits():
    rnc = Rnc(FRAME)
    for k in range(5):
        rnc.receive(pkt(k, Flow.RT, 304))
    rnc.on_grant(grant(0), 0)
    rt, nrt = rnc.transfer_tick(0)
    assert len(rt) == 5 and nrt == []
    assert rnc.transfer_tick(FRAME) == ([], [])


def test_without_flow_control_nrt_is_uncapped():
    rnc = Rnc(FRAME, flow_controlled=False)
    rnc.receive(pkt(0, Flow.NRT, 3840 * 10))
    assert len(rnc.transfer_tick(0)[1]) == 120


def test_grant_expires():
    rnc = Rnc(FRAME, spread=False)
    rnc.on_grant(grant(10, 0), 0)
    rnc.receive(pkt(0, Flow.NRT, 3840))
    assert rnc.transfer_tick(50_000) == ([], [])


@settings(deadline=None, max_examples=100)
@given(script=st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3), st.integers(0, 40)),
                       min_size=1, max_size=60))
def test_conservation_order_and_grant_cap(script):
    """Each step: some RT packets, some NRT packets, maybe a new grant, one frame."""
    rnc = Rnc(FRAME)
    k = 0
    seen = {Flow.RT: [], Flow.NRT: []}
    sent_this_grant = 0
    for step, (n_rt, n_nrt, g) in enumerate(script):
        now = step * FRAME
        for _ in range(n_rt):
            rnc.receive(pkt(k, Flow.RT, 304, now))
            k += 1
        for _ in range(n_nrt):
            rnc.receive(pkt(k, Flow.NRT, 3840, now))
            k += 1
        if step % 5 == 0:
            rnc.on_grant(CapacityGrant(g, now, now, 50_000), now)
            cap, sent_this_grant = g, 0
        rt, nrt = rnc.transfer_tick(now)
        sent_this_grant += len(nrt)
        assert sent_this_grant <= cap
        seen[Flow.RT] += [p.id for p in rt]
        seen[Flow.NRT] += [p.id for p in nrt]
        for flow in Flow:
            c = rnc.counters
            assert c.segmented[flow] == c.transferred[flow] + rnc.pending(flow)
        assert rnc.pending(Flow.RT) == 0
    for ids in seen.values():
        assert ids == sorted(ids)
