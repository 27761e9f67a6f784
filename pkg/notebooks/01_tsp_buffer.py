"""
Time-Space Priority buffer, step by step
========================================

A tiny buffer (N=6, R=2) makes the admission rules easy to follow.
"""

from hsdpa_tsp.pdu import PDU_BITS, Flow, Pdu
from hsdpa_tsp.tsp_buffer import TspBuffer, TspBufferConfig, Variant

buf = TspBuffer(TspBufferConfig(capacity_n=6, rt_limit_r=2, variant=Variant.ORIGINAL), strict=True)


def show(label, result=None):
    occ = buf.occupancy()
    rt = "R" * occ.rt_count
    nrt = "n" * occ.nrt_count
    print(f"{label:<34} [{rt}|{nrt:<6}] {result.value if result else ''}")


# fill most of the buffer with FTP (NRT) PDUs
for k in range(5):
    show(f"NRT arrival {k}", buf.enqueue(Pdu(k, Flow.NRT, k, 0), 0))

# one VoIP (RT) PDU still fits
show("RT arrival", buf.enqueue(Pdu(10, Flow.RT, 10, 0), 0))

# the buffer is full now: the next NRT PDU is dropped at the tail ...
show("NRT arrival on a full buffer", buf.enqueue(Pdu(5, Flow.NRT, 5, 0), 0))

# ... but an RT PDU below the RT cap pushes out the newest NRT PDU
show("RT arrival on a full buffer", buf.enqueue(Pdu(11, Flow.RT, 11, 0), 0))

# the RT share is capped at R=2
show("third RT arrival", buf.enqueue(Pdu(12, Flow.RT, 12, 0), 0))

# service takes whole PDUs, RT first; 1440 bits carry four 336-bit PDUs
out = buf.dequeue_up_to(1440)
print("served:", [p.flow.name for p in out], f"({len(out) * PDU_BITS} of 1440 bits)")
show("after one TTI")

c = buf.counters
print(f"\nRT blocked {c.rt_blocked}, NRT dropped {c.nrt_dropped_tail}, NRT pushed out {c.nrt_pushed_out}")
