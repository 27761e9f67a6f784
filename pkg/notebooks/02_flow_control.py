"""
Iub credit flow control
=======================

The Node B averages its queue length every TTI and turns the average into a
credit grant for the RNC every 50 ms. Here we feed it a made-up occupancy
ramp to see the three rate levels.
"""

import numpy as np

from hsdpa_tsp.flow_control import FlowControlParams, FlowController

# 128 kb/s of FTP payload is 134.4 kb/s of PDUs once the 16-bit headers are added
params = FlowControlParams(lambda_nrt=128_000 * 336 / 320)
fc = FlowController(params, lower_l=120, upper_h=240)
print(f"grant interval {params.interval * 1000:.0f} ms, full-rate grant {fc.ideal_pdus()} PDUs")

# occupancy climbs to 280 PDUs and drains again, one sample per 2 ms TTI
q = np.concatenate([np.linspace(0, 280, 200), np.linspace(280, 0, 200)]).round().astype(int)

tti_us = 2000
print(f"\n{'t (ms)':>7} {'queue':>6} {'aveq':>7} {'level':>8} {'grant':>6}")
for k, qk in enumerate(q):
    fc.update_aveq(int(qk))
    if (k * tti_us) % 50_000 == 0:
        g = fc.issue_grant(k * tti_us)
        if k % 50 == 0:
            print(f"{k * 2:>7} {qk:>6} {fc.aveq:>7.1f} {fc.level.value:>8} {g.max_pdus:>6}")

# the fractional part of each grant is carried, so credits are exact in the long run
fc = FlowController(params, 120, 240)
grants = [fc.issue_grant(k * 50_000).max_pdus for k in range(1000)]
print(f"\n1000 grants at full rate: {sum(grants)} PDUs, ideal {float(1000 * fc.ideal_pdus()):.2f}")
