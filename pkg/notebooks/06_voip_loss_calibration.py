"""
Calibrating the radio constant for the VoIP loss level
======================================================

The absolute VoIP loss depends on one radio constant, the noise plus
interference level. Sweeping it shows where the loss of the Original scheme
at 64 kbps reaches about 8 %. Takes a few minutes.
"""

import statistics

from hsdpa_tsp import SimConfig
from hsdpa_tsp.engine import TrafficConfig, map_runs
from hsdpa_tsp.radio import RadioParams
from hsdpa_tsp.tsp_buffer import Variant

print(f"{'NI (dBm)':>9} {'VoIP loss':>10} {'per seed'}")
for ni in (-132.0, -115.0, -112.0, -111.0, -110.0, -108.0):
    cfgs = [SimConfig(variant=Variant.ORIGINAL, seed=s, traffic=TrafficConfig(ftp_rate_kbps=64.0),
                      radio=RadioParams(noise_interference_dbm=ni)) for s in range(1, 6)]
    losses = [r.rt_loss_prob for r in map_runs(cfgs)]
    print(f"{ni:>9g} {statistics.fmean(losses):>10.4f} {[round(x, 3) for x in losses]}")
