"""
The radio link along the UE route
=================================

The UE walks away from the Node B at 3 km/h starting at 600 m. Path loss
grows with distance, shadowing moves every 0.5 s, and the AMC scheme is
picked from a 6 ms old SINR sample.
"""

from collections import Counter

import numpy as np

from hsdpa_tsp.engine import substream
from hsdpa_tsp.radio import VOIP_LOSS_CALIBRATION_DBM, RadioLink, RadioParams, path_loss_db

for d in (600, 650, 800, 933, 1000):
    print(f"path loss at {d:>4} m: {path_loss_db(d):6.2f} dB")

for ni in (-132.0, VOIP_LOSS_CALIBRATION_DBM):
    link = RadioLink(RadioParams(noise_interference_dbm=ni), substream(1, "shadowing"))
    n = 200_000  # 400 s of TTIs
    sinr = np.empty(n)
    schemes = Counter()
    for k in range(n):
        sinr[k] = link.step_channel(k)
        s = link.select_amc()
        schemes[s.name if s else "none"] += 1
    print(f"\nnoise+interference {ni} dBm: SINR mean {sinr.mean():.1f} dB, "
          f"5th percentile {np.percentile(sinr, 5):.1f} dB")
    for name, count in sorted(schemes.items(), key=lambda x: -x[1]):
        print(f"  {name:<10} {count / n:6.1%}")
