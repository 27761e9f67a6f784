"""
Original against enhanced TSP
=============================

Both schemes see the same traffic (paired seeds). One seed of 400 s per
rate; the reference grid averages five seeds
(`hsdpa-tsp compare --scenario scenarios/reference.ini`).
"""

from hsdpa_tsp import SimConfig
from hsdpa_tsp.cli import comparison_table
from hsdpa_tsp.engine import TrafficConfig, map_runs
from hsdpa_tsp.tsp_buffer import Variant

cfgs = [SimConfig(variant=v, seed=1, traffic=TrafficConfig(ftp_rate_kbps=r))
        for v in Variant for r in (64.0, 128.0, 256.0, 512.0, 1024.0)]
reports = map_runs(cfgs, jobs=2)
print(comparison_table(reports))

# the enhanced scheme moves the excess FTP backlog into the RNC instead of dropping it
print("\nRNC backlog (mean / max PDUs) and grant levels, enhanced:")
for r in reports:
    if r.variant == "enhanced":
        shares = ", ".join(f"{k} {v:.0%}" for k, v in r.grant_level_shares.items())
        print(f"  {r.ftp_rate_kbps:>6g} kbps: {r.rnc_backlog_mean_pdus:6.1f} / {r.rnc_backlog_max_pdus:<5} {shares}")
