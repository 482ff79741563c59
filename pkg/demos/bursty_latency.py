"""Perceived throughput under bursty traffic: where full duplex really pays.

Fixed-size files arrive per UE as Poisson processes (2:1 DL:UL offered
load). The metric is perceived throughput: file size over the time from
arrival to the last delivered bit, so it prices in queueing delay. Three
systems run on identical drops and arrival processes: 20 MHz full duplex,
10+10 MHz FDD, and an idealized 20 MHz flexible duplex that gives any
subband to either direction but never both.

At low load full duplex doubles the spectrum and the gain sits near 2x. At
medium load the FDD queues build up while the FD queues drain twice as
fast, so the mean gain rises well above 2x and the cell-edge (5th
percentile) gain climbs higher still. Flexible duplex tracks FD in the
downlink but starves the uplink as load grows: a busy subband pool rarely
has room for UL-favoured slots, and cross-link BS-BS interference hits the
slots it does get.

Run from the repository root:  python demos/bursty_latency.py
Roughly three minutes (six desk-scale drops of 6000 TTIs).
"""

from fdsim.config import bundled_config_path, load_config
from fdsim.engine import load_sweep

LOADS = [8e6, 120e6]   # DL offered load in bps; UL follows at half

cfg, _ = load_config(bundled_config_path("indoor"),
                     ["n_drops=1", "ttis_per_drop=6000", "traffic.model=ftp3",
                      "power.auto_boost=true"])
print("sweeping offered load over", [f"{x / 1e6:.0f} Mbps" for x in LOADS], "...")
table = load_sweep(cfg, LOADS, modes=("fd", "flexible", "fdd"), workers=1)

print()
print(f"{'DL load':>8s} {'mode':>9s}   {'DL gains vs FDD':>28s}   {'UL gains vs FDD':>28s}")
print(f"{'':8s} {'':9s}   {'mean':>7s}{'p5':>7s}{'p50':>7s}{'p95':>7s}   "
      f"{'mean':>7s}{'p5':>7s}{'p50':>7s}{'p95':>7s}")
for load, rep in table:
    for mode in ("fd", "flexible"):
        cells = [rep.gain(mode, d, s) for d in ("dl", "ul")
                 for s in ("mean", "p5", "p50", "p95")]
        print(f"{load / 1e6:7.0f}M {mode:>9s}   "
              f"{cells[0]:7.2f}{cells[1]:7.2f}{cells[2]:7.2f}{cells[3]:7.2f}   "
              f"{cells[4]:7.2f}{cells[5]:7.2f}{cells[6]:7.2f}{cells[7]:7.2f}")
print()
print("p5 is the cell-edge story: those UEs run at low rate, so their files"
      " queue the longest under FDD and gain the most from the doubled, "
      "faster-draining FD pipe.")
