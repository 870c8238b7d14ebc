"""Built-in experiment configurations.

Each preset is an ordinary YAML config (see :mod:`pulsim.config`) so the CLI
runs it through the same parser as user files.  Element counts are sized for
a desk-scale run; scale ``element_count`` up for smoother curves.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    text: str


# exp1: phased per-element cost on NVM is issue + ~54 cycles of latency + c;
# c = 24 puts it near L/1.9 - issue, the calibration point for the NVM speedup
EXP1 = """\
description: >-
  Experiment 1 (roofline): phased vs batch preloading across operational
  intensities on NVM and DRAM, plus 1 vs 11 PIM tasklets
kernel:
  kind: sum
  element_count: 512
  distance: 64
  transfer_size: 64
run:
  pe: ndp
sweep:
  device: [nvm, dram]
  strategy: [phased, batch]
  intensity: [1, 2, 4, 8, 16, 24, 32, 64]
---
channels:
  pim_mram: {bandwidth_bytes_per_sec: 536870912}
kernel:
  kind: sum
  element_count: 256
  transfer_size: 64
  strategy: phased
run:
  pe: pim
  device: dram
  channel: pim_mram
sweep:
  tasklets: [1, 11]
  intensity: [1, 4, 16, 64]
"""

# exp2: per-PE MRAM-like channel of 0.5 GiB/s keeps 1..8 attributes bandwidth-bound;
# pim_fast is the calibration under which a single attribute lands near IPC 0.58
EXP2 = """\
description: >-
  Experiment 2 (aggregation): execution time and IPC on PIM while the number
  of row-wise aggregated attributes grows from 1 to 8
channels:
  pim_mram: {bandwidth_bytes_per_sec: 536870912}
  pim_fast: {bandwidth_bytes_per_sec: 1449551462}
kernel:
  kind: aggregate_n
  element_count: 512
  transfer_size: 64
  attr_cost: 4
run:
  pe: pim
  tasklets: 16
  device: dram
sweep:
  channel: [pim_mram, pim_fast]
  attribute_count: [1, 2, 3, 4, 5, 6, 7, 8]
"""

# exp3: latency and c chosen so the closed-form saturation distance is 16
EXP3 = """\
description: >-
  Experiment 3 (preload distance): SUM execution time over distance for
  sequential and batch interleaving
devices:
  slow_nvm: {read_latency_ns: 6273, write_latency_ns: 170}
kernel:
  kind: sum
  element_count: 1024
  intensity: 55
  transfer_size: 64
run:
  pe: ndp
  device: slow_nvm
sweep:
  strategy: [sequential, batch]
  distance: [1, 2, 4, 8, 16, 32, 64]
"""

# exp4: one PE over transfer size first (long enough to reach steady state),
# then a shorter multi-PE sweep for throughput and PEs-to-saturation
EXP4 = """\
description: >-
  Experiment 4 (transfer size): NVM execution time and throughput over
  transfer size and PE count, with (batch) and without (phased) preloading
kernel:
  kind: sum
  element_count: 1024
  intensity: 4
  distance: 64
  fit_distance: true
run:
  pe: ndp
  device: nvm
sweep:
  strategy: [phased, batch]
  transfer_size: [64, 128, 256, 512, 1024, 2048, 4096]
---
kernel:
  kind: sum
  element_count: 128
  intensity: 4
  distance: 64
  fit_distance: true
run:
  pe: ndp
  device: nvm
sweep:
  strategy: [phased, batch]
  transfer_size: [64, 512, 4096]
  pe_count: [2, 3, 4, 8]
"""

EXP5 = """\
description: >-
  Experiment 5 (unloading): PIM filter with full vs bit-vector
  materialization over selectivity, and NDP threshold flushing via PUL vs memcpy
channels:
  pim_mram: {bandwidth_bytes_per_sec: 536870912}
kernel:
  kind: filter
  element_count: 512
  transfer_size: 64
run:
  pe: pim
  tasklets: 16
  device: dram
  channel: pim_mram
sweep:
  materialization: [full, bitvector]
  selectivity: [0.0, 0.25, 0.5, 0.75, 1.0]
---
kernel:
  kind: flush
  element_count: 2048
  update_instr: 4
run:
  pe: ndp
  device: nvm
sweep:
  flush_method: [pul, blocking, memcpy]
  flush_threshold: [64, 256, 1024, 2048]
"""


def _first_line(text: str) -> str:
    import yaml
    return " ".join(str(next(yaml.safe_load_all(text))["description"]).split())


PRESETS = {
    name: Preset(name, _first_line(text), text)
    for name, text in [
        ("exp1_roofline", EXP1),
        ("exp2_aggregate", EXP2),
        ("exp3_distance", EXP3),
        ("exp4_transfer_size", EXP4),
        ("exp5_unload", EXP5),
    ]
}
