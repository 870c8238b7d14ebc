"""Brute-force reference replay of PE programs.

Deliberately naive and independent of ``pulsim`` internals: no event heap,
no closed-form stall arithmetic.  Polling and back-pressure are stepped one
PE cycle at a time, the channel is a single ``free_at`` variable, and PEs
are interleaved by linear scan over the posted submissions.

Timing rules encoded here (all times integer picoseconds):

* a request submitted at ``t`` with device latency ``lat`` and transfer time
  ``tt`` starts its transfer at ``max(t + lat, free_at)`` and completes
  ``tt`` later; ``free_at`` moves to that completion;
* NDP issue writes cost one cycle each, the dispatch happens at the end of
  the issue cycles;
* a poll occupies one cycle and sees every request that completed by the
  end of that cycle;
* PIM tasklets issue at most one instruction per cycle overall, and each
  tasklet at most once per ``depth`` cycles; DMA is tasklet-blocking.
"""

from __future__ import annotations

import math


def transfer_ps(size, bandwidth):
    return -(-size * 10**12 // bandwidth)


class Channel:
    def __init__(self, read_lat_ps, write_lat_ps, bandwidth):
        self.read_lat_ps = read_lat_ps
        self.write_lat_ps = write_lat_ps
        self.bandwidth = bandwidth
        self.free_at = 0
        self.bytes = 0

    def submit(self, t, direction, size):
        lat = self.read_lat_ps if direction == "preload" else self.write_lat_ps
        start = max(t + lat, self.free_at)
        done = start + transfer_ps(size, self.bandwidth)
        self.free_at = done
        self.bytes += size
        return done


class NaiveNdpCore:
    """One in-order core replaying an action list."""

    def __init__(self, actions, cycle_ps, issue_preload=4, issue_unload=6, fifo_depth=64):
        self.actions = list(actions)
        self.cyc = cycle_ps
        self.o_pre = issue_preload
        self.o_unl = issue_unload
        self.depth = fifo_depth
        self.pc = 0
        self.t = 0
        self.size_reg = None
        self.done = {"preload": [], "unload": []}
        self.known = {"preload": 0, "unload": 0}
        self.compute = 0
        self.issue = 0
        self.stall = 0
        self.post = None  # (time, direction, size) awaiting the channel
        self.finished = False

    def _pending_at(self, direction, t):
        return sum(1 for c in self.done[direction] if c > t)

    def _observe(self):
        for d in ("preload", "unload"):
            self.known[d] = sum(1 for c in self.done[d] if c <= self.t)

    def _poll_until(self, satisfied):
        # each loop iteration is one status read
        while True:
            self.t += self.cyc
            if satisfied(self.t):
                self.issue += 1
                self._observe()
                return
            self.stall += 1

    def _wait_slot(self, direction):
        while self._pending_at(direction, self.t) >= self.depth:
            self.t += self.cyc
            self.stall += 1

    def complete_submission(self, completion):
        direction = self.post[1]
        self.done[direction].append(completion)
        self.post = None

    def advance(self):
        """Run until the next channel submission or the end of the program."""
        while self.pc < len(self.actions):
            act = self.actions[self.pc]
            self.pc += 1
            op = act[0]
            if op == "size":
                if act[1] != self.size_reg:
                    self.size_reg = act[1]
                    self.t += self.cyc
                    self.issue += 1
            elif op == "preload":
                self._wait_slot("preload")
                for _ in range(self.o_pre):
                    self.t += self.cyc
                    self.issue += 1
                self.post = (self.t, "preload", self.size_reg)
                return
            elif op == "unload":
                self._wait_slot("unload")
                for _ in range(self.o_unl):
                    self.t += self.cyc
                    self.issue += 1
                self.post = (self.t, "unload", act[3])
                return
            elif op == "compute":
                for _ in range(act[1]):
                    self.t += self.cyc
                    self.compute += 1
            elif op == "addr":
                for _ in range(act[1]):
                    self.t += self.cyc
                    self.issue += 1
            elif op in ("read", "write"):
                for _ in range(math.ceil(act[2] / 8)):
                    self.t += self.cyc
                    self.compute += 1
            elif op == "status":
                self.t += self.cyc
                self.issue += 1
                self._observe()
            elif op == "wait":
                kinds = ("preload", "unload") if act[1] == "all" else (act[1],)
                self._poll_until(
                    lambda t: all(c <= t for k in kinds for c in self.done[k])
                )
            elif op == "sync":
                direction, count = act[1], act[2]
                if self.known[direction] >= count:
                    continue
                self._poll_until(
                    lambda t: all(c <= t for c in reversed(self.done[direction][:count]))
                )
            else:
                raise ValueError(f"unknown op {op!r}")
        self.finished = True


def replay_ndp(programs, cycle_ps, read_lat_ps, write_lat_ps, bandwidth,
               issue_preload=4, issue_unload=6, fifo_depth=64):
    """Replay one action list per PE; returns (exec_time_ps, cores, channel)."""
    channel = Channel(read_lat_ps, write_lat_ps, bandwidth)
    cores = [NaiveNdpCore(p, cycle_ps, issue_preload, issue_unload, fifo_depth)
             for p in programs]
    stamp = 0
    posted = []  # [time, stamp, core]
    for core in cores:
        core.advance()
        if core.post is not None:
            posted.append([core.post[0], stamp, core])
            stamp += 1
    while posted:
        best = posted[0]
        for entry in posted:
            if (entry[0], entry[1]) < (best[0], best[1]):
                best = entry
        posted.remove(best)
        core = best[2]
        t, direction, size = core.post
        core.complete_submission(channel.submit(t, direction, size))
        core.advance()
        if core.post is not None:
            posted.append([core.post[0], stamp, core])
            stamp += 1
    return max(c.t for c in cores), cores, channel


def replay_pim(tasklet_programs, cycle_ps, depth, read_lat_ps, write_lat_ps,
               bandwidth, issue_preload=4, issue_unload=6):
    """Cycle-stepped replay of one PIM PE.  Returns (exec_time_ps, counters)."""
    channel = Channel(read_lat_ps, write_lat_ps, bandwidth)
    n = len(tasklet_programs)
    queue = [list(p) for p in tasklet_programs]
    # expand every action into per-instruction micro-ops
    micro = []
    for prog in queue:
        ops = []
        for act in prog:
            if act[0] == "compute":
                ops += [("c",)] * act[1]
            elif act[0] == "addr":
                ops += [("i",)] * act[1]
            elif act[0] in ("read", "write"):
                ops += [("c",)] * math.ceil(act[2] / 8)
            elif act[0] == "preload":
                ops += [("i",)] * (issue_preload - 1) + [("d", "preload", act[3])]
            elif act[0] == "unload":
                ops += [("i",)] * (issue_unload - 1) + [("d", "unload", act[3])]
            else:
                raise ValueError(act[0])
        micro.append(ops)
    inf = float("inf")
    pos = [0] * n
    ready = [0] * n
    blocked_dma = [False] * n
    submit_at = {}  # cycle -> (tasklet, direction, size)
    finish = [0] * n
    counts = {"compute": 0, "issue": 0, "stall": 0, "idle": 0}
    cycle = 0
    while True:
        if cycle in submit_at:
            i, direction, size = submit_at.pop(cycle)
            done = channel.submit(cycle * cycle_ps, direction, size)
            ready[i] = -(-done // cycle_ps)
            finish[i] = ready[i]
        for i in range(n):
            if blocked_dma[i] and ready[i] <= cycle:
                blocked_dma[i] = False
        live = any(pos[i] < len(micro[i]) or blocked_dma[i] for i in range(n))
        if not live and not submit_at and cycle >= max(finish, default=0):
            break
        cands = [i for i in range(n)
                 if pos[i] < len(micro[i]) and not blocked_dma[i] and ready[i] <= cycle]
        if cands:
            i = min(cands, key=lambda j: (ready[j], j))
            op = micro[i][pos[i]]
            pos[i] += 1
            if op[0] == "c":
                counts["compute"] += 1
                ready[i] = cycle + depth
                finish[i] = cycle + depth
            elif op[0] == "i":
                counts["issue"] += 1
                ready[i] = cycle + depth
            else:
                counts["issue"] += 1
                blocked_dma[i] = True
                ready[i] = inf
                submit_at[cycle + depth] = (i, op[1], op[2])
        elif any(blocked_dma):
            counts["stall"] += 1
        else:
            counts["idle"] += 1
        cycle += 1
    total = max(finish, default=0)
    counts["total"] = total
    counts["bytes"] = channel.bytes
    return total * cycle_ps, counts
