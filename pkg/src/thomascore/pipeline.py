"""Latency and throughput model of the pipelined Thomas solver core.

Analytic side
-------------
For ``B`` blocks of ``m_b`` independent systems, each of ``N`` rows, the
solve takes::

    cycles = N B (C_F + C_A) + B C_div + N C_B + 2 sum_b (m_b - 1)

Each row of a system must leave the forward core (``C_F`` cycles plus
``C_A`` administration) before the next row of that system can enter, so a
block of up to ``C_F`` systems shares one pass of the pipeline.

Simulator side
--------------
:func:`simulate` steps a cycle-level model of the core: a forward pipeline
that accepts one row per cycle, a divider producing ``c/d`` and ``z/d``
``C_div`` cycles after each forward row retires, per-thread stacks holding
those pairs, a FIFO queue of finished thread ids and a backward core.

Block handoff is synchronous: once the divider has drained the last row of
a block, its ids enter the queue together and the backward core admits one
per cycle; the next block enters the forward core when the last id has been
admitted.  Under those rules the simulated cycle count reproduces the
closed form above exactly for uniform workloads, and deviations appear only
when a resource (ports, slots, stacks, queue) actually binds.
"""
from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field, asdict
from pathlib import Path

__all__ = [
    "LatencyProfile",
    "BlockSchedule",
    "SimJob",
    "SimResult",
    "StackOverflow",
    "QueueOverflow",
    "preset_profiles",
    "get_profile",
    "compute_cycles",
    "compute_time",
    "rate_of_computation",
    "bandwidth_partition",
    "max_throughput_ok",
    "full_pipeline_schedule",
    "simulate",
    "speedup_table",
    "SpeedupRow",
]


class StackOverflow(RuntimeError):
    def __init__(self, job_id, capacity):
        self.job_id = job_id
        super().__init__(f"stack for thread {job_id} exceeded capacity {capacity}")


class QueueOverflow(RuntimeError):
    def __init__(self, job_id, capacity):
        self.job_id = job_id
        super().__init__(f"queue full (capacity {capacity}) when enqueuing thread {job_id}")


@dataclass(frozen=True)
class LatencyProfile:
    """Per-operation clock-cycle latencies of one arithmetic build of the core.

    ``C_B`` is stored as measured: the backward iteration is a multiply and a
    subtract, because the divisions moved to the divider.
    """

    name: str
    C_div: int
    C_mul: int
    C_sub: int
    C_add: int
    C_F: int
    C_B: int
    C_A: int
    f_clock: float
    D: int

    def __post_init__(self):
        for k in ("C_div", "C_mul", "C_sub", "C_add", "C_F", "C_B", "C_A", "D"):
            if getattr(self, k) < 1:
                raise ValueError(f"{k} must be >= 1")
        if self.f_clock <= 0:
            raise ValueError("f_clock must be > 0")

    @property
    def forward_composition_ok(self) -> bool:
        return self.C_F == self.C_div + self.C_mul + self.C_sub

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyProfile":
        d = dict(d)
        d.setdefault("name", "custom")
        d.setdefault("C_add", d.get("C_sub"))
        if "C_F" not in d:
            d["C_F"] = d["C_div"] + d["C_mul"] + d["C_sub"]
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "LatencyProfile":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


_PRESETS = {
    # name: (div, mul, sub, C_F, C_B, C_A, f_clock, D)
    "floating": (28, 12, 4, 44, 16, 3, 100e6, 32),
    "fixed[2,30]": (61, 6, 2, 69, 8, 3, 200e6, 32),
    "fixed[2,22]": (52, 6, 2, 60, 8, 3, 200e6, 24),
    "fixed[2,14]": (36, 6, 2, 44, 8, 3, 200e6, 16),
}


def preset_profiles() -> dict:
    """Measured latency profiles of the floating-point and three fixed-point builds."""
    return {name: LatencyProfile(name, div, mul, sub, sub, cf, cb, ca, f, D)
            for name, (div, mul, sub, cf, cb, ca, f, D) in _PRESETS.items()}


def get_profile(name: str) -> LatencyProfile:
    key = name.lower().replace(" ", "")
    presets = preset_profiles()
    if key in presets:
        return presets[key]
    if f"fixed{key}" in presets:
        return presets[f"fixed{key}"]
    raise KeyError(f"unknown profile {name!r}; choose from {sorted(presets)}")


@dataclass(frozen=True)
class BlockSchedule:
    """Partition of ``M`` systems into blocks of ``sizes[b]`` systems.

    ``input_interval`` is the number of cycles the input port needs per row
    (1 when the host link keeps up with the core).
    """

    sizes: tuple
    input_interval: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(m) for m in self.sizes))
        if any(m < 1 for m in self.sizes):
            raise ValueError("every block needs at least one system")
        if self.input_interval < 1:
            raise ValueError("input_interval must be >= 1")

    @property
    def B(self) -> int:
        return len(self.sizes)

    @property
    def M(self) -> int:
        return sum(self.sizes)

    @classmethod
    def uniform(cls, B: int, m: int, input_interval: int = 1) -> "BlockSchedule":
        return cls((m,) * B, input_interval)


def compute_cycles(N: int, schedule: BlockSchedule, profile: LatencyProfile) -> int:
    if schedule.B == 0:
        return 0
    B = schedule.B
    p = profile
    return (N * B * (p.C_F + p.C_A) + B * p.C_div + N * p.C_B
            + 2 * sum(m - 1 for m in schedule.sizes))


def compute_time(N: int, schedule: BlockSchedule, profile: LatencyProfile) -> float:
    """Seconds to solve ``schedule.M`` systems of ``N`` rows."""
    return compute_cycles(N, schedule, profile) / profile.f_clock


def rate_of_computation(profile: LatencyProfile) -> float:
    """Input bandwidth the core consumes at full rate, in bits/s.

    Five words of ``D`` bits (a, b, c, y and the thread id) enter every cycle.
    """
    return 5 * profile.D * profile.f_clock


def bandwidth_partition(M: int, profile: LatencyProfile, r_d: float) -> BlockSchedule:
    """Split ``M`` systems into blocks given a host link of ``r_d`` bits/s.

    With enough bandwidth blocks hold ``C_F`` systems, filling the forward
    pipeline.  Otherwise blocks of ``ceil(r_c / r_d)`` systems are formed
    and the input port stalls for that many cycles per row.  Leftover
    systems go into a final partial block.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if r_d <= 0:
        raise ValueError("r_d must be > 0")
    r_c = rate_of_computation(profile)
    if r_d >= r_c:
        m, interval = profile.C_F, 1
    else:
        m = min(math.ceil(r_c / r_d), profile.C_F)
        interval = math.ceil(r_c / r_d)
    B, rest = divmod(M, m)
    sizes = [m] * B + ([rest] if rest else [])
    return BlockSchedule(tuple(sizes), interval)


def max_throughput_ok(M: int, profile: LatencyProfile) -> bool:
    """True when ``M`` systems fill the pipeline completely in more than one block."""
    return M % profile.C_F == 0 and M // profile.C_F > 1


def full_pipeline_schedule(profile: LatencyProfile, B: int = 2) -> BlockSchedule:
    return BlockSchedule.uniform(B, profile.C_F)


# -- cycle simulator ----------------------------------------------------------

@dataclass(frozen=True)
class SimJob:
    id: int
    N: int
    arrival: int = 0


@dataclass
class SimResult:
    total_cycles: int
    completion: dict                      # id -> cycle the last x value left the backward core
    forward_done: dict = field(default_factory=dict)
    max_forward_inflight: int = 0
    max_rows_per_cycle: int = 0
    max_queue: int = 0
    max_stack: int = 0


class _Job:
    __slots__ = ("id", "N", "arrival", "order", "issued", "pushed", "inflight")

    def __init__(self, job: SimJob, order: int):
        self.id = job.id
        self.N = job.N
        self.arrival = job.arrival
        self.order = order
        self.issued = 0
        self.pushed = 0
        self.inflight = False


def simulate(jobs, profile: LatencyProfile, schedule: BlockSchedule, *,
             backward_slots: int | None = None, queue_capacity: int | None = None,
             stack_capacity: int = 512, fast_forward: bool = True) -> SimResult:
    """Cycle-level simulation of the solver core.

    Parameters
    ----------
    jobs : sequence of SimJob
        Assigned to blocks in order, ``schedule.sizes[0]`` to the first block
        and so on.
    backward_slots : int, optional
        Threads the backward core may hold at once.  Defaults to ``C_F``,
        one slot per forward thread; ``C_B`` models a core whose recurrence
        latency limits it to one row per cycle overall.
    queue_capacity : int, optional
        Size of the forward-to-backward id queue, default ``C_F``.
    stack_capacity : int
        ``c/d, z/d`` pairs each thread stack can hold.
    fast_forward : bool
        Jump over cycles in which no unit changes state.  The result is
        identical to stepping every cycle, only faster.
    """
    p = profile
    jobs = list(jobs)
    if not jobs:
        return SimResult(0, {})
    ids = [j.id for j in jobs]
    if len(set(ids)) != len(ids):
        raise ValueError("job ids must be unique")
    if sum(schedule.sizes) != len(jobs):
        raise ValueError(f"schedule covers {schedule.M} systems, got {len(jobs)} jobs")
    for j in jobs:
        if j.N < 1:
            raise ValueError(f"job {j.id} has no rows")
    backward_slots = p.C_F if backward_slots is None else backward_slots
    queue_capacity = p.C_F if queue_capacity is None else queue_capacity
    row_latency = p.C_F + p.C_A
    interval = schedule.input_interval

    blocks = []
    k = 0
    for m in schedule.sizes:
        blocks.append([_Job(j, k + i) for i, j in enumerate(jobs[k:k + m])])
        k += m

    fwd = deque()        # (retire_cycle, job) in issue order
    div = deque()        # (done_cycle, job)
    ready = []           # heap (ready_cycle, order, job)
    bwd = []             # heap (done_cycle, id)
    queue = deque()
    stacks = {}
    res = SimResult(0, {})

    block_idx = -1
    block_done = 0
    handed_off = True    # no block in flight yet
    port_free = 0
    inflight = 0
    last_issue = -1
    bwd_busy = 0
    finished = 0
    t = 0

    def start_block(t0):
        nonlocal block_idx, block_done, handed_off
        block_idx += 1
        block_done = 0
        handed_off = False
        for job in blocks[block_idx]:
            heapq.heappush(ready, (max(t0, job.arrival), job.order, job))

    start_block(0)
    total = len(jobs)
    while finished < total:
        # forward retire
        while fwd and fwd[0][0] == t:
            _, job = fwd.popleft()
            job.inflight = False
            inflight -= 1
            div.append((t + p.C_div, job))
            if job.issued < job.N:
                heapq.heappush(ready, (t, job.order, job))
        # divider output into the thread stack
        while div and div[0][0] == t:
            _, job = div.popleft()
            st = stacks.setdefault(job.id, 0) + 1
            if st > stack_capacity:
                raise StackOverflow(job.id, stack_capacity)
            stacks[job.id] = st
            res.max_stack = max(res.max_stack, st)
            job.pushed += 1
            if job.pushed == job.N:
                res.forward_done[job.id] = t
                block_done += 1
        # whole block through the divider: hand ids to the queue
        if not handed_off and block_done == len(blocks[block_idx]):
            for job in blocks[block_idx]:
                if len(queue) >= queue_capacity:
                    raise QueueOverflow(job.id, queue_capacity)
                queue.append(job)
            res.max_queue = max(res.max_queue, len(queue))
            handed_off = True
        # backward retire
        while bwd and bwd[0][0] == t:
            _, jid = heapq.heappop(bwd)
            res.completion[jid] = t
            bwd_busy -= 1
            finished += 1
        # backward admit, one thread per cycle
        admitted = False
        if queue and bwd_busy < backward_slots:
            job = queue.popleft()
            if stacks.get(job.id, 0) != job.N:
                raise RuntimeError(f"thread {job.id} stack holds {stacks.get(job.id, 0)} "
                                   f"entries, expected {job.N}")
            stacks[job.id] = 0
            heapq.heappush(bwd, (t + job.N * p.C_B, job.id))
            bwd_busy += 1
            admitted = True
        if handed_off and not queue and admitted and block_idx + 1 < len(blocks):
            start_block(t)
        # forward issue, one row per cycle
        if ready and t >= port_free and inflight < p.C_F and ready[0][0] <= t:
            _, _, job = heapq.heappop(ready)
            job.issued += 1
            job.inflight = True
            inflight += 1
            res.max_forward_inflight = max(res.max_forward_inflight, inflight)
            res.max_rows_per_cycle = max(res.max_rows_per_cycle, 2 if last_issue == t else 1)
            last_issue = t
            fwd.append((t + row_latency, job))
            port_free = t + interval

        if finished >= total:
            break
        if not fast_forward:
            t += 1
            continue
        nxt = math.inf
        if fwd:
            nxt = fwd[0][0]
        if div:
            nxt = min(nxt, div[0][0])
        if bwd:
            nxt = min(nxt, bwd[0][0])
        if queue and bwd_busy < backward_slots:
            nxt = t + 1
        if ready and inflight < p.C_F:
            nxt = min(nxt, max(ready[0][0], port_free))
        t = max(t + 1, nxt) if nxt != math.inf else t + 1

    res.total_cycles = max(res.completion.values())
    return res


# -- reporting ----------------------------------------------------------------

@dataclass
class SpeedupRow:
    name: str
    min_time: float          # seconds, one system alone in the core
    max_time: float          # seconds per system with the pipeline full
    min_speedup: float
    max_speedup: float


def speedup_table(profiles, cpu_time_per_system: float, N: int = 100,
                  blocks: int = 2) -> list:
    """Per-system solve times against a CPU baseline.

    Minimum throughput is a single system (``B = m = 1``).  Maximum
    throughput fills the pipeline with ``blocks`` blocks of ``C_F`` systems
    and divides the total time by the number of systems.
    """
    if cpu_time_per_system <= 0:
        raise ValueError("baseline time must be > 0")
    if isinstance(profiles, dict):
        profiles = list(profiles.values())
    rows = []
    for prof in profiles:
        t_min = compute_time(N, BlockSchedule((1,)), prof)
        full = full_pipeline_schedule(prof, blocks)
        t_max = compute_time(N, full, prof) / full.M
        rows.append(SpeedupRow(prof.name, t_min, t_max,
                               cpu_time_per_system / t_min, cpu_time_per_system / t_max))
    return rows


def device_resources() -> dict:
    """Post-implementation resource usage of the four builds (reference data only).

    The power row lists five readings for four designs and is kept unassigned.
    """
    from importlib.resources import files
    return json.loads(files(__package__).joinpath("data/fpga_resources.json").read_text())
