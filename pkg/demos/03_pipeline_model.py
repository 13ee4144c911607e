# Cycle counts for the pipelined core, closed form against the simulator.
from thomascore.pipeline import (BlockSchedule, SimJob, bandwidth_partition, compute_cycles,
                                 preset_profiles, rate_of_computation, simulate, speedup_table)

profiles = preset_profiles()
for name, p in profiles.items():
    print(f"{name:<12} C_F={p.C_F:<3} C_B={p.C_B:<3} f={p.f_clock / 1e6:.0f}MHz")

print("\nper-system times against a 0.020 ms CPU solve, N=100")
for row in speedup_table(profiles, 0.020e-3):
    print(f"{row.name:<12} single {row.min_time * 1e3:.4f} ms ({row.min_speedup:.2f}x)   "
          f"full pipeline {row.max_time * 1e3:.6f} ms ({row.max_speedup:.1f}x)")

p = profiles["fixed[2,30]"]
s = BlockSchedule((69, 69, 20))
sim = simulate([SimJob(i, 100) for i in range(s.M)], p, s)
print(f"\n3 blocks on {p.name}: closed form {compute_cycles(100, s, p)} cycles, "
      f"simulated {sim.total_cycles}")

# slower host link: fewer systems per block, input port stalls between rows
r_c = rate_of_computation(p)
for frac in (1.0, 0.5, 0.2):
    sched = bandwidth_partition(200, p, frac * r_c)
    print(f"r_d = {frac:.1f} r_c -> blocks {sched.B}, block size {sched.sizes[0]}, "
          f"{sched.input_interval} cycles per row")
