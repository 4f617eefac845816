"""How often does an asynchronous RIS switch mid-round?

Run: python3 demos/timing.py
"""
import numpy as np

from risjam.attack import ReflectionSchedule, corruption_probability, measure_corruption

T_p = 1e-3
rng = np.random.default_rng(0)
print(f"{'f_r/f_p':>8} {'expected':>9} {'measured':>9}")
for ratio in (0.1, 0.25, 0.5, 0.75, 1.0, 2.0):
    sched = ReflectionSchedule("AsyncConfig", M=10, T_r=T_p / ratio)
    exp = corruption_probability(T_p, sched)
    got = measure_corruption(T_p, sched, 10_000, rng)
    print(f"{ratio:8.2f} {exp:9.3f} {got:9.3f}")
print("Once the RIS switches at least once per round, every round is corrupted.")
