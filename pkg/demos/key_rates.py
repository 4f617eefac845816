"""Secret key rate under each RIS behaviour, closed form against Monte Carlo.

Run: python3 demos/key_rates.py
"""
from risjam.attack import AttackMode, ReflectionSchedule
from risjam.keyrate import RateCase, rate_case, rate_monte_carlo, scenario_rate_inputs
from risjam.probing import ProbeConfig
from risjam.scene import reference_scenario

s = reference_scenario()
S, br = scenario_rate_inputs(s)
print(f"normalized direct gain {S:.3f}, RIS gain {br:.4f}")

# With the physical RIS gain the cases barely differ; an active attacker
# amplifies its reflection, so sweep the amplitude too.
print(f"\n{'SNR dB':>6} " + " ".join(f"{c.value:>11}" for c in RateCase))
for snr in (0, 10, 20, 30):
    s2 = 10 ** (-snr / 10)
    print(f"{snr:>6} " + " ".join(f"{rate_case(c, 1.0, 1.0, s2):11.4f}" for c in RateCase))

print("\nMonte Carlo check at 10 dB (20000 trials):")
cfg = ProbeConfig(snr_db=10.0)
for case, mode in zip(RateCase, AttackMode):
    sched = ReflectionSchedule(mode, M=s.M, T_r=cfg.T_p if mode is AttackMode.ASYNC else None, seed=1)
    mc = rate_monte_carlo(s, sched, cfg, 20_000, seed=2)
    print(f"  {case.value:>11}: closed form {rate_case(case, S, br, cfg.sigma2):.4f}  MC {mc:.4f}")
