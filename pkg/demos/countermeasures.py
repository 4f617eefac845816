"""Bit disagreement with and without the path-selection countermeasure.

Run: python3 demos/countermeasures.py   (about 30 s)
"""
from risjam.attack import AttackMode, ReflectionSchedule
from risjam.crkg import CprConfig, Scheme, run_pipeline
from risjam.probing import ProbeConfig
from risjam.scene import reference_scenario

BLOCKS = 200
combos = [
    (Scheme.PLAIN, AttackMode.NO_RIS),
    (Scheme.PLAIN, AttackMode.ASYMMETRIC),
    (Scheme.PLAIN, AttackMode.ASYNC),
    (Scheme.CPR, AttackMode.ASYMMETRIC),
    (Scheme.CPR, AttackMode.ASYNC),
    (Scheme.FH, AttackMode.ASYNC),
]
for label, s in (("fractional delays", reference_scenario()),
                 ("integer delays", reference_scenario(integer_taps=True))):
    print(f"\n{label}: mean BDR over {BLOCKS} blocks")
    print(f"{'SNR dB':>6} " + " ".join(f"{sc.value[:4]}/{m.value[:5]:>5}" for sc, m in combos))
    cpr = CprConfig.default_for(s.L, 50)
    for snr in (0, 10, 20, 30):
        cfg = ProbeConfig(snr_db=snr)
        row = []
        for scheme, mode in combos:
            sched = ReflectionSchedule(mode, M=s.M, T_r=cfg.T_p if mode is AttackMode.ASYNC else None, seed=1)
            row.append(run_pipeline(s, sched, cfg, cpr, BLOCKS, scheme, seed=2).bdr)
        print(f"{snr:>6} " + " ".join(f"{v:10.3f}" for v in row))
print("\nWith fractional delays the direct path leaks into the RIS tap, which")
print("limits how much the countermeasure can remove.")
