"""Command-line batch driver.

Every subcommand reads an optional JSON document (``--config``) with the
sections ``scenario``, ``probe``, ``attack``, ``cpr`` and ``rate``, runs a
sweep and writes CSV (or JSON for ``cpr-trace``) to ``--out`` or stdout.
Output depends only on the document, the flags and ``--seed``.

Scenario section: either a full scenario (with ``path_distances``) or
overrides for the reference setup (``d_ar``, ``H``, ``scatter_seed``,
``integer_taps``, ...).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .attack import AttackMode, ReflectionSchedule, corruption_probability, measure_corruption
from .channel import path_delays
from .crkg import CprConfig, Scheme, run_pipeline
from .keyrate import (
    GapKind,
    RateCase,
    RateEstimationError,
    SubcarrierMode,
    rate_case,
    rate_gap_approx,
    rate_gap_exact,
    rate_monte_carlo,
    scenario_rate_inputs,
)
from .probing import ProbeConfig
from .scene import Scenario, deployment_grid, reference_scenario

__all__ = ["main", "build_parser", "parse_sweep", "load_config", "RunSpec"]

SWEEP_AXES = ("snr_db", "beta", "beta_db", "f_r")

# (scheme, attack) pairs reported by the bdr command, in output order
BDR_COMBOS = (
    (Scheme.PLAIN, AttackMode.NO_RIS),
    (Scheme.PLAIN, AttackMode.ASYMMETRIC),
    (Scheme.PLAIN, AttackMode.ASYNC),
    (Scheme.CPR, AttackMode.ASYMMETRIC),
    (Scheme.CPR, AttackMode.ASYNC),
    (Scheme.FH, AttackMode.ASYNC),
)

RATE_HEADER = [
    "R0", "R1", "R2", "R3",
    "Delta1_exact", "Delta2_exact", "Delta3_exact",
    "Delta1_approx", "Delta2_approx", "Delta3_approx",
]


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    """``AXIS:START:STOP:STEP`` with an inclusive stop.

    >>> parse_sweep("snr_db:0:10:5")[1].tolist()
    [0.0, 5.0, 10.0]
    """
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"sweep must look like AXIS:START:STOP:STEP, got {text!r}")
    axis = parts[0]
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    start, stop, step = (float(p) for p in parts[1:])
    if step <= 0 or stop < start:
        raise ValueError("sweep needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return axis, np.round(start + step * np.arange(n), 12)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError("config document must be a JSON object")
    unknown = set(doc) - {"scenario", "probe", "attack", "cpr", "rate", "grid"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    return doc


class RunSpec:
    """Resolved configuration for one CLI invocation."""

    def __init__(self, doc: dict, seed: int):
        self.doc = doc
        self.seed = int(seed)
        sc = dict(doc.get("scenario", {}))
        if "path_distances" in sc:
            self.scenario = Scenario.from_dict(sc)
        else:
            d_ar = sc.pop("d_ar", 0.5)
            H = sc.pop("H", 2.5)
            self.scenario = reference_scenario(d_ar, H, **sc)
        self.probe = ProbeConfig(**doc.get("probe", {}))
        self.attack = dict(doc.get("attack", {}))
        cp = doc.get("cpr", {})
        base = CprConfig.default_for(self.scenario.L, self.probe.N_p)
        self.cpr = replace(base, **cp)
        self.rate = dict(doc.get("rate", {}))

    def schedule(self, mode: AttackMode, cfg: ProbeConfig, s: Scenario, T_r=None) -> ReflectionSchedule:
        a = self.attack
        mode = AttackMode(mode)
        if mode is AttackMode.ASYNC and T_r is None:
            T_r = a.get("T_r", cfg.T_p)
        return ReflectionSchedule(
            mode=mode,
            M=s.M,
            beta=s.beta,
            T_r=T_r if mode is AttackMode.ASYNC else None,
            t_delta=a.get("t_delta", 0.0),
            amplitude_mode=a.get("amplitude_mode", "ContinuousPhase"),
            seed=a.get("seed", self.seed),
        )

    def at(self, axis: str | None, value: float) -> tuple[Scenario, ProbeConfig]:
        """Scenario and probe config at one sweep point."""
        s, cfg = self.scenario, self.probe
        if axis == "snr_db":
            cfg = replace(cfg, snr_db=float(value))
        elif axis == "beta":
            s = replace(s, beta=float(value))
        elif axis == "beta_db":
            s = replace(s, beta=10.0 ** (float(value) / 10.0))
        return s, cfg


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "NA"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _sweep(args, default: str) -> tuple[str, np.ndarray]:
    return parse_sweep(args.sweep or default)


# --------------------------------------------------------------------------
# commands


def cmd_rate(rs: RunSpec, args) -> str:
    axis, values = _sweep(args, "snr_db:0:40:5")
    if axis == "f_r":
        raise ValueError("rate sweeps support snr_db, beta and beta_db")
    mc = args.trials is not None
    sub_mode = SubcarrierMode.SINGLE_CARRIER_FH if args.scheme == Scheme.FH.value else SubcarrierMode.FULL_BAND
    header = [axis] + RATE_HEADER + ([f"MC_R{i}" for i in range(4)] if mc else [])
    rows = []
    for v in values:
        s, cfg = rs.at(axis, v)
        S, br = scenario_rate_inputs(s)
        S = rs.rate.get("sum_beta", S)
        if "beta_r" in rs.rate:
            # given at beta = 1; the RIS gain is linear in beta
            br = rs.rate["beta_r"] * s.beta
        s2 = cfg.sigma2
        row = [v]
        row += [rate_case(c, S, br, s2) for c in RateCase]
        row += [rate_gap_exact(g, S, br, s2) for g in GapKind]
        row += [rate_gap_approx(g, S, br, s2) for g in GapKind]
        if mc:
            for i, case in enumerate(RateCase):
                mode = {
                    RateCase.NO_RIS: AttackMode.NO_RIS,
                    RateCase.BENIGN: AttackMode.BENIGN,
                    RateCase.ASYMMETRIC: AttackMode.ASYMMETRIC,
                    RateCase.ASYNC: AttackMode.ASYNC,
                }[case]
                sched = rs.schedule(mode, cfg, s, T_r=cfg.T_p if mode is AttackMode.ASYNC else None)
                try:
                    row.append(rate_monte_carlo(s, sched, cfg, args.trials, sub_mode, seed=rs.seed + i))
                except RateEstimationError:
                    row.append(float("nan"))
        rows.append(row)
    return _csv(header, rows)


def cmd_heatmap(rs: RunSpec, args) -> str:
    g = rs.doc.get("grid", {})
    s = rs.scenario
    d_ar, H, beta_r = deployment_grid(
        s,
        tuple(g.get("d_ar_range", (0.0, s.D))),
        tuple(g.get("H_range", (0.0, 5.0))),
        tuple(g.get("resolution", (21, 11))),
    )
    rows = [
        (d_ar[i], H[j], beta_r[i, j])
        for i in range(len(d_ar))
        for j in range(len(H))
    ]
    return _csv(["d_ar", "H", "beta_r"], rows)


def cmd_bdr(rs: RunSpec, args) -> str:
    axis, values = _sweep(args, "snr_db:0:30:5")
    if axis == "f_r":
        raise ValueError("bdr sweeps support snr_db, beta and beta_db")
    n_blocks = args.blocks or 500
    combos = [c for c in BDR_COMBOS if args.scheme is None or c[0].value == args.scheme]
    rows = []
    for v in values:
        s, cfg = rs.at(axis, v)
        cpr = rs.cpr
        for scheme, mode in combos:
            sched = rs.schedule(mode, cfg, s)
            res = run_pipeline(s, sched, cfg, cpr, n_blocks, scheme, seed=rs.seed)
            rows.append((v, scheme.value, mode.value, res.bdr, res.skip_rate, len(res.key_a)))
    return _csv([axis, "scheme", "attack", "mean_bdr", "skip_rate", "n_bits"], rows)


def cmd_timing(rs: RunSpec, args) -> str:
    cfg = rs.probe
    f_p = 1.0 / cfg.T_p
    axis, values = _sweep(args, f"f_r:0:{2 * f_p:g}:{f_p / 4:g}")
    if axis != "f_r":
        raise ValueError("timing sweeps the f_r axis")
    n_rounds = args.trials or 10_000
    n_blocks = args.blocks or 200
    scheme = Scheme(args.scheme) if args.scheme else Scheme.PLAIN
    s = rs.scenario
    rng = np.random.default_rng([rs.seed, 0x7131])
    rows = []
    for f_r in values:
        T_r = math.inf if f_r == 0 else 1.0 / f_r
        sched = rs.schedule(AttackMode.ASYNC, cfg, s, T_r=T_r)
        expected = corruption_probability(cfg.T_p, sched)
        measured = measure_corruption(cfg.T_p, sched, n_rounds, rng)
        res = run_pipeline(s, sched, cfg, rs.cpr, n_blocks, scheme, seed=rs.seed)
        rows.append((f_r, f_p, f_r / f_p, expected, measured, res.bdr))
    return _csv(["f_r", "f_p", "ratio", "expected_corruption", "measured_corruption", "bdr"], rows)


def cmd_cpr_trace(rs: RunSpec, args) -> str:
    s, cfg = rs.scenario, rs.probe
    mode = AttackMode(rs.attack.get("mode", AttackMode.ASYNC.value))
    sched = rs.schedule(mode, cfg, s)
    n_blocks = args.blocks or 10
    res = run_pipeline(s, sched, cfg, rs.cpr, n_blocks, Scheme.CPR, seed=rs.seed)
    tau, tau_r = path_delays(s)
    blocks = []
    for b, rep in enumerate(res.reports):
        entry = {"block": b, "skipped": rep is not None and not rep.K_final}
        if rep is not None:
            entry.update(rep.to_dict())
        blocks.append(entry)
    doc = {
        "attack": mode.value,
        "seed": rs.seed,
        "snr_db": cfg.snr_db,
        "path_delays": [float(t) for t in tau],
        "ris_delay": float(tau_r),
        "cpr": {
            "N_sel": rs.cpr.N_sel,
            "alpha_min": rs.cpr.alpha_min,
            "detect_eta": rs.cpr.detect_eta,
            "detect": rs.cpr.detect,
        },
        "bdr": res.bdr,
        "skip_rate": res.skip_rate,
        "blocks": blocks,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


COMMANDS = {
    "rate": cmd_rate,
    "heatmap": cmd_heatmap,
    "bdr": cmd_bdr,
    "timing": cmd_timing,
    "cpr-trace": cmd_cpr_trace,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risjam", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "rate": "analytic key rates, gaps and optional Monte-Carlo estimates",
        "heatmap": "RIS path gain over a grid of RIS positions",
        "bdr": "bit disagreement ratio of each scheme under each attack",
        "timing": "corruption fraction and BDR versus RIS switching rate",
        "cpr-trace": "per-block path sets, autocorrelations and flags (JSON)",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", help="JSON configuration document")
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--trials", type=int, help="Monte-Carlo trials / probe rounds")
        sp.add_argument("--blocks", type=int, help="coherence blocks per point")
        sp.add_argument("--sweep", help="AXIS:START:STOP:STEP, AXIS in " + "|".join(SWEEP_AXES))
        sp.add_argument("--scheme", choices=[s.value for s in Scheme])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        rs = RunSpec(load_config(args.config), args.seed)
        text = COMMANDS[args.command](rs, args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
