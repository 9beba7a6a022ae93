"""Run orchestration: initial states, CSV emission, checkpoints, audits."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .config import AuditConfig, RunConfig
from .diagnostics import (
    CSV_COLUMNS,
    AuditRow,
    DiagnosticsRecord,
    Monitor,
    audit_commutator_product,
    audit_gn_inequalities,
)
from .initial_data import (
    constant_director,
    equatorial_director,
    near_harmonic,
    random_divfree,
    random_scalar,
    sinusoidal_profile,
    taylor_green,
)
from .littlewood_paley import BesovIndex, audit_interpolation, besov_norm, build_cutoff_bank, sobolev_norm
from .solver import RunResult, SolverConfig, State, run
from .spectral import Grid, derivative, lp_norm, zero_vector


def fmt(x) -> str:
    """Full-precision, locale-free float formatting for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def build_initial_state(grid: Grid, init) -> State:
    """Assemble the (u, d) pair described by an init section."""
    if init.u_kind == "zero":
        u = zero_vector(grid, grid.dim)
    elif init.u_kind == "taylor_green":
        u = taylor_green(grid, init.u_amplitude)
    elif init.u_kind == "random_divfree":
        u = random_divfree(grid, init.u_slope, init.u_seed, init.u_amplitude)
    else:
        raise ValueError(f"unknown init.u_kind {init.u_kind!r}")

    if init.d_kind == "constant_director":
        d = constant_director(grid)
    elif init.d_kind == "equatorial":
        d = equatorial_director(
            grid, sinusoidal_profile(grid, init.d_theta_amplitude, init.d_theta_mode)
        )
    elif init.d_kind == "equatorial_random":
        theta = random_scalar(grid, init.d_band, init.d_slope, init.d_seed,
                              amplitude=init.d_theta_amplitude)
        d = equatorial_director(grid, theta)
    elif init.d_kind == "near_harmonic":
        d = near_harmonic(grid, init.d_scale)
    else:
        raise ValueError(f"unknown init.d_kind {init.d_kind!r}")
    return State(t=0.0, u=u, d=d)


def solver_config(cfg: RunConfig) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(
        dt=s.dt,
        t_end=s.t_end,
        dealias=s.dealias,
        renormalize_every=s.renormalize_every,
        nu=s.nu,
        lam=s.lam,
        gamma=s.gamma,
        scheme=s.scheme,
    )


class CsvWriter:
    """Sole owner of one diagnostics CSV file."""

    def __init__(self, path: Path):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8")
        self._fh.write(",".join(CSV_COLUMNS) + "\n")

    def write(self, record: DiagnosticsRecord) -> None:
        self._fh.write(",".join(fmt(v) for v in record.csv_row()) + "\n")

    def close(self) -> None:
        self._fh.close()


def _criterion_summary(records: list[DiagnosticsRecord], epsilon0: float) -> str:
    if not records:
        return "no diagnostics records emitted"
    sup_u = max(r.besov_u for r in records)
    sup_gd = max(r.besov_grad_d for r in records)
    ok = records[-1].criterion_ok
    return (
        f"sup_t besov_u = {sup_u:.6g}, sup_t besov_grad_d = {sup_gd:.6g}, "
        f"epsilon0 = {epsilon0:g}, criterion {'held' if ok else 'violated'}"
    )


def execute_run(cfg: RunConfig, output_dir: str | os.PathLike | None = None,
                quiet: bool = False,
                resume_from: str | os.PathLike | None = None) -> RunResult:
    """Run (or resume) a monitored simulation, writing CSV and checkpoints."""
    out_dir = Path(output_dir if output_dir is not None else cfg.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = Grid(cfg.grid.dim, cfg.grid.n)
    scfg = solver_config(cfg)
    monitor = Monitor(grid, epsilon0=cfg.monitor.epsilon0)
    digest = cfg.digest()

    start_record = None
    if resume_from is not None:
        state, header = ckpt.load(resume_from, expected_digest=digest)
        if header.scheme != scfg.scheme:
            raise ckpt.CheckpointError(
                f"checkpoint scheme {header.scheme!r} != configured {scfg.scheme!r}"
            )
        start_record = monitor.seed_record(state, header.accumulators, header.criterion_ok)
        remaining = cfg.solver.t_end - header.t
        if remaining < -1e-12:
            raise ckpt.CheckpointError(
                f"checkpoint time {header.t:g} is beyond t_end {cfg.solver.t_end:g}"
            )
        scfg = SolverConfig(
            dt=scfg.dt,
            t_end=max(remaining, 0.0),
            dealias=scfg.dealias,
            renormalize_every=scfg.renormalize_every,
            nu=scfg.nu,
            lam=scfg.lam,
            gamma=scfg.gamma,
            scheme=scfg.scheme,
        )
        step_offset = int(round(header.t / scfg.dt))
    else:
        state = build_initial_state(grid, cfg.init)
        step_offset = 0

    writer = CsvWriter(out_dir / "diagnostics.csv")
    interval = cfg.output.checkpoint_interval

    def on_step(m: int, st: State, rec: DiagnosticsRecord | None):
        if interval and (step_offset + m) % interval == 0:
            accs = (rec.acc_H2, rec.acc_bkm, rec.acc_hw, rec.acc_llw) if rec else (0.0,) * 4
            ok = rec.criterion_ok if rec else True
            ckpt.save(
                out_dir / f"checkpoint_{step_offset + m:08d}.bin",
                st,
                digest,
                accumulators=accs,
                criterion_ok=ok,
                scheme=scfg.scheme,
            )

    try:
        result = run(
            state,
            scfg,
            monitor=monitor,
            cadence=cfg.monitor.cadence,
            sink=writer.write,
            on_step=on_step,
            start_record=start_record,
        )
    finally:
        writer.close()

    if not quiet:
        print(_criterion_summary(result.records, cfg.monitor.epsilon0))
        if result.blown_up:
            print(f"run terminated by blow-up guard at t ~ {result.final_state.t:.6g}")
    return result


def _audit_corpus(grid: Grid, size: int, band: int, slope: float, amplitude: float,
                  seed: int):
    return [
        random_scalar(grid, band, slope, seed + i, amplitude=amplitude)
        for i in range(size)
    ]


def _interpolation_rows(grid: Grid, fields, bank) -> list[AuditRow]:
    rows = []
    for alpha, p, q in ((1.0, 4.0, 2.0), (1.0, 3.0, 2.0)):
        best, n = 0.0, 0
        for f in fields:
            sample = audit_interpolation(bank, f, alpha, p, q)
            if sample.ratio > 0:
                best = max(best, sample.ratio)
                n += 1
        rows.append(AuditRow(f"interpolation alpha={alpha:g} p={p:g} q={q:g}", best, n))
    return rows


def _embedding_rows(grid: Grid, fields, bank) -> list[AuditRow]:
    crit = BesovIndex(-1.0, np.inf, np.inf)
    rows = []
    best, n = 0.0, 0
    for f in fields:
        denom = lp_norm(f, float(grid.dim))
        if denom > 0:
            best = max(best, besov_norm(bank, f, crit) / denom)
            n += 1
    rows.append(AuditRow(f"embedding besov_crit <= C Ln, n={grid.dim}", best, n))

    lo, hi, n2 = np.inf, 0.0, 0
    for f in fields:
        h = sobolev_norm(f, -1.0)
        if h > 0:
            r = besov_norm(bank, f, BesovIndex(-1.0, 2.0, 2.0)) / h
            lo, hi = min(lo, r), max(hi, r)
            n2 += 1
    if n2:
        rows.append(AuditRow("equivalence besov(-1,2,2)/sobolev(-1) max", hi, n2))
        rows.append(AuditRow("equivalence sobolev(-1)/besov(-1,2,2) max", 1.0 / lo, n2))

    best, n3 = 0.0, 0
    low2 = BesovIndex(-2.0, np.inf, np.inf)
    for f in fields:
        denom = besov_norm(bank, f, crit)
        if denom > 0:
            num = max(besov_norm(bank, derivative(f, ax), low2) for ax in range(grid.dim))
            best = max(best, num / denom)
            n3 += 1
    rows.append(AuditRow("gradient besov(-2) <= C besov(-1)", best, n3))
    return rows


def _audit_rows_for_grid(grid: Grid, acfg: AuditConfig) -> list[AuditRow]:
    a = acfg.audit
    bank = build_cutoff_bank(grid)
    fields = _audit_corpus(grid, a.corpus_size, a.band, a.slope, a.amplitude, a.seed)
    rows = _interpolation_rows(grid, fields, bank)
    rows += _embedding_rows(grid, fields, bank)
    rows += audit_gn_inequalities(fields, grid.dim)
    # pair corpus band-limited so the pointwise products stay alias-free
    pair_band = max(1, min(a.band, a.n_low // 4 - 1))
    pair_fields = _audit_corpus(grid, 2 * a.corpus_size, pair_band, a.slope,
                                a.amplitude, a.seed + 10_000)
    pairs = list(zip(pair_fields[: a.corpus_size], pair_fields[a.corpus_size:]))
    rows += audit_commutator_product(pairs, alpha=2.0, p=2.0, p1=4.0, q1=4.0,
                                     p2=4.0, q2=4.0)
    return rows


def execute_audit(acfg: AuditConfig, output_dir: str | os.PathLike | None = None,
                  quiet: bool = False) -> Path:
    """Run every inequality audit at two resolutions; write the report table."""
    out_dir = Path(output_dir if output_dir is not None else "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    dim = acfg.grid.dim
    rows_low = _audit_rows_for_grid(Grid(dim, acfg.audit.n_low), acfg)
    rows_high = _audit_rows_for_grid(Grid(dim, acfg.audit.n_high), acfg)

    path = out_dir / "audit_report.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("inequality_id,n_samples_low,max_ratio_low,"
                 "n_samples_high,max_ratio_high,rel_delta\n")
        for lo, hi in zip(rows_low, rows_high):
            if lo.n_samples == 0 and hi.n_samples == 0:
                continue
            denom = max(lo.max_ratio, 1e-300)
            delta = abs(hi.max_ratio - lo.max_ratio) / denom
            fh.write(
                f'"{lo.inequality_id}",{lo.n_samples},{fmt(lo.max_ratio)},'
                f"{hi.n_samples},{fmt(hi.max_ratio)},{fmt(delta)}\n"
            )
    if not quiet:
        print(f"audit report written to {path}")
    return path


def describe_checkpoint(path) -> str:
    header = ckpt.read_header(path)
    acc = header.accumulators
    return "\n".join(
        [
            f"dim: {header.dim}",
            f"n: {header.n}",
            f"t: {header.t!r}",
            f"scheme: {header.scheme}",
            f"config_digest: {header.digest.hex()}",
            f"acc_H2: {acc[0]!r}",
            f"acc_bkm: {acc[1]!r}",
            f"acc_hw: {acc[2]!r}",
            f"acc_llw: {acc[3]!r}",
            f"criterion_ok: {int(header.criterion_ok)}",
            f"payload_bytes: {header.payload_bytes}",
        ]
    )
