"""Monitored quantities evaluated on solver states.

Covers the energy balance, the scale-critical dyadic norms driving the
regularity monitor, structural identity checks, pressure recovery, and
empirical audits of the interpolation / commutator / product estimates
used in the a-priori analysis of this system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .littlewood_paley import (
    BesovIndex,
    DyadicCutoffBank,
    besov_norm,
    build_cutoff_bank,
    fractional_laplacian,
)
from .solver import State, stress_divergence
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    curl,
    dealias,
    derivative,
    divergence,
    from_spectral,
    laplacian,
    leray_project,
    lp_norm,
    quad_lp,
    to_spectral,
    vector_field,
)

CSV_COLUMNS = (
    "t",
    "energy",
    "dissipation",
    "besov_u",
    "besov_grad_d",
    "grad_u_L2",
    "delta_d_L2",
    "acc_H2",
    "acc_bkm",
    "acc_hw",
    "acc_llw",
    "div_u_max",
    "sphere_defect_max",
    "criterion_ok",
    "blowup_flag",
)

CRITICAL_INDEX = BesovIndex(-1.0, np.inf, np.inf)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of every monitored quantity.

    ``integrands`` holds the instantaneous values feeding the trapezoidal
    accumulators (H2 dissipation, vorticity sup, vorticity sup plus
    |grad d|_inf^2, |grad d|_L4^4); it is carried so the next sample can
    continue the quadrature, and is not a CSV column.
    """

    t: float
    energy: float
    dissipation: float
    besov_u: float
    besov_grad_d: float
    grad_u_L2: float
    delta_d_L2: float
    acc_H2: float
    acc_bkm: float
    acc_hw: float
    acc_llw: float
    div_u_max: float
    sphere_defect_max: float
    criterion_ok: bool
    blowup_flag: bool = False
    integrands: tuple = field(default=(0.0, 0.0, 0.0, 0.0), repr=False)

    def csv_row(self) -> list:
        vals = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            vals.append(int(v) if isinstance(v, bool) else v)
        return vals


def _sq_l2_spectral(grid: Grid, coeffs: np.ndarray, weight=None) -> float:
    """Parseval evaluation of ||f||_L2^2, optionally with a multiplier^2 weight."""
    mag = np.abs(coeffs) ** 2
    if weight is not None:
        mag = mag * weight
    return float(grid.volume * np.sum(mag))


def energy(state: State) -> float:
    """||u||_L2^2 + ||grad d||_L2^2 (Parseval)."""
    g = state.grid
    out = sum(_sq_l2_spectral(g, c.coeffs) for c in state.u.components)
    out += sum(_sq_l2_spectral(g, c.coeffs, g.grad_sq_weight) for c in state.d.components)
    return out


def tension(state: State) -> list[np.ndarray]:
    """Pointwise Lap(d) + |grad d|^2 d, the sphere-constrained driving term."""
    g = state.grid
    d_phys = [from_spectral(c) for c in state.d.components]
    lap = [from_spectral(laplacian(c)) for c in state.d.components]
    grad_sq = np.zeros(g.shape)
    for ax in range(g.dim):
        for c in state.d.components:
            grad_sq += from_spectral(derivative(c, ax)) ** 2
    return [lap[c] + grad_sq * d_phys[c] for c in range(3)]


def dissipation(state: State) -> float:
    """||grad u||_L2^2 + ||Lap d + |grad d|^2 d||_L2^2."""
    g = state.grid
    out = sum(_sq_l2_spectral(g, c.coeffs, g.grad_sq_weight) for c in state.u.components)
    ten = tension(state)
    out += float(sum(np.sum(t**2) for t in ten) * g.cell_volume)
    return out


def criterion_quantities(state: State, bank: DyadicCutoffBank) -> tuple[float, float]:
    """Componentwise-max critical norms of u and of grad d.

    Vector norms use the max over scalar components (the strictest
    convention for a smallness criterion).
    """
    besov_u = max(besov_norm(bank, c, CRITICAL_INDEX) for c in state.u.components)
    besov_grad_d = max(
        besov_norm(bank, derivative(c, ax), CRITICAL_INDEX)
        for c in state.d.components
        for ax in range(state.grid.dim)
    )
    return besov_u, besov_grad_d


def vorticity_sup(state: State) -> float:
    w = curl(state.u)
    if isinstance(w, SpectralField):
        return float(np.max(np.abs(from_spectral(w))))
    mag_sq = sum(from_spectral(c) ** 2 for c in w.components)
    return float(np.sqrt(np.max(mag_sq)))


def director_gradient_norms(state: State) -> tuple[float, float]:
    """(sup |grad d|^2, ||grad d||_L4^4) with the Frobenius pointwise norm."""
    g = state.grid
    grad_sq = np.zeros(g.shape)
    for ax in range(g.dim):
        for c in state.d.components:
            grad_sq += from_spectral(derivative(c, ax)) ** 2
    sup_sq = float(np.max(grad_sq))
    l4_4 = float(np.sum(grad_sq**2) * g.cell_volume)
    return sup_sq, l4_4


def h2_integrand(state: State) -> float:
    """||grad^2 u||_L2^2 + ||grad Lap d||_L2^2 via Parseval."""
    g = state.grid
    w2 = g.grad_sq_weight**2
    out = sum(_sq_l2_spectral(g, c.coeffs, w2) for c in state.u.components)
    w3 = g.grad_sq_weight**3
    out += sum(_sq_l2_spectral(g, c.coeffs, w3) for c in state.d.components)
    return out


ACCUMULATOR_NAMES = ("h2", "bkm", "hw", "llw")


class Monitor:
    """Evaluates DiagnosticsRecords and accumulates the time integrals.

    The criterion flag compares the critical dyadic norms against the
    configured threshold; in 2D only the director norm enters, in 3D the
    max of both.  The flag is a running conjunction: once false it stays
    false for the rest of the stream.  ``accumulators`` selects which of
    the four time integrals advance; the others stay at zero.
    """

    def __init__(self, grid: Grid, epsilon0: float = 0.1,
                 bank: DyadicCutoffBank | None = None,
                 accumulators: tuple[str, ...] = ACCUMULATOR_NAMES):
        if epsilon0 <= 0:
            raise ValueError("epsilon0 must be positive")
        unknown = set(accumulators) - set(ACCUMULATOR_NAMES)
        if unknown:
            raise ValueError(f"unknown accumulators: {sorted(unknown)}")
        self.grid = grid
        self.epsilon0 = epsilon0
        self.bank = bank if bank is not None else build_cutoff_bank(grid)
        self.enabled = tuple(name in accumulators for name in ACCUMULATOR_NAMES)

    def _criterion_value(self, besov_u: float, besov_grad_d: float) -> float:
        if self.grid.dim == 3:
            return max(besov_u, besov_grad_d)
        return besov_grad_d

    def instantaneous(self, state: State) -> dict:
        besov_u, besov_grad_d = criterion_quantities(state, self.bank)
        g = state.grid
        grad_u = math.sqrt(
            sum(_sq_l2_spectral(g, c.coeffs, g.grad_sq_weight) for c in state.u.components)
        )
        delta_d = math.sqrt(
            sum(_sq_l2_spectral(g, c.coeffs, g.grad_sq_weight**2) for c in state.d.components)
        )
        sup_grad_d_sq, grad_d_l4_4 = director_gradient_norms(state)
        omega_sup = vorticity_sup(state)
        return {
            "energy": energy(state),
            "dissipation": dissipation(state),
            "besov_u": besov_u,
            "besov_grad_d": besov_grad_d,
            "grad_u_L2": grad_u,
            "delta_d_L2": delta_d,
            "div_u_max": state.div_u_max(),
            "sphere_defect_max": state.sphere_defect_max(),
            "integrands": (
                h2_integrand(state),
                omega_sup,
                omega_sup + sup_grad_d_sq,
                grad_d_l4_4,
            ),
        }

    def accumulate(self, record_prev: DiagnosticsRecord | None, state: State,
                   dt: float) -> DiagnosticsRecord:
        """Recompute instantaneous fields and advance accumulators by dt."""
        inst = self.instantaneous(state)
        integrands = inst.pop("integrands")
        if record_prev is None:
            accs = (0.0, 0.0, 0.0, 0.0)
            ok_so_far = True
        else:
            if dt <= 0:
                raise ValueError("dt must be > 0 when accumulating from a previous record")
            prev = record_prev.integrands
            accs = tuple(
                a + 0.5 * dt * (p + c)
                for a, p, c in zip(
                    (record_prev.acc_H2, record_prev.acc_bkm,
                     record_prev.acc_hw, record_prev.acc_llw),
                    prev,
                    integrands,
                )
            )
            ok_so_far = record_prev.criterion_ok
        ok = ok_so_far and (
            self._criterion_value(inst["besov_u"], inst["besov_grad_d"]) <= self.epsilon0
        )
        return DiagnosticsRecord(
            t=state.t,
            acc_H2=accs[0],
            acc_bkm=accs[1],
            acc_hw=accs[2],
            acc_llw=accs[3],
            criterion_ok=ok,
            integrands=integrands,
            **inst,
        )

    def seed_record(self, state: State, accs: tuple, criterion_ok: bool) -> DiagnosticsRecord:
        """Rebuild a record around a restored state (for resuming runs)."""
        rec = self.accumulate(None, state, 0.0)
        return replace(
            rec,
            acc_H2=accs[0],
            acc_bkm=accs[1],
            acc_hw=accs[2],
            acc_llw=accs[3],
            criterion_ok=criterion_ok and rec.criterion_ok,
        )


@dataclass(frozen=True)
class IdentityReport:
    """Max-norm residuals of the structural identities on one state."""

    stress_identity_max: float
    director_identity_max: float
    div_u_max: float


def identity_checks(state: State) -> IdentityReport:
    """Residuals of the stress-divergence split and the unit-length identity.

    (a) div(grad d (x) grad d) minus (Lap d . grad d + 0.5 grad |grad d|^2),
        both routes formed with the same dealiased pseudo-spectral products;
    (b) Lap d . d + |grad d|^2 pointwise, which vanishes for |d| = 1;
    (c) div u.
    """
    g = state.grid
    d = state.d
    route_a = stress_divergence(d, use_dealias=True)

    d_phys = [from_spectral(c) for c in d.components]
    lap_phys = [from_spectral(laplacian(c)) for c in d.components]
    partials = [[from_spectral(derivative(c, ax)) for c in d.components] for ax in range(g.dim)]
    grad_sq = sum(partials[ax][c] ** 2 for ax in range(g.dim) for c in range(3))
    grad_sq_hat = dealias(to_spectral(g, grad_sq))
    comps_b = []
    for jax in range(g.dim):
        lap_dot = sum(lap_phys[c] * partials[jax][c] for c in range(3))
        term = dealias(to_spectral(g, lap_dot)).coeffs
        term = term + 0.5 * derivative(grad_sq_hat, jax).coeffs
        comps_b.append(term)
    stress_res = 0.0
    for a, b in zip(route_a.components, comps_b):
        stress_res = max(stress_res, float(np.max(np.abs(from_spectral(SpectralField(g, a.coeffs - b))))))

    director_res = float(np.max(np.abs(sum(lap_phys[c] * d_phys[c] for c in range(3)) + grad_sq)))
    return IdentityReport(stress_res, director_res, state.div_u_max())


def pressure_recover(state: State) -> SpectralField:
    """Reconstruct the pressure eliminated by the projection.

    Solves -Lap P = div((u.grad)u + div(grad d (x) grad d)) mode-wise with
    zero mean, so the recovered P closes the momentum balance.
    """
    g = state.grid
    u_phys = [from_spectral(c) for c in state.u.components]
    du = [[from_spectral(derivative(c, ax)) for c in state.u.components] for ax in range(g.dim)]
    adv = [
        dealias(to_spectral(g, sum(u_phys[ax] * du[ax][c] for ax in range(g.dim)))).coeffs
        for c in range(g.dim)
    ]
    stress = stress_divergence(state.d, use_dealias=True)
    total = vector_field(g, [a + s.coeffs for a, s in zip(adv, stress.components)])
    src = divergence(total)
    return SpectralField(g, src.coeffs * g.inv_grad_sq_weight)


def momentum_residual(state: State, pressure: SpectralField, nu: float = 1.0,
                      lam: float = 1.0) -> float:
    """Max-norm residual of the momentum balance with the recovered pressure."""
    g = state.grid
    u_phys = [from_spectral(c) for c in state.u.components]
    du = [[from_spectral(derivative(c, ax)) for c in state.u.components] for ax in range(g.dim)]
    adv = [
        dealias(to_spectral(g, sum(u_phys[ax] * du[ax][c] for ax in range(g.dim)))).coeffs
        for c in range(g.dim)
    ]
    stress = stress_divergence(state.d, use_dealias=True)
    combined = vector_field(
        g, [-(a + lam * s.coeffs) for a, s in zip(adv, stress.components)]
    )
    dudt = leray_project(combined)  # plus nu*Lap u, which cancels below
    res = 0.0
    for c in range(g.dim):
        budget = (
            dudt.components[c].coeffs
            + adv[c]
            + derivative(pressure, c).coeffs
            + lam * stress.components[c].coeffs
        )
        res = max(res, float(np.max(np.abs(from_spectral(SpectralField(g, budget))))))
    return res


def dyadic_rescale_field(f: SpectralField, amplify: float) -> SpectralField:
    """Exact lattice image of amplify * f(2x): coefficients relocated k -> 2k.

    The field must be band-limited to |k_i| <= N/4 - 1 (up to relative
    round-off dust, which is dropped), or the doubled image would leave the
    lattice.
    """
    g = f.grid
    band = g.n // 4 - 1
    scale = float(np.max(np.abs(f.coeffs)))
    high = np.zeros(g.shape, dtype=bool)
    for ki in g.k:
        high |= np.abs(ki) + np.zeros(g.shape) > band
    if scale > 0 and float(np.max(np.abs(f.coeffs[high]))) > 1e-13 * scale:
        raise ValueError(
            f"field occupies |k| > {band}; doubling would leave the lattice"
        )
    # doubling is injective on the band |k_i| <= band; scatter only from there
    src = np.where(np.abs(g.k_axis) <= band)[0]
    tgt = (2 * g.k_axis[src].astype(np.int64)) % g.n
    out = np.zeros_like(f.coeffs)
    out[np.ix_(*([tgt] * g.dim))] = amplify * f.coeffs[np.ix_(*([src] * g.dim))]
    return SpectralField(g, out)


def dyadic_rescale_state(state: State) -> State:
    """The scaling symmetry of the system on the lattice: (u, d) -> (2u(2x), d(2x))."""
    u = VectorField(tuple(dyadic_rescale_field(c, 2.0) for c in state.u.components))
    d = VectorField(tuple(dyadic_rescale_field(c, 1.0) for c in state.d.components))
    return State(t=state.t, u=u, d=d)


@dataclass(frozen=True)
class AuditRow:
    """Empirical constant for one inequality over a corpus."""

    inequality_id: str
    max_ratio: float
    n_samples: int


def _op_norm(f: SpectralField, kind: str, order: float, p: float) -> float:
    """Norm of one side-factor: identity, gradient magnitude, Lap, or |k|^a."""
    if kind == "id":
        return lp_norm(f, p)
    if kind == "grad":
        g = f.grid
        mag_sq = sum(from_spectral(derivative(f, ax)) ** 2 for ax in range(g.dim))
        if p == np.inf:
            return float(np.sqrt(np.max(mag_sq)))
        return quad_lp(np.sqrt(mag_sq), p, g.cell_volume)
    if kind == "lap":
        return lp_norm(laplacian(f), p)
    if kind == "lam":
        return lp_norm(fractional_laplacian(f, order), p)
    raise ValueError(f"unknown operator kind {kind!r}")


# Gagliardo-Nirenberg style rows: (id, lhs (kind, order, p), [(kind, order, p, power), ...])
GN_INEQUALITIES_2D = [
    ("2d grad_L3 <= grad_L2^(5/6) lam3_L2^(1/6)",
     ("grad", 1, 3), [("grad", 1, 2, 5 / 6), ("lam", 3, 2, 1 / 6)]),
    ("2d grad_L6 <= id_L2^(4/9) lam3_L2^(5/9)",
     ("grad", 1, 6), [("id", 0, 2, 4 / 9), ("lam", 3, 2, 5 / 9)]),
    ("2d lam2_L3 <= grad_L2^(1/3) lam3_L2^(2/3)",
     ("lam", 2, 3), [("grad", 1, 2, 1 / 3), ("lam", 3, 2, 2 / 3)]),
    ("2d grad_L6 <= grad_L2^(1/3) lap_L2^(2/3)",
     ("grad", 1, 6), [("grad", 1, 2, 1 / 3), ("lap", 2, 2, 2 / 3)]),
    ("2d lam2_L4 <= lap_L2^(3/4) lam4_L2^(1/4)",
     ("lam", 2, 4), [("lap", 2, 2, 3 / 4), ("lam", 4, 2, 1 / 4)]),
    ("2d lam3_L3 <= lap_L2^(1/3) lam4_L2^(2/3)",
     ("lam", 3, 3), [("lap", 2, 2, 1 / 3), ("lam", 4, 2, 2 / 3)]),
    ("2d grad_L3 <= id_L2^(1/3) lap_L2^(2/3)",
     ("grad", 1, 3), [("id", 0, 2, 1 / 3), ("lap", 2, 2, 2 / 3)]),
]

GN_INEQUALITIES_3D = [
    ("3d grad_L3 <= id_L2^(1/4) lap_L2^(3/4)",
     ("grad", 1, 3), [("id", 0, 2, 1 / 4), ("lap", 2, 2, 3 / 4)]),
    ("3d grad_L3 <= grad_L2^(5/6) lam4_L2^(1/6)",
     ("grad", 1, 3), [("grad", 1, 2, 5 / 6), ("lam", 4, 2, 1 / 6)]),
    ("3d lam3_L3 <= grad_L2^(1/6) lam4_L2^(5/6)",
     ("lam", 3, 3), [("grad", 1, 2, 1 / 6), ("lam", 4, 2, 5 / 6)]),
    ("3d lam4_L3 <= lap_L2^(1/6) lam5_L2^(5/6)",
     ("lam", 4, 3), [("lap", 2, 2, 1 / 6), ("lam", 5, 2, 5 / 6)]),
    ("3d lam2_L4 <= lap_L2^(3/4) lam5_L2^(1/4)",
     ("lam", 2, 4), [("lap", 2, 2, 3 / 4), ("lam", 5, 2, 1 / 4)]),
    ("3d lam3_L4 <= lap_L2^(5/6) lam5_L2^(1/6)",
     ("lam", 3, 4), [("lap", 2, 2, 5 / 6), ("lam", 5, 2, 1 / 6)]),
    ("3d lam4_L2 <= lap_L2^(1/3) lam5_L2^(2/3)",
     ("lam", 4, 2), [("lap", 2, 2, 1 / 3), ("lam", 5, 2, 2 / 3)]),
    ("3d lam3_L6 <= lap_L2^(1/3) lam5_L2^(2/3)",
     ("lam", 3, 6), [("lap", 2, 2, 1 / 3), ("lam", 5, 2, 2 / 3)]),
    ("3d lam2_L6 <= lap_L2^(2/3) lam5_L2^(1/3)",
     ("lam", 2, 6), [("lap", 2, 2, 2 / 3), ("lam", 5, 2, 1 / 3)]),
]


def audit_gn_inequalities(fields: list[SpectralField], dim: int) -> list[AuditRow]:
    """Max ratio lhs / product(rhs) over a corpus for each listed inequality.

    Constants are unknown; the useful signal is finiteness and stability of
    the max ratio across resolutions.  Zero fields are skipped.
    """
    table = GN_INEQUALITIES_2D if dim == 2 else GN_INEQUALITIES_3D
    rows = []
    for ineq_id, lhs_spec, rhs_specs in table:
        best = 0.0
        n = 0
        for f in fields:
            if not np.any(f.coeffs):
                continue
            lhs = _op_norm(f, *lhs_spec)
            rhs = 1.0
            degenerate = False
            for kind, order, p, power in rhs_specs:
                v = _op_norm(f, kind, order, p)
                if v == 0.0:
                    degenerate = True
                    break
                rhs *= v**power
            if degenerate:
                continue
            best = max(best, lhs / rhs)
            n += 1
        rows.append(AuditRow(ineq_id, best, n))
    return rows


def audit_commutator_product(pairs: list[tuple[SpectralField, SpectralField]],
                             alpha: float, p: float, p1: float, q1: float,
                             p2: float, q2: float) -> list[AuditRow]:
    """Empirical constants for the fractional-derivative commutator and
    product estimates at exponents 1/p = 1/p1 + 1/q1 = 1/p2 + 1/q2.

    Pairs must be band-limited so the pointwise product is alias-free.
    """
    if abs(1 / p - (1 / p1 + 1 / q1)) > 1e-12 or abs(1 / p - (1 / p2 + 1 / q2)) > 1e-12:
        raise ValueError("exponents must satisfy 1/p = 1/p1 + 1/q1 = 1/p2 + 1/q2")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    comm_best, comm_n = 0.0, 0
    prod_best, prod_n = 0.0, 0
    for f, g in pairs:
        grid = f.grid
        if not (np.any(f.coeffs) and np.any(g.coeffs)):
            continue
        f_phys = from_spectral(f)
        g_phys = from_spectral(g)
        fg = to_spectral(grid, f_phys * g_phys)
        lam_fg = from_spectral(fractional_laplacian(fg, alpha))
        lam_g = from_spectral(fractional_laplacian(g, alpha))
        lam_f = from_spectral(fractional_laplacian(f, alpha))

        comm_lhs = quad_lp(lam_fg - f_phys * lam_g, p, grid.cell_volume)
        comm_rhs = (
            _op_norm(f, "grad", 1, p1) * lp_norm(fractional_laplacian(g, alpha - 1), q1)
            + quad_lp(lam_f, p2, grid.cell_volume) * quad_lp(g_phys, q2, grid.cell_volume)
        )
        if comm_rhs > 0:
            comm_best = max(comm_best, comm_lhs / comm_rhs)
            comm_n += 1

        prod_lhs = quad_lp(lam_fg, p, grid.cell_volume)
        prod_rhs = (
            quad_lp(f_phys, p1, grid.cell_volume) * quad_lp(lam_g, q1, grid.cell_volume)
            + quad_lp(lam_f, p2, grid.cell_volume) * quad_lp(g_phys, q2, grid.cell_volume)
        )
        if prod_rhs > 0:
            prod_best = max(prod_best, prod_lhs / prod_rhs)
            prod_n += 1
    a = f"lam{alpha:g}"
    return [
        AuditRow(f"commutator {a}(fg)-f.{a}g in L{p:g}", comm_best, comm_n),
        AuditRow(f"product {a}(fg) in L{p:g}", prod_best, prod_n),
    ]
