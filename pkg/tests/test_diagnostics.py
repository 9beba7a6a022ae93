import numpy as np
import pytest

from nlcsim.diagnostics import (
    Monitor,
    audit_commutator_product,
    audit_gn_inequalities,
    criterion_quantities,
    dissipation,
    dyadic_rescale_state,
    energy,
    identity_checks,
    momentum_residual,
    pressure_recover,
)
from nlcsim.initial_data import (
    constant_director,
    equatorial_director,
    random_divfree,
    random_scalar,
    sinusoidal_profile,
    taylor_green,
)
from nlcsim.littlewood_paley import build_cutoff_bank
from nlcsim.solver import SolverConfig, State, run
from nlcsim.spectral import (
    from_spectral,
    to_spectral,
    vector_field,
    zero_vector,
)


def make_state(grid, u=None, d=None, t=0.0):
    return State(
        t=t,
        u=u if u is not None else zero_vector(grid, grid.dim),
        d=d if d is not None else constant_director(grid),
    )


def cosine_velocity(grid, modes_amps):
    """(0, sum_j a_j cos(2^j x1)): divergence-free, block maxima at x = 0."""
    x = grid.coords(0)
    profile = sum(a * np.cos(m * x) for m, a in modes_amps) + np.zeros(grid.shape)
    comps = [np.zeros(grid.shape)] * (grid.dim - 1) + [profile]
    return vector_field(grid, [to_spectral(grid, c).coeffs for c in comps])


class TestEnergyDissipation:
    def test_zero_state(self, grid2_32):
        st = make_state(grid2_32)
        assert energy(st) == 0.0
        assert dissipation(st) == 0.0

    def test_single_mode_velocity(self, grid2_32):
        # ||a sin(2x)||_L2^2 = a^2 vol / 2; dissipation multiplies by |k|^2
        g = grid2_32
        a = 0.8
        x = g.coords(0)
        u = vector_field(
            g,
            [
                np.zeros(g.shape, dtype=complex),
                to_spectral(g, a * np.sin(2 * x) + np.zeros(g.shape)).coeffs,
            ],
        )
        st = make_state(g, u=u)
        e = a**2 * g.volume / 2
        assert energy(st) == pytest.approx(e, rel=1e-12)
        assert dissipation(st) == pytest.approx(4 * e, rel=1e-12)

    def test_equatorial_dissipation_is_angle_laplacian(self, grid2_32):
        g = grid2_32
        eps = 0.3
        d = equatorial_director(g, sinusoidal_profile(g, eps, 1))
        st = make_state(g, d=d)
        # Lap(theta) = -eps sin(x): squared L2 norm = eps^2 * 2 pi^2
        assert dissipation(st) == pytest.approx(eps**2 * 2 * np.pi**2, rel=1e-10)
        assert energy(st) == pytest.approx(eps**2 * 2 * np.pi**2, rel=1e-10)


class TestCriterionQuantities:
    def test_zero_state(self, grid2_32, bank2_32):
        assert criterion_quantities(make_state(grid2_32), bank2_32) == (0.0, 0.0)

    def test_single_shell_mode(self, grid2_32, bank2_32):
        a = 0.7
        u = cosine_velocity(grid2_32, [(4, a)])
        st = make_state(grid2_32, u=u)
        bu, _ = criterion_quantities(st, bank2_32)
        assert bu == pytest.approx(a * 0.25, rel=1e-12)

    def test_pair_invariant_under_dyadic_rescale(self, grid2_64):
        # corpus engineered so every dominant block peaks on the even
        # sublattice (cosine modes peaking at x = 0); the doubled image then
        # reports identical discrete sup norms
        g = grid2_64
        bank = build_cutoff_bank(g)
        u = cosine_velocity(g, [(1, 0.5), (2, 0.3), (4, 0.2)])
        theta = to_spectral(
            g,
            0.01 * np.sin(g.coords(0))
            + 0.005 * np.sin(2 * g.coords(0))
            + np.zeros(g.shape),
        )
        st = make_state(g, u=u, d=equatorial_director(g, theta))
        before = criterion_quantities(st, bank)
        after = criterion_quantities(dyadic_rescale_state(st), bank)
        assert after[0] == pytest.approx(before[0], rel=1e-10)
        assert after[1] == pytest.approx(before[1], rel=1e-10)


class TestIdentityChecks:
    def test_constant_director_all_zero(self, grid2_32):
        rep = identity_checks(make_state(grid2_32))
        assert rep.stress_identity_max == 0.0
        assert rep.director_identity_max == 0.0
        assert rep.div_u_max == 0.0

    def test_smooth_unit_director(self, grid2_32):
        g = grid2_32
        d = equatorial_director(g, sinusoidal_profile(g, 0.5, 1))
        rep = identity_checks(make_state(g, d=d))
        assert rep.stress_identity_max < 1e-10
        assert rep.director_identity_max < 1e-6

    def test_unit_identity_scale_invariant(self, grid2_32):
        # Lap(d).d + |grad d|^2 is quadratic: rescaling d by a constant
        # leaves the residual at zero (|d|^2 is still constant)
        g = grid2_32
        d = equatorial_director(g, sinusoidal_profile(g, 0.5, 1))
        doubled = vector_field(g, [2.0 * c.coeffs for c in d.components])
        rep = identity_checks(make_state(g, d=doubled))
        assert rep.director_identity_max < 1e-6

    def test_nonconstant_modulus_negative_control(self, grid2_32):
        # a genuinely non-spherical director leaves a visible residual
        g = grid2_32
        x = g.coords(0)
        factor = 1.0 + 0.3 * np.cos(x) + np.zeros(g.shape)
        d = equatorial_director(g, sinusoidal_profile(g, 0.5, 1))
        stretched = vector_field(
            g,
            [to_spectral(g, factor * from_spectral(c)).coeffs for c in d.components],
        )
        rep = identity_checks(make_state(g, d=stretched))
        assert rep.director_identity_max > 0.1


class TestPressureRecovery:
    def test_zero_state(self, grid2_32):
        p = pressure_recover(make_state(grid2_32))
        assert np.max(np.abs(p.coeffs)) == 0.0

    def test_taylor_green_pressure(self, grid2_32):
        # for u = a(sin x cos y, -cos x sin y): (u.grad)u = (a^2/2)(sin 2x, sin 2y),
        # so -Lap P = a^2 (cos 2x + cos 2y) and P = (a^2/4)(cos 2x + cos 2y)
        g = grid2_32
        a = 1.1
        st = make_state(g, u=taylor_green(g, a))
        p = from_spectral(pressure_recover(st))
        x, y = g.coords(0), g.coords(1)
        expected = a**2 / 4 * (np.cos(2 * x) + np.cos(2 * y))
        np.testing.assert_allclose(p, expected, atol=1e-12)

    def test_mirrored_taylor_green_pressure(self, grid2_32):
        # the mirrored datum u = a(cos x sin y, -sin x cos y) flips the sign
        g = grid2_32
        a = 1.0
        x, y = g.coords(0), g.coords(1)
        u = vector_field(
            g,
            [
                to_spectral(g, a * np.cos(x) * np.sin(y)).coeffs,
                to_spectral(g, -a * np.sin(x) * np.cos(y)).coeffs,
            ],
        )
        p = from_spectral(pressure_recover(make_state(g, u=u)))
        expected = -(a**2) / 4 * (np.cos(2 * x) + np.cos(2 * y))
        np.testing.assert_allclose(p, expected, atol=1e-12)

    def test_momentum_balance_closes(self, grid2_32):
        g = grid2_32
        st = make_state(
            g,
            u=random_divfree(g, -3.0, 21, 0.5),
            d=equatorial_director(g, sinusoidal_profile(g, 0.4, 1)),
        )
        p = pressure_recover(st)
        assert momentum_residual(st, p) < 1e-6

    def test_stress_only_balance(self, grid2_32):
        g = grid2_32
        st = make_state(g, d=equatorial_director(g, sinusoidal_profile(g, 0.7, 1)))
        p = pressure_recover(st)
        assert momentum_residual(st, p) < 1e-8


class TestMonitorAccumulate:
    def test_zero_stream(self, grid2_32):
        g = grid2_32
        mon = Monitor(g, 0.1)
        rec = mon.accumulate(None, make_state(g), 0.0)
        for _ in range(3):
            rec = mon.accumulate(rec, make_state(g, t=rec.t + 0.1), 0.1)
        assert rec.acc_H2 == rec.acc_bkm == rec.acc_hw == rec.acc_llw == 0.0
        assert rec.criterion_ok

    def test_taylor_green_vorticity_accumulator(self, grid2_32):
        # integral of |w|_inf = |w0|_inf (1 - exp(-2t)) / 2 for the decaying
        # vortex; trapezoid at dt = 1e-3 matches to 1e-4 relative
        g = grid2_32
        a = 1.0
        st = make_state(g, u=taylor_green(g, a))
        mon = Monitor(g, 10.0)
        res = run(st, SolverConfig(dt=1e-3, t_end=0.1), monitor=mon)
        acc = res.records[-1].acc_bkm
        expected = 2 * a * (1 - np.exp(-2 * 0.1)) / 2
        assert acc == pytest.approx(expected, rel=1e-4)

    def test_heat_flow_l4_accumulator(self, grid2_32):
        # theta = eps e^-t sin x: |grad d|_L4^4 = eps^4 e^-4t * 3 pi^2 / 2
        g = grid2_32
        eps = 0.5
        st = make_state(g, d=equatorial_director(g, sinusoidal_profile(g, eps, 1)))
        mon = Monitor(g, 10.0)
        res = run(st, SolverConfig(dt=1e-3, t_end=0.1), monitor=mon)
        acc = res.records[-1].acc_llw
        expected = 1.5 * np.pi**2 * eps**4 * (1 - np.exp(-4 * 0.1)) / 4
        assert acc == pytest.approx(expected, rel=1e-4)

    def test_segmented_run_matches_unbroken(self, grid2_32):
        g = grid2_32
        mon = Monitor(g, 0.1)

        def init():
            # band-capped u keeps the evolved state inside the strict state
            # invariants that the continuation re-validates
            return make_state(
                g,
                u=random_divfree(g, -4.0, 5, 0.2, band=5),
                d=equatorial_director(g, sinusoidal_profile(g, 0.1, 1)),
            )

        full = run(init(), SolverConfig(dt=1e-3, t_end=0.02), monitor=mon)
        half = run(init(), SolverConfig(dt=1e-3, t_end=0.01), monitor=mon)
        seed = mon.seed_record(
            half.final_state,
            (
                half.records[-1].acc_H2,
                half.records[-1].acc_bkm,
                half.records[-1].acc_hw,
                half.records[-1].acc_llw,
            ),
            half.records[-1].criterion_ok,
        )
        cont = run(
            half.final_state,
            SolverConfig(dt=1e-3, t_end=0.01),
            monitor=mon,
            start_record=seed,
        )
        a, b = full.records[-1], cont.records[-1]
        for name in ("acc_H2", "acc_bkm", "acc_hw", "acc_llw"):
            assert getattr(b, name) == pytest.approx(getattr(a, name), rel=1e-12, abs=1e-300)

    def test_criterion_flag_is_running_conjunction(self, grid2_32):
        g = grid2_32
        mon = Monitor(g, 0.05)
        # critical norm of grad d starts just above the threshold and decays
        # below it; the flag must stay false
        st = make_state(g, d=equatorial_director(g, sinusoidal_profile(g, 0.0998, 1)))
        res = run(st, SolverConfig(dt=1e-3, t_end=0.8), monitor=mon, cadence=50)
        oks = [r.criterion_ok for r in res.records]
        assert oks[0] is False
        assert not any(oks)
        # instantaneous value does fall below the threshold eventually
        assert res.records[-1].besov_grad_d < 0.05

    def test_accumulators_nondecreasing(self, grid2_32):
        g = grid2_32
        st = make_state(
            g,
            u=random_divfree(g, -3.0, 5, 0.3),
            d=equatorial_director(g, sinusoidal_profile(g, 0.2, 1)),
        )
        res = run(st, SolverConfig(dt=1e-3, t_end=0.02), monitor=Monitor(g, 0.1))
        for name in ("acc_H2", "acc_bkm", "acc_hw", "acc_llw"):
            vals = [getattr(r, name) for r in res.records]
            assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestGnAudit:
    def test_zero_fields_skipped(self, grid2_32):
        from nlcsim.spectral import zero_field

        rows = audit_gn_inequalities([zero_field(grid2_32)], 2)
        assert all(r.n_samples == 0 and r.max_ratio == 0.0 for r in rows)

    def test_single_mode_ratio_amplitude_invariant(self, grid2_32):
        g = grid2_32
        x = g.coords(0)
        small = to_spectral(g, np.cos(4 * x) + np.zeros(g.shape))
        large = to_spectral(g, 5.0 * np.cos(4 * x) + np.zeros(g.shape))
        rows_small = audit_gn_inequalities([small], 2)
        rows_large = audit_gn_inequalities([large], 2)
        for a, b in zip(rows_small, rows_large):
            assert b.max_ratio == pytest.approx(a.max_ratio, rel=1e-10)

    def test_ratios_finite_and_resolution_stable(self):
        from nlcsim.spectral import Grid

        tables = {}
        for n in (32, 64):
            g = Grid(2, n)
            fields = [random_scalar(g, 8, -2.0, 600 + i) for i in range(50)]
            tables[n] = audit_gn_inequalities(fields, 2)
        for lo, hi in zip(tables[32], tables[64]):
            assert np.isfinite(lo.max_ratio) and lo.max_ratio > 0
            assert hi.max_ratio == pytest.approx(lo.max_ratio, rel=0.25)

    def test_3d_table(self, grid3_16):
        fields = [random_scalar(grid3_16, 4, -2.0, 700 + i) for i in range(10)]
        rows = audit_gn_inequalities(fields, 3)
        assert len(rows) == 9
        assert all(np.isfinite(r.max_ratio) and r.max_ratio > 0 for r in rows)


class TestCommutatorProductAudit:
    def test_invalid_exponents_rejected(self, grid2_32):
        with pytest.raises(ValueError):
            audit_commutator_product([], 2.0, 2.0, 3.0, 4.0, 4.0, 4.0)

    def test_constant_second_factor(self, grid2_32):
        # g constant: the commutator collapses to g * Lam^a f
        g = grid2_32
        f = random_scalar(g, 6, -2.0, 800)
        const = to_spectral(g, np.full(g.shape, 2.0))
        rows = audit_commutator_product(
            [(f, const)], 2.0, 2.0, 4.0, 4.0, 4.0, 4.0
        )
        from nlcsim.littlewood_paley import fractional_laplacian
        from nlcsim.spectral import lp_norm

        comm = rows[0]
        expected = 2.0 * lp_norm(fractional_laplacian(f, 2.0), 2.0)
        # ratio = lhs / rhs; reconstruct lhs from the reported ratio
        rhs = (
            lp_norm(fractional_laplacian(f, 2.0), 4.0)
            * lp_norm(const, 4.0)
        )
        assert comm.max_ratio * rhs == pytest.approx(expected, rel=1e-10)

    def test_single_mode_closed_form(self, grid2_32):
        # f = g = cos(4x): fg = 1/2 + cos(8x)/2, Lam2(fg) = 32 cos(8x),
        # commutator = 24 cos(8x) - 8
        g = grid2_32
        x = g.coords(0)
        f = to_spectral(g, np.cos(4 * x) + np.zeros(g.shape))
        rows = audit_commutator_product([(f, f)], 2.0, 2.0, 4.0, 4.0, 4.0, 4.0)
        comm_lhs_expected = np.sqrt(
            np.sum((24 * np.cos(8 * x) - 8 + np.zeros(g.shape)) ** 2) * g.cell_volume
        )
        from nlcsim.littlewood_paley import fractional_laplacian
        from nlcsim.spectral import lp_norm

        grad_f = 4.0  # |grad f| has L4 norm of 4|sin(4x)| etc.
        # reconstruct lhs via reported ratio and independently computed rhs
        rhs = (
            _grad_l4(g, f) * lp_norm(fractional_laplacian(f, 1.0), 4.0)
            + lp_norm(fractional_laplacian(f, 2.0), 4.0) * lp_norm(f, 4.0)
        )
        assert rows[0].max_ratio * rhs == pytest.approx(comm_lhs_expected, rel=1e-10)

    def test_ratios_resolution_stable(self):
        from nlcsim.spectral import Grid

        vals = {}
        for n in (32, 64):
            g = Grid(2, n)
            fields = [random_scalar(g, 7, -2.0, 900 + i) for i in range(20)]
            pairs = list(zip(fields[:10], fields[10:]))
            rows = audit_commutator_product(pairs, 2.0, 2.0, 4.0, 4.0, 4.0, 4.0)
            vals[n] = [r.max_ratio for r in rows]
        for a, b in zip(vals[32], vals[64]):
            assert b == pytest.approx(a, rel=0.25)


def _grad_l4(g, f):
    from nlcsim.spectral import derivative, quad_lp

    mag = np.sqrt(sum(from_spectral(derivative(f, ax)) ** 2 for ax in range(g.dim)))
    return quad_lp(mag, 4.0, g.cell_volume)
