"""Axial mode tests against the two-ion analytic spectrum and invariants."""

import math

import numpy as np
import pytest

from gatelab import crystal as cr
from gatelab import modes as md
from gatelab.errors import UnstableSpectrum


def solve(n, beta=50.0, omega_r_hz=0.2e6):
    cfg = cr.TrapConfig(n, omega_r=2 * math.pi * omega_r_hz,
                        omega_z=2 * math.pi * omega_r_hz * beta)
    return cr.solve_equilibrium(cfg)


class TestBuildMatrices:
    def test_axial_row_sums(self):
        # Uniform axial translation feels only the trap: rows sum to beta^2.
        c = solve(7, beta=10.0)
        mats = md.build_matrices(c)
        assert np.allclose(mats.zz.sum(axis=1), 100.0, atol=1e-10)

    def test_two_ion_entries(self):
        # d^3 = 2, so off-diagonal 1/d^3 = 0.5, diagonal beta^2 - 0.5.
        c = solve(2, beta=3.0)
        zz = md.build_matrices(c).zz
        assert zz[0, 1] == pytest.approx(0.5, rel=1e-10)
        assert zz[0, 0] == pytest.approx(9.0 - 0.5, rel=1e-10)

    def test_beta_override(self):
        c = solve(3, beta=5.0)
        a = md.build_matrices(c, beta=7.0)
        assert a.beta == 7.0
        assert np.allclose(a.zz.sum(axis=1), 49.0, atol=1e-10)

    def test_laplacian_psd_with_zero_mode(self):
        c = solve(9)
        lap = md.coulomb_laplacian(c.positions)
        evals = np.linalg.eigvalsh(lap)
        assert evals[0] == pytest.approx(0.0, abs=1e-12)
        assert np.all(evals[1:] > 0.0)
        assert np.allclose(lap @ np.ones(9), 0.0, atol=1e-12)


class TestSpectrum:
    def test_two_ion_analytic(self):
        beta = 4.0
        c = solve(2, beta=beta)
        spec = md.axial_spectrum(c)
        omega_r = c.config.omega_r
        # eigenvalues beta^2 (uniform) and beta^2 - 1 (stretch)
        assert spec.frequencies[0] == pytest.approx(omega_r * beta, rel=1e-12)
        assert spec.frequencies[1] == pytest.approx(
            omega_r * math.sqrt(beta**2 - 1.0), rel=1e-12)
        assert np.allclose(np.abs(spec.modes[0]), 1 / math.sqrt(2), rtol=1e-12)

    def test_com_mode_exact(self):
        c = solve(12, beta=20.0)
        spec = md.axial_spectrum(c)
        n = c.ion_count
        assert spec.frequencies[0] == pytest.approx(c.config.omega_z, rel=1e-12)
        assert np.allclose(spec.modes[0], 1 / math.sqrt(n), rtol=1e-9)

    def test_orthonormal_modes(self):
        spec = md.axial_spectrum(solve(10))
        gram = spec.modes @ spec.modes.T
        assert np.allclose(gram, np.eye(10), atol=1e-12)

    def test_descending_order_and_signs(self):
        spec = md.axial_spectrum(solve(8))
        assert np.all(np.diff(spec.frequencies) < 0.0)
        for vec in spec.modes:
            assert vec[np.argmax(np.abs(vec))] > 0.0

    def test_unstable_raises(self):
        c = solve(7, beta=50.0)
        bc = md.critical_beta(c)
        with pytest.raises(UnstableSpectrum):
            md.axial_spectrum(c, beta=0.9 * bc)

    def test_matches_laplacian_eigenvalues(self):
        # omega_k^2 / omega_r^2 = beta^2 - lambda_k(L), checked independently
        c = solve(6, beta=9.0)
        spec = md.axial_spectrum(c)
        lam = np.sort(np.linalg.eigvalsh(md.coulomb_laplacian(c.positions)))
        expect = c.config.omega_r * np.sqrt(81.0 - lam)
        assert np.allclose(np.sort(spec.frequencies), np.sort(expect), rtol=1e-12)


class TestCriticalBeta:
    def test_single_ion(self):
        assert md.critical_beta(cr.solve_equilibrium(
            cr.TrapConfig(1, omega_r=1.0, omega_z=2.0))) == 0.0

    def test_two_ions(self):
        # stretch eigenvalue beta^2 - 1 crosses zero at beta = 1
        c = solve(2)
        assert md.critical_beta(c) == pytest.approx(1.0, abs=1e-6)

    def test_matches_laplacian_top_eigenvalue(self):
        for n in (5, 7, 13):
            c = solve(n)
            lam_max = np.linalg.eigvalsh(md.coulomb_laplacian(c.positions))[-1]
            assert md.critical_beta(c) == pytest.approx(
                math.sqrt(lam_max), abs=1e-6)

    def test_boundary_behaviour(self):
        c = solve(9)
        bc = md.critical_beta(c)
        md.axial_spectrum(c, beta=bc + 1e-3)  # just stable
        with pytest.raises(UnstableSpectrum):
            md.axial_spectrum(c, beta=bc - 1e-3)

    def test_grows_with_n(self):
        values = [md.critical_beta(solve(n)) for n in (3, 7, 19)]
        assert values[0] < values[1] < values[2]


class TestComGap:
    def test_two_ion_analytic(self):
        beta = 6.0
        c = solve(2, beta=beta)
        gap = md.com_gap(c)
        assert gap == pytest.approx(
            c.config.omega_r * (beta - math.sqrt(beta**2 - 1.0)), rel=1e-12)

    def test_monotone_decreasing_in_beta(self):
        c = solve(7)
        betas = np.linspace(4.0, 60.0, 12)
        gaps = [md.com_gap(c, beta=b) for b in betas]
        assert np.all(np.diff(gaps) < 0.0)

    def test_single_mode_rejected(self):
        c = cr.solve_equilibrium(cr.TrapConfig(1, omega_r=1.0, omega_z=2.0))
        with pytest.raises(ValueError):
            md.com_gap(c)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        spec = md.axial_spectrum(solve(6))
        path = tmp_path / "spectrum.tsv"
        md.write_spectrum(spec, path)
        back = md.read_spectrum(path)
        assert np.allclose(back.frequencies, spec.frequencies, rtol=1e-14)
        assert np.allclose(back.modes, spec.modes, rtol=0, atol=1e-14)
        assert back.beta == spec.beta
        assert back.config.ion_count == 6

    def test_frequencies_stored_in_hz(self, tmp_path):
        spec = md.axial_spectrum(solve(2, beta=5.0, omega_r_hz=1e6))
        path = tmp_path / "spectrum.tsv"
        md.write_spectrum(spec, path)
        first_data = [ln for ln in path.read_text().splitlines()
                      if not ln.startswith("#")][0]
        f_hz = float(first_data.split("\t")[1])
        assert f_hz == pytest.approx(5e6, rel=1e-12)
