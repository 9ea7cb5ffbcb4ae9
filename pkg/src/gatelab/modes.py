"""Normal-mode analysis of planar crystals, out-of-plane (axial) branch.

Small oscillations about the equilibrium split into in-plane and axial
blocks.  In units of M omega_r^2 the axial block is

    A^zz = beta^2 I - L,      L = diag(sum_n 1/d_mn^3) - [1/d_mn^3],

where L is the (positive semi-definite) Coulomb Laplacian of the crystal and
beta = omega_z / omega_r.  Mode frequencies follow from the eigenvalues
lambda_k of A^zz as omega_k = omega_r sqrt(lambda_k); the uniform vector is
always an eigenvector with lambda = beta^2, i.e. the centre-of-mass mode sits
exactly at omega_z.  The crystal is axially stable when every lambda_k > 0,
which fails below a critical anisotropy beta_c set by the largest eigenvalue
of L.
"""

from dataclasses import dataclass

import numpy as np

from .crystal import Crystal, TrapConfig, curvature_blocks, read_crystal
from .errors import BracketFailure, EigenFailure, UnstableSpectrum
from ._textio import atomic_write_text, fmt, header_line, parse_header

TWO_PI = 2.0 * np.pi

# Stability-boundary fit used only for the initial bisection bracket.
_BRACKET_COEFF = 1.073
_BRACKET_EXPONENT = 0.55


@dataclass(frozen=True)
class CouplingMatrices:
    """Curvature blocks of the trap-plus-Coulomb potential, units M omega_r^2.

    ``xx``, ``xy``, ``yy`` are the in-plane blocks; ``zz`` the axial block at
    anisotropy ``beta``.
    """

    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray
    zz: np.ndarray
    beta: float


def coulomb_laplacian(positions):
    """Graph-Laplacian-like matrix L with weights 1/d^3 (PSD, one zero mode)."""
    _, _, _, s3 = curvature_blocks(positions)
    return np.diag(s3.sum(axis=1)) - s3


def build_matrices(crystal, beta=None):
    """Assemble all curvature blocks for ``crystal``.

    ``beta`` defaults to the crystal's trap anisotropy; passing a value
    allows scanning the axial block without re-dressing the config.
    """
    if beta is None:
        beta = crystal.config.beta
    xx, xy, yy, s3 = curvature_blocks(crystal.positions)
    n = crystal.ion_count
    zz = beta**2 * np.eye(n) - np.diag(s3.sum(axis=1)) + s3
    return CouplingMatrices(xx=xx, xy=xy, yy=yy, zz=zz, beta=float(beta))


@dataclass(frozen=True)
class AxialSpectrum:
    """Axial normal modes of one crystal.

    ``frequencies`` are angular (rad/s) in descending order, so index 0 is
    the centre-of-mass mode at omega_z.  ``modes[k]`` is the orthonormal
    displacement pattern of mode k with the sign convention that the
    largest-magnitude component is positive.
    """

    frequencies: np.ndarray
    modes: np.ndarray
    beta: float
    config: TrapConfig

    @property
    def mode_count(self):
        return self.frequencies.size

    def band_edges(self):
        """(lowest, highest) mode frequency in rad/s."""
        return float(self.frequencies[-1]), float(self.frequencies[0])


def _canonical_mode_signs(vectors):
    # vectors: columns are modes; flip each so its largest-|.| entry is > 0
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def axial_spectrum(crystal, beta=None):
    """Diagonalise the axial block; raises UnstableSpectrum below beta_c."""
    if beta is None:
        beta = crystal.config.beta
    mats = build_matrices(crystal, beta=beta)
    try:
        evals, evecs = np.linalg.eigh(mats.zz)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure("axial eigensolve failed") from exc
    if evals[0] <= 0.0:
        raise UnstableSpectrum(
            "axial branch unstable at beta=%.6g (min eigenvalue %.3e); "
            "critical anisotropy is beta_c=%.6g"
            % (beta, evals[0], critical_beta(crystal)))
    order = np.argsort(evals)[::-1]
    evecs = _canonical_mode_signs(evecs[:, order])
    freqs = crystal.config.omega_r * np.sqrt(evals[order])
    return AxialSpectrum(frequencies=freqs, modes=evecs.T.copy(),
                         beta=float(beta), config=crystal.config)


def _min_axial_eigenvalue(positions, beta, laplacian=None):
    if laplacian is None:
        laplacian = coulomb_laplacian(positions)
    n = positions.shape[0]
    zz = beta**2 * np.eye(n) - laplacian
    return float(np.linalg.eigvalsh(zz)[0])


def critical_beta(crystal, tol=1e-6, max_expand=60):
    """Smallest anisotropy with a stable axial branch, by bisection.

    The minimum axial eigenvalue is monotone increasing in beta, so the
    boundary is bracketed and bisected to interval width ``tol``.  A single
    ion is stable for any anisotropy (returns 0).
    """
    n = crystal.ion_count
    if n == 1:
        return 0.0
    lap = coulomb_laplacian(crystal.positions)
    pos = crystal.positions

    lo = 0.1
    if n > 2:
        hi = np.sqrt(1.2 * _BRACKET_COEFF * (n - 2) ** _BRACKET_EXPONENT)
    else:
        hi = 1.5
    for _ in range(max_expand):
        if _min_axial_eigenvalue(pos, hi, lap) > 0.0:
            break
        hi *= 2.0
    else:
        raise BracketFailure("no stable upper bracket for beta_c")
    for _ in range(max_expand):
        if _min_axial_eigenvalue(pos, lo, lap) < 0.0:
            break
        lo *= 0.5
        if lo < 1e-12:
            return 0.0
    else:
        raise BracketFailure("no unstable lower bracket for beta_c")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _min_axial_eigenvalue(pos, mid, lap) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def com_gap(crystal, beta=None):
    """Frequency gap (rad/s) between the centre-of-mass mode and its nearest
    axial neighbour.  Shrinks monotonically as beta grows."""
    spec = axial_spectrum(crystal, beta=beta)
    if spec.mode_count < 2:
        raise ValueError("gap needs at least two ions")
    return float(spec.frequencies[0] - spec.frequencies[1])


# ---------------------------------------------------------------------------
# serialization

def spectrum_text(spectrum):
    cfg = spectrum.config
    n = spectrum.mode_count
    lines = ["# gatelab axial spectrum"]
    lines.append(header_line("ion_count", cfg.ion_count))
    lines.append(header_line("omega_r_rad_s", fmt(cfg.omega_r)))
    lines.append(header_line("omega_z_rad_s", fmt(cfg.omega_z)))
    lines.append(header_line("ion_mass_kg", fmt(cfg.ion_mass)))
    lines.append(header_line("charge_c", fmt(cfg.charge)))
    lines.append(header_line("beta", fmt(spectrum.beta)))
    cols = "mode\tfrequency_hz\t" + "\t".join(
        "b_%d" % i for i in range(n))
    lines.append(header_line("columns", cols))
    for k in range(n):
        row = [str(k), fmt(spectrum.frequencies[k] / TWO_PI, 15)]
        row.extend(fmt(v, 15) for v in spectrum.modes[k])
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def write_spectrum(spectrum, path):
    """Write mode table: one row per mode, frequencies in plain Hz."""
    atomic_write_text(path, spectrum_text(spectrum))


def read_spectrum(path):
    """Parse a file written by :func:`write_spectrum`."""
    with open(path) as fh:
        meta, rows = parse_header(fh)
    n = int(meta["ion_count"])
    cfg = TrapConfig(ion_count=n,
                     omega_r=float(meta["omega_r_rad_s"]),
                     omega_z=float(meta["omega_z_rad_s"]),
                     ion_mass=float(meta["ion_mass_kg"]),
                     charge=float(meta["charge_c"]))
    freqs = np.zeros(n)
    modes = np.zeros((n, n))
    for row in rows:
        fields = row.split("\t")
        k = int(fields[0])
        freqs[k] = float(fields[1]) * TWO_PI
        modes[k] = [float(v) for v in fields[2:]]
    return AxialSpectrum(frequencies=freqs, modes=modes,
                         beta=float(meta["beta"]), config=cfg)
