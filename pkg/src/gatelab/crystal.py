"""Equilibrium configurations of planar Coulomb crystals in a harmonic trap.

Ions of mass M and charge q sit in a trap with radial frequency omega_r
(isotropic in x, y) and axial frequency omega_z.  Positions are handled in
dimensionless form u = r / ell with the length scale

    ell = (q^2 / (4 pi eps0 M omega_r^2))**(1/3),

which removes every physical constant from the in-plane equilibrium problem.
The dimensionless potential of the planar configuration is

    E(u) = 1/2 sum_m |u_m|^2 + sum_{n<m} 1 / |u_n - u_m|,

and equilibria solve grad E = 0.  The solver is a damped Newton iteration on
that gradient (the curvature blocks double as the mode-analysis matrices),
with multi-restart seeding from an ideal triangular lattice.
"""

from dataclasses import dataclass, replace
import math

import numpy as np
import scipy.constants as const
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import DegenerateSeed, InsufficientPoints, NonConvergence
from ._textio import atomic_write_text, fmt, header_line, parse_header

ELEMENTARY_CHARGE = const.e          # C
COULOMB_CONSTANT = 1.0 / (4.0 * math.pi * const.epsilon_0)  # N m^2 / C^2
HBAR = const.hbar                    # J s
MASS_BE9 = 1.4965e-26                # kg, 9Be+ (default ion)

# Centred hexagonal ("closed shell") ion numbers: 1 + 3 k (k + 1).
CLOSED_SHELL_SERIES = (7, 19, 37, 61, 91, 127, 169, 217)

# Empirical central-spacing law used only to scale the seed lattice.
_SEED_PREFACTOR = 1.995
_SEED_EXPONENT = 0.172


def closed_shell_count(shells):
    """Number of ions in a triangular crystal with ``shells`` full shells."""
    if shells < 0:
        raise ValueError("shells must be >= 0")
    return 1 + 3 * shells * (shells + 1)


@dataclass(frozen=True)
class TrapConfig:
    """Trap and ion parameters for one run.

    Frequencies are angular (rad/s).  ``temperature_nbar`` is the mean
    thermal occupation used for gate fidelities; a scalar applies to all
    modes, a sequence gives per-mode values.
    """

    ion_count: int
    omega_r: float
    omega_z: float
    ion_mass: float = MASS_BE9
    charge: float = ELEMENTARY_CHARGE
    temperature_nbar: object = 0.1

    def __post_init__(self):
        if int(self.ion_count) != self.ion_count or self.ion_count < 1:
            raise ValueError("ion_count must be a positive integer")
        object.__setattr__(self, "ion_count", int(self.ion_count))
        for name in ("omega_r", "omega_z", "ion_mass", "charge"):
            if not (getattr(self, name) > 0.0):
                raise ValueError("%s must be positive" % name)
        nbar = np.atleast_1d(np.asarray(self.temperature_nbar, dtype=float))
        if np.any(nbar < 0.0) or not np.all(np.isfinite(nbar)):
            raise ValueError("temperature_nbar must be finite and >= 0")

    @property
    def beta(self):
        """Trap anisotropy omega_z / omega_r."""
        return self.omega_z / self.omega_r

    def nbar_per_mode(self, n_modes):
        """Thermal occupation as an array of length ``n_modes``."""
        nbar = np.atleast_1d(np.asarray(self.temperature_nbar, dtype=float))
        if nbar.size == 1:
            return np.full(n_modes, float(nbar[0]))
        if nbar.size != n_modes:
            raise ValueError("temperature_nbar length does not match mode count")
        return nbar.astype(float)


def length_scale(config):
    """Coulomb length ell = (q^2 / (4 pi eps0 M omega_r^2))**(1/3) in metres."""
    return (COULOMB_CONSTANT * config.charge**2
            / (config.ion_mass * config.omega_r**2)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class Crystal:
    """A converged planar equilibrium configuration.

    ``positions`` are dimensionless (N, 2) coordinates, recentred and in the
    canonical orientation.  ``u_min`` is the minimum pair distance (inf for a
    single ion) and ``residual_gradient_norm`` the max-abs component of the
    dimensionless gradient at the solution.
    """

    positions: np.ndarray
    length_scale_ell: float
    residual_gradient_norm: float
    u_min: float
    energy: float
    config: TrapConfig

    @property
    def ion_count(self):
        return self.positions.shape[0]

    def spacing_metres(self):
        """Minimum pair distance in metres."""
        return self.u_min * self.length_scale_ell


def with_trap(crystal, config):
    """Re-dress the same dimensionless equilibrium with new trap parameters.

    The planar equilibrium equations do not involve omega_z, and omega_r only
    sets the length scale, so the dimensionless positions carry over exactly.
    """
    if config.ion_count != crystal.ion_count:
        raise ValueError("ion_count mismatch")
    return replace(crystal, config=config,
                   length_scale_ell=length_scale(config))


def _pair_vectors(u):
    """Pairwise coordinate differences and distances (diagonal -> inf)."""
    dx = u[:, 0][:, None] - u[:, 0][None, :]
    dy = u[:, 1][:, None] - u[:, 1][None, :]
    d2 = dx * dx + dy * dy
    np.fill_diagonal(d2, np.inf)
    return dx, dy, np.sqrt(d2)


def potential_energy(u):
    """Dimensionless potential of a planar configuration."""
    _, _, d = _pair_vectors(u)
    coulomb = np.sum(1.0 / d) / 2.0
    return 0.5 * float(np.sum(u * u)) + float(coulomb)


def potential_gradient(u):
    """Gradient of :func:`potential_energy`, shape (N, 2)."""
    dx, dy, d = _pair_vectors(u)
    inv3 = d ** -3.0
    gx = u[:, 0] - np.sum(dx * inv3, axis=1)
    gy = u[:, 1] - np.sum(dy * inv3, axis=1)
    return np.column_stack([gx, gy])


def curvature_blocks(u):
    """Second-derivative blocks of the dimensionless potential.

    Returns ``(xx, xy, yy, s3)`` where the first three are the in-plane
    curvature blocks (in units of M omega_r^2) and ``s3[m, n] = 1/d_mn^3``
    with zero diagonal, from which the axial block follows as
    ``beta^2 I - diag(s3.sum(1)) + s3``.
    """
    n = u.shape[0]
    dx, dy, d = _pair_vectors(u)
    inv3 = d ** -3.0
    inv5 = d ** -5.0
    txx = (2.0 * dx * dx - dy * dy) * inv5
    tyy = (2.0 * dy * dy - dx * dx) * inv5
    txy = 3.0 * dx * dy * inv5

    xx = -txx
    yy = -tyy
    xy = -txy
    idx = np.arange(n)
    xx[idx, idx] = 1.0 + txx.sum(axis=1)
    yy[idx, idx] = 1.0 + tyy.sum(axis=1)
    xy[idx, idx] = txy.sum(axis=1)
    s3 = inv3.copy()
    s3[idx, idx] = 0.0
    return xx, xy, yy, s3


def _planar_hessian(u):
    xx, xy, yy, _ = curvature_blocks(u)
    return np.block([[xx, xy], [xy, yy]])


def _newton_step(u, grad):
    """Least-squares Newton step for the force-balance system at ``u``.

    The in-plane rotation generator is a null direction of the curvature at
    every stationary point; the rcond cutoff keeps that (near-)null component
    out of the step instead of letting it blow up.
    """
    gflat = np.concatenate([grad[:, 0], grad[:, 1]])
    step, _, _, _ = np.linalg.lstsq(_planar_hessian(u), -gflat, rcond=1e-9)
    n = u.shape[0]
    return np.column_stack([step[:n], step[n:]])


def _track_root(u, tol, max_iter):
    """Levenberg-Marquardt iteration on the force-balance residual.

    With curvature eigenpairs (lam_i, q_i) the damped Newton step is
    -sum_i lam_i/(lam_i^2 + mu) (q_i . g) q_i: heavily damped at first (large
    mu, short residual-descent steps that track the stationary configuration
    nearest the seed) and released gradually into the undamped Newton
    endgame.  Returns (u, converged); a False flag means the residual flow
    reached a point where no damping level shrinks the residual (the seeded
    branch has no root there).
    """
    n = u.shape[0]
    mu = None
    for _ in range(max_iter):
        grad = potential_gradient(u)
        if float(np.abs(grad).max()) < tol:
            return u, True
        gnorm = float(np.linalg.norm(grad))
        evals, evecs = np.linalg.eigh(_planar_hessian(u))
        ev2 = evals * evals
        if mu is None:
            mu = float(ev2.max())
        mu_floor = 1e-14 * float(ev2.max())
        gflat = np.concatenate([grad[:, 0], grad[:, 1]])
        coeff = evecs.T @ gflat
        accepted = False
        for _attempt in range(60):
            step = -(evecs @ (coeff * evals / (ev2 + mu)))
            trial = u + np.column_stack([step[:n], step[n:]])
            if float(np.linalg.norm(potential_gradient(trial))) < gnorm:
                u = trial
                mu = max(0.3 * mu, mu_floor)
                accepted = True
                break
            mu *= 8.0
        if not accepted:
            return u, False
    return u, False


def _descend_energy(u, tol, max_iter):
    """Modified-Newton energy descent (positive-definite shift plus line
    search); returns (u, converged)."""
    n2 = u.size
    eye = np.eye(n2)
    lam = 1e-3
    energy = potential_energy(u)
    for _ in range(max_iter):
        grad = potential_gradient(u)
        if float(np.abs(grad).max()) < tol:
            return u, True
        gflat = np.concatenate([grad[:, 0], grad[:, 1]])
        hess = _planar_hessian(u)
        accepted = False
        for _attempt in range(80):
            try:
                factor = cho_factor(hess + lam * eye, lower=True)
            except (LinAlgError, np.linalg.LinAlgError):
                lam *= 10.0
                continue
            step = -cho_solve(factor, gflat)
            trial = u + np.column_stack([step[: n2 // 2], step[n2 // 2:]])
            trial_energy = potential_energy(trial)
            if trial_energy < energy:
                u = trial
                energy = trial_energy
                lam = max(lam / 3.0, 1e-14)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            return u, False
    return u, False


def _relax(u0, tol, max_iter):
    """Damped Newton iteration on the force-balance equations; returns
    (u, gmax, converged).

    Phase one tracks the residual flow toward the stationary configuration
    nearest the seed (the near-lattice branch for lattice seeds).  If that
    branch terminates before reaching a root, phase two falls back to
    energy descent from the tracked configuration, which lands in the
    adjacent minimum while preserving the formed structure.  A short
    undamped Newton polish takes the residual to rounding level either way.
    """
    u = np.array(u0, dtype=float)
    u, converged = _track_root(u, tol, max_iter)
    if not converged:
        u, _ = _descend_energy(u, tol, max_iter)
    gmax = float(np.abs(potential_gradient(u)).max())
    u = _polish(u, gmax)
    gmax = float(np.abs(potential_gradient(u)).max())
    return u, gmax, gmax < tol


def _polish(u, gmax):
    """A few undamped Newton steps; quadratic convergence takes the residual
    from the stopping tolerance down to rounding level."""
    for _ in range(3):
        grad = potential_gradient(u)
        trial = u + _newton_step(u, grad)
        trial_gmax = float(np.abs(potential_gradient(trial)).max())
        if trial_gmax >= gmax:
            return u
        u, gmax = trial, trial_gmax
    return u


def seed_spacing(n_ions):
    """Seed lattice constant from the empirical central-spacing law."""
    return _SEED_PREFACTOR / n_ions ** _SEED_EXPONENT


def triangular_seed(n_ions, spacing=None):
    """Ideal triangular-lattice seed: the N sites closest to the origin.

    Sites are r = [(j + l/2) a0, sqrt(3)/2 l a0] for integer (j, l), ordered
    by radius (ties by angle, then lattice indices) so the choice is
    deterministic.
    """
    if spacing is None:
        spacing = seed_spacing(n_ions)
    extent = int(math.ceil(math.sqrt(n_ions))) + 3
    j, l = np.meshgrid(np.arange(-extent, extent + 1),
                       np.arange(-extent, extent + 1), indexing="ij")
    j = j.ravel()
    l = l.ravel()
    x = (j + 0.5 * l) * spacing
    y = (math.sqrt(3.0) / 2.0) * l * spacing
    r2 = x * x + y * y
    ang = np.arctan2(y, x)
    order = np.lexsort((l, j, ang, r2))
    take = order[:n_ions]
    return np.column_stack([x[take], y[take]])


def ring_seed(n_ions, with_centre=False):
    """All ions on one ring (optionally one at the centre), at the radius
    where the ring is in radial force balance."""
    n_ring = n_ions - 1 if with_centre else n_ions
    if n_ring < 2:
        raise ValueError("ring seed needs at least 2 ring ions")
    j = np.arange(1, n_ring)
    ring_sum = 0.25 * np.sum(1.0 / np.sin(math.pi * j / n_ring))
    radius = (ring_sum + (1.0 if with_centre else 0.0)) ** (1.0 / 3.0)
    ang = 2.0 * math.pi * np.arange(n_ring) / n_ring
    pos = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    if with_centre:
        pos = np.vstack([[0.0, 0.0], pos])
    return pos


def canonical_orientation(u):
    """Recentre and rotate a configuration into the canonical frame.

    The centre of charge moves to the origin and the major principal axis of
    the second-moment tensor is aligned with x; for (near) degenerate second
    moments an outermost ion is placed on the positive x axis instead.
    """
    u = u - u.mean(axis=0)
    n = u.shape[0]
    if n == 1:
        return u
    radii = np.hypot(u[:, 0], u[:, 1])
    outer = int(np.argmax(radii))
    second = u.T @ u
    evals, evecs = np.linalg.eigh(second)
    if evals[1] - evals[0] > 1e-9 * max(np.trace(second), 1.0):
        axis = evecs[:, 1]
        theta = -math.atan2(axis[1], axis[0])
    else:
        theta = -math.atan2(u[outer, 1], u[outer, 0])
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rot = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    u = u @ rot.T
    if u[outer, 0] < 0.0:
        u = -u  # half-turn, keeps the lattice, puts the outer ion at x > 0
    return u


def _check_seed(seed, scale):
    seed = np.asarray(seed, dtype=float)
    if seed.ndim != 2 or seed.shape[1] != 2:
        raise ValueError("seed must have shape (N, 2)")
    if seed.shape[0] > 1:
        _, _, d = _pair_vectors(seed)
        if d.min() < 1e-8 * max(scale, 1.0):
            raise DegenerateSeed("two seed positions coincide")
    return seed


def min_spacing(u):
    """Minimum pair distance of a configuration (inf for a single ion)."""
    if u.shape[0] < 2:
        return math.inf
    _, _, d = _pair_vectors(u)
    return float(d.min())


def solve_equilibrium(config, seed=None, *, restarts=5, rng_seed=0,
                      tol=1e-10, max_iter=10000, jitter_fraction=0.01):
    """Solve the planar equilibrium for ``config``.

    Parameters
    ----------
    config : TrapConfig
    seed : (N, 2) array, optional
        Starting guess.  Default is the ideal triangular lattice; restarts
        add 1%-of-spacing uniform jitter (plus ring seeds for small N, which
        carry the small-crystal ground states the lattice seed misses).
    restarts : int
        Number of independently seeded relaxations; the lowest-energy
        converged result is returned.
    rng_seed : int
        Seed for the jitter generator, for reproducible output.
    tol : float
        Convergence threshold on the max-abs gradient component.
    max_iter : int
        Iteration cap per restart.

    Returns
    -------
    Crystal

    Raises
    ------
    DegenerateSeed
        If two seed positions coincide.
    NonConvergence
        If no restart reaches ``tol`` within ``max_iter``.
    """
    n = config.ion_count
    ell = length_scale(config)
    if n == 1:
        pos = np.zeros((1, 2))
        return Crystal(pos, ell, 0.0, math.inf, 0.0, config)

    spacing = seed_spacing(n)
    rng = np.random.default_rng(rng_seed)

    seeds = []
    if seed is not None:
        base = _check_seed(seed, spacing)
        seeds.append(base.copy())
        while len(seeds) < restarts:
            seeds.append(base + rng.uniform(-jitter_fraction * spacing,
                                            jitter_fraction * spacing,
                                            size=base.shape))
    else:
        base = triangular_seed(n, spacing)
        seeds.append(base.copy())
        if 2 <= n <= 9:
            seeds.append(ring_seed(n, with_centre=False))
            if n >= 6:
                seeds.append(ring_seed(n, with_centre=True))
        while len(seeds) < restarts:
            seeds.append(base + rng.uniform(-jitter_fraction * spacing,
                                            jitter_fraction * spacing,
                                            size=base.shape))
    seeds = seeds[:max(restarts, 1)]

    best = None
    for start in seeds:
        u, gmax, ok = _relax(start, tol, max_iter)
        if not ok:
            continue
        energy = potential_energy(u)
        if best is None or energy < best[1]:
            best = (u, energy)
    if best is None:
        raise NonConvergence(
            "no restart reached gradient tolerance %.1e in %d iterations"
            % (tol, max_iter))

    u = canonical_orientation(best[0])
    gmax = float(np.abs(potential_gradient(u)).max())
    return Crystal(u, ell, gmax, min_spacing(u), potential_energy(u), config)


def min_spacing_scan(n_values, crystal_provider=None, **solve_kwargs):
    """Minimum dimensionless spacing u_min versus ion number.

    ``crystal_provider`` maps N -> Crystal (e.g. a cache); by default each N
    is solved with a generic trap (the dimensionless result is trap
    independent).  Returns a list of (N, u_min) tuples.
    """
    results = []
    for n in n_values:
        if crystal_provider is not None:
            crystal = crystal_provider(int(n))
        else:
            cfg = TrapConfig(int(n), omega_r=2.0 * math.pi * 1e6,
                             omega_z=2.0 * math.pi * 1e7)
            crystal = solve_equilibrium(cfg, **solve_kwargs)
        results.append((int(n), crystal.u_min))
    return results


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of value = prefactor * (N - shift)**exponent."""

    prefactor: float
    exponent: float
    rms_log_residual: float
    shift: float = 0.0

    def evaluate(self, n):
        return self.prefactor * (np.asarray(n, dtype=float) - self.shift) ** self.exponent


def fit_power_law(points, shift=0.0):
    """Fit ``value ~ a (N - shift)^b`` in log-log least squares.

    Parameters
    ----------
    points : sequence of (N, value)
    shift : float
        Abscissa shift s; every N must exceed it.

    Raises
    ------
    InsufficientPoints
        Fewer than 3 points.
    ValueError
        Non-positive values or N <= shift.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise InsufficientPoints("power-law fit needs at least 3 points")
    ns = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    if np.any(vals <= 0.0):
        raise ValueError("power-law fit needs positive values")
    if np.any(ns <= shift):
        raise ValueError("every N must exceed the shift")
    x = np.log(ns - shift)
    y = np.log(vals)
    design = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return PowerLawFit(prefactor=float(np.exp(coef[1])), exponent=float(coef[0]),
                       rms_log_residual=rms, shift=float(shift))


def omega_r_for_spacing(n_ions, d_min, ion_mass=MASS_BE9,
                        charge=ELEMENTARY_CHARGE, u_min=None,
                        crystal_provider=None, **solve_kwargs):
    """Radial trap frequency (rad/s) that gives minimum spacing ``d_min``.

    Inverts d_min = u_min(N) * ell(omega_r):
    omega_r = sqrt(q^2 u_min^3 / (4 pi eps0 M d_min^3)).
    """
    if d_min <= 0.0:
        raise ValueError("d_min must be positive")
    if u_min is None:
        if crystal_provider is not None:
            u_min = crystal_provider(int(n_ions)).u_min
        else:
            cfg = TrapConfig(int(n_ions), omega_r=2.0 * math.pi * 1e6,
                             omega_z=2.0 * math.pi * 1e7, ion_mass=ion_mass,
                             charge=charge)
            u_min = solve_equilibrium(cfg, **solve_kwargs).u_min
    if not np.isfinite(u_min):
        raise ValueError("u_min is not finite (single ion has no spacing)")
    return math.sqrt(COULOMB_CONSTANT * charge**2 * u_min**3
                     / (ion_mass * d_min**3))


# ---------------------------------------------------------------------------
# serialization

def crystal_text(crystal):
    """Render a crystal as the tabular text format."""
    cfg = crystal.config
    lines = ["# gatelab crystal"]
    lines.append(header_line("ion_count", cfg.ion_count))
    lines.append(header_line("omega_r_rad_s", fmt(cfg.omega_r)))
    lines.append(header_line("omega_z_rad_s", fmt(cfg.omega_z)))
    lines.append(header_line("ion_mass_kg", fmt(cfg.ion_mass)))
    lines.append(header_line("charge_c", fmt(cfg.charge)))
    nbar = np.atleast_1d(np.asarray(cfg.temperature_nbar, dtype=float))
    lines.append(header_line("nbar", ",".join(fmt(v) for v in nbar)))
    lines.append(header_line("beta", fmt(cfg.beta)))
    lines.append(header_line("length_scale_m", fmt(crystal.length_scale_ell)))
    lines.append(header_line("u_min", fmt(crystal.u_min)))
    lines.append(header_line("energy", fmt(crystal.energy)))
    lines.append(header_line("residual", fmt(crystal.residual_gradient_norm)))
    lines.append(header_line("columns", "index\tu_x\tu_y"))
    for i, (x, y) in enumerate(crystal.positions):
        # full 17 digits so a read-back reproduces the floats exactly
        lines.append("%d\t%s\t%s" % (i, fmt(x), fmt(y)))
    return "\n".join(lines) + "\n"


def write_crystal(crystal, path):
    """Write the crystal table (positions round-trip exactly)."""
    atomic_write_text(path, crystal_text(crystal))


def read_crystal(path):
    """Parse a file written by :func:`write_crystal` back into a Crystal."""
    with open(path) as fh:
        meta, rows = parse_header(fh)
    nbar_field = [float(v) for v in meta["nbar"].split(",")]
    nbar = nbar_field[0] if len(nbar_field) == 1 else nbar_field
    cfg = TrapConfig(ion_count=int(meta["ion_count"]),
                     omega_r=float(meta["omega_r_rad_s"]),
                     omega_z=float(meta["omega_z_rad_s"]),
                     ion_mass=float(meta["ion_mass_kg"]),
                     charge=float(meta["charge_c"]),
                     temperature_nbar=nbar)
    positions = np.zeros((cfg.ion_count, 2))
    for row in rows:
        fields = row.split("\t")
        positions[int(fields[0])] = (float(fields[1]), float(fields[2]))
    return Crystal(positions=positions,
                   length_scale_ell=float(meta["length_scale_m"]),
                   residual_gradient_norm=float(meta["residual"]),
                   u_min=float(meta["u_min"]),
                   energy=float(meta["energy"]),
                   config=cfg)
