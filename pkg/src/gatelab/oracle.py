"""Brute-force gate verification in a truncated number-state basis.

The branch Hamiltonians of :mod:`gatelab.gate` are linear in the ladder
operators, so their propagators have closed forms; this module deliberately
ignores that and integrates the Schrodinger equation numerically (adaptive
fourth-order Magnus with step doubling) on small crystals.  Agreement of the
resulting fidelity with the closed-form route validates both.

Because the Hamiltonian commutes with both sigma_z operators, the four spin
branches decouple, and within a branch the modes decouple, so the full
evolution is represented by one propagator matrix per (branch, mode) in a
per-mode Fock space.  Thermal averaging is an exact mixture over initial
number states; every column of the propagator is one evolved number state.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import CutoffInsufficient, StepFailure
from .gate import _BRANCH_SIGNS, drive_couplings

MAX_IONS = 4
MAX_CUTOFF = 20      # highest tracked Fock level per mode
_WEIGHT_TAIL = 1e-10  # untracked thermal weight allowed per mode
_TOP_POPULATION_LIMIT = 1e-8
_NORM_DRIFT_LIMIT = 1e-9

_GAUSS_NODES = ((3.0 - math.sqrt(3.0)) / 6.0, (3.0 + math.sqrt(3.0)) / 6.0)


def thermal_weights(nbar, levels):
    """p_n = nbar^n / (1 + nbar)^{n+1} for n = 0..levels-1."""
    n = np.arange(levels)
    if nbar == 0.0:
        out = np.zeros(levels)
        out[0] = 1.0
        return out
    ratio = nbar / (1.0 + nbar)
    return ratio ** n / (1.0 + nbar)


def _levels_for_weight(nbar, cap):
    """Fewest initial levels whose thermal tail is below the weight target."""
    if nbar == 0.0:
        return 1
    ratio = nbar / (1.0 + nbar)
    needed = int(math.ceil(math.log(_WEIGHT_TAIL) / math.log(ratio)))
    if needed > cap:
        raise CutoffInsufficient(
            "thermal mixture at nbar=%.3g needs %d levels for tail %.0e, "
            "cutoff allows %d" % (nbar, needed, _WEIGHT_TAIL, cap))
    return needed


@dataclass(frozen=True)
class TruncatedState:
    """Evolved branch propagators of a small crystal in truncated Fock space.

    ``propagators[k]`` has shape (4, dim, dim): the four spin-branch
    propagators of mode k, columns indexed by initial number state.  The
    branch order matches the closed-form route: (++, +-, -+, --).
    """

    propagators: tuple
    frequencies: np.ndarray
    nbar: np.ndarray
    pair: tuple
    norm_drift: float
    top_population: float
    step_count: int

    @property
    def mode_count(self):
        return len(self.propagators)


def _magnus_step(t, dt, amp, mu, branch_weights, freqs, a_op, a_dag):
    """Propagator of every (branch, mode) over [t, t + dt], amplitude
    constant on the step (fourth-order two-node Gauss Magnus)."""
    w_nodes = []
    for node in _GAUSS_NODES:
        s = t + node * dt
        f0 = -amp * math.sin(mu * s)
        phase = np.exp(1j * freqs * s)  # (K,)
        x_op = phase[:, None, None] * a_dag[None] + \
            np.conj(phase)[:, None, None] * a_op[None]
        # (4, K, dim, dim): branch weight times mode quadrature
        w_nodes.append(f0 * branch_weights[:, :, None, None] * x_op[None])
    w1, w2 = w_nodes
    theta = -0.5j * dt * (w1 + w2) \
        + (math.sqrt(3.0) * dt * dt / 12.0) * (w1 @ w2 - w2 @ w1)
    herm = 1j * theta
    evals, evecs = np.linalg.eigh(herm)
    phases = np.exp(-1j * evals)
    return (evecs * phases[..., None, :]) @ np.conj(np.swapaxes(evecs, -1, -2))


def evolve(schedule, spectrum, pair, nbar=0.0, n_max=MAX_CUTOFF, tol=1e-8,
           max_steps=2_000_000):
    """Numerically integrate the four branch evolutions of a small crystal.

    Parameters
    ----------
    schedule : PulseSchedule
    spectrum : AxialSpectrum
        All axial modes participate; ion count is capped at 4.
    pair : (l, n)
        Target ions.
    nbar : scalar or (K,)
        Thermal occupations, used for cutoff sizing and the stored
        diagnostics (the propagators themselves are temperature free).
    n_max : int
        Highest Fock level per mode (<= 20).
    tol : float
        Global error budget; each step gets tol * dt / tau.

    Raises
    ------
    CutoffInsufficient
        Thermal weight target unreachable, or evolved population at the top
        level exceeds 1e-8.
    StepFailure
        Step size underflows or the step count exceeds ``max_steps``.
    """
    n_ions = spectrum.config.ion_count
    if n_ions > MAX_IONS:
        raise ValueError("oracle is restricted to %d ions" % MAX_IONS)
    if n_max > MAX_CUTOFF:
        raise ValueError("per-mode cutoff capped at %d" % MAX_CUTOFF)
    freqs = spectrum.frequencies
    n_modes = freqs.size
    nbar_arr = np.broadcast_to(np.asarray(nbar, dtype=float),
                               (n_modes,)).copy()
    if np.any(nbar_arr < 0.0):
        raise ValueError("nbar must be >= 0")
    dim = n_max + 1
    for nb in nbar_arr:
        _levels_for_weight(nb, dim)

    couplings = drive_couplings(spectrum)
    l, n = pair
    branch_weights = np.array(
        [[sl * couplings[l, k] + sn * couplings[n, k] for k in range(n_modes)]
         for sl, sn in _BRANCH_SIGNS])  # (4, K)

    sqrt_n = np.sqrt(np.arange(1, dim))
    a_op = np.diag(sqrt_n, k=1).astype(complex)
    a_dag = a_op.conj().T.copy()

    tau = schedule.duration
    mu = schedule.mu
    boundaries = schedule.times
    props = np.broadcast_to(np.eye(dim, dtype=complex),
                            (4, n_modes, dim, dim)).copy()

    omega_max = float(freqs.max())
    dt = min(0.25 / omega_max, tau)
    dt_floor = tau * 1e-12
    t = 0.0
    steps = 0
    seg = 0
    while t < tau * (1.0 - 1e-15):
        if steps >= max_steps:
            raise StepFailure("step count exceeded %d" % max_steps)
        while seg + 1 < boundaries.size - 1 and t >= boundaries[seg + 1]:
            seg += 1
        # Amplitude is discontinuous at boundaries; never integrate across.
        limit = min(boundaries[seg + 1], tau) - t
        step = min(dt, limit)
        amp = schedule.amplitudes[seg]
        args = (amp, mu, branch_weights, freqs, a_op, a_dag)
        u_full = _magnus_step(t, step, *args)
        u_half = _magnus_step(t, 0.5 * step, *args)
        u_resumed = _magnus_step(t + 0.5 * step, 0.5 * step, *args)
        u_fine = u_resumed @ u_half
        err = float(np.abs(u_full - u_fine).max())
        budget = tol * step / tau
        steps += 1
        if err <= budget:
            props = u_fine @ props
            t += step
            grow = 2.0 if err == 0.0 else \
                min(2.0, max(0.5, 0.9 * (budget / err) ** 0.2))
            # A boundary-clamped step says nothing about the free step size.
            dt = max(step * grow, dt if step < dt else 0.0)
        else:
            dt = 0.5 * step
        if dt < dt_floor:
            raise StepFailure("step size underflow at t=%.3e" % t)

    weights = [thermal_weights(nb, dim) for nb in nbar_arr]
    norm_drift = 0.0
    top_population = 0.0
    for k in range(n_modes):
        col_norms = np.sum(np.abs(props[:, k]) ** 2, axis=1)  # (4, dim)
        deficits = np.abs(col_norms - 1.0) @ weights[k]
        norm_drift = max(norm_drift, float(deficits.max()))
        top = np.abs(props[:, k][:, dim - 1, :]) ** 2 @ weights[k]
        top_population = max(top_population, float(top.max()))
    if top_population >= _TOP_POPULATION_LIMIT:
        raise CutoffInsufficient(
            "top-level population %.2e exceeds %.0e; raise the cutoff or "
            "shorten the drive" % (top_population, _TOP_POPULATION_LIMIT))
    if norm_drift >= _NORM_DRIFT_LIMIT:
        raise StepFailure("norm drift %.2e exceeds %.0e"
                          % (norm_drift, _NORM_DRIFT_LIMIT))

    return TruncatedState(
        propagators=tuple(props[:, k].copy() for k in range(n_modes)),
        frequencies=freqs.copy(), nbar=nbar_arr, pair=(int(l), int(n)),
        norm_drift=norm_drift, top_population=top_population,
        step_count=steps)


def reduced_qubit_state(state, nbar=None):
    """4x4 spin density matrix after tracing the thermal motion.

    rho[b, b'] = 1/4 prod_k sum_n p_n (U_{b',k}^dag U_{b,k})[n, n].
    """
    if nbar is None:
        nbar_arr = state.nbar
    else:
        nbar_arr = np.broadcast_to(np.asarray(nbar, dtype=float),
                                   (state.mode_count,))
    rho = 0.25 * np.ones((4, 4), dtype=complex)
    for k, u_modes in enumerate(state.propagators):
        dim = u_modes.shape[-1]
        p = thermal_weights(float(nbar_arr[k]), dim)
        overlaps = np.einsum("anm,bnm,m->ab", np.conj(u_modes), u_modes, p)
        rho = rho * overlaps.T  # [b, b'] = sum_m p_m <m|U_b'^dag U_b|m>
    return rho


def qubit_fidelity(rho, phi_target=math.pi / 4.0):
    """<Psi_f| rho |Psi_f> with |Psi_f> the ideal conditional-phase image
    of the equal superposition: amplitudes exp(i phi_target s_l s_n) / 2."""
    parity = np.array([sl * sn for sl, sn in _BRANCH_SIGNS])
    target = 0.5 * np.exp(1j * phi_target * parity)
    return float(np.real(np.conj(target) @ rho @ target))


def fidelity_from_state(state, nbar=None, phi_target=math.pi / 4.0):
    """Gate fidelity by direct trace over the evolved truncated state."""
    return qubit_fidelity(reduced_qubit_state(state, nbar=nbar), phi_target)
