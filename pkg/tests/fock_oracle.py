"""Brute-force Fock-space reference for the Gaussian interference pipeline.

Light enters on at most two modes of a passive network, so every output
state lives in the span of two effective creation operators.  No-click
probabilities reduce to amplitude sums in a two-mode Fock basis truncated
at a fixed total photon number, which keeps the brute force exact to the
truncation tail even though the network itself has eight modes.

Conventions mirror qncal.optics: beam splitters use the same real mixing
block, and a quadrature rotation by phi maps the annihilation operator to
exp(-i*phi) * a.
"""

import math

import numpy as np

from qncal.optics import ScenarioParams, _D1_MODES, _D2_MODES, _N_MODES

DEFAULT_CUTOFF = 20


def bs_unitary(n: int, i: int, j: int, transmittance: float) -> np.ndarray:
    t = math.sqrt(transmittance)
    r = math.sqrt(1.0 - transmittance)
    u = np.eye(n, dtype=complex)
    u[i, i] = t
    u[i, j] = r
    u[j, i] = -r
    u[j, j] = t
    return u


def phase_unitary(n: int, i: int, phi: float) -> np.ndarray:
    u = np.eye(n, dtype=complex)
    u[i, i] = np.exp(-1j * phi)
    return u


def squeezed_fock_amplitudes(r: float, cutoff: int) -> np.ndarray:
    """Amplitudes of squeezed vacuum on |0>, |1>, ..., |cutoff> for the
    cov = diag(e^-2r, e^2r) convention."""
    amps = np.zeros(cutoff + 1, dtype=complex)
    for k in range(cutoff // 2 + 1):
        amps[2 * k] = (
            (-math.tanh(r)) ** k
            * math.sqrt(math.factorial(2 * k))
            / (2**k * math.factorial(k))
            / math.sqrt(math.cosh(r))
        )
    return amps


def tmsv_fock_amplitudes(r: float, cutoff: int) -> np.ndarray:
    """Schmidt coefficients of the two-mode squeezed vacuum (|k,k> terms)
    for the +sinh(2r) x-x cross-covariance convention."""
    ks = np.arange(cutoff + 1)
    return np.tanh(r) ** ks / math.cosh(r)


def thermal_weights(mu: float, cutoff: int) -> np.ndarray:
    ns = np.arange(cutoff + 1)
    if mu == 0.0:
        w = np.zeros(cutoff + 1)
        w[0] = 1.0
        return w
    return (mu / (1.0 + mu)) ** ns / (1.0 + mu)


def _effective_mode_factors(u: np.ndarray, detector_modes) -> tuple[float, complex, float]:
    """QR factors of the two input-mode columns restricted to the modes a
    detector does not see."""
    keep = [m for m in range(u.shape[0]) if m not in set(detector_modes)]
    v1 = u[keep, 0]
    v2 = u[keep, 1]
    r11 = np.linalg.norm(v1)
    if r11 > 1e-14:
        r12 = complex(np.vdot(v1 / r11, v2))
    else:
        r12 = 0.0
    r22sq = np.linalg.norm(v2) ** 2 - abs(r12) ** 2
    r22 = math.sqrt(max(r22sq, 0.0))
    return float(r11), r12, r22


def noclick_pure(amp2: np.ndarray, u: np.ndarray, detector_modes) -> float:
    """No-click probability for a pure input sum_{a,b} amp2[a,b] |a,b> on
    modes 0 and 1 (other modes vacuum) after the network u."""
    cutoff = amp2.shape[0] - 1
    r11, r12, r22 = _effective_mode_factors(u, detector_modes)
    out = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
    for a in range(cutoff + 1):
        for b in range(cutoff + 1):
            c = amp2[a, b]
            if c == 0.0:
                continue
            pref = c / math.sqrt(math.factorial(a) * math.factorial(b))
            pa = r11**a if a else 1.0
            for j in range(b + 1):
                if j > 0 and r22 == 0.0:
                    break
                term = (
                    pref
                    * math.comb(b, j)
                    * pa
                    * (r12 ** (b - j))
                    * (r22**j)
                    * math.sqrt(math.factorial(a + b - j) * math.factorial(j))
                )
                out[a + b - j, j] += term
    return float(np.sum(np.abs(out) ** 2))


def noclick_fock_input(a: int, b: int, u: np.ndarray, detector_modes) -> float:
    """No-click probability for the product Fock input |a, b> on modes 0, 1."""
    r11, r12, r22 = _effective_mode_factors(u, detector_modes)
    total = 0.0
    for j in range(b + 1):
        if j > 0 and r22 == 0.0:
            break
        w = (
            math.comb(b, j)
            * (r11**a if a else 1.0)
            * (abs(r12) ** (b - j))
            * (r22**j)
        )
        total += w * w * math.factorial(a + b - j) * math.factorial(j) / (
            math.factorial(a) * math.factorial(b)
        )
    return total


def network_unitary(params: ScenarioParams, phi: float) -> np.ndarray:
    """Single-photon unitary of the full pipeline, mirroring the stage
    order of qncal.optics.hom_probabilities."""
    n = _N_MODES
    overlap = 0.0 if params.input_kind == "tmsv" else params.overlap
    u = np.eye(n, dtype=complex)
    if params.input_kind == "sv":
        u = bs_unitary(n, 0, 1, 0.5) @ u
    u = bs_unitary(n, 0, 2, params.eta_u) @ u
    u = bs_unitary(n, 1, 3, params.eta_d) @ u
    u = phase_unitary(n, 1, phi) @ u
    u = bs_unitary(n, 0, 4, overlap) @ u
    u = bs_unitary(n, 1, 5, overlap) @ u
    u = bs_unitary(n, 0, 1, 0.5) @ u
    u = bs_unitary(n, 4, 6, 0.5) @ u
    u = bs_unitary(n, 5, 7, 0.5) @ u
    return u


def pipeline_probabilities(params: ScenarioParams, cutoff: int = DEFAULT_CUTOFF):
    """Phase-averaged (p_d1, p_d2, p_coinc) by brute force in Fock space."""
    subsets = (_D1_MODES, _D2_MODES, _D1_MODES + _D2_MODES)

    if params.input_kind == "thermal":
        # Thermal inputs are phase-insensitive; a single phi suffices.
        u = network_unitary(params, 0.0)
        wa = thermal_weights(params.mean_photons, cutoff)
        wb = thermal_weights(params.mean_photons_2, cutoff)
        p0 = np.zeros(3)
        for a in range(cutoff + 1):
            for b in range(cutoff + 1):
                w = wa[a] * wb[b]
                if w < 1e-18:
                    continue
                for s, subset in enumerate(subsets):
                    p0[s] += w * noclick_fock_input(a, b, u, subset)
    else:
        amp2 = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        if params.input_kind == "sv":
            amp2[:, 0] = squeezed_fock_amplitudes(params.squeezing, cutoff)
        else:
            np.fill_diagonal(amp2, 0.0)
            sched = tmsv_fock_amplitudes(params.squeezing, cutoff)
            for k in range((cutoff // 2) + 1):
                amp2[k, k] = sched[k]
        phases = 2.0 * np.pi * np.arange(params.phase_grid) / params.phase_grid
        p0 = np.zeros(3)
        for phi in phases:
            u = network_unitary(params, phi)
            for s, subset in enumerate(subsets):
                p0[s] += noclick_pure(amp2, u, subset)
        p0 /= params.phase_grid

    p_d1 = 1.0 - p0[0]
    p_d2 = 1.0 - p0[1]
    p_coinc = 1.0 - p0[0] - p0[1] + p0[2]
    return p_d1, p_d2, p_coinc
