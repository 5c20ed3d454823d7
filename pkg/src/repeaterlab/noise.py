"""Memory decoherence as a Pauli channel, and the age/fidelity maps built on it.

Each memory qubit suffers one application of the channel per time step. A
Bell pair whose two halves have each waited ``m`` steps is Bell diagonal, so
four populations (Phi+, Phi-, Psi+, Psi-) describe it completely. Labelling
the Bell states by (phase bit, parity bit) makes entanglement swapping a
convolution over XOR of labels, which is what makes ages simply add.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import PauliChannelParams

# Bell index = phase bit + 2 * parity bit: Phi+ 0, Phi- 1, Psi+ 2, Psi- 3


@dataclass(frozen=True)
class BellCoefficients:
    """Bell-basis populations (Phi+, Phi-, Psi+, Psi-)."""

    q: tuple[float, float, float, float]

    def __post_init__(self):
        q = tuple(map(float, self.q))
        if len(q) != 4:
            raise ValueError("need four Bell populations")
        if min(q) < -1e-12 or abs(q[0] + q[1] + q[2] + q[3] - 1.0) > 1e-12:
            raise ValueError(f"not a probability vector: {q}")
        object.__setattr__(self, "q", q)

    @property
    def fidelity(self) -> float:
        return self.q[0]

    def as_array(self) -> np.ndarray:
        return np.array(self.q)


def pauli_probs(params: PauliChannelParams) -> tuple[float, float, float, float]:
    """Single-step probabilities (p_I, p_X, p_Y, p_Z) of the twirled channel."""
    e1 = 1.0 if math.isinf(params.m1_star) else math.exp(-1.0 / params.m1_star)
    e2 = 1.0 if math.isinf(params.m2_star) else math.exp(-1.0 / params.m2_star)
    p_x = (1.0 - e1) / 4.0
    p_i = (1.0 + e2) / 2.0 - p_x
    p_z = (1.0 - e2) / 2.0 - p_x
    return p_i, p_x, p_x, p_z


def pauli_eigenvalues(params: PauliChannelParams) -> tuple[float, float, float]:
    """Channel eigenvalues on the X, Y, Z Pauli operators."""
    p_i, p_x, p_y, p_z = pauli_probs(params)
    lam_x = p_i + p_x - p_y - p_z
    lam_y = p_i - p_x + p_y - p_z
    lam_z = p_i - p_x - p_y + p_z
    return lam_x, lam_y, lam_z


def bell_coefficients(m: int, params: PauliChannelParams) -> BellCoefficients:
    """Bell populations of a Phi+ pair after both halves waited ``m`` steps."""
    if m < 0:
        raise ValueError(f"age must be non-negative, got {m}")
    a = 0.0 if math.isinf(params.m1_star) else 2.0 * m / params.m1_star
    b = 0.0 if math.isinf(params.m2_star) else 2.0 * m / params.m2_star
    e1, e2 = math.exp(-a), math.exp(-b)
    return BellCoefficients(
        (
            0.25 * (1 + e1 + 2 * e2),
            0.25 * (1 + e1 - 2 * e2),
            0.25 * (1 - e1),
            0.25 * (1 - e1),
        )
    )


def bell_step(q: BellCoefficients, params: PauliChannelParams) -> BellCoefficients:
    """Apply one time step of the channel to both qubits of a Bell-diagonal pair.

    A Pauli error on one half of a Bell pair flips its label: X flips parity,
    Z flips phase, Y flips both. Two independent single-qubit channels give the
    label-flip distribution as their XOR convolution.
    """
    p_i, p_x, p_y, p_z = pauli_probs(params)
    # flip distribution over labels indexed like the Bell states
    one = np.array([p_i, p_z, p_x, p_y])
    two = _convolve(one, one)
    return BellCoefficients(tuple(_convolve(q.as_array(), two)))


def _convolve(a, b) -> np.ndarray:
    # with index = phase + 2 * parity, XOR of labels is XOR of indices
    out = [0.0, 0.0, 0.0, 0.0]
    for i in range(4):
        for j in range(4):
            out[i ^ j] += a[i] * b[j]
    return np.array(out)


def swap_bell_diagonal(q1: BellCoefficients, q2: BellCoefficients) -> BellCoefficients:
    """Bell populations after an ideal swap of two Bell-diagonal pairs."""
    out = _convolve(q1.q, q2.q)
    return BellCoefficients(tuple(np.maximum(out, 0.0) / out.sum()))


def fidelity_of_age(m: int, m_star: int) -> float:
    """Fidelity of a link of age ``m`` under pure dephasing with coherence time 5 m_star."""
    if m < 0:
        raise ValueError(f"age must be non-negative, got {m}")
    if m == 0:
        return 1.0
    return 0.5 * (1.0 + math.exp(-2.0 * m / (5.0 * max(m_star, 1))))


def fidelity_of_age_general(m: int, params: PauliChannelParams) -> float:
    return bell_coefficients(m, params).fidelity


def age_of_fidelity(F: float, m_star: int) -> int:
    """Age at which the fidelity drops to ``F``, rounded up to whole time steps."""
    if m_star < 1:
        raise ValueError("m_star must be >= 1")
    floor = fidelity_of_age(m_star, m_star)
    if not floor - 1e-12 <= F <= 1.0:
        raise ValueError(f"F={F} outside [{floor:.4f}, 1]")
    if F == 1.0:
        return 0
    # the tolerance keeps exact round trips from being bumped up by rounding noise
    return math.ceil(-(5.0 * m_star / 2.0) * math.log(2.0 * F - 1.0) - 1e-9)


def max_chain_for_fidelity(F_min: float, t_star: int, m_star: int) -> int:
    """Largest number of elementary links that can sum to an age within the fidelity budget."""
    if t_star < 1:
        raise ValueError("t_star must be >= 1")
    budget = age_of_fidelity(F_min, m_star)
    return budget // t_star


__all__ = [
    "BellCoefficients",
    "PauliChannelParams",
    "pauli_probs",
    "pauli_eigenvalues",
    "bell_coefficients",
    "bell_step",
    "swap_bell_diagonal",
    "fidelity_of_age",
    "fidelity_of_age_general",
    "age_of_fidelity",
    "max_chain_for_fidelity",
]
