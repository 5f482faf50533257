"""Dense statevector simulation of warm-started QAOA circuits.

Conventions
-----------
* Qubit 0 is the least significant bit of the basis-state index.
* ``Ry(t) = exp(-i t Y / 2)``, ``Rz(t) = exp(-i t Z / 2)``.
* A cost layer with angle ``gamma`` is ``exp(-i gamma D)`` where ``D`` is the
  pruned diagonal energy without its constant offset (the offset is a global
  phase).
* The mixer on qubit ``q`` is the gate sequence ``Ry(-theta_q)``, ``Rz(-2 beta)``,
  ``Ry(theta_q)`` in circuit order, i.e. the matrix
  ``Ry(theta_q) @ Rz(-2 beta) @ Ry(-theta_q)``. The warm-start product state
  ``Ry(theta_q)|0>`` is its eigenstate.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encode import (DEFAULT_LAMBDA, IsingHamiltonian, PrunedHamiltonian, energy_table,
                     index_to_string)
from .errors import DimensionError, ResourceError
from .instance import SspInstance

MAX_QUBITS = 26
DUMP_MAX_QUBITS = 10
RHO_CLIP = 1e-3


def check_qubits(n: int) -> None:
    if n > MAX_QUBITS:
        raise ResourceError(
            f"n={n} qubits exceeds the dense statevector cap n <= {MAX_QUBITS}")


@dataclass
class Statevector:
    n: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def copy(self) -> "Statevector":
        return Statevector(self.n, self.amplitudes.copy())

    @classmethod
    def basis(cls, n: int, index: int) -> "Statevector":
        amp = np.zeros(1 << n, dtype=complex)
        amp[index] = 1.0
        return cls(n, amp)


@dataclass(frozen=True)
class WarmStartAngles:
    theta: np.ndarray

    @classmethod
    def from_rho(cls, rho, clip: float = RHO_CLIP) -> "WarmStartAngles":
        """``theta_q = 2 arcsin(sqrt(rho_q))`` after clipping ``rho`` to ``[clip, 1 - clip]``."""
        r = np.clip(np.asarray(rho, dtype=float), clip, 1.0 - clip)
        return cls(2.0 * np.arcsin(np.sqrt(r)))

    @classmethod
    def uniform(cls, n: int) -> "WarmStartAngles":
        return cls(np.full(n, np.pi / 2))

    @property
    def n(self) -> int:
        return len(self.theta)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def mixer_unitary(theta: float, beta: float) -> np.ndarray:
    return ry(theta) @ rz(-2.0 * beta) @ ry(-theta)


def apply_1q(amplitudes: np.ndarray, n: int, qubit: int, gate: np.ndarray) -> np.ndarray:
    psi = amplitudes.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    return np.einsum("ab,ibj->iaj", gate, psi).reshape(-1)


def prepare_init(theta: WarmStartAngles) -> Statevector:
    """Product state with ``cos(theta/2)|0> + sin(theta/2)|1>`` on every qubit."""
    n = theta.n
    check_qubits(n)
    amp = np.ones(1, dtype=complex)
    for q in range(n):
        t = theta.theta[q]
        amp = np.kron(np.array([np.cos(t / 2), np.sin(t / 2)], dtype=complex), amp)
    return Statevector(n, amp)


def _phase_diagonal(hamiltonian) -> np.ndarray:
    if isinstance(hamiltonian, PrunedHamiltonian):
        return hamiltonian.phase_diagonal
    if isinstance(hamiltonian, IsingHamiltonian):
        from .encode import diagonal
        return diagonal(hamiltonian, include_offset=False)
    return np.asarray(hamiltonian, dtype=float)


def apply_cost_layer(state: Statevector, pruned, gamma: float) -> Statevector:
    """Multiply every amplitude by ``exp(-i gamma D(x))``.

    ``pruned`` may be a :class:`PrunedHamiltonian`, an :class:`IsingHamiltonian`,
    or a precomputed phase diagonal.
    """
    d = _phase_diagonal(pruned)
    if d.shape[0] != state.amplitudes.shape[0]:
        raise DimensionError(f"hamiltonian diagonal has {d.shape[0]} entries, state has "
                             f"{state.amplitudes.shape[0]}")
    return Statevector(state.n, state.amplitudes * np.exp(-1j * gamma * d))


def apply_mixer_layer(state: Statevector, theta: WarmStartAngles, beta: float) -> Statevector:
    if theta.n != state.n:
        raise DimensionError(f"{theta.n} angles for a {state.n}-qubit state")
    amp = state.amplitudes
    for q in range(state.n):
        amp = apply_1q(amp, state.n, q, mixer_unitary(theta.theta[q], beta))
    return Statevector(state.n, amp)


def run_circuit(pruned, theta: WarmStartAngles, schedule) -> Statevector:
    """Warm-start state followed by alternating cost and mixer layers."""
    schedule = list(schedule)
    if not schedule:
        raise ValueError("schedule must contain at least one (gamma, beta) layer")
    d = _phase_diagonal(pruned)
    state = prepare_init(theta)
    if d.shape[0] != state.amplitudes.shape[0]:
        raise DimensionError("hamiltonian and warm-start angles disagree on qubit count")
    for gamma, beta in schedule:
        state = apply_cost_layer(state, d, gamma)
        state = apply_mixer_layer(state, theta, beta)
    return state


@dataclass(frozen=True)
class SampleSet:
    """Measurement counts keyed by bitstring (character ``k`` is qubit ``k``)."""

    counts: dict
    shots: int


def sample_indices(state: Statevector, shots: int, rng: np.random.Generator):
    """Sorted unique basis indices drawn and their counts."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = state.probabilities()
    p = p / p.sum()
    counts = rng.multinomial(shots, p)
    idx = np.flatnonzero(counts)
    return idx, counts[idx]


def sample(state: Statevector, shots: int, rng_seed=None) -> SampleSet:
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    idx, counts = sample_indices(state, shots, rng)
    return SampleSet({index_to_string(int(i), state.n): int(c) for i, c in zip(idx, counts)},
                     int(shots))


def exact_expectation(state: Statevector, hamiltonian_full: IsingHamiltonian,
                      instance: SspInstance, lam: float = DEFAULT_LAMBDA,
                      table: np.ndarray | None = None) -> float:
    """Probability-weighted energy over all basis states, capacity penalty included."""
    if hamiltonian_full.n != state.n:
        raise DimensionError(f"hamiltonian n={hamiltonian_full.n}, state n={state.n}")
    if table is None:
        table = energy_table(hamiltonian_full, instance, lam)
    return float(state.probabilities() @ table)


def dump_amplitudes(state: Statevector, path) -> None:
    """Text dump ``index bitstring re im`` for small states."""
    if state.n > DUMP_MAX_QUBITS:
        raise ResourceError(f"amplitude dump limited to n <= {DUMP_MAX_QUBITS}")
    lines = [f"# n={state.n} qubit0=least-significant-bit"]
    for i, a in enumerate(state.amplitudes):
        lines.append(f"{i} {index_to_string(i, state.n)} {a.real!r} {a.imag!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
