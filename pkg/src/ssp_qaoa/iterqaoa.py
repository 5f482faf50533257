"""Non-variational Iterative-QAOA with a linear-ramp schedule and warm starts.

Each iteration runs a fixed-angle circuit from a biased product state, samples
it, ranks the unique sampled bitstrings by full energy (capacity penalty
included), Boltzmann-weights the lowest ones and turns the weighted bit
averages into the next per-qubit bias.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .encode import (DEFAULT_LAMBDA, build_qubo, evaluate_energy, index_to_bits,
                     index_to_string, prune, qubo_to_ising)
from .instance import SspInstance
from .errors import ConfigError
from .qsim import RHO_CLIP, WarmStartAngles, check_qubits, run_circuit, sample_indices

HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class QaoaConfig:
    """Iterative-QAOA settings. ``p`` and ``delta`` default by problem size."""

    p: int | None = None
    delta: float | None = None
    shots: int = 4000
    n_iter: int = 20
    top_k: int = 100
    lam: float = DEFAULT_LAMBDA
    tau: float = 1e-6
    eta: int = 1
    clip: float = RHO_CLIP
    seed: int = 0

    def resolved(self, n: int) -> "QaoaConfig":
        p = self.p if self.p is not None else (5 if n < 50 else 6)
        delta = self.delta if self.delta is not None else (0.37 if n < 30 else 0.30)
        cfg = QaoaConfig(p, delta, self.shots, self.n_iter, self.top_k, self.lam, self.tau,
                         self.eta, self.clip, self.seed)
        cfg.validate()
        return cfg

    def validate(self):
        if self.p is not None and self.p < 1:
            raise ConfigError("p must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta must be > 0")
        if self.shots < 1 or self.n_iter < 1:
            raise ConfigError("shots and n_iter must be >= 1")
        if self.top_k < 2:
            raise ConfigError("top_k must be >= 2")
        if self.eta not in (-1, 1):
            raise ConfigError("eta must be +1 or -1")
        if not 0 < self.clip < 0.5:
            raise ConfigError("clip must lie in (0, 0.5)")
        if not self.lam > 0:
            raise ConfigError("lambda must be > 0")


def lr_schedule(p: int, delta: float) -> list:
    """Linear ramp: ``gamma_k = k/p * delta``, ``beta_k = (p-k+1)/p * delta``."""
    if p < 1:
        raise ConfigError("p must be >= 1")
    if delta < 0:
        raise ConfigError("delta must be >= 0")
    return [(k * delta / p, (p - k + 1) * delta / p) for k in range(1, p + 1)]


def boltzmann(energies, beta_t: float) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        raise ValueError("boltzmann weights need at least one energy")
    logits = -beta_t * e
    w = np.exp(logits - logits.max())
    return w / w.sum()


def beta_schedule(j: int, n_iter: int, selected_energies, tau: float, prev_beta: float) -> float:
    """Quadratic base schedule divided by the smallest adjacent energy gap above ``tau``."""
    base = 0.1 + 0.9 * (j / n_iter) ** 2
    e = np.sort(np.asarray(selected_energies, dtype=float))
    gaps = np.diff(e)
    gaps = gaps[gaps > tau]
    if gaps.size == 0:
        return prev_beta
    return base / float(gaps.min())


def bias_update(samples, eta: int = 1, clip: float = RHO_CLIP) -> np.ndarray:
    """Per-qubit probability of a 1 for the next warm start.

    ``samples`` is a sequence of ``(bitstring, probability)``; bitstrings may be
    strings of '0'/'1' or integer sequences.
    """
    bits = np.array([[int(c) for c in b] for b, _ in samples], dtype=float)
    probs = np.array([pr for _, pr in samples], dtype=float)
    return _bias_from_bits(bits, probs, eta, clip)


def _bias_from_bits(bits: np.ndarray, probs: np.ndarray, eta: int, clip: float) -> np.ndarray:
    m = probs @ (1.0 - 2.0 * bits)
    rho = 0.5 * (1.0 - eta * m)
    return np.clip(rho, clip, 1.0 - clip)


@dataclass
class IterationRecord:
    index: int
    beta_t: float
    best_energy: float
    best_so_far: float
    mean_energy: float
    histogram_edges: list
    histogram_counts: list
    rho: list
    unique_samples: int


@dataclass
class QuantumResult:
    records: list
    candidates: list  # (bitstring, energy), energy ascending
    config: dict = field(default_factory=dict)

    @property
    def best(self):
        return self.candidates[0]


def run(instance: SspInstance, config: QaoaConfig | None = None) -> QuantumResult:
    config = (config or QaoaConfig()).resolved(instance.n)
    n = instance.n
    check_qubits(n)
    qubo = build_qubo(instance, config.lam)
    ham = qubo_to_ising(qubo)
    pruned = prune(ham, config.p)
    schedule = lr_schedule(config.p, config.delta)
    diag = pruned.phase_diagonal
    rng = np.random.default_rng(config.seed)

    rho = np.full(n, 0.5)
    prev_beta = 0.1
    seen: dict = {}
    best_so_far = np.inf
    records = []
    for j in range(config.n_iter):
        theta = WarmStartAngles.from_rho(rho, config.clip)
        state = run_circuit(diag, theta, schedule)
        idx, counts = sample_indices(state, config.shots, rng)
        bits = index_to_bits(idx, n).astype(float)
        # each bitstring is evaluated once so repeated samples get identical energies
        new = np.array([k for k, i in enumerate(idx.tolist()) if i not in seen], dtype=int)
        if new.size:
            fresh = np.atleast_1d(evaluate_energy(ham, instance, bits[new], config.lam))
            for k, e in zip(new.tolist(), fresh.tolist()):
                seen[int(idx[k])] = float(e)
        energies = np.array([seen[i] for i in idx.tolist()])

        order = np.lexsort((idx, energies))[: config.top_k]
        sel_e = energies[order]
        shifted = sel_e - sel_e[0]
        beta_t = beta_schedule(j, config.n_iter, shifted, config.tau, prev_beta)
        prev_beta = beta_t
        weights = boltzmann(shifted, beta_t)

        best = float(sel_e[0])
        best_so_far = min(best_so_far, best)
        hist_counts, edges = np.histogram(energies, bins=HISTOGRAM_BINS, weights=counts)
        records.append(IterationRecord(
            index=j,
            beta_t=float(beta_t),
            best_energy=best,
            best_so_far=float(best_so_far),
            mean_energy=float(counts @ energies / counts.sum()),
            histogram_edges=edges.tolist(),
            histogram_counts=[int(round(c)) for c in hist_counts],
            rho=rho.tolist(),
            unique_samples=int(idx.size),
        ))
        rho = _bias_from_bits(bits[order], weights, config.eta, config.clip)

    ranked = sorted(seen.items(), key=lambda kv: (kv[1], index_to_string(kv[0], n)))
    candidates = [(index_to_string(i, n), e) for i, e in ranked[: config.top_k]]
    return QuantumResult(records, candidates, asdict(config))
