"""QUBO and Ising encodings of a shipment-selection instance.

The objective is normalized so that all value and interaction coefficients sum
to 100. Shipment and gap exclusivity become pairwise penalties ``lam * x_a x_b``;
capacity is not part of the QUBO and is only charged as a soft ``erf`` penalty
when energies of measured bitstrings are evaluated.

Bit convention: ``bits[k]`` is the value of variable/qubit ``k``; the Ising spin
is ``z_k = 1 - 2 bits[k]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import erf

from .errors import DegenerateInstanceError, DimensionError, ValidationError
from .instance import SspInstance

DEFAULT_LAMBDA = 10.0
PRUNE_RELATIVE_THRESHOLD = 0.01
PRUNE_PAIRS_PER_QUBIT = 30


@dataclass(frozen=True)
class QuboModel:
    """Minimize ``offset + sum_k linear[k] x_k + sum_{a<b} quadratic[(a,b)] x_a x_b``."""

    n: int
    linear: np.ndarray
    quadratic: dict
    offset: float = 0.0
    lam: float = DEFAULT_LAMBDA
    normalization: float = 1.0

    def __post_init__(self):
        for a, b in self.quadratic:
            if not a < b:
                raise ValidationError(f"quadratic key {(a, b)} must satisfy a < b")
        if not self.lam > 0:
            raise ValidationError("penalty weight lambda must be > 0")
        if not self.normalization > 0:
            raise ValidationError("normalization must be > 0")

    def matrix(self) -> np.ndarray:
        """Upper-triangular coupling matrix."""
        q = np.zeros((self.n, self.n))
        for (a, b), val in self.quadratic.items():
            q[a, b] = val
        return q


@dataclass(frozen=True)
class IsingHamiltonian:
    """``e0 + sum_k h[k] z_k + sum_{a<b} j[(a,b)] z_a z_b`` with ``z`` in {+1, -1}."""

    n: int
    e0: float
    h: np.ndarray
    j: dict

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for (a, b), val in self.j.items():
            m[a, b] = val
        return m


@dataclass(frozen=True)
class PrunedHamiltonian:
    """The couplings kept for circuit construction; local fields are kept in full."""

    base: IsingHamiltonian
    kept_pairs: tuple
    budget: int

    @property
    def n(self) -> int:
        return self.base.n

    def as_hamiltonian(self) -> IsingHamiltonian:
        return IsingHamiltonian(self.base.n, self.base.e0, self.base.h,
                                {pair: self.base.j[pair] for pair in self.kept_pairs})

    @cached_property
    def phase_diagonal(self) -> np.ndarray:
        """Energy of every basis state without the constant offset."""
        return diagonal(self.as_hamiltonian(), include_offset=False)


@dataclass(frozen=True)
class Assignment:
    """A binary selection vector over the canonical variables of an instance."""

    bits: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("assignment bits must be 0 or 1")

    @classmethod
    def from_indices(cls, n: int, indices) -> "Assignment":
        bits = [0] * n
        for k in indices:
            bits[k] = 1
        return cls(bits)

    @classmethod
    def from_string(cls, s: str) -> "Assignment":
        return cls(int(c) for c in s)

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def indices(self) -> tuple:
        return tuple(k for k, b in enumerate(self.bits) if b)

    def selected(self, instance: SspInstance) -> frozenset:
        """The (gap_id, seq_id) pairs with ``x = 1``."""
        _check_len(instance, self.bits)
        return frozenset(instance.variables[k] for k in self.indices)

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=float)


def _check_len(instance: SspInstance, bits):
    if len(bits) != instance.n:
        raise DimensionError(f"bitstring has length {len(bits)}, instance has n={instance.n}")


def _as_bits(x) -> np.ndarray:
    if isinstance(x, Assignment):
        return x.array()
    if isinstance(x, str):
        return np.array([int(c) for c in x], dtype=float)
    return np.asarray(x, dtype=float)


# -- objective ---------------------------------------------------------------

def build_interactions(instance: SspInstance) -> dict:
    """Raw interaction weight of every cross-gap variable pair ``(a, b)``, ``a < b``."""
    w = instance.interaction_matrix
    gap = instance.gap_of
    out = {}
    for a in range(instance.n):
        for b in range(a + 1, instance.n):
            if gap[a] != gap[b]:
                out[(a, b)] = float(w[a, b])
    return out


def normalize(instance: SspInstance):
    """Scale values and interactions jointly so that they sum to 100.

    Returns ``(v_normalized, w_normalized, normalization)`` where ``v`` is an
    array over variables and ``w`` a dict over cross-gap pairs.
    """
    v_norm, w_mat, norm = normalized_arrays(instance)
    w = {pair: val / norm for pair, val in build_interactions(instance).items()}
    return v_norm, w, norm


def normalized_arrays(instance: SspInstance):
    """``(v', W', N)`` with ``W'`` the dense symmetric normalized interaction matrix."""
    cache = instance.__dict__.get("_normalized")
    if cache is not None:
        return cache
    v = instance.values
    w = instance.interaction_matrix
    total = float(v.sum() + np.triu(w, 1).sum())
    if not total > 0:
        raise DegenerateInstanceError(
            f"sum of values and interactions is {total}; normalization needs it > 0")
    norm = total / 100.0
    out = (v / norm, w / norm, norm)
    instance.__dict__["_normalized"] = out
    return out


def objective_value(instance: SspInstance, assignment) -> float:
    """Normalized utility ``sum v' x + sum_{a<b} w' x_a x_b`` (no penalties)."""
    x = _as_bits(assignment)
    _check_len(instance, x)
    if instance.n == 0:
        return 0.0
    v, w, _ = normalized_arrays(instance)
    return float(v @ x + 0.5 * x @ w @ x)


def build_qubo(instance: SspInstance, lam: float = DEFAULT_LAMBDA) -> QuboModel:
    v, w, norm = normalized_arrays(instance)
    gap = instance.gap_of
    overlap = instance.shipment_overlap
    quad = {}
    for a in range(instance.n):
        for b in range(a + 1, instance.n):
            val = -w[a, b] + lam * overlap[a, b]
            if gap[a] == gap[b]:
                val += lam
            if val != 0.0:
                quad[(a, b)] = float(val)
    return QuboModel(instance.n, -v.copy(), quad, 0.0, float(lam), norm)


def qubo_energy(qubo: QuboModel, bits) -> np.ndarray | float:
    x = _as_bits(bits)
    if x.shape[-1] != qubo.n:
        raise DimensionError(f"bitstring length {x.shape[-1]} != n={qubo.n}")
    q = qubo.matrix()
    e = qubo.offset + x @ qubo.linear + np.einsum("...a,ab,...b->...", x, q, x)
    return float(e) if np.ndim(e) == 0 else e


def qubo_to_ising(qubo: QuboModel) -> IsingHamiltonian:
    """Substitute ``x = (1 - z) / 2``."""
    e0 = qubo.offset + 0.5 * float(np.sum(qubo.linear))
    h = -0.5 * np.asarray(qubo.linear, dtype=float)
    j = {}
    for (a, b), val in qubo.quadratic.items():
        e0 += 0.25 * val
        h[a] -= 0.25 * val
        h[b] -= 0.25 * val
        j[(a, b)] = 0.25 * val
    return IsingHamiltonian(qubo.n, float(e0), h, j)


def ising_energy(hamiltonian: IsingHamiltonian, bits) -> np.ndarray | float:
    x = _as_bits(bits)
    if x.shape[-1] != hamiltonian.n:
        raise DimensionError(f"bitstring length {x.shape[-1]} != n={hamiltonian.n}")
    z = 1.0 - 2.0 * x
    m = hamiltonian.matrix()
    e = hamiltonian.e0 + z @ hamiltonian.h + np.einsum("...a,ab,...b->...", z, m, z)
    return float(e) if np.ndim(e) == 0 else e


def diagonal(hamiltonian: IsingHamiltonian, include_offset: bool = True,
             chunk: int = 1 << 16) -> np.ndarray:
    """Energies of all ``2**n`` basis states; qubit 0 is the least significant bit."""
    n = hamiltonian.n
    m = hamiltonian.matrix()
    out = np.empty(1 << n)
    shifts = np.arange(n)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n))
        z = 1.0 - 2.0 * ((idx[:, None] >> shifts) & 1)
        out[start:start + len(idx)] = z @ hamiltonian.h + np.einsum("ca,ca->c", z @ m, z)
    if include_offset:
        out += hamiltonian.e0
    return out


def prune(hamiltonian: IsingHamiltonian, p: int) -> PrunedHamiltonian:
    """Keep at most ``floor(30 n / p)`` largest couplings above 1% of the maximum."""
    if p < 1:
        raise ValueError("depth p must be >= 1")
    budget = (PRUNE_PAIRS_PER_QUBIT * hamiltonian.n) // p
    pairs = [(pair, abs(val)) for pair, val in hamiltonian.j.items()]
    if not pairs:
        return PrunedHamiltonian(hamiltonian, (), budget)
    jmax = max(mag for _, mag in pairs)
    if jmax == 0.0:
        return PrunedHamiltonian(hamiltonian, (), budget)
    pairs = [(pair, mag) for pair, mag in pairs if mag >= PRUNE_RELATIVE_THRESHOLD * jmax]
    pairs.sort(key=lambda item: (-item[1], item[0]))
    return PrunedHamiltonian(hamiltonian, tuple(pair for pair, _ in pairs[:budget]), budget)


# -- energies with the capacity penalty --------------------------------------

def capacity_penalty(instance: SspInstance, bits, lam: float = DEFAULT_LAMBDA):
    """``lam * sum_g erf(max(0, load_g - C_g))``."""
    x = _as_bits(bits)
    if x.shape[-1] != instance.n:
        raise DimensionError(f"bitstring length {x.shape[-1]} != n={instance.n}")
    n_gaps = len(instance.gap_ids)
    t = np.zeros((instance.n, n_gaps))
    t[np.arange(instance.n), instance.gap_of] = instance.durations
    over = np.maximum(0.0, x @ t - instance.capacities)
    pen = lam * erf(over).sum(axis=-1)
    return float(pen) if np.ndim(pen) == 0 else pen


def evaluate_energy(hamiltonian: IsingHamiltonian, instance: SspInstance, bits,
                    lam: float = DEFAULT_LAMBDA):
    """Full diagonal energy plus the soft capacity penalty.

    Accepts a single bitstring or an ``(m, n)`` array of them.
    """
    x = _as_bits(bits)
    if x.shape[-1] != instance.n or hamiltonian.n != instance.n:
        raise DimensionError(
            f"bitstring length {x.shape[-1]}, hamiltonian n={hamiltonian.n}, "
            f"instance n={instance.n}")
    return ising_energy(hamiltonian, x) + capacity_penalty(instance, x, lam)


def energy_table(hamiltonian: IsingHamiltonian, instance: SspInstance,
                 lam: float = DEFAULT_LAMBDA, chunk: int = 1 << 16) -> np.ndarray:
    """``evaluate_energy`` of every basis state, indexed as in the statevector."""
    n = instance.n
    out = diagonal(hamiltonian, include_offset=True, chunk=chunk)
    shifts = np.arange(n)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n))
        x = ((idx[:, None] >> shifts) & 1).astype(float)
        out[start:start + len(idx)] += capacity_penalty(instance, x, lam)
    return out


def index_to_bits(index, n: int) -> np.ndarray:
    idx = np.asarray(index)
    return ((idx[..., None] >> np.arange(n)) & 1).astype(np.int8)


def bits_to_index(bits) -> int:
    return int(sum(int(b) << k for k, b in enumerate(bits)))


def index_to_string(index: int, n: int) -> str:
    return "".join("1" if (index >> k) & 1 else "0" for k in range(n))


# -- constraints -------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintReport:
    shipment_violations: dict
    gap_violations: dict
    capacity_violations: dict

    @property
    def exclusivity_feasible(self) -> bool:
        return not self.shipment_violations and not self.gap_violations

    @property
    def feasible(self) -> bool:
        return self.exclusivity_feasible and not self.capacity_violations


def check_constraints(instance: SspInstance, assignment) -> ConstraintReport:
    """Offending sequence ids per shipment and gap, and overload hours per gap."""
    x = _as_bits(assignment)
    _check_len(instance, x)
    chosen = [k for k in range(instance.n) if x[k]]
    by_ship: dict = {}
    by_gap: dict = {}
    load: dict = {}
    for k in chosen:
        seq = instance.sequence_at(k)
        for s in seq.shipments:
            by_ship.setdefault(s, []).append(seq.id)
        by_gap.setdefault(seq.gap_id, []).append(seq.id)
        load[seq.gap_id] = load.get(seq.gap_id, 0.0) + seq.duration
    ships = {s: tuple(ids) for s, ids in sorted(by_ship.items()) if len(ids) > 1}
    gaps = {g: tuple(ids) for g, ids in sorted(by_gap.items()) if len(ids) > 1}
    cap = {g: t - instance.gap_by_id[g].capacity for g, t in sorted(load.items())
           if t > instance.gap_by_id[g].capacity}
    return ConstraintReport(ships, gaps, cap)


def penalty_scale_warning(instance: SspInstance, lam: float = DEFAULT_LAMBDA) -> str | None:
    """Message when a normalized value exceeds ``lam`` (penalties may not bind)."""
    if instance.n == 0:
        return None
    v, _, _ = normalized_arrays(instance)
    vmax = float(v.max())
    if vmax > lam:
        return (f"max normalized value {vmax:.3f} exceeds penalty weight {lam}; "
                "exclusivity penalties may not bind at the ground state")
    return None


# -- export ------------------------------------------------------------------

def qubo_to_json(qubo: QuboModel) -> str:
    doc = {
        "kind": "qubo",
        "n": qubo.n,
        "offset": qubo.offset,
        "lambda": qubo.lam,
        "normalization": qubo.normalization,
        "linear": [float(x) for x in qubo.linear],
        "quadratic": [[a, b, v] for (a, b), v in sorted(qubo.quadratic.items())],
    }
    return json.dumps(doc, indent=1) + "\n"


def ising_to_json(hamiltonian: IsingHamiltonian, pruned: PrunedHamiltonian | None = None) -> str:
    doc = {
        "kind": "ising",
        "n": hamiltonian.n,
        "e0": hamiltonian.e0,
        "h": [float(x) for x in hamiltonian.h],
        "j": [[a, b, v] for (a, b), v in sorted(hamiltonian.j.items())],
    }
    if pruned is not None:
        doc["pruned"] = {"budget": pruned.budget, "kept_pairs": [list(p) for p in pruned.kept_pairs]}
    return json.dumps(doc, indent=1) + "\n"


def ising_from_json(text: str) -> IsingHamiltonian:
    doc = json.loads(text)
    return IsingHamiltonian(int(doc["n"]), float(doc["e0"]), np.array(doc["h"], dtype=float),
                            {(int(a), int(b)): float(v) for a, b, v in doc["j"]})


def encode(instance: SspInstance, lam: float = DEFAULT_LAMBDA, p: int | None = None):
    """Convenience: ``(qubo, hamiltonian, pruned)``; ``pruned`` only if ``p`` is given."""
    qubo = build_qubo(instance, lam)
    ham = qubo_to_ising(qubo)
    return qubo, ham, (prune(ham, p) if p is not None else None)
