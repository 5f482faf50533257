"""Shipment-selection instances: data model, synthetic generator and file format.

An instance is a set of idle schedule gaps, each with a time capacity and a
list of candidate insertion sequences. Every sequence carries a value, a
duration, the shipments it serves and a drive distance. Pairwise interactions
between sequences in different gaps come from a flow matrix over sequences and
a distance matrix over gap locations.

Variables are indexed canonically: gaps sorted by id, sequences sorted by id
within their gap. ``SspInstance.variables`` lists the (gap_id, seq_id) pair of
every variable in that order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, FormatError, UnknownIdError, ValidationError

GENERATOR_VERSION = "ssp-synth-1"
MAX_GAP_HOURS = 10.0


@dataclass(frozen=True)
class Shipment:
    id: str


@dataclass(frozen=True)
class Gap:
    id: str
    capacity: float
    location_index: int


@dataclass(frozen=True)
class Sequence:
    id: str
    gap_id: str
    value: float
    duration: float
    shipments: frozenset
    drive_distance: float = 0.0


def _as_matrix(rows) -> tuple:
    return tuple(tuple(float(x) for x in row) for row in rows)


@dataclass(frozen=True)
class SspInstance:
    """A validated, immutable shipment-selection problem.

    ``flow`` is indexed by position in ``sequences`` (the stored order), and
    ``gap_distance`` by ``Gap.location_index``.
    """

    gaps: tuple
    sequences: tuple
    shipments: tuple
    flow: tuple
    gap_distance: tuple
    lambda_q: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(self.gaps))
        object.__setattr__(self, "sequences", tuple(self.sequences))
        object.__setattr__(self, "shipments", tuple(self.shipments))
        object.__setattr__(self, "flow", _as_matrix(self.flow))
        object.__setattr__(self, "gap_distance", _as_matrix(self.gap_distance))
        object.__setattr__(self, "lambda_q", float(self.lambda_q))
        object.__setattr__(self, "meta", dict(self.meta))
        self._validate()

    def _validate(self):
        def unique(ids, what):
            seen = set()
            for i in ids:
                if i in seen:
                    raise ValidationError(f"duplicate {what} id {i!r}: {what} ids must be unique")
                seen.add(i)
            return seen

        ship_ids = unique([s.id for s in self.shipments], "shipment")
        gap_ids = unique([g.id for g in self.gaps], "gap")
        unique([q.id for q in self.sequences], "sequence")

        nd = len(self.gap_distance)
        for row in self.gap_distance:
            if len(row) != nd:
                raise ValidationError("gap_distance must be square")
        d = np.array(self.gap_distance, dtype=float).reshape(nd, nd)
        if nd and not np.array_equal(d, d.T):
            raise ValidationError("gap_distance must be symmetric")
        if nd and np.any(np.diag(d) != 0.0):
            raise ValidationError("gap_distance must have a zero diagonal")
        if np.any(~np.isfinite(d)) or np.any(d < 0):
            raise ValidationError("gap_distance entries must be finite and nonnegative")

        for g in self.gaps:
            if not (g.capacity >= 0 and math.isfinite(g.capacity)):
                raise ValidationError(f"gap {g.id!r}: capacity must be >= 0")
            if not 0 <= g.location_index < nd:
                raise ValidationError(
                    f"gap {g.id!r}: location_index {g.location_index} out of range for "
                    f"gap_distance with {nd} rows")

        for q in self.sequences:
            if q.gap_id not in gap_ids:
                raise ValidationError(f"sequence {q.id!r}: unknown gap {q.gap_id!r}")
            if not (q.duration > 0 and math.isfinite(q.duration)):
                raise ValidationError(f"sequence {q.id!r}: duration must be > 0")
            if not math.isfinite(q.value):
                raise ValidationError(f"sequence {q.id!r}: value must be finite")
            if not q.shipments:
                raise ValidationError(f"sequence {q.id!r}: shipment set must be nonempty")
            missing = set(q.shipments) - ship_ids
            if missing:
                raise ValidationError(
                    f"sequence {q.id!r}: shipments {sorted(missing)} not in the instance")
            if q.drive_distance < 0:
                raise ValidationError(f"sequence {q.id!r}: drive_distance must be >= 0")

        n = len(self.sequences)
        if len(self.flow) != n or any(len(row) != n for row in self.flow):
            raise ValidationError(f"flow must be square with side {n} (number of sequences)")
        if n and (np.any(~np.isfinite(self.flow_array)) or np.any(self.flow_array < 0)):
            raise ValidationError("flow entries must be finite and nonnegative")
        if not (self.lambda_q >= 0 and math.isfinite(self.lambda_q)):
            raise ValidationError("lambda_q must be >= 0")

    # -- canonical variable layout -------------------------------------------

    @property
    def n(self) -> int:
        return len(self.sequences)

    @cached_property
    def _order(self) -> list:
        keyed = sorted(range(len(self.sequences)),
                       key=lambda i: (self.sequences[i].gap_id, self.sequences[i].id))
        return keyed

    @cached_property
    def variables(self) -> tuple:
        """(gap_id, seq_id) of each variable, in canonical order."""
        return tuple((self.sequences[i].gap_id, self.sequences[i].id) for i in self._order)

    @cached_property
    def _index(self) -> dict:
        return {pair: k for k, pair in enumerate(self.variables)}

    @cached_property
    def positions(self) -> np.ndarray:
        """Stored position (row of ``flow``) of every variable."""
        return np.array(self._order, dtype=int)

    def sequence_at(self, var: int) -> Sequence:
        return self.sequences[self._order[var]]

    @cached_property
    def gap_ids(self) -> tuple:
        return tuple(sorted(g.id for g in self.gaps))

    @cached_property
    def gap_by_id(self) -> dict:
        return {g.id: g for g in self.gaps}

    @cached_property
    def gap_of(self) -> np.ndarray:
        """Index into ``gap_ids`` of each variable's gap."""
        lookup = {gid: k for k, gid in enumerate(self.gap_ids)}
        return np.array([lookup[g] for g, _ in self.variables], dtype=int)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([self.gap_by_id[g].capacity for g in self.gap_ids], dtype=float)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([self.sequence_at(k).value for k in range(self.n)], dtype=float)

    @cached_property
    def durations(self) -> np.ndarray:
        return np.array([self.sequence_at(k).duration for k in range(self.n)], dtype=float)

    @cached_property
    def drive_distances(self) -> np.ndarray:
        return np.array([self.sequence_at(k).drive_distance for k in range(self.n)], dtype=float)

    @cached_property
    def flow_array(self) -> np.ndarray:
        n = len(self.sequences)
        return np.array(self.flow, dtype=float).reshape(n, n)

    @cached_property
    def distance_array(self) -> np.ndarray:
        nd = len(self.gap_distance)
        return np.array(self.gap_distance, dtype=float).reshape(nd, nd)

    @cached_property
    def interaction_matrix(self) -> np.ndarray:
        """Raw symmetric pairwise weights ``lambda_q * f * d`` between variables.

        Same-gap pairs and the diagonal are zero. For each unordered pair the
        flow entry with the smaller stored index as row is used.
        """
        n = self.n
        if n == 0:
            return np.zeros((0, 0))
        pos = self.positions
        fv = self.flow_array[np.ix_(pos, pos)]
        upper = pos[:, None] < pos[None, :]
        f_sel = np.where(upper, fv, fv.T)
        loc = np.array([self.gap_by_id[self.gap_ids[g]].location_index for g in self.gap_of])
        d = self.distance_array[np.ix_(loc, loc)]
        w = self.lambda_q * f_sel * d
        w[self.gap_of[:, None] == self.gap_of[None, :]] = 0.0
        return w

    @cached_property
    def shipment_overlap(self) -> np.ndarray:
        """Number of shipments shared by each pair of variables (diagonal zeroed)."""
        n = self.n
        out = np.zeros((n, n), dtype=int)
        sets = [self.sequence_at(k).shipments for k in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                c = len(sets[a] & sets[b])
                out[a, b] = out[b, a] = c
        return out


def variable_index(instance: SspInstance, gap_id: str, seq_id: str) -> int:
    """Canonical qubit index of the variable selecting ``seq_id`` in ``gap_id``."""
    try:
        return instance._index[(gap_id, seq_id)]
    except KeyError:
        raise UnknownIdError(f"no sequence {seq_id!r} in gap {gap_id!r}") from None


# -- synthetic generator -----------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs of the synthetic weekly-schedule generator.

    Each of ``cancellations`` removed shipments lands on a random
    (vehicle, day) slot; cancellations sharing a slot merge into one gap.
    """

    num_vehicles: int = 5
    horizon_days: int = 5
    cancellations: int = 11
    sequences_per_gap_mean: float = 6.9
    min_gap_hours: float = 2.0
    seed: int = 0
    lambda_q: float = 1.0

    def validate(self):
        if self.num_vehicles < 1 or self.horizon_days < 1:
            raise ConfigError("num_vehicles and horizon_days must be positive")
        if self.cancellations < 0:
            raise ConfigError("cancellations must be >= 0")
        if not self.sequences_per_gap_mean > 0:
            raise ConfigError("sequences_per_gap_mean must be positive")
        if not self.min_gap_hours > 0:
            raise ConfigError("min_gap_hours must be positive")
        if self.lambda_q < 0:
            raise ConfigError("lambda_q must be >= 0")


def generate_instance(config: ScenarioConfig) -> SspInstance:
    """Sample a reproducible cancellation scenario from ``config``."""
    config.validate()
    rng = np.random.default_rng(config.seed)

    n_slots = config.num_vehicles * config.horizon_days
    slots = sorted(set(rng.integers(0, n_slots, size=config.cancellations).tolist()))
    n_gaps = len(slots)
    hi = max(MAX_GAP_HOURS, config.min_gap_hours)
    capacities = rng.uniform(config.min_gap_hours, hi, size=n_gaps)
    locations = rng.uniform(0.0, 1.0, size=(n_gaps, 2))
    counts = rng.poisson(config.sequences_per_gap_mean, size=n_gaps)

    n = int(counts.sum())
    pool = max(1, math.ceil(0.8 * n))
    shipments = [Shipment(f"s{k:03d}") for k in range(pool)] if n else []

    gaps = []
    sequences = []
    for k in range(n_gaps):
        gid = f"g{k:03d}"
        gaps.append(Gap(gid, float(capacities[k]), k))
        for j in range(int(counts[k])):
            size = 2 if (pool >= 2 and rng.random() < 0.25) else 1
            picked = rng.choice(pool, size=size, replace=False)
            duration = float(rng.uniform(0.5, capacities[k] + 1.0))
            sequences.append(Sequence(
                id=f"{gid}-q{j:03d}",
                gap_id=gid,
                value=float(rng.lognormal(math.log(10.0), 0.5)),
                duration=duration,
                shipments=frozenset(shipments[int(i)].id for i in picked),
                drive_distance=float(duration * rng.uniform(40.0, 70.0)),
            ))

    cap_of = {g.id: g.capacity for g in gaps}
    if sequences and all(q.duration > cap_of[q.gap_id] for q in sequences):
        q = sequences[0]
        cap = cap_of[q.gap_id]
        sequences[0] = Sequence(q.id, q.gap_id, q.value, float(rng.uniform(0.5, max(cap, 0.5))),
                                q.shipments, q.drive_distance)

    flow = rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(flow, 0.0)
    diff = locations[:, None, :] - locations[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)

    meta = {
        "seed": config.seed,
        "generator_version": GENERATOR_VERSION,
        "config": {
            "num_vehicles": config.num_vehicles,
            "horizon_days": config.horizon_days,
            "cancellations": config.cancellations,
            "sequences_per_gap_mean": config.sequences_per_gap_mean,
            "min_gap_hours": config.min_gap_hours,
            "lambda_q": config.lambda_q,
        },
    }
    return SspInstance(gaps, sequences, shipments, flow.tolist(), dist.tolist(),
                       config.lambda_q, meta)


def sample_instances(config: ScenarioConfig, count: int, n_min: int = 1,
                     n_max: int | None = None, max_tries: int = 100000) -> list:
    """The first ``count`` instances with ``n_min <= n <= n_max``, scanning
    seeds upward from ``config.seed``."""
    out = []
    seed = config.seed
    for _ in range(max_tries):
        inst = generate_instance(_with_seed(config, seed))
        if inst.n >= n_min and (n_max is None or inst.n <= n_max):
            out.append(inst)
            if len(out) == count:
                return out
        seed += 1
    raise ConfigError(f"only {len(out)} instances with {n_min} <= n <= {n_max} "
                      f"after {max_tries} seeds")


def _with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    from dataclasses import replace
    return replace(config, seed=seed)


# -- file format -------------------------------------------------------------

def instance_to_dict(instance: SspInstance) -> dict:
    return {
        "gaps": [{"id": g.id, "capacity": g.capacity, "location_index": g.location_index}
                 for g in instance.gaps],
        "sequences": [{"id": q.id, "gap_id": q.gap_id, "value": q.value,
                       "duration": q.duration, "shipments": sorted(q.shipments),
                       "drive_distance": q.drive_distance}
                      for q in instance.sequences],
        "shipments": [s.id for s in instance.shipments],
        "flow": [list(row) for row in instance.flow],
        "gap_distance": [list(row) for row in instance.gap_distance],
        "lambda_q": instance.lambda_q,
        "meta": instance.meta,
    }


def dumps_instance(instance: SspInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1, sort_keys=False) + "\n"


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def instance_from_dict(doc: dict) -> SspInstance:
    try:
        gaps = [Gap(str(_field(g, "id", f"gaps[{i}]")),
                    float(_field(g, "capacity", f"gaps[{i}]")),
                    int(_field(g, "location_index", f"gaps[{i}]")))
                for i, g in enumerate(_field(doc, "gaps", "document"))]
        sequences = []
        for i, q in enumerate(_field(doc, "sequences", "document")):
            where = f"sequences[{i}]"
            sequences.append(Sequence(
                id=str(_field(q, "id", where)),
                gap_id=str(_field(q, "gap_id", where)),
                value=float(_field(q, "value", where)),
                duration=float(_field(q, "duration", where)),
                shipments=frozenset(str(s) for s in _field(q, "shipments", where)),
                drive_distance=float(q.get("drive_distance", 0.0)),
            ))
        shipments = []
        for i, s in enumerate(_field(doc, "shipments", "document")):
            shipments.append(Shipment(str(s["id"] if isinstance(s, dict) else s)))
        flow = _field(doc, "flow", "document")
        dist = _field(doc, "gap_distance", "document")
        lambda_q = float(_field(doc, "lambda_q", "document"))
        meta = doc.get("meta", {})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed instance document: {exc}") from exc
    return SspInstance(gaps, sequences, shipments, flow, dist, lambda_q, meta)


def loads_instance(text: str) -> SspInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)


def save_instance(instance: SspInstance, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_instance(instance), encoding="utf-8")
    tmp.replace(path)


def load_instance(path) -> SspInstance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))


def describe(instance: SspInstance) -> dict[str, Any]:
    """Summary statistics comparable to the benchmark table columns."""
    sizes = [sum(1 for g, _ in instance.variables if g == gid) for gid in instance.gap_ids]
    return {
        "gaps": len(instance.gaps),
        "n": instance.n,
        "mean_sequences_per_gap": float(np.mean(sizes)) if sizes else 0.0,
    }
