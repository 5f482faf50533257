import numpy as np
import pytest

from ssp_qaoa.instance import Gap, ScenarioConfig, Sequence, Shipment, SspInstance, sample_instances

# Small instances where everything can be enumerated.
DESK = ScenarioConfig(cancellations=5, sequences_per_gap_mean=2.5)


def make_instance(gaps, seqs, flow=None, dist=None, lambda_q=1.0):
    """``gaps``: list of capacities. ``seqs``: list of dicts with keys gap,
    value, duration, ships and optionally dist. Gap ``i`` is ``g{i}`` with
    location ``i``; sequence ``k`` is ``q{k:02d}``."""
    ng = len(gaps)
    gap_objs = tuple(Gap(f"g{i}", float(c), i) for i, c in enumerate(gaps))
    seq_objs = tuple(
        Sequence(f"q{k:02d}", f"g{s['gap']}", float(s["value"]), float(s["duration"]),
                 frozenset(s["ships"]), float(s.get("dist", 0.0)))
        for k, s in enumerate(seqs))
    ship_ids = sorted({x for s in seqs for x in s["ships"]})
    n = len(seqs)
    if flow is None:
        flow = np.zeros((n, n))
    if dist is None:
        dist = np.zeros((ng, ng))
    return SspInstance(gap_objs, seq_objs, tuple(Shipment(x) for x in ship_ids),
                       np.asarray(flow, float).tolist(), np.asarray(dist, float).tolist(),
                       lambda_q)


def random_instance(rng, n_gaps, per_gap, lambda_q=1.0, share=0.3, overload=True):
    """Random hand-built instance; sequences per gap fixed, shipments shared
    with probability ``share``."""
    seqs = []
    caps = rng.uniform(2.0, 10.0, n_gaps)
    pool = max(1, int(n_gaps * per_gap * (1 - share)))
    for g in range(n_gaps):
        for _ in range(per_gap):
            hi = caps[g] + 1.0 if overload else caps[g]
            seqs.append({"gap": g, "value": rng.lognormal(np.log(10), 0.5),
                         "duration": rng.uniform(0.5, hi),
                         "ships": [f"s{int(rng.integers(pool))}"]})
    n = len(seqs)
    flow = rng.uniform(0, 1, (n, n))
    np.fill_diagonal(flow, 0.0)
    pts = rng.uniform(0, 1, (n_gaps, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    return make_instance(caps, seqs, flow, dist, lambda_q)


@pytest.fixture
def build():
    return make_instance


@pytest.fixture(scope="session")
def desk_instances():
    return sample_instances(DESK, 20, 8, 12)
