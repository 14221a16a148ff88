"""Synthetic transactions with latent behavior groups.

Each group has its own log-rate and log-amount per (class, direction)
block.  Customers perturb their group's parameters by ``noise_scale``
(log space) and draw Poisson transaction counts and log-normal amounts.
"""

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone

import numpy as np

from .exceptions import ProfileError
from .profiling import ProfileSchema, TransactionRecord

BASE_RATE = 6.0
BASE_AMOUNT = 500.0


@dataclass(frozen=True)
class SynthSpec:
    n_customers: int = 500
    schema: ProfileSchema = field(default_factory=ProfileSchema.default)
    n_behavior_groups: int = 3
    group_separation: float = 3.0
    noise_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_customers < 1:
            raise ProfileError("n_customers must be positive")
        if not 1 <= self.n_behavior_groups <= self.n_customers:
            raise ProfileError("n_behavior_groups must be in [1, n_customers]")
        if not (self.group_separation > 0 and self.noise_scale > 0):
            raise ProfileError("group_separation and noise_scale must be positive")


PRESETS = {
    "small": SynthSpec(),
    "full": SynthSpec(n_customers=4099),
}


def preset(name, **overrides):
    try:
        return replace(PRESETS[name], **overrides)
    except KeyError:
        raise ProfileError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None


def customer_ids(n):
    width = len(str(n))
    return [f"C{i:0{width}d}" for i in range(1, n + 1)]


def synth_dataset(spec):
    """Return ``(transactions, true_groups)``.

    ``true_groups[i]`` belongs to the ``i``-th customer in sorted-id order,
    which is also the row order of :func:`build_profiles`.  Every customer
    gets at least one transaction so none drops out of the profile matrix.
    """
    schema = spec.schema
    blocks = schema.blocks
    rng = np.random.default_rng(spec.seed)
    n, g_count, n_blocks = spec.n_customers, spec.n_behavior_groups, len(blocks)

    spread = 0.5 * spec.group_separation
    group_rate = np.log(BASE_RATE) + spread * rng.standard_normal((g_count, n_blocks))
    group_amount = np.log(BASE_AMOUNT) + spread * rng.standard_normal((g_count, n_blocks))
    groups = rng.permutation(np.arange(n) % g_count)

    start = datetime(schema.year, 1, 1, tzinfo=timezone.utc)
    year_seconds = int((datetime(schema.year + 1, 1, 1, tzinfo=timezone.utc) - start).total_seconds())

    records = []
    for cid, g in zip(customer_ids(n), groups):
        rates = np.exp(group_rate[g] + spec.noise_scale * rng.standard_normal(n_blocks))
        scales = group_amount[g] + spec.noise_scale * rng.standard_normal(n_blocks)
        counts = rng.poisson(rates)
        if counts.sum() == 0:
            counts[int(np.argmax(rates))] = 1
        for b, cnt in enumerate(counts):
            if cnt == 0:
                continue
            amounts = np.round(np.exp(scales[b] + spec.noise_scale * rng.standard_normal(cnt)), 2)
            amounts = np.maximum(amounts, 0.01)
            seconds = np.sort(rng.integers(0, year_seconds, size=cnt))
            cls_, direction = blocks[b]
            for amt, sec in zip(amounts, seconds):
                records.append(TransactionRecord(
                    cid, start + timedelta(seconds=int(sec)), cls_, direction, float(amt)))
    return records, groups.astype(np.int64)
