"""Stochastic generation of a network snapshot for one time slot.

Randomness comes from :class:`StableRng`, a PCG64 bit stream whose 64-bit
outputs are turned into doubles here rather than by numpy's distribution
code, so a seed yields the same bikes on every numpy version and platform.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import List, Sequence, Tuple

import numpy as np

from .model import NetworkState, Station, overflow_cap

_INV_2_53 = 1.0 / 9007199254740992.0
# above this, exp(-lam) underflows; draws are split into smaller Poisson sums
_MAX_INVERSION_LAMBDA = 600.0
_INTERARRIVAL_MAX = 30.0


class StableRng:
    """Seedable uniform source with a platform-stable stream."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits of one PCG64 output."""
        return (int(self._bits.random_raw()) >> 11) * _INV_2_53


def poisson_sample(lam: float, rng: StableRng) -> int:
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"Poisson rate must be finite and >= 0, got {lam}")
    if lam == 0:
        return 0
    if lam > _MAX_INVERSION_LAMBDA:
        parts = math.ceil(lam / _MAX_INVERSION_LAMBDA)
        return sum(poisson_sample(lam / parts, rng) for _ in range(parts))
    if lam < _INTERARRIVAL_MAX:
        # count unit-rate exponential arrivals before time lam, as a product of uniforms
        limit = math.exp(-lam)
        k, prod = 0, 1.0 - rng.uniform()
        while prod > limit:
            k += 1
            prod *= 1.0 - rng.uniform()
        return k
    # sequential CDF inversion
    u = rng.uniform()
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u >= cdf:
        k += 1
        p *= lam / k
        if p == 0.0:
            break
        cdf += p
    return k


def poisson_pmf(k: int, lam: float) -> float:
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1)) if lam > 0 else float(k == 0)


def multinomial_sample(total: int, probs: Sequence[float], rng: StableRng) -> List[int]:
    """Drop ``total`` items one at a time into categories with the given probabilities."""
    if total < 0:
        raise ValueError("total must be >= 0")
    if not probs:
        raise ValueError("probs must be non-empty")
    if any((not math.isfinite(p)) or p < 0 for p in probs):
        raise ValueError("probabilities must be finite and non-negative")
    s = math.fsum(probs)
    if abs(s - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {s}, not 1")
    cum = []
    acc = 0.0
    for p in probs:
        acc += p
        cum.append(acc)
    last = max(i for i, p in enumerate(probs) if p > 0)
    counts = [0] * len(probs)
    for _ in range(total):
        k = bisect.bisect_right(cum, rng.uniform() * acc)
        counts[min(k, last)] += 1
    return counts


@dataclass(frozen=True)
class SlotUtilization:
    slot: str
    regular_util: float
    special_util: float
    regular_base: float
    special_base: float

    def __post_init__(self):
        for name in ("regular_util", "special_util", "regular_base", "special_base"):
            v = getattr(self, name)
            if not 0 <= v <= 1.2:
                raise ValueError(f"slot {self.slot}: {name}={v} outside [0, 1.2]")
        if self.regular_base > 1 or self.special_base > 1:
            raise ValueError(f"slot {self.slot}: baseline fractions must be <= 1")


@dataclass(frozen=True)
class UtilizationProfile:
    slots: Tuple[SlotUtilization, ...]

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        labels = [s.slot for s in self.slots]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate slot labels in profile")

    def get(self, slot: str) -> SlotUtilization:
        for s in self.slots:
            if s.slot == slot:
                return s
        raise KeyError(f"unknown slot {slot!r}; profile has {[s.slot for s in self.slots]}")

    @property
    def labels(self) -> List[str]:
        return [s.slot for s in self.slots]


REFERENCE_SLOT = "day"


def default_profile() -> UtilizationProfile:
    """Built-in profile.

    Only ``day`` (79% / 80% regular, 68% / 90% metro and school ports) is
    observed data. The other slots are made-up shapes with fewer docked bikes
    at the commuting peaks.
    """
    return UtilizationProfile((
        SlotUtilization(REFERENCE_SLOT, 0.79, 0.68, 0.80, 0.90),
        SlotUtilization("morning", 0.62, 0.45, 0.75, 0.85),
        SlotUtilization("evening", 0.66, 0.52, 0.75, 0.85),
        SlotUtilization("night", 0.92, 0.88, 0.80, 0.90),
    ))


PROFILE_FIELDS = ["slot", "regular_util", "special_util", "regular_base", "special_base"]


def read_profile(path) -> UtilizationProfile:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != PROFILE_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(PROFILE_FIELDS)}")
        return UtilizationProfile(tuple(
            SlotUtilization(row["slot"], *(float(row[k]) for k in PROFILE_FIELDS[1:])) for row in reader
        ))


def write_profile(profile: UtilizationProfile, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PROFILE_FIELDS)
        for s in profile.slots:
            w.writerow([s.slot, s.regular_util, s.special_util, s.regular_base, s.special_base])


@dataclass(frozen=True)
class SimConfig:
    seed: int = 42
    slot: str = REFERENCE_SLOT
    cap_factor: float = 1.2
    profile: UtilizationProfile = field(default_factory=default_profile)

    def __post_init__(self):
        if self.cap_factor < 1:
            raise ValueError("cap_factor must be >= 1")


@dataclass
class SimTrace:
    """Bookkeeping from one generate_state call, used by conservation checks."""

    raw: List[int] = field(default_factory=list)
    total_before: int = 0
    total_after: int = 0
    stripped: int = 0
    passes: int = 0
    residue: int = 0


def round_half_up(x: Decimal) -> int:
    return int(x.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def baseline_for(station: Station, util: SlotUtilization) -> int:
    pct = util.special_base if station.tag.special else util.regular_base
    return round_half_up(Decimal(str(pct)) * station.capacity)


def generate_state(
    stations: Sequence[Station],
    config: SimConfig,
    rng: StableRng | None = None,
    trace: SimTrace | None = None,
) -> NetworkState:
    if not stations:
        raise ValueError("no stations")
    rng = rng if rng is not None else StableRng(config.seed)
    util = config.profile.get(config.slot)
    caps = [s.capacity for s in stations]

    baseline = [baseline_for(s, util) for s in stations]
    raw = [
        poisson_sample(s.capacity * (util.special_util if s.tag.special else util.regular_util), rng)
        for s in stations
    ]
    total_before = sum(raw)

    # strip everything above rack capacity into a shared pool
    current = [min(r, c) for r, c in zip(raw, caps)]
    pool = total_before - sum(current)
    stripped = pool

    weight_sum = sum(caps)
    probs = [c / weight_sum for c in caps]
    limits = [overflow_cap(c, config.cap_factor) for c in caps]

    passes = 0
    while pool > 0:
        passes += 1
        add = multinomial_sample(pool, probs, rng)
        new_pool = 0
        for i, a in enumerate(add):
            v = current[i] + a
            if v > limits[i]:
                new_pool += v - limits[i]
                v = limits[i]
            current[i] = v
        if new_pool >= pool:
            pool = new_pool
            break
        pool = new_pool

    residue = pool
    for i in range(len(current)):
        if pool == 0:
            break
        room = limits[i] - current[i]
        if room > 0:
            take = min(room, pool)
            current[i] += take
            pool -= take
    if pool:
        raise ValueError(f"{pool} bikes do not fit under the overflow caps")

    if trace is not None:
        trace.raw = raw
        trace.total_before = total_before
        trace.total_after = sum(current)
        trace.stripped = stripped
        trace.passes = passes
        trace.residue = residue
    return NetworkState(tuple(current), tuple(baseline))


STATE_FIELDS = ["id", "current", "baseline"]


def write_state(state: NetworkState, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(STATE_FIELDS)
        for i, (c, b) in enumerate(zip(state.current, state.baseline)):
            w.writerow([i, c, b])


def read_state(path) -> NetworkState:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != STATE_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(STATE_FIELDS)}")
        rows = list(reader)
    for k, row in enumerate(rows):
        if int(row["id"]) != k:
            raise ValueError(f"{path}: state ids must be 0..n-1 in order")
    if not rows:
        raise ValueError(f"{path}: empty state")
    return NetworkState(tuple(int(r["current"]) for r in rows), tuple(int(r["baseline"]) for r in rows))
