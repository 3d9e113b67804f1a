"""Scenario parameters, node placement, fading and channel availability."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InfeasibleError

FADING_MODES = ("per_channel", "per_user")
INTERFERENCE_MODES = ("weak", "strong")


@dataclass(frozen=True)
class Scenario:
    """All physical parameters of one network instance.

    Defaults: 100 meters, 60 channels, 100 m radius, 30 dB, path loss
    exponent 2, 1 W per cluster.
    """

    n_users: int = 100
    m_channels: int = 60
    coverage_radius: float = 100.0
    path_loss_exp: float = 2.0
    snr_db: float = 30.0
    cluster_power: float = 1.0
    # None means n_users / 2 clusters at cluster_power each
    total_power: float | None = None
    availability_prob: float = 0.5
    rng_seed: int = 0
    beta2: float = 1.0
    # "per_channel": independent Rayleigh draw per (user, channel);
    # "per_user": one draw per user shared by every channel.
    fading: str = "per_channel"
    # gain used in the interference term of the strong-user rate
    interference: str = "weak"
    min_distance: float = 1.0
    availability_retries: int = 100

    def __post_init__(self):
        if self.n_users < 2 or self.n_users % 2:
            raise ConfigError("n_users", f"must be even and >= 2, got {self.n_users}")
        if self.m_channels < self.n_users // 2:
            raise ConfigError(
                "m_channels",
                f"need at least n_users/2 = {self.n_users // 2} channels, got {self.m_channels}",
            )
        if not self.coverage_radius > 0:
            raise ConfigError("coverage_radius", "must be > 0")
        if not self.path_loss_exp >= 2:
            raise ConfigError("path_loss_exp", "must be >= 2")
        if not 0.0 <= self.availability_prob <= 1.0:
            raise ConfigError("availability_prob", "must lie in [0, 1]")
        if not 0.0 <= self.beta2 <= 1.0:
            raise ConfigError("beta2", "must lie in [0, 1]")
        if not self.cluster_power > 0:
            raise ConfigError("cluster_power", "must be > 0")
        if self.total_power is not None and not self.total_power > 0:
            raise ConfigError("total_power", "must be > 0")
        if not 0 < self.min_distance <= self.coverage_radius:
            raise ConfigError("min_distance", "must lie in (0, coverage_radius]")
        if self.fading not in FADING_MODES:
            raise ConfigError("fading", f"expected one of {FADING_MODES}")
        if self.interference not in INTERFERENCE_MODES:
            raise ConfigError("interference", f"expected one of {INTERFERENCE_MODES}")
        if self.availability_retries < 1:
            raise ConfigError("availability_retries", "must be >= 1")

    @property
    def n_clusters(self):
        return self.n_users // 2

    @property
    def beta1(self):
        return 1.0 - self.beta2

    @property
    def power_budget(self):
        if self.total_power is None:
            return self.n_clusters * self.cluster_power
        return self.total_power

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Topology:
    positions: np.ndarray  # (N, 2) metres, DC at the origin
    distances: np.ndarray  # (N,)
    fading_power: np.ndarray  # (N, M) |h|^2
    gains: np.ndarray  # (N, M) |h|^2 d^-chi

    @property
    def n_users(self):
        return self.gains.shape[0]

    @property
    def m_channels(self):
        return self.gains.shape[1]

    @property
    def user_gain(self):
        """Mean gain over channels, used to rank users by channel condition."""
        return self.gains.mean(axis=1)


@dataclass(frozen=True)
class AvailabilityMatrix:
    entries: np.ndarray = field(repr=False)  # (N, M) bool

    def __post_init__(self):
        arr = np.array(self.entries, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("availability must be a 2-D N x M array")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self):
        return self.entries.shape

    def shared(self, u, v):
        """Channels available to both users."""
        return self.entries[u] & self.entries[v]


def snr_linear(scenario: Scenario) -> float:
    return 10.0 ** (scenario.snr_db / 10.0)


def path_gain(distance, fading_power, path_loss_exp):
    return fading_power * np.power(distance, -path_loss_exp)


def generate_topology(scenario: Scenario, rng: np.random.Generator) -> Topology:
    """Uniform placement over the coverage disc plus Rayleigh fading.

    Radii are drawn on the unit disc and scaled, so two scenarios differing
    only in coverage radius or path loss see the same underlying geometry
    for the same stream.
    """
    n, m = scenario.n_users, scenario.m_channels
    unit_r = np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    radius = np.maximum(scenario.coverage_radius * unit_r, scenario.min_distance)
    positions = np.column_stack((radius * np.cos(theta), radius * np.sin(theta)))

    n_draws = m if scenario.fading == "per_channel" else 1
    iq = rng.standard_normal((n, n_draws, 2))
    fading = 0.5 * (iq ** 2).sum(axis=2)
    if n_draws == 1:
        fading = np.repeat(fading, m, axis=1)

    gains = path_gain(radius[:, None], fading, scenario.path_loss_exp)
    return Topology(positions=positions, distances=radius, fading_power=fading, gains=gains)


def generate_availability(scenario: Scenario, rng: np.random.Generator) -> AvailabilityMatrix:
    """I.i.d. Bernoulli availability, redrawn while some user has no channel."""
    n, m = scenario.n_users, scenario.m_channels
    q = scenario.availability_prob
    for _ in range(scenario.availability_retries):
        entries = rng.random((n, m)) < q
        starved = np.flatnonzero(~entries.any(axis=1))
        if starved.size == 0:
            return AvailabilityMatrix(entries)
    raise InfeasibleError(
        f"user {int(starved[0])} has no available channel after "
        f"{scenario.availability_retries} draws (availability_prob={q})"
    )


# --- configuration files ---------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines with ``#`` comments into a dict of strings."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), comment_prefixes=("#",), interpolation=None
    )
    parser.optionxform = str
    try:
        parser.read_string("[_root]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", f"malformed configuration: {exc}") from None
    return dict(parser["_root"])


def read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text)


def _coerce(name, raw, kind):
    raw = raw.strip()
    if raw.lower() in ("none", "") and "None" in kind:
        return None
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {kind}") from None
    return raw


_SCENARIO_FIELDS = {f.name: f.type for f in dataclasses.fields(Scenario)}


def scenario_from_mapping(mapping, base: Scenario | None = None, strict=True) -> Scenario:
    """Build a Scenario from string values; unknown keys are an error when strict."""
    values = {}
    for key, raw in mapping.items():
        if key not in _SCENARIO_FIELDS:
            if strict:
                raise ConfigError(key, "unknown scenario parameter")
            continue
        values[key] = _coerce(key, raw, str(_SCENARIO_FIELDS[key])) if isinstance(raw, str) else raw
    base = base or Scenario()
    return dataclasses.replace(base, **values)


def load_scenario(path) -> Scenario:
    return scenario_from_mapping(read_config(path))


# --- CSV debugging dumps ---------------------------------------------------

def topology_csv(topology: Topology, avail: AvailabilityMatrix | None = None) -> str:
    """One row per user: position, distance, per-channel gains, 0/1 availability."""
    m = topology.m_channels
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["user", "x", "y", "distance"] + [f"gain_{c}" for c in range(m)]
    if avail is not None:
        header += [f"avail_{c}" for c in range(m)]
    writer.writerow(header)
    for u in range(topology.n_users):
        row = [u, repr(float(topology.positions[u, 0])), repr(float(topology.positions[u, 1])),
               repr(float(topology.distances[u]))]
        row += [repr(float(g)) for g in topology.gains[u]]
        if avail is not None:
            row += [int(a) for a in avail.entries[u]]
        writer.writerow(row)
    return buf.getvalue()


def write_topology_csv(path, topology, avail=None):
    Path(path).write_text(topology_csv(topology, avail), encoding="utf-8")
