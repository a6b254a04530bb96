"""Cellular scenario generation.

Hexagonal base-station layouts, uniform user drops, and composite
path-loss / log-normal-shadowing / Rayleigh-fading uplink channels with
unit-variance noise (transmit power absorbed into the channel matrix).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ScenarioError(RuntimeError):
    """A valid scenario could not be generated."""


# Cell hexagons have their edge normals pointing at the six neighboring
# sites; these are the three distinct edge-normal axes (unit vectors).
_HEX_AXES = np.array(
    [
        [1.0, 0.0],
        [0.5, 0.5 * math.sqrt(3.0)],
        [-0.5, 0.5 * math.sqrt(3.0)],
    ]
)


@dataclass(frozen=True)
class NetworkGeometry:
    """Base-station sites plus the antenna bookkeeping derived from them."""

    bs_positions: np.ndarray  # (n_bs, 2), meters
    cell_radius_m: float
    antennas_per_bs: int

    def __post_init__(self):
        pos = np.asarray(self.bs_positions, dtype=float)
        object.__setattr__(self, "bs_positions", pos)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("bs_positions must be (n_bs, 2)")
        if self.cell_radius_m <= 0 or self.antennas_per_bs < 1:
            raise ValueError("cell radius and antenna count must be positive")
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if np.min(d) <= 0:
            raise ValueError("BS positions must be distinct")

    @property
    def n_bs(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.n_bs * self.antennas_per_bs

    @property
    def antenna_bs(self) -> np.ndarray:
        """Owning BS index of every antenna (antennas are contiguous per BS)."""
        return np.repeat(np.arange(self.n_bs), self.antennas_per_bs)

    def antennas_of(self, b: int) -> np.ndarray:
        a = self.antennas_per_bs
        return np.arange(b * a, (b + 1) * a)


@dataclass(frozen=True)
class ScenarioConfig:
    """All knobs of the simulated network; the seed fixes every random draw."""

    rings: int = 2
    cell_radius_m: float = 500.0
    antennas_per_bs: int = 1
    users_per_bs: int = 1
    system_snr_db: float = 6.2
    shadowing_sigma_db: float = 8.0
    pathloss_intercept_db: float = 148.1
    pathloss_slope: float = 37.6
    shadowing_enabled: bool = True
    fading_enabled: bool = True
    min_distance_m: float = 35.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.rings < 0:
            raise ValueError("rings must be >= 0")
        for name in (
            "cell_radius_m",
            "antennas_per_bs",
            "users_per_bs",
            "shadowing_sigma_db",
            "pathloss_intercept_db",
            "pathloss_slope",
            "min_distance_m",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        return cls(**parse_flat_config(Path(path).read_text(), cls))


def parse_flat_config(text: str, cls) -> dict:
    """Parse `key = value` lines into kwargs for a dataclass `cls`.

    Blank lines and `#` comments are ignored; unknown keys raise.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(value, fields[key].type)
    return out


def _coerce(value: str, annotation: str):
    ann = str(annotation)
    if "bool" in ann:
        lowered = value.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean from {value!r}")
    if "int" in ann:
        return int(value)
    if "float" in ann:
        return float(value)
    if "tuple" in ann or "list" in ann:
        items = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(_guess_scalar(v) for v in items)
    return value


def _guess_scalar(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def hex_layout(rings: int, cell_radius_m: float) -> "NetworkGeometry":
    """Hexagonal lattice of BS sites centered at the origin.

    Inter-site distance is sqrt(3) * cell_radius_m, giving
    1 + 3*rings*(rings+1) sites.
    """
    if rings < 0:
        raise ValueError("rings must be >= 0")
    isd = math.sqrt(3.0) * cell_radius_m
    sites = []
    for q in range(-rings, rings + 1):
        for r in range(-rings, rings + 1):
            if abs(q + r) > rings:
                continue
            x = isd * (q + 0.5 * r)
            y = isd * (0.5 * math.sqrt(3.0)) * r
            sites.append((x, y))
    sites.sort(key=lambda p: (round(p[1], 9), round(p[0], 9)))
    return NetworkGeometry(np.array(sites), cell_radius_m, antennas_per_bs=1)


def with_antennas(geometry: NetworkGeometry, antennas_per_bs: int) -> NetworkGeometry:
    return NetworkGeometry(geometry.bs_positions, geometry.cell_radius_m, antennas_per_bs)


def path_loss_db(d_km: float, intercept_db: float = 148.1, slope: float = 37.6):
    """Urban path loss in dB at distance `d_km` kilometers (d must be > 0)."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss undefined for nonpositive distance")
    return intercept_db + slope * np.log10(d)


def snr_offset_db(config: ScenarioConfig) -> float:
    """Transmit-power offset making the cell-edge SNR equal system_snr_db.

    With unit noise power, offset - PL(cell_radius) = system_snr_db; median
    shadowing (0 dB) and unit-mean fading drop out of the average.
    """
    edge_pl = path_loss_db(
        config.cell_radius_m / 1000.0,
        config.pathloss_intercept_db,
        config.pathloss_slope,
    )
    return config.system_snr_db + float(edge_pl)


def point_in_hex(points: np.ndarray, center: np.ndarray, cell_radius_m: float) -> np.ndarray:
    """Vectorized membership test for the hexagonal cell around `center`."""
    rel = np.atleast_2d(points) - center
    apothem = 0.5 * math.sqrt(3.0) * cell_radius_m
    proj = np.abs(rel @ _HEX_AXES.T)
    return np.all(proj < apothem, axis=-1)


def _sample_in_hex(rng: np.random.Generator, cell_radius_m: float) -> np.ndarray:
    # Rejection sampling from the bounding box; acceptance ratio ~0.65.
    apothem = 0.5 * math.sqrt(3.0) * cell_radius_m
    while True:
        p = rng.uniform([-cell_radius_m, -apothem], [cell_radius_m, apothem])
        if point_in_hex(p, np.zeros(2), cell_radius_m)[0]:
            return p


def drop_users(
    geometry: NetworkGeometry, config: ScenarioConfig, rng: np.random.Generator
) -> np.ndarray:
    """Drop users_per_bs MS positions uniformly inside every hexagonal cell.

    Points closer than min_distance_m to the cell site are resampled, so the
    returned positions respect the distance clamp by construction.
    """
    positions = np.empty((config.users_per_bs * geometry.n_bs, 2))
    i = 0
    for center in geometry.bs_positions:
        for _ in range(config.users_per_bs):
            while True:
                p = _sample_in_hex(rng, geometry.cell_radius_m)
                if np.hypot(p[0], p[1]) >= config.min_distance_m:
                    break
            positions[i] = center + p
            i += 1
    return positions


@dataclass(frozen=True)
class ChannelRealization:
    """One uplink channel draw.

    H[a, u] is the coefficient from MS u to antenna a with transmit power
    absorbed, so the noise covariance is the identity.  long_term_gain holds
    the linear power gains with fading averaged out, and serving_bs the
    highest-gain association.
    """

    H: np.ndarray  # (n_antennas, n_users) complex
    long_term_gain: np.ndarray  # (n_bs, n_users) linear power
    serving_bs: np.ndarray  # (n_users,) int
    ms_positions: np.ndarray  # (n_users, 2) meters
    geometry: NetworkGeometry
    seed: int = 0

    @property
    def n_users(self) -> int:
        return self.H.shape[1]

    @property
    def n_bs(self) -> int:
        return self.geometry.n_bs

    def users_of(self, b: int) -> np.ndarray:
        return np.flatnonzero(self.serving_bs == b)

    def is_balanced(self, users_per_bs: int) -> bool:
        counts = np.bincount(self.serving_bs, minlength=self.n_bs)
        return bool(np.all(counts == users_per_bs))


def _gain_db(geometry, ms_positions, config, shadowing_db=None):
    d_km = (
        np.linalg.norm(
            geometry.bs_positions[:, None, :] - np.atleast_2d(ms_positions)[None, :, :],
            axis=-1,
        )
        / 1000.0
    )
    d_km = np.maximum(d_km, config.min_distance_m / 1000.0)
    gain = -path_loss_db(d_km, config.pathloss_intercept_db, config.pathloss_slope)
    if shadowing_db is not None:
        gain = gain + shadowing_db
    return gain + snr_offset_db(config)


def realize_channel(
    geometry: NetworkGeometry,
    ms_positions: np.ndarray,
    config: ScenarioConfig,
    rng: np.random.Generator,
    shadowing_db: np.ndarray | None = None,
) -> ChannelRealization:
    """Draw shadowing and fading for fixed MS positions and assemble H.

    One shadowing draw per BS-MS pair is shared by all co-located antennas;
    a precomputed shadowing field can be supplied instead.  The association
    is not forced to be balanced here; see realize_scenario.
    """
    n_bs, n_users = geometry.n_bs, ms_positions.shape[0]
    if shadowing_db is None and config.shadowing_enabled:
        shadowing_db = rng.normal(0.0, config.shadowing_sigma_db, size=(n_bs, n_users))
    gain_db = _gain_db(geometry, ms_positions, config, shadowing_db)

    long_term = 10.0 ** (gain_db / 10.0)
    serving = np.argmax(gain_db, axis=0)

    amplitude = np.sqrt(long_term[geometry.antenna_bs, :])
    if config.fading_enabled:
        fading = (
            rng.standard_normal((geometry.n_antennas, n_users))
            + 1j * rng.standard_normal((geometry.n_antennas, n_users))
        ) / math.sqrt(2.0)
    else:
        fading = np.ones((geometry.n_antennas, n_users), dtype=complex)
    H = amplitude * fading

    return ChannelRealization(
        H=H,
        long_term_gain=long_term,
        serving_bs=serving,
        ms_positions=np.array(ms_positions),
        geometry=geometry,
        seed=config.rng_seed,
    )


def _scenario_setup(config, seed):
    if seed is None:
        seed = config.rng_seed
    else:
        config = dataclasses.replace(config, rng_seed=seed)
    geometry = with_antennas(
        hex_layout(config.rings, config.cell_radius_m), config.antennas_per_bs
    )
    return config, seed, geometry, np.random.default_rng(seed)


def realize_scenario(config: ScenarioConfig, seed: int | None = None) -> ChannelRealization:
    """One channel drop: stratified uniform user positions, argmax association.

    With shadowing, a cell-edge user can associate with a neighboring BS, so
    per-BS user counts need not be balanced; the sparse-equalizer machinery
    accepts that.  Use realize_balanced_scenario when a protocol needs
    exactly users_per_bs MSs per BS.
    """
    config, _, geometry, rng = _scenario_setup(config, seed)
    positions = drop_users(geometry, config, rng)
    return realize_channel(geometry, positions, config, rng)


def realize_balanced_scenario(
    config: ScenarioConfig, seed: int | None = None, max_redraws: int = 1000
):
    """Channel drop with exactly users_per_bs MSs served by every BS.

    A jointly balanced redraw is vanishingly unlikely at 19 cells, so each
    user is redrawn individually (position and shadowing together) until its
    highest-gain BS is its home cell.  The association remains the per-user
    gain argmax; the conditioning slightly favors users whose own shadowing
    is not adverse.
    """
    config, seed, geometry, rng = _scenario_setup(config, seed)

    n_users = config.users_per_bs * geometry.n_bs
    positions = np.empty((n_users, 2))
    shadowing = (
        np.zeros((geometry.n_bs, n_users)) if config.shadowing_enabled else None
    )
    u = 0
    for home, center in enumerate(geometry.bs_positions):
        for _ in range(config.users_per_bs):
            for attempt in range(max_redraws):
                while True:
                    p = _sample_in_hex(rng, geometry.cell_radius_m)
                    if np.hypot(p[0], p[1]) >= config.min_distance_m:
                        break
                point = center + p
                if not config.shadowing_enabled:
                    break
                shadow = rng.normal(0.0, config.shadowing_sigma_db, size=geometry.n_bs)
                gain = _gain_db(geometry, point[None, :], config, shadow[:, None])[:, 0]
                if int(np.argmax(gain)) == home:
                    shadowing[:, u] = shadow
                    break
            else:
                raise ScenarioError(
                    f"user of BS {home} found no home-serving draw in "
                    f"{max_redraws} attempts (seed={seed})"
                )
            positions[u] = point
            u += 1

    realization = realize_channel(geometry, positions, config, rng, shadowing_db=shadowing)
    if not realization.is_balanced(config.users_per_bs):
        raise ScenarioError(f"association not balanced (seed={seed})")
    return realization


def write_channel(realization: ChannelRealization, path) -> None:
    """Dump a realization as self-describing text (row-major, re/im interleaved)."""
    g = realization.geometry
    lines = ["coophaul-channel v1"]
    lines.append(f"n_bs {g.n_bs}")
    lines.append(f"antennas_per_bs {g.antennas_per_bs}")
    lines.append(f"n_users {realization.n_users}")
    lines.append(f"seed {realization.seed}")
    lines.append(f"cell_radius_m {float(g.cell_radius_m)!r}")
    lines.append("bs_positions")
    for x, y in g.bs_positions:
        lines.append(f"{float(x)!r} {float(y)!r}")
    lines.append("ms_positions")
    for x, y in realization.ms_positions:
        lines.append(f"{float(x)!r} {float(y)!r}")
    lines.append("serving_bs")
    lines.append(" ".join(str(int(b)) for b in realization.serving_bs))
    lines.append("long_term_gain")
    for row in realization.long_term_gain:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("channel")
    for row in realization.H:
        lines.append(" ".join(f"{float(v.real)!r} {float(v.imag)!r}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_channel(path) -> ChannelRealization:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "coophaul-channel v1":
        raise ValueError(f"{path}: not a coophaul channel dump")
    header = {}
    i = 1
    while i < len(lines) and " " in lines[i] and lines[i].split()[0] in (
        "n_bs",
        "antennas_per_bs",
        "n_users",
        "seed",
        "cell_radius_m",
    ):
        key, value = lines[i].split()
        header[key] = value
        i += 1
    n_bs = int(header["n_bs"])
    per_bs = int(header["antennas_per_bs"])
    n_users = int(header["n_users"])

    def block(tag: str, rows: int):
        nonlocal i
        if lines[i].strip() != tag:
            raise ValueError(f"{path}: expected section {tag!r}, got {lines[i]!r}")
        i += 1
        data = [np.array(lines[i + r].split(), dtype=float) for r in range(rows)]
        i += rows
        return np.array(data)

    bs_positions = block("bs_positions", n_bs)
    ms_positions = block("ms_positions", n_users)
    serving = block("serving_bs", 1)[0].astype(int)
    long_term = block("long_term_gain", n_bs)
    interleaved = block("channel", n_bs * per_bs)
    H = interleaved[:, 0::2] + 1j * interleaved[:, 1::2]

    geometry = NetworkGeometry(bs_positions, float(header["cell_radius_m"]), per_bs)
    return ChannelRealization(
        H=H,
        long_term_gain=long_term,
        serving_bs=serving,
        ms_positions=ms_positions,
        geometry=geometry,
        seed=int(header["seed"]),
    )
