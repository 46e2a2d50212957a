"""Free-space link budget and per-round latency.

Rates follow the Shannon capacity of a single-antenna link with parabolic
aperture gains at both ends, free-space path loss, and a flat additional
loss.  Small-scale fading, Doppler and interference are out of scope.  A
global round's latency is the slowest participant's compute-plus-transfer
time, plus a fixed aggregation term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

from .errors import InvalidArgumentError, InvalidConfigError

C_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class LinkBudget:
    """Radio parameters shared by every client-satellite link.

    Wavelengths default to 14 GHz up / 12 GHz down.  ``additional_loss_db``
    is applied as a multiplicative power attenuation.
    """

    p_ue: float = 1.0
    p_sat: float = 5.0
    uplink_wavelength_m: float = C_LIGHT_M_S / 14e9
    downlink_wavelength_m: float = C_LIGHT_M_S / 12e9
    w_up: float = 5e6
    w_down: float = 5e6
    additional_loss_db: float = 5.0
    noise_psd: float = 1.38e-21
    sat_antenna_radius_m: float = 0.48
    ue_antenna_radius_m: float = 0.5
    aperture_efficiency: float = 0.65

    def __post_init__(self):
        positive = {
            "p_ue": self.p_ue,
            "p_sat": self.p_sat,
            "uplink_wavelength_m": self.uplink_wavelength_m,
            "downlink_wavelength_m": self.downlink_wavelength_m,
            "w_up": self.w_up,
            "w_down": self.w_down,
            "noise_psd": self.noise_psd,
            "sat_antenna_radius_m": self.sat_antenna_radius_m,
            "ue_antenna_radius_m": self.ue_antenna_radius_m,
        }
        for name, value in positive.items():
            if value <= 0:
                raise InvalidConfigError(f"{name} must be positive")
        if not 0.0 < self.aperture_efficiency <= 1.0:
            raise InvalidConfigError("aperture_efficiency must be in (0, 1]")


@dataclass(frozen=True)
class ComputeProfile:
    """Local-computation workload and the aggregation overhead.

    ``client_flops`` is the default per-client capability (FLOP/s); callers
    may override it per client.
    """

    E: int
    batch_size: int
    flops_per_sample: float
    client_flops: float
    t_agg_s: float = 0.0

    def __post_init__(self):
        if self.E < 0:
            raise InvalidConfigError("E must be non-negative")
        if self.batch_size < 1:
            raise InvalidConfigError("batch_size must be >= 1")
        if self.flops_per_sample <= 0:
            raise InvalidConfigError("flops_per_sample must be positive")
        if self.client_flops <= 0:
            raise InvalidConfigError("client_flops must be positive")
        if self.t_agg_s < 0:
            raise InvalidConfigError("t_agg_s must be non-negative")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(ratio: float) -> float:
    if ratio <= 0:
        raise InvalidArgumentError("ratio must be positive")
    return 10.0 * math.log10(ratio)


def path_loss(wavelength_m: float, distance_m: float) -> float:
    """Free-space path loss (lambda / 4*pi*d)^2 as a power ratio."""
    if wavelength_m <= 0 or distance_m <= 0:
        raise InvalidArgumentError("wavelength and distance must be positive")
    return (wavelength_m / (4.0 * math.pi * distance_m)) ** 2


def antenna_gain(radius_m: float, wavelength_m: float, efficiency: float = 0.65) -> float:
    """Parabolic aperture gain: efficiency * (pi * D / lambda)^2 with D = 2r."""
    if radius_m <= 0 or wavelength_m <= 0:
        raise InvalidArgumentError("radius and wavelength must be positive")
    if not 0.0 < efficiency <= 1.0:
        raise InvalidArgumentError("efficiency must be in (0, 1]")
    return efficiency * (math.pi * 2.0 * radius_m / wavelength_m) ** 2


Direction = Literal["up", "down"]


def link_rate(budget: LinkBudget, direction: Direction, distance_m: float) -> float:
    """Shannon rate in bit/s for one client's sub-channel.

    Both aperture gains apply in either direction; the direction selects
    transmit power, wavelength and bandwidth.
    """
    if distance_m <= 0:
        raise InvalidArgumentError("distance must be positive")
    if direction == "up":
        power, wavelength, bandwidth = budget.p_ue, budget.uplink_wavelength_m, budget.w_up
    elif direction == "down":
        power, wavelength, bandwidth = budget.p_sat, budget.downlink_wavelength_m, budget.w_down
    else:
        raise InvalidArgumentError(f"unknown direction {direction!r}")
    g_ue = antenna_gain(budget.ue_antenna_radius_m, wavelength, budget.aperture_efficiency)
    g_sat = antenna_gain(budget.sat_antenna_radius_m, wavelength, budget.aperture_efficiency)
    l_pl = path_loss(wavelength, distance_m)
    l_al = db_to_linear(-budget.additional_loss_db)
    snr = power * g_ue * g_sat * l_pl * l_al / (budget.noise_psd * bandwidth)
    return bandwidth * math.log2(1.0 + snr)


def local_compute_latency(profile: ComputeProfile, client_flops: float | None = None) -> float:
    """Seconds for E local iterations: E * batch * flops_per_sample / capability."""
    capability = profile.client_flops if client_flops is None else client_flops
    if capability <= 0:
        raise InvalidConfigError("client capability must be positive")
    return profile.E * profile.batch_size * profile.flops_per_sample / capability


def round_latency(
    profile: ComputeProfile,
    budget: LinkBudget,
    participants: Sequence[float],
    distances: float | Sequence[float],
    model_bits: float,
) -> float:
    """Latency of one global round.

    ``participants`` lists each participant's compute capability (FLOP/s);
    ``distances`` is a shared slant range or one range per participant.
    The round completes when the slowest participant has computed, uplinked
    and received the broadcast, plus the aggregation time.
    """
    if len(participants) == 0:
        raise InvalidArgumentError("participants must be non-empty")
    if isinstance(distances, (int, float)):
        dist = [float(distances)] * len(participants)
    else:
        dist = [float(d) for d in distances]
        if len(dist) != len(participants):
            raise InvalidArgumentError("distances must match participants")
    if model_bits < 0:
        raise InvalidArgumentError("model_bits must be non-negative")
    worst = 0.0
    for flops, d in zip(participants, dist):
        t = (
            local_compute_latency(profile, flops)
            + model_bits / link_rate(budget, "up", d)
            + model_bits / link_rate(budget, "down", d)
        )
        worst = max(worst, t)
    return worst + profile.t_agg_s
