"""Run configuration: strict YAML schema and domain-object factories.

Every run is described by one human-editable YAML file.  Loading rejects
duplicate and unknown keys, fills documented defaults, reports all schema
violations at once with dotted field paths, and yields a RunConfig whose
canonical dictionary round-trips through serialization unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import yaml

from ..errors import InvalidConfigError
from ..flcore import (
    Dataset,
    LogisticFamily,
    MlpFamily,
    ModelFamily,
    PartitionSpec,
    QuadraticFamily,
    load_csv,
    make_quadratic_clients,
    partition,
    synthetic_gaussian,
)
from ..geometry import ConstellationGeometry, equally_spaced_positions
from ..linkmodel import C_LIGHT_M_S, ComputeProfile, LinkBudget


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that refuses duplicate mapping keys."""


def _mapping_no_duplicates(loader, node, deep=False):
    seen = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            raise InvalidConfigError(f"duplicate key {key!r} at {key_node.start_mark}")
        seen[key] = loader.construct_object(value_node, deep=deep)
    return seen


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping_no_duplicates
)


@dataclass(frozen=True)
class _Field:
    kinds: tuple[type, ...]
    default: object = None
    required: bool = False
    allow_none: bool = False
    choices: tuple | None = None
    minimum: float | None = None
    exclusive_min: float | None = None
    maximum: float | None = None
    exclusive_max: float | None = None
    list_of: bool = False  # value is a list whose items obey `kinds`


def _num(default=None, **kw) -> _Field:
    return _Field((float, int), default=default, **kw)


_SCHEMA: dict = {
    "scheme": _Field((str,), default="fedmeld", choices=("fedmeld", "hfl", "pfl", "ring")),
    "seeds": _Field((int,), default=[0], list_of=True),
    "R": _Field((int,), required=True, minimum=1),
    "T_max_s": _num(default=86400.0, exclusive_min=0.0),
    "max_sim_s": _num(allow_none=True, exclusive_min=0.0),
    "out_dir": _Field((str,), allow_none=True),
    "geometry": {
        "altitude_m": _num(default=550_000.0, exclusive_min=0.0),
        "sats_per_orbit": _Field((int,), default=66, minimum=1),
        "num_areas": _Field((int,), default=4, minimum=1),
        "area_positions_rad": _num(allow_none=True, list_of=True),
    },
    "link": {
        "p_ue_w": _num(default=1.0, exclusive_min=0.0),
        "p_sat_w": _num(default=5.0, exclusive_min=0.0),
        "uplink_freq_hz": _num(default=14.0e9, exclusive_min=0.0),
        "downlink_freq_hz": _num(default=12.0e9, exclusive_min=0.0),
        "bandwidth_up_hz": _num(default=5.0e6, exclusive_min=0.0),
        "bandwidth_down_hz": _num(default=5.0e6, exclusive_min=0.0),
        "additional_loss_db": _num(default=5.0, minimum=0.0),
        "noise_psd_w_per_hz": _num(default=1.38e-21, exclusive_min=0.0),
        "sat_antenna_radius_m": _num(default=0.48, exclusive_min=0.0),
        "ue_antenna_radius_m": _num(default=0.5, exclusive_min=0.0),
        "aperture_efficiency": _num(default=0.65, exclusive_min=0.0, maximum=1.0),
        "slant_range_m": _num(allow_none=True, exclusive_min=0.0),
        "isl_rate_bps": _num(default=1.0e8, exclusive_min=0.0),
        "model_bits": _Field((int,), allow_none=True, minimum=0),
    },
    "compute": {
        "E": _Field((int,), default=5, minimum=1),
        "batch_size": _Field((int,), default=64, minimum=1),
        "flops_per_sample": _num(default=1.0e9, exclusive_min=0.0),
        "client_flops": _num(default=15.11e12, exclusive_min=0.0),
        "t_agg_s": _num(default=0.0, minimum=0.0),
    },
    "data": {
        "kind": _Field((str,), default="synthetic", choices=("synthetic", "quadratic", "csv")),
        "num_samples": _Field((int,), default=4000, minimum=1),
        "num_labels": _Field((int,), default=3, minimum=2),
        "dim": _Field((int,), default=2, minimum=1),
        "separation": _num(default=4.0, exclusive_min=0.0),
        "spread": _num(default=1.0, exclusive_min=0.0),
        "test_fraction": _num(default=0.2, minimum=0.0, exclusive_max=1.0),
        "path": _Field((str,), allow_none=True),
        "test_path": _Field((str,), allow_none=True),
        "curvature_range": _num(default=[0.5, 1.5], list_of=True),
        "centre_range": _num(default=[-1.0, 1.0], list_of=True),
    },
    "model": {
        "kind": _Field((str,), default="logistic", choices=("logistic", "mlp", "quadratic")),
        "hidden": _Field((int,), default=16, minimum=1),
        "l2": _num(default=0.0, minimum=0.0),
    },
    "partition": {
        "scheme": _Field(
            (str,),
            default="iid_clients",
            choices=("iid_clients", "iid_clusters", "noniid_clusters"),
        ),
        "clients_per_area": _Field((int,), default=10, minimum=1, list_of=True),
        "labels_per_cluster": _Field((int,), default=3, minimum=1),
        "labels_per_client": _Field((int,), default=2, minimum=1),
    },
    "participation": {
        "fraction": _num(default=1.0, exclusive_min=0.0, maximum=1.0),
        "u_per_area": _Field((int,), allow_none=True, list_of=True, minimum=1),
    },
    "fedmeld": {
        "K": _Field((int, str), default="auto"),
        "scmr_mode": _Field((str,), default="auto", choices=("auto", "fixed")),
        "delta": _Field((int,), allow_none=True, minimum=1),
        "alpha": _num(allow_none=True, minimum=0.0, exclusive_max=1.0),
        "rho": _num(default=1.5, exclusive_min=1.0),
        "L": _num(allow_none=True, exclusive_min=0.0),
        "mu": _num(allow_none=True, exclusive_min=0.0),
        "G": _num(allow_none=True, minimum=0.0),
        "sigma": _num(allow_none=True, minimum=0.0),
        "init_gap": _num(allow_none=True, minimum=0.0),
        "gamma": _num(allow_none=True, minimum=0.0),
    },
    "hfl": {
        "num_ground_stations": _Field((int,), default=2, minimum=1),
        "contact_interval_s": _num(allow_none=True, minimum=0.0),
    },
    "ring": {
        "chunks": _Field((int,), allow_none=True, minimum=1),
    },
}


def _type_names(kinds: tuple[type, ...]) -> str:
    return "/".join(k.__name__ for k in kinds)


def _coerce_scalar(value, rule: _Field, path: str, violations: list[str]):
    if isinstance(value, bool):
        violations.append(f"{path}: expected {_type_names(rule.kinds)}, got boolean")
        return value
    if isinstance(value, str) and str not in rule.kinds:
        # YAML 1.1 leaves unsigned exponents ("1e8") as strings; accept them
        try:
            value = int(value) if float not in rule.kinds else float(value)
        except ValueError:
            pass
    if not isinstance(value, rule.kinds):
        violations.append(
            f"{path}: expected {_type_names(rule.kinds)}, got {type(value).__name__}"
        )
        return value
    if int in rule.kinds and float not in rule.kinds and isinstance(value, float):
        violations.append(f"{path}: expected an integer, got {value!r}")
        return value
    if rule.choices is not None and isinstance(value, str) and value not in rule.choices:
        violations.append(f"{path}: must be one of {', '.join(map(str, rule.choices))}")
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if rule.minimum is not None and value < rule.minimum:
            violations.append(f"{path}: must be >= {rule.minimum}")
        if rule.exclusive_min is not None and value <= rule.exclusive_min:
            violations.append(f"{path}: must be > {rule.exclusive_min}")
        if rule.maximum is not None and value > rule.maximum:
            violations.append(f"{path}: must be <= {rule.maximum}")
        if rule.exclusive_max is not None and value >= rule.exclusive_max:
            violations.append(f"{path}: must be < {rule.exclusive_max}")
    return value


def _coerce(value, rule: _Field, path: str, violations: list[str]):
    if value is None:
        if rule.allow_none or not rule.required:
            return None
        violations.append(f"{path}: must not be null")
        return None
    if rule.list_of:
        if not isinstance(value, list):
            return [_coerce_scalar(value, rule, path, violations)]
        return [
            _coerce_scalar(item, rule, f"{path}[{i}]", violations)
            for i, item in enumerate(value)
        ]
    return _coerce_scalar(value, rule, path, violations)


def _validate_block(raw, schema: dict, prefix: str, violations: list[str]) -> dict:
    out: dict = {}
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        violations.append(f"{prefix or 'config'}: expected a mapping")
        raw = {}
    for key in raw:
        if key not in schema:
            violations.append(f"{prefix}{key}: unknown key")
    for key, rule in schema.items():
        path = f"{prefix}{key}"
        if isinstance(rule, dict):
            out[key] = _validate_block(raw.get(key), rule, path + ".", violations)
            continue
        if key in raw and raw[key] is not None:
            out[key] = _coerce(raw[key], rule, path, violations)
        elif rule.required:
            violations.append(f"{path}: required key is missing")
            out[key] = None
        else:
            out[key] = rule.default
    return out


def _cross_checks(cfg: dict, violations: list[str]) -> None:
    num_areas = cfg["geometry"]["num_areas"]
    if isinstance(num_areas, int):
        cpa = cfg["partition"]["clients_per_area"]
        if isinstance(cpa, int):
            cpa = [cpa]
        if all(isinstance(c, int) and not isinstance(c, bool) for c in cpa):
            if len(cpa) == 1:
                # a single count applies to every area
                cfg["partition"]["clients_per_area"] = cpa * num_areas
            elif len(cpa) != num_areas:
                violations.append(
                    f"partition.clients_per_area: expected {num_areas} entries, got {len(cpa)}"
                )
        pos = cfg["geometry"]["area_positions_rad"]
        if pos is not None and len(pos) != num_areas:
            violations.append(
                f"geometry.area_positions_rad: expected {num_areas} entries, got {len(pos)}"
            )
        upa = cfg["participation"]["u_per_area"]
        if upa is not None and len(upa) != num_areas:
            violations.append(
                f"participation.u_per_area: expected {num_areas} entries, got {len(upa)}"
            )
    if not isinstance(cfg["seeds"], list):
        cfg["seeds"] = [cfg["seeds"]] if isinstance(cfg["seeds"], int) else [0]
    elif not cfg["seeds"]:
        violations.append("seeds: must contain at least one seed")
    k = cfg["fedmeld"]["K"]
    if isinstance(k, str) and k != "auto":
        violations.append('fedmeld.K: must be "auto" or an integer >= 1')
    if isinstance(k, int) and k < 1:
        violations.append("fedmeld.K: must be >= 1")
    dkind, mkind = cfg["data"]["kind"], cfg["model"]["kind"]
    if (dkind == "quadratic") != (mkind == "quadratic"):
        violations.append(
            "data.kind and model.kind: the quadratic family pairs only with quadratic data"
        )
    if dkind == "quadratic":
        cpa = cfg["partition"]["clients_per_area"]
        if isinstance(cpa, list) and len(set(cpa)) > 1:
            violations.append(
                "partition.clients_per_area: quadratic data requires equal counts per area"
            )
        for key in ("curvature_range", "centre_range"):
            if len(cfg["data"][key]) != 2:
                violations.append(f"data.{key}: expected [low, high]")
    if dkind == "csv" and not cfg["data"]["path"]:
        violations.append("data.path: required when data.kind is csv")
    if cfg["scheme"] == "fedmeld" and cfg["fedmeld"]["scmr_mode"] == "fixed":
        if cfg["fedmeld"]["delta"] is None or cfg["fedmeld"]["alpha"] is None:
            violations.append("fedmeld.delta and fedmeld.alpha: required when scmr_mode is fixed")
    # auto mode's bound constants are checked when the solver is invoked, so a
    # plain parameter file (wireless defaults plus a horizon) loads cleanly
    r, e = cfg["R"], cfg["compute"]["E"]
    if isinstance(r, int) and isinstance(e, int) and r < e:
        violations.append("R: must cover at least one global round (R >= compute.E)")
    lm, lmu = cfg["fedmeld"]["L"], cfg["fedmeld"]["mu"]
    if lm is not None and lmu is not None and lm < lmu:
        violations.append("fedmeld.L: must be >= fedmeld.mu")
    if cfg["link"]["slant_range_m"] is None:
        alt = cfg["geometry"]["altitude_m"]
        cfg["link"]["slant_range_m"] = alt if isinstance(alt, (int, float)) else None
    a = cfg["geometry"]["altitude_m"]
    if isinstance(a, (int, float)) and not isinstance(a, bool) and a <= 0:
        violations.append("geometry.altitude_m: must be > 0 in run configurations")


@dataclass(frozen=True)
class RunConfig:
    """A validated, canonical run description."""

    raw: dict

    @property
    def scheme(self) -> str:
        return self.raw["scheme"]

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.raw["seeds"])

    @property
    def R(self) -> int:
        return int(self.raw["R"])

    @property
    def T_max_s(self) -> float:
        return float(self.raw["T_max_s"])

    @property
    def max_sim_s(self) -> float | None:
        v = self.raw["max_sim_s"]
        return None if v is None else float(v)

    @property
    def out_dir(self) -> str | None:
        return self.raw["out_dir"]

    @property
    def E(self) -> int:
        return int(self.raw["compute"]["E"])

    @property
    def model_bits(self) -> int | None:
        v = self.raw["link"]["model_bits"]
        return None if v is None else int(v)

    @property
    def slant_range_m(self) -> float:
        return float(self.raw["link"]["slant_range_m"])

    @property
    def isl_rate_bps(self) -> float:
        return float(self.raw["link"]["isl_rate_bps"])

    @property
    def ring_chunks(self) -> int | None:
        v = self.raw["ring"]["chunks"]
        return None if v is None else int(v)

    @property
    def fedmeld(self) -> dict:
        return self.raw["fedmeld"]

    @property
    def clients_per_area(self) -> tuple[int, ...]:
        return tuple(self.raw["partition"]["clients_per_area"])

    def geometry(self) -> ConstellationGeometry:
        g = self.raw["geometry"]
        pos = g["area_positions_rad"]
        positions = (
            equally_spaced_positions(g["num_areas"])
            if pos is None
            else tuple(float(p) for p in pos)
        )
        return ConstellationGeometry(
            altitude_m=float(g["altitude_m"]),
            sats_per_orbit=int(g["sats_per_orbit"]),
            num_areas=int(g["num_areas"]),
            area_angular_positions=positions,
        )

    def link_budget(self) -> LinkBudget:
        ln = self.raw["link"]
        return LinkBudget(
            p_ue=float(ln["p_ue_w"]),
            p_sat=float(ln["p_sat_w"]),
            uplink_wavelength_m=C_LIGHT_M_S / float(ln["uplink_freq_hz"]),
            downlink_wavelength_m=C_LIGHT_M_S / float(ln["downlink_freq_hz"]),
            w_up=float(ln["bandwidth_up_hz"]),
            w_down=float(ln["bandwidth_down_hz"]),
            additional_loss_db=float(ln["additional_loss_db"]),
            noise_psd=float(ln["noise_psd_w_per_hz"]),
            sat_antenna_radius_m=float(ln["sat_antenna_radius_m"]),
            ue_antenna_radius_m=float(ln["ue_antenna_radius_m"]),
            aperture_efficiency=float(ln["aperture_efficiency"]),
        )

    def compute_profile(self) -> ComputeProfile:
        c = self.raw["compute"]
        return ComputeProfile(
            E=int(c["E"]),
            batch_size=int(c["batch_size"]),
            flops_per_sample=float(c["flops_per_sample"]),
            client_flops=float(c["client_flops"]),
            t_agg_s=float(c["t_agg_s"]),
        )

    def participation_u(self, n_i: Sequence[int]) -> tuple[int, ...]:
        p = self.raw["participation"]
        if p["u_per_area"] is not None:
            u = tuple(int(x) for x in p["u_per_area"])
            if len(u) != len(n_i):
                raise InvalidConfigError("participation.u_per_area length mismatch")
            for ui, ni in zip(u, n_i):
                if not 1 <= ui <= ni:
                    raise InvalidConfigError(
                        f"participation.u_per_area: need 1 <= U_i <= N_i, got U={ui}, N={ni}"
                    )
            return u
        frac = float(p["fraction"])
        return tuple(max(1, min(n, int(round(frac * n)))) for n in n_i)

    def hfl_stall_s(self, period_s: float) -> float:
        h = self.raw["hfl"]
        interval = h["contact_interval_s"]
        if interval is None:
            interval = period_s / h["num_ground_stations"]
        return float(interval) / 2.0

    def build_family_and_data(
        self, seed: int
    ) -> tuple[ModelFamily, list[list[Dataset]], Dataset | None]:
        """Materialize the model family and the per-area client datasets."""
        d = self.raw["data"]
        m = self.raw["model"]
        num_areas = self.raw["geometry"]["num_areas"]
        cpa = self.clients_per_area
        if d["kind"] == "quadratic":
            areas = make_quadratic_clients(
                num_areas,
                cpa[0],
                dim=int(d["dim"]),
                seed=seed,
                curvature_range=tuple(float(x) for x in d["curvature_range"]),
                centre_range=tuple(float(x) for x in d["centre_range"]),
            )
            return QuadraticFamily(num_features=int(d["dim"]) + 1), areas, None
        if d["kind"] == "synthetic":
            train, test = synthetic_gaussian(
                int(d["num_samples"]),
                int(d["num_labels"]),
                int(d["dim"]),
                separation=float(d["separation"]),
                spread=float(d["spread"]),
                seed=seed,
                test_fraction=float(d["test_fraction"]),
            )
        else:
            train = load_csv(d["path"])
            test = load_csv(d["test_path"], train.num_labels) if d["test_path"] else None
        spec = PartitionSpec(
            scheme=self.raw["partition"]["scheme"],
            M=num_areas,
            clients_per_area=cpa,
            labels_per_cluster=int(self.raw["partition"]["labels_per_cluster"]),
            labels_per_client=int(self.raw["partition"]["labels_per_client"]),
            seed=seed,
        )
        areas = partition(train, spec)
        if m["kind"] == "logistic":
            family: ModelFamily = LogisticFamily(
                num_features=train.dim, num_labels=train.num_labels, l2=float(m["l2"])
            )
        elif m["kind"] == "mlp":
            family = MlpFamily(
                num_features=train.dim,
                hidden=int(m["hidden"]),
                num_labels=train.num_labels,
                l2=float(m["l2"]),
            )
        else:
            raise InvalidConfigError("model.kind quadratic pairs only with quadratic data")
        return family, areas, test

    def updated(self, overrides: dict) -> "RunConfig":
        """A new validated config with a nested-dict patch applied."""

        def merge(base: dict, patch: dict) -> dict:
            out = dict(base)
            for key, value in patch.items():
                if isinstance(value, dict) and isinstance(out.get(key), dict):
                    out[key] = merge(out[key], value)
                else:
                    out[key] = value
            return out

        return from_dict(merge(self.raw, overrides))


def from_dict(data: dict) -> RunConfig:
    """Validate a raw mapping; raises with every violation listed."""
    violations: list[str] = []
    canonical = _validate_block(data, _SCHEMA, "", violations)
    if not violations:
        _cross_checks(canonical, violations)
    if violations:
        raise InvalidConfigError(
            "invalid configuration:\n  " + "\n  ".join(violations), violations=violations
        )
    return RunConfig(raw=canonical)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate one YAML run configuration."""
    text = Path(path).read_text()
    try:
        data = yaml.load(text, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfigError(f"{path}: top level must be a mapping")
    return from_dict(data)


def serialize_config(config: RunConfig) -> str:
    """Canonical YAML text; load_config of it reproduces the config."""
    return yaml.safe_dump(config.raw, sort_keys=True, default_flow_style=False)
