"""Seeded Monte Carlo sweep engine with CSV/JSON result serialization.

Experiments are described by a JSON config (see parse_config for the
schema). The BER engine walks frames in fixed chunks of CHUNK_FRAMES;
per-frame randomness comes from counter-based substreams keyed by
(master seed, frame index), and chunk results are merged in frame
order, so the emitted rows are bit-identical for any worker count.
The optional early stop is likewise evaluated only at chunk
boundaries, in frame order.

Output rows carry no timestamps: the same (config, master seed) must
reproduce the artifact byte for byte. Wall time is kept on the result
object for interactive use but never serialized.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing
import pathlib
import time
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _LIGHT_SPEED

from . import __version__
from . import channel as ch
from . import infotheory as it
from . import quantizer as qz
from . import rng as qrng
from .channel import PhiPolicy
from .constellation import make_constellation, vector_indices
from .kernels import BACKEND, get_backend

CHUNK_FRAMES = 10_000
EARLY_STOP_ERRORS = 200
EARLY_STOP_MIN_FRAMES = 10_000
RANGE_RATIOS = np.linspace(0.8, 1.2, 21)

BER_COLUMNS = ("experiment", "modulation", "n", "theta_rad", "phi_policy",
               "detector", "quantizer", "snr_db", "frames", "bit_errors",
               "ber", "stderr")
MI_COLUMNS = ("experiment", "modulation", "n", "theta_rad", "phi_policy",
              "scheme", "snr_db", "mi_bits", "stderr")

_EXPERIMENTS = ("mi_sweep", "ber_sweep", "range_sweep", "design_quantizer")
_DETECTORS = ("zf", "ml", "vq")


class ConfigError(ValueError):
    """Config rejected; the message names the offending key or line."""


# ---------------------------------------------------------------- config

def _reject_unknown(obj, allowed, where):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key '{key}'")


def _need(obj, key, where):
    if key not in obj:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return obj[key]


def _as_int(value, key, minimum=None, choices=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key '{key}': expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"key '{key}': must be >= {minimum}")
    if choices is not None and value not in choices:
        raise ConfigError(f"key '{key}': must be one of {sorted(choices)}")
    return value


def _as_number(value, key, minimum=None, finite=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{key}': expected a number")
    value = float(value)
    if finite and not math.isfinite(value):
        raise ConfigError(f"key '{key}': must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"key '{key}': must be >= {minimum}")
    return value


def _as_str(value, key, choices=None):
    if not isinstance(value, str):
        raise ConfigError(f"key '{key}': expected a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"key '{key}': must be one of {sorted(choices)}")
    return value


def _as_bool(value, key):
    if not isinstance(value, bool):
        raise ConfigError(f"key '{key}': expected true or false")
    return value


def _snr_list(value, key, allow_scalar=False):
    if allow_scalar and isinstance(value, (int, float)) \
            and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"key '{key}': expected a nonempty list of numbers")
    return tuple(_as_number(v, f"{key}[{i}]") for i, v in enumerate(value))


@dataclass(frozen=True)
class QuantizerSpec:
    """Normalized quantizer description from a config file."""

    family: str                 # iq | ap | phase
    metric: str = "eqprob"      # eqprob | mmsqe
    bins: int = 0               # S per axis (iq) or M sectors (phase)
    rings: int = 0              # K annuli (ap)
    sectors: int = 0            # M sectors (ap)
    amp_thresholds: tuple[float, ...] | None = None  # fixed-ring ap

    def label(self) -> str:
        if self.family == "iq":
            return f"{self.metric}-iq-s{self.bins}"
        if self.family == "phase":
            return f"phase-m{self.bins}"
        if self.amp_thresholds is not None:
            return f"ap-k{self.rings}-m{self.sectors}-fixed"
        return f"{self.metric}-ap-k{self.rings}-m{self.sectors}"

    def design(self, sigma2: float) -> qz.Quantizer:
        try:
            if self.family == "phase":
                return qz.design_phase_only(self.bins)
            if self.family == "iq":
                if self.metric == "eqprob":
                    return qz.design_equal_prob_iq(self.bins, sigma2)
                return qz.design_mmsqe("iq", sigma2, S=self.bins)
            if self.amp_thresholds is not None:
                return qz.ap_with_thresholds(
                    self.sectors, np.asarray(self.amp_thresholds), sigma2)
            if self.metric == "eqprob":
                return qz.design_equal_prob_ap(self.rings, self.sectors,
                                               sigma2)
            return qz.design_mmsqe("ap", sigma2, K=self.rings, M=self.sectors)
        except ValueError as e:
            raise ConfigError(f"quantizer: {e}") from e

    def canonical(self) -> dict:
        doc = {"family": self.family, "metric": self.metric}
        if self.family in ("iq", "phase"):
            doc["bins"] = self.bins
        else:
            doc["rings"] = self.rings
            doc["sectors"] = self.sectors
            if self.amp_thresholds is not None:
                doc["amp_thresholds"] = list(self.amp_thresholds)
        return doc


def _parse_quantizer(obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    _reject_unknown(obj, ("family", "metric", "bins", "rings", "sectors",
                          "amp_thresholds"), where)
    family = _as_str(_need(obj, "family", where), f"{where}.family",
                     choices=("iq", "ap", "phase"))
    metric = _as_str(obj.get("metric", "eqprob"), f"{where}.metric",
                     choices=("eqprob", "mmsqe"))
    if family in ("iq", "phase"):
        for bad in ("rings", "sectors", "amp_thresholds"):
            if bad in obj:
                raise ConfigError(f"{where}: key '{bad}' does not apply to "
                                  f"family '{family}'")
        bins = _as_int(_need(obj, "bins", where), f"{where}.bins", minimum=2)
        if family == "phase" and "metric" in obj:
            raise ConfigError(f"{where}: phase-only sectors are uniform, "
                              "'metric' does not apply")
        return QuantizerSpec(family=family, metric=metric, bins=bins)
    if "bins" in obj:
        raise ConfigError(f"{where}: family 'ap' takes 'rings' and 'sectors',"
                          " not 'bins'")
    sectors = _as_int(_need(obj, "sectors", where), f"{where}.sectors",
                      minimum=2)
    thr = obj.get("amp_thresholds")
    if thr is not None:
        if "metric" in obj:
            raise ConfigError(f"{where}: fixed 'amp_thresholds' and 'metric' "
                              "are mutually exclusive")
        if not isinstance(thr, list) or not thr:
            raise ConfigError(f"{where}.amp_thresholds: expected a nonempty "
                              "list of numbers")
        vals = [_as_number(v, f"{where}.amp_thresholds[{i}]", minimum=0.0)
                for i, v in enumerate(thr)]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError(f"{where}.amp_thresholds: must be strictly "
                              "increasing")
        if "rings" in obj and obj["rings"] != len(vals) + 1:
            raise ConfigError(f"{where}.rings: inconsistent with "
                              f"{len(vals)} amplitude thresholds")
        return QuantizerSpec(family="ap", metric="eqprob",
                             rings=len(vals) + 1, sectors=sectors,
                             amp_thresholds=tuple(vals))
    rings = _as_int(_need(obj, "rings", where), f"{where}.rings", minimum=1)
    return QuantizerSpec(family="ap", metric=metric, rings=rings,
                         sectors=sectors)


def _parse_geometry(obj, experiment):
    if not isinstance(obj, dict):
        raise ConfigError("key 'geometry': expected an object")
    allowed = {"carrier_ghz", "spacing_m", "range_m", "range_nominal_m"}
    _reject_unknown(obj, allowed, "geometry")
    out = {"carrier_ghz": _as_number(_need(obj, "carrier_ghz", "geometry"),
                                     "geometry.carrier_ghz", minimum=1e-6)}
    if experiment == "range_sweep":
        if "range_m" in obj:
            raise ConfigError("geometry: range sweeps take 'range_nominal_m'"
                              ", not 'range_m'")
        out["range_nominal_m"] = _as_number(
            _need(obj, "range_nominal_m", "geometry"),
            "geometry.range_nominal_m", minimum=1e-9)
        if "spacing_m" in obj:
            out["spacing_m"] = _as_number(obj["spacing_m"],
                                          "geometry.spacing_m", minimum=1e-12)
    else:
        if "range_nominal_m" in obj:
            raise ConfigError("geometry: 'range_nominal_m' only applies to "
                              "range sweeps")
        out["range_m"] = _as_number(_need(obj, "range_m", "geometry"),
                                    "geometry.range_m", minimum=1e-9)
        out["spacing_m"] = _as_number(_need(obj, "spacing_m", "geometry"),
                                      "geometry.spacing_m", minimum=1e-12)
    return out


@dataclass(frozen=True)
class SweepConfig:
    """Validated experiment description. Built by parse_config."""

    experiment: str
    modulation: str = "qpsk"
    array_size: int = 4
    theta_rad: float | None = None
    geometry: dict | None = None
    snr_db: tuple[float, ...] = ()
    phi_policy: str = "uniform"
    detectors: tuple[str, ...] = ()
    quantizer: QuantizerSpec | None = None
    schemes: tuple = ()
    frames: int = 0
    master_seed: int = 0
    output: str | None = None
    early_stop: bool = True
    workers: int = 1
    mc_samples: int | None = None
    unquantized_samples: int = 200_000

    def canonical(self) -> dict:
        """Semantically complete dict for hashing; excludes output/workers
        which cannot affect row content."""
        doc = {"experiment": self.experiment,
               "master_seed": self.master_seed}
        if self.experiment == "design_quantizer":
            doc["quantizer"] = self.quantizer.canonical()
            doc["snr_db"] = list(self.snr_db)
            return doc
        doc.update(modulation=self.modulation, array_size=self.array_size,
                   snr_db=list(self.snr_db), phi_policy=self.phi_policy)
        if self.theta_rad is not None:
            doc["theta_rad"] = self.theta_rad
        if self.geometry is not None:
            doc["geometry"] = dict(sorted(self.geometry.items()))
        if self.experiment == "mi_sweep":
            doc["schemes"] = [s if isinstance(s, str) else s.canonical()
                              for s in self.schemes]
            if self.mc_samples is not None:
                doc["mc_samples"] = self.mc_samples
            doc["unquantized_samples"] = self.unquantized_samples
        else:
            doc["detectors"] = list(self.detectors)
            doc["quantizer"] = self.quantizer.canonical()
            doc["frames"] = self.frames
            doc["early_stop"] = self.early_stop
        return doc


def config_hash(cfg: SweepConfig) -> str:
    text = json.dumps(cfg.canonical(), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _parse_detectors(obj):
    value = obj.get("detector")
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError("key 'detector': expected a detector name or a "
                          "nonempty list of names")
    dets = tuple(_as_str(v, f"detector[{i}]", choices=_DETECTORS)
                 for i, v in enumerate(value))
    if len(set(dets)) != len(dets):
        raise ConfigError("key 'detector': duplicate entries")
    return dets


def _default_frames(modulation, detectors):
    if modulation == "qam16" and "ml" in detectors:
        return 200_000
    return 1_000_000


def _parse_phi(obj, key, default=None, kinds=("fixed", "grid", "uniform")):
    raw = obj.get(key, default)
    if raw is None:
        raise ConfigError(f"missing required key '{key}'")
    policy_text = _as_str(raw, key)
    try:
        policy = PhiPolicy.parse(policy_text)
    except ValueError as e:
        raise ConfigError(f"key '{key}': {e}") from e
    if policy.kind not in kinds:
        raise ConfigError(f"key '{key}': policy '{policy.kind}' is not "
                          f"supported by this experiment")
    return str(policy)


def parse_config(text: str, seed_override: int | None = None,
                 out_override: str | None = None) -> SweepConfig:
    """Validate a JSON config document into a SweepConfig.

    Unknown keys are rejected; error messages name the key (or the
    line/column for JSON syntax errors).
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(obj, dict):
        raise ConfigError("top level: expected a JSON object")
    experiment = _as_str(_need(obj, "experiment", "top level"), "experiment",
                         choices=_EXPERIMENTS)

    common = {"experiment", "master_seed", "output"}
    fields: dict = {"experiment": experiment}
    if seed_override is not None:
        fields["master_seed"] = seed_override
    elif "master_seed" in obj:
        fields["master_seed"] = _as_int(obj["master_seed"], "master_seed",
                                        minimum=0)
    if out_override is not None:
        fields["output"] = out_override
    elif "output" in obj:
        fields["output"] = _as_str(obj["output"], "output")

    if experiment == "design_quantizer":
        _reject_unknown(obj, common | {"quantizer", "snr_db"}, "top level")
        fields["quantizer"] = _parse_quantizer(_need(obj, "quantizer",
                                                     "top level"), "quantizer")
        fields["snr_db"] = _snr_list(_need(obj, "snr_db", "top level"),
                                     "snr_db", allow_scalar=True)
        if len(fields["snr_db"]) != 1:
            raise ConfigError("key 'snr_db': quantizer design takes a single"
                              " SNR point")
        return SweepConfig(**fields)

    fields["modulation"] = _as_str(_need(obj, "modulation", "top level"),
                                   "modulation", choices=("qpsk", "qam16"))
    fields["array_size"] = _as_int(_need(obj, "array_size", "top level"),
                                   "array_size", choices=(2, 4))

    if experiment == "range_sweep":
        if "theta_rad" in obj:
            raise ConfigError("key 'theta_rad': range sweeps derive theta "
                              "from geometry per point")
        geometry = _parse_geometry(_need(obj, "geometry", "top level"),
                                   experiment)
        fields["geometry"] = geometry
    else:
        has_theta, has_geom = "theta_rad" in obj, "geometry" in obj
        if has_theta == has_geom:
            raise ConfigError("exactly one of 'theta_rad' and 'geometry' is "
                              "required")
        if has_theta:
            fields["theta_rad"] = _as_number(obj["theta_rad"], "theta_rad")
        else:
            fields["geometry"] = _parse_geometry(obj["geometry"], experiment)

    if experiment == "mi_sweep":
        allowed = common | {"modulation", "array_size", "theta_rad",
                            "geometry", "snr_db", "phi_policy", "schemes",
                            "mc_samples", "unquantized_samples"}
        _reject_unknown(obj, allowed, "top level")
        fields["snr_db"] = _snr_list(_need(obj, "snr_db", "top level"),
                                     "snr_db")
        fields["phi_policy"] = _parse_phi(obj, "phi_policy",
                                          kinds=("fixed", "grid"))
        raw = _need(obj, "schemes", "top level")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("key 'schemes': expected a nonempty list")
        schemes = []
        for i, entry in enumerate(raw):
            if entry == "unquantized":
                schemes.append("unquantized")
            else:
                schemes.append(_parse_quantizer(entry, f"schemes[{i}]"))
        fields["schemes"] = tuple(schemes)
        if "mc_samples" in obj:
            fields["mc_samples"] = _as_int(obj["mc_samples"], "mc_samples",
                                           minimum=1000)
        if "unquantized_samples" in obj:
            fields["unquantized_samples"] = _as_int(
                obj["unquantized_samples"], "unquantized_samples",
                minimum=100_000)
        return SweepConfig(**fields)

    # ber_sweep and range_sweep share the frame engine keys
    allowed = common | {"modulation", "array_size", "theta_rad", "geometry",
                        "snr_db", "phi_policy", "detector", "quantizer",
                        "frames", "early_stop", "workers"}
    _reject_unknown(obj, allowed, "top level")
    if experiment == "range_sweep":
        fields["snr_db"] = _snr_list(obj.get("snr_db", [40.0]), "snr_db")
        fields["phi_policy"] = _parse_phi(obj, "phi_policy",
                                          default="uniform")
        fields["detectors"] = _parse_detectors(
            {"detector": obj.get("detector", ["zf", "vq"])})
    else:
        fields["snr_db"] = _snr_list(_need(obj, "snr_db", "top level"),
                                     "snr_db")
        fields["phi_policy"] = _parse_phi(obj, "phi_policy")
        fields["detectors"] = _parse_detectors(
            {"detector": _need(obj, "detector", "top level")})
    spec = _parse_quantizer(_need(obj, "quantizer", "top level"), "quantizer")
    if spec.family != "iq":
        raise ConfigError("key 'quantizer.family': BER experiments quantize "
                          "per I/Q axis; use family 'iq'")
    if "vq" in fields["detectors"] and spec.metric != "eqprob":
        raise ConfigError("key 'quantizer.metric': the virtual-quantization "
                          "detector refines equal-probability grids only")
    fields["quantizer"] = spec
    fields["frames"] = _as_int(
        obj.get("frames", _default_frames(fields["modulation"],
                                          fields["detectors"])),
        "frames", minimum=1000)
    if "early_stop" in obj:
        fields["early_stop"] = _as_bool(obj["early_stop"], "early_stop")
    if "workers" in obj:
        fields["workers"] = _as_int(obj["workers"], "workers", minimum=1)
    return SweepConfig(**fields)


def load_config(path, seed_override=None, out_override=None) -> SweepConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from e
    return parse_config(text, seed_override, out_override)


# ---------------------------------------------------------------- results

@dataclass
class SweepResult:
    experiment: str
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict[str, str]
    wall_time_s: float = 0.0  # diagnostic only, never serialized


def _cell(value) -> str:
    # plain float() first: numpy scalars subclass float but repr differently
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def emit_csv(result: SweepResult, stream) -> None:
    for key, value in result.metadata.items():
        stream.write(f"# {key}: {value}\n")
    stream.write(",".join(result.columns) + "\n")
    for row in result.rows:
        stream.write(",".join(_cell(v) for v in row) + "\n")


def emit_json(result: SweepResult, stream) -> None:
    doc = {"metadata": result.metadata,
           "columns": list(result.columns),
           "rows": [[v for v in row] for row in result.rows]}
    json.dump(doc, stream, indent=1)
    stream.write("\n")


def write_result(result: SweepResult, path) -> None:
    """CSV at path, JSON mirror alongside with a .json suffix."""
    path = pathlib.Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        emit_csv(result, fh)
    with open(path.with_suffix(".json"), "w", encoding="utf-8",
              newline="") as fh:
        emit_json(result, fh)


def parse_metadata(path) -> dict[str, str]:
    """Read the '# key: value' header lines back from an emitted CSV."""
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].partition(":")
            meta[key.strip()] = value.strip()
    return meta


def _metadata(cfg: SweepConfig) -> dict[str, str]:
    return {"qlos_version": __version__,
            "experiment": cfg.experiment,
            "config_hash": config_hash(cfg),
            "master_seed": str(cfg.master_seed)}


# ------------------------------------------------------------- ber engine

def _bit_distance(c):
    lab = c.labels.astype(np.int64)
    return np.array([[bin(a ^ b).count("1") for b in lab] for a in lab],
                    dtype=np.int64)


def _theta_of(cfg: SweepConfig) -> float:
    if cfg.theta_rad is not None:
        return float(cfg.theta_rad)
    g = cfg.geometry
    wavelength = _LIGHT_SPEED / (g["carrier_ghz"] * 1e9)
    geom = ch.LosGeometry(g["range_m"], g["spacing_m"], wavelength,
                          cfg.array_size)
    return ch.crossover_phase(geom, "exact")


def _point_state(cfg: SweepConfig, detector: str, theta: float,
                 sigma2: float, c) -> dict:
    H0 = ch.los_channel(cfg.array_size, theta, 0.0)
    q = qz.with_codebook(cfg.quantizer.design(sigma2), sigma2)
    gram = H0.entries.conj().T @ H0.entries
    lv = c.axis_levels
    state = {
        "backend": BACKEND,
        "detector": detector,
        "master_seed": cfg.master_seed,
        "n": cfg.array_size,
        "csize": c.size,
        "policy": PhiPolicy.parse(cfg.phi_policy),
        "sigma2": sigma2,
        "mean_table": c.points[vector_indices(c.size, cfg.array_size)]
                      @ H0.entries.T,
        "w0": np.linalg.solve(gram, H0.entries.conj().T),
        "qthr": q.iq_thresholds,
        "qcode": q.codebook,
        "sthr": (lv[:-1] + lv[1:]) / 2.0,
        "bitdist": _bit_distance(c),
    }
    if detector == "vq":
        virt = qz.with_codebook(qz.refine(q).virtual, sigma2)
        state["vthr"] = virt.iq_thresholds
        state["vcode"] = virt.codebook
    return state


def _chunk_crot(fb, policy, frame_start, count):
    if policy.kind == "fixed":
        rot = complex(math.cos(policy.value), -math.sin(policy.value))
        return np.full(count, rot, dtype=np.complex128)
    if policy.kind == "grid":
        idx = frame_start + np.arange(count)
        phi = ((idx % policy.size) + 0.5) * (2.0 * math.pi / policy.size)
        return np.cos(phi) - 1j * np.sin(phi)
    return fb.crot


def _chunk_errors(state: dict, frame_start: int, count: int) -> int:
    backend = get_backend(state["backend"])
    fb = qrng.frame_inputs(state["master_seed"], frame_start, count,
                           state["n"], state["csize"])
    crot = _chunk_crot(fb, state["policy"], frame_start, count)
    det = state["detector"]
    if det == "zf":
        return backend.ber_zf(fb.sym_idx, crot, fb.noise, state["sigma2"],
                              state["mean_table"], state["w0"],
                              state["qthr"], state["qcode"], state["sthr"],
                              state["bitdist"])
    if det == "ml":
        return backend.ber_ml(fb.sym_idx, crot, fb.noise, state["sigma2"],
                              state["mean_table"], state["qthr"],
                              state["bitdist"])
    return backend.ber_vq(fb.sym_idx, crot, fb.noise, state["sigma2"],
                          state["mean_table"], state["w0"], state["qthr"],
                          state["vthr"], state["vcode"], state["sthr"],
                          state["bitdist"])


_WORKER_STATE: dict | None = None


def _worker_init(state):
    global _WORKER_STATE
    _WORKER_STATE = state


def _worker_chunk(span):
    return _chunk_errors(_WORKER_STATE, span[0], span[1])


def _spans(frames: int):
    start = 0
    while start < frames:
        count = min(CHUNK_FRAMES, frames - start)
        yield (start, count)
        start += count


def _run_point(cfg: SweepConfig, state: dict) -> tuple[int, int]:
    """(frames actually run, total bit errors), merged in frame order.

    The early-stop test runs at fixed chunk boundaries over the
    in-order scan, so the outcome cannot depend on the worker count;
    extra chunks a pool may have computed past the stop point are
    discarded unobserved.
    """
    frames_done = 0
    errors = 0

    def scan(pairs):
        nonlocal frames_done, errors
        for (start, count), e in pairs:
            frames_done = start + count
            errors += e
            if cfg.early_stop and errors >= EARLY_STOP_ERRORS \
                    and frames_done >= EARLY_STOP_MIN_FRAMES:
                return True
        return False

    spans = list(_spans(cfg.frames))
    if cfg.workers > 1:
        with multiprocessing.Pool(cfg.workers, initializer=_worker_init,
                                  initargs=(state,)) as pool:
            results = pool.imap(_worker_chunk, spans)
            scan(zip(spans, results))
    else:
        scan((span, _chunk_errors(state, *span)) for span in spans)
    return frames_done, errors


def _ber_row(cfg, theta, detector, snr_db, frames, errors, c):
    total_bits = frames * cfg.array_size * c.bits_per_symbol
    ber = errors / total_bits
    stderr = math.sqrt(max(ber * (1.0 - ber), 0.0) / total_bits)
    return (cfg.experiment, cfg.modulation, cfg.array_size, float(theta),
            cfg.phi_policy, detector, cfg.quantizer.label(), float(snr_db),
            frames, errors, ber, stderr)


def run_ber_sweep(cfg: SweepConfig) -> SweepResult:
    if cfg.experiment != "ber_sweep":
        raise ConfigError("run_ber_sweep needs a ber_sweep config")
    t0 = time.perf_counter()
    c = make_constellation(cfg.modulation)
    theta = _theta_of(cfg)
    rows = []
    for detector in cfg.detectors:
        for snr_db in cfg.snr_db:
            sigma2 = 10.0 ** (-snr_db / 10.0)
            state = _point_state(cfg, detector, theta, sigma2, c)
            frames, errors = _run_point(cfg, state)
            rows.append(_ber_row(cfg, theta, detector, snr_db, frames,
                                 errors, c))
    return SweepResult(cfg.experiment, BER_COLUMNS, rows, _metadata(cfg),
                       time.perf_counter() - t0)


def run_range_sweep(cfg: SweepConfig) -> SweepResult:
    if cfg.experiment != "range_sweep":
        raise ConfigError("run_range_sweep needs a range_sweep config")
    t0 = time.perf_counter()
    c = make_constellation(cfg.modulation)
    g = cfg.geometry
    wavelength = _LIGHT_SPEED / (g["carrier_ghz"] * 1e9)
    r_nominal = g["range_nominal_m"]
    spacing = g.get("spacing_m")
    if spacing is None:
        spacing = ch.calibrate_spacing(r_nominal, wavelength, cfg.array_size)
    rows = []
    for detector in cfg.detectors:
        for ratio in RANGE_RATIOS:
            geom = ch.LosGeometry(ratio * r_nominal, spacing, wavelength,
                                  cfg.array_size)
            theta = ch.crossover_phase(geom, "exact")
            for snr_db in cfg.snr_db:
                sigma2 = 10.0 ** (-snr_db / 10.0)
                state = _point_state(cfg, detector, theta, sigma2, c)
                frames, errors = _run_point(cfg, state)
                rows.append(_ber_row(cfg, theta, detector, snr_db, frames,
                                     errors, c))
    meta = _metadata(cfg)
    # enough geometry to invert theta -> R/R_N in closed form downstream
    meta["geometry_range_nominal_m"] = repr(float(r_nominal))
    meta["geometry_spacing_m"] = repr(float(spacing))
    meta["geometry_wavelength_m"] = repr(float(wavelength))
    return SweepResult(cfg.experiment, BER_COLUMNS, rows, meta,
                       time.perf_counter() - t0)


def run_mi_sweep(cfg: SweepConfig) -> SweepResult:
    if cfg.experiment != "mi_sweep":
        raise ConfigError("run_mi_sweep needs an mi_sweep config")
    t0 = time.perf_counter()
    c = make_constellation(cfg.modulation)
    theta = _theta_of(cfg)
    rows = []
    for spec in cfg.schemes:
        for snr_db in cfg.snr_db:
            sigma2 = 10.0 ** (-snr_db / 10.0)
            if spec == "unquantized":
                res = it.mi_unquantized(theta, sigma2, c, cfg.phi_policy,
                                        cfg.unquantized_samples,
                                        cfg.array_size, seed=cfg.master_seed)
            else:
                res = it.mi_quantized(spec.design(sigma2), theta, sigma2, c,
                                      cfg.phi_policy, cfg.array_size,
                                      scheme=spec.label(),
                                      mc_samples=cfg.mc_samples,
                                      seed=cfg.master_seed)
            rows.append((cfg.experiment, cfg.modulation, cfg.array_size,
                         float(theta), cfg.phi_policy, res.scheme,
                         float(snr_db), res.mi_bits, res.stderr))
    return SweepResult(cfg.experiment, MI_COLUMNS, rows, _metadata(cfg),
                       time.perf_counter() - t0)


def run_design_quantizer(cfg: SweepConfig) -> dict:
    if cfg.experiment != "design_quantizer":
        raise ConfigError("run_design_quantizer needs a design_quantizer "
                          "config")
    sigma2 = 10.0 ** (-cfg.snr_db[0] / 10.0)
    q = cfg.quantizer.design(sigma2)
    doc = qz.export_json(q, sigma2)
    doc["metric"] = cfg.quantizer.metric
    doc["snr_db"] = float(cfg.snr_db[0])
    return doc


def run_sweep(cfg: SweepConfig) -> SweepResult:
    if cfg.experiment == "ber_sweep":
        return run_ber_sweep(cfg)
    if cfg.experiment == "range_sweep":
        return run_range_sweep(cfg)
    if cfg.experiment == "mi_sweep":
        return run_mi_sweep(cfg)
    raise ConfigError(f"no sweep runner for experiment '{cfg.experiment}'")
