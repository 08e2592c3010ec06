"""``key = value`` run configuration.

Every :class:`GenerationConfig` field is addressable through a flat key.
The same keys are accepted by ``--set key=value`` on the command line, and
blank lines and ``#`` comments are ignored. A few extra keys configure the
dynamics extraction used by ``analogy``, ``flow`` and ``quantize``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .nnf import PatchShape, SolverParams
from .pipeline import GenerationConfig
from .video import NoiseSpec, ScaleFactor


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (section, attribute, parser)
KEYS = {
    "scale_t": ("scale_factor", "r_t", float),
    "scale_h": ("scale_factor", "r_h", float),
    "scale_w": ("scale_factor", "r_w", float),
    "noise_sigma": ("noise", "sigma", float),
    "noise_temporal_replicate": ("noise", "temporal_replicate", _bool),
    "em_iters_per_level": (None, "em_iters_per_level", int),
    "solver_iterations": ("solver", "iterations", int),
    "solver_alpha": ("solver", "alpha", float),
    "solver_init": ("solver", "init", str),
    "patch_t": ("patch_shape", "p_t", int),
    "patch_h": ("patch_shape", "p_h", int),
    "patch_w": ("patch_shape", "p_w", int),
    "output_time_scale": (None, "output_time_scale", float),
    "output_space_scale": (None, "output_space_scale", float),
    "min_t": ("min_dims", 0, int),
    "min_h": ("min_dims", 1, int),
    "min_w": ("min_dims", 2, int),
    "seed": (None, "seed", int),
    "dyn_bins": ("extra", "dyn_bins", int),
    "dyn_weight": ("extra", "dyn_weight", float),
    "flow_window": ("extra", "flow_window", int),
    "flow_max_disp": ("extra", "flow_max_disp", int),
}


@dataclass
class RunConfig:
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    dyn_bins: int = 5
    dyn_weight: float = 1.0
    flow_window: int = 7
    flow_max_disp: int = 6


def parse_pairs(text: str, origin: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs.append((key, value))
    return pairs


def apply(cfg: RunConfig, pairs) -> RunConfig:
    """Return ``cfg`` with ``pairs`` applied; every key and value is validated."""
    sections = {
        "scale_factor": dict(vars(cfg.generation.scale_factor)),
        "noise": dict(vars(cfg.generation.noise)),
        "solver": dict(vars(cfg.generation.solver)),
        "patch_shape": dict(vars(cfg.generation.patch_shape)),
        "min_dims": list(cfg.generation.min_dims),
        None: {},
        "extra": {},
    }
    for key, value in pairs:
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        section, attr, parse = KEYS[key]
        try:
            sections[section][attr] = parse(value)
        except ValueError as e:
            raise ConfigError(f"bad value for {key}: {e}") from None
    try:
        gen = replace(
            cfg.generation,
            scale_factor=ScaleFactor(**sections["scale_factor"]),
            noise=NoiseSpec(**sections["noise"]),
            solver=SolverParams(**sections["solver"]),
            patch_shape=PatchShape(**sections["patch_shape"]),
            min_dims=tuple(sections["min_dims"]),
            **sections[None],
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return replace(cfg, generation=gen, **sections["extra"])


def load(path=None, overrides=()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        with open(path, encoding="utf-8") as f:
            cfg = apply(cfg, parse_pairs(f.read(), str(path)))
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return apply(cfg, pairs)


def dump(cfg: RunConfig) -> str:
    """Serialise ``cfg`` back to ``key = value`` text (round-trips through ``load``)."""
    g = cfg.generation
    lines = []
    for key, (section, attr, _) in KEYS.items():
        if section is None:
            val = getattr(g, attr)
        elif section == "extra":
            val = getattr(cfg, attr)
        elif section == "min_dims":
            val = g.min_dims[attr]
        else:
            val = getattr(getattr(g, section), attr)
        lines.append(f"{key} = {str(val).lower() if isinstance(val, bool) else val}")
    return "\n".join(lines) + "\n"
