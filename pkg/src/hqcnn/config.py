"""Experiment configuration: a line-oriented "key = value" text format.

Blank lines and lines starting with '#' are ignored. Unknown keys are
rejected so typos fail loudly. See configs/ for canonical examples.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, fields


def _parse_bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {s!r}")


def _parse_int_tuple(s: str) -> tuple:
    return tuple(int(part) for part in s.split(",") if part.strip() != "")


@dataclass
class TrainConfig:
    # dataset
    source: str = "synthetic"          # idx | csv | synthetic
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    csv_path: str = ""
    test_fraction: float = 0.2         # csv source only
    classes: tuple = (0, 1, 2, 3)
    encoder: str = "auto"              # auto | amplitude | angle
    # circuit layout
    retained: tuple = ()               # empty = derived from pool_keep
    pool_keep: str = "low"
    pairing: str = "brick"
    # classical heads
    k: int = 2
    final_layer: bool = False
    recycle: bool = True
    # optimizer
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    # training loop
    batch_size: int = 16
    iterations: int = 600
    seed: int = 7
    train_size: int = 1000
    test_size: int = 500
    out_dir: str = "runs/out"

    def __post_init__(self):
        self.classes = tuple(int(c) for c in self.classes)
        self.retained = tuple(int(w) for w in self.retained)
        self.validate()

    def validate(self):
        if self.source not in ("idx", "csv", "synthetic"):
            raise ValueError(f"source must be idx/csv/synthetic, got {self.source!r}")
        if len(self.classes) != 4 or len(set(self.classes)) != 4:
            raise ValueError(f"classes must be 4 distinct ids, got {self.classes}")
        if self.encoder not in ("auto", "amplitude", "angle"):
            raise ValueError(f"encoder must be auto/amplitude/angle, got {self.encoder!r}")
        if self.retained and len(self.retained) != 2:
            raise ValueError(f"retained must be empty or two wires, got {self.retained}")
        if self.pool_keep not in ("low", "high"):
            raise ValueError(f"pool_keep must be low/high, got {self.pool_keep!r}")
        if self.pairing not in ("brick", "linear"):
            raise ValueError(f"pairing must be brick/linear, got {self.pairing!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.train_size < 1 or self.test_size < 1:
            raise ValueError("train_size and test_size must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        for rate in (self.learning_rate, self.epsilon):
            if rate <= 0:
                raise ValueError("learning_rate and epsilon must be positive")
        for beta in (self.beta1, self.beta2):
            if not 0.0 <= beta < 1.0:
                raise ValueError("beta1/beta2 must be in [0, 1)")

    @property
    def effective_encoder(self) -> str:
        """'auto' resolves to amplitude: images yield 256 features (> 8)."""
        return "amplitude" if self.encoder == "auto" else self.encoder

    def retained_or_none(self):
        return self.retained if self.retained else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classes"] = list(self.classes)
        d["retained"] = list(self.retained)
        return d


_PARSERS = {
    str: lambda s: s.strip(),
    int: lambda s: int(s.strip()),
    float: lambda s: float(s.strip()),
    bool: _parse_bool,
    tuple: _parse_int_tuple,
}


def parse_config(path) -> TrainConfig:
    """Read a key = value config file into a validated TrainConfig."""
    by_name = {f.name: f.type for f in fields(TrainConfig)}
    # dataclass field types are strings under `from __future__ import annotations`
    type_map = {"str": str, "int": int, "float": float, "bool": bool, "tuple": tuple}
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in by_name:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            ftype = type_map[by_name[key]] if isinstance(by_name[key], str) else by_name[key]
            try:
                values[key] = _PARSERS[ftype](raw)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return TrainConfig(**values)


def format_config(config: TrainConfig) -> str:
    """Render a config back into the key = value format."""
    lines = []
    for f in fields(TrainConfig):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            value = "on" if value else "off"
        elif isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
