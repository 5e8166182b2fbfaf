import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping, Type, Union

from lateralbench.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING = 1.5


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigurationError(message)


@dataclass(frozen=True)
class PreviewConfig:
    d_p0: float = 0.0
    t_p: float = 0.0

    def __post_init__(self):
        _require(self.d_p0 >= 0, f"d_p0 must be nonnegative, got {self.d_p0}")
        _require(self.t_p >= 0, f"t_p must be nonnegative, got {self.t_p}")

    def distance(self, v_x: float) -> float:
        return self.d_p0 + max(v_x, 0.0) * self.t_p


@dataclass(frozen=True)
class LQRConfig:
    q1: float
    q2: float
    q3: float
    q4: float
    N_LQR: float

    def __post_init__(self):
        for name in ("q1", "q2", "q3", "q4"):
            _require(getattr(self, name) >= 0, f"{name} must be nonnegative")
        _require(self.N_LQR > 0, f"N_LQR must be positive, got {self.N_LQR}")

    @property
    def weights(self):
        return (self.q1, self.q2, self.q3, self.q4)


@dataclass(frozen=True)
class MFCConfig:
    K_p: float
    K_d: float
    alpha: float
    C: float = DEFAULT_SMOOTHING

    def __post_init__(self):
        _require(self.K_p >= 0 and self.K_d >= 0, "MFC gains must be nonnegative")
        _require(self.alpha > 0, f"alpha must be positive, got {self.alpha}")
        _require(self.C > 0, f"C must be positive, got {self.C}")


@dataclass(frozen=True)
class SAMFCConfig:
    K_p: float
    K_d: float
    alpha_0: float
    v_x0: float
    K_alpha: float
    C: float = DEFAULT_SMOOTHING

    def __post_init__(self):
        _require(self.K_p >= 0 and self.K_d >= 0, "SAMFC gains must be nonnegative")
        _require(self.alpha_0 > 0, f"alpha_0 must be positive, got {self.alpha_0}")
        _require(self.v_x0 >= 0 and self.K_alpha >= 0, "v_x0 and K_alpha must be nonnegative")
        _require(self.C > 0, f"C must be positive, got {self.C}")


@dataclass(frozen=True)
class PIDConfig:
    K_p: float
    K_i: float
    K_d: float
    N_PID: float

    def __post_init__(self):
        _require(min(self.K_p, self.K_i, self.K_d) >= 0, "PID gains must be nonnegative")
        _require(self.N_PID > 0, f"N_PID must be positive, got {self.N_PID}")


@dataclass(frozen=True)
class NLMPCConfig:
    h_p: int
    h_c: int
    w_rate: float

    def __post_init__(self):
        _require(isinstance(self.h_p, int) and isinstance(self.h_c, int), "Horizons must be integers")
        _require(1 <= self.h_c <= self.h_p, f"Need 1 <= h_c <= h_p, got h_c={self.h_c}, h_p={self.h_p}")
        _require(self.w_rate >= 0, f"w_rate must be nonnegative, got {self.w_rate}")


FamilyConfig = Union[LQRConfig, MFCConfig, SAMFCConfig, PIDConfig, NLMPCConfig]

# Table order of the families
FAMILIES: Dict[str, Type] = {
    "lqr": LQRConfig,
    "mfc": MFCConfig,
    "samfc": SAMFCConfig,
    "pid": PIDConfig,
    "nlmpc": NLMPCConfig,
}

LABELS = {"lqr": "LQR", "mfc": "MFC", "samfc": "SAMFC", "pid": "PID", "nlmpc": "NLMPC"}


@dataclass(frozen=True)
class ControllerConfig:
    kind: str
    params: FamilyConfig
    preview: PreviewConfig = PreviewConfig()
    name: str = ""
    notes: str = ""

    def __post_init__(self):
        family = FAMILIES.get(self.kind)
        _require(family is not None, f"Unknown controller type {self.kind!r}")
        _require(isinstance(self.params, family), f"{self.kind} controller needs {family.__name__} parameters")

    @property
    def label(self) -> str:
        return self.name or LABELS[self.kind]

    def to_dict(self) -> Dict[str, Any]:
        data = {"type": self.kind, "params": asdict(self.params), "preview": asdict(self.preview)}
        if self.name:
            data["name"] = self.name
        if self.notes:
            data["notes"] = self.notes
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ControllerConfig":
        kind = data.get("type")
        family = FAMILIES.get(kind)
        if family is None:
            raise ConfigurationError(f"Unknown controller type {kind!r}")
        return cls(
            kind=kind,
            params=family_params(kind, data.get("params", {})),
            preview=preview_config(data.get("preview", {})),
            name=data.get("name", ""),
            notes=data.get("notes", ""),
        )

    def with_params(self, **changes) -> "ControllerConfig":
        values = {**asdict(self.params), **changes}
        return ControllerConfig(self.kind, family_params(self.kind, values), self.preview, self.name, self.notes)


def family_params(kind: str, values: Mapping[str, Any]) -> FamilyConfig:
    family = FAMILIES[kind]
    names = {f.name: f for f in fields(family)}
    unknown = set(values) - set(names)
    if unknown:
        raise ConfigurationError(f"Unknown {kind} parameters: {', '.join(sorted(unknown))}")
    converted = {}
    for key, value in values.items():
        try:
            if names[key].type is int:
                if float(value) != int(float(value)):
                    raise ConfigurationError(f"{kind} parameter {key} must be an integer, got {value}")
                converted[key] = int(float(value))
            else:
                converted[key] = float(value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"Invalid {kind} parameter {key}={value!r}") from exc
    try:
        return family(**converted)
    except TypeError as exc:
        raise ConfigurationError(f"Missing {kind} parameters: {exc}") from exc


def preview_config(values: Mapping[str, Any]) -> PreviewConfig:
    unknown = set(values) - {"d_p0", "t_p"}
    if unknown:
        raise ConfigurationError(f"Unknown preview parameters: {', '.join(sorted(unknown))}")
    try:
        return PreviewConfig(**{key: float(value) for key, value in values.items()})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"Invalid preview parameters: {exc}") from exc
