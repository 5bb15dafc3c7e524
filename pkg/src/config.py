"""
Configuration des expériences
Lecture du JSON, validation bloc par bloc, surcharges de la ligne de commande,
plages de paramètres documentées et préréglages de balayage
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src.abr import AbrAlgorithm, BitrateLadder, Manifest, create_algorithm
from src.errors import ConfigError
from src.qudash import SWEEPABLE, QudashParams
from src.simulator import SessionConfig
from src.trace import ScenarioProfile, ThroughputTrace, load_csv, synth_trace


logger = logging.getLogger(__name__)

# plages étudiées pour chaque paramètre ; hors plage : avertissement seulement
PARAMETER_RANGES: Dict[str, Tuple[float, float]] = {
    "a": (1.0, 1e4),
    "b": (1.0, 1e4),
    "c": (1e2, 1e6),
    "d": (1.0, 1e4),
    "n_run": (32, 128),
    "n_ite": (1e2, 1e7),
}

ALGORITHM_KINDS = ("rb", "bb", "mpc", "qudash")

# un paramètre varie, les autres sont fixés (n_ite ramené à 1e4 pour rester praticable)
SWEEP_PRESETS: Dict[str, Dict[str, Any]] = {
    "n_ite": {"fixed": {"a": 1e3, "b": 1, "c": 1e6, "d": 1, "n_run": 128},
              "values": [1e2, 1e3, 1e4, 1e5]},
    "n_run": {"fixed": {"a": 1e3, "b": 1, "c": 1e6, "d": 1, "n_ite": 1e4},
              "values": [32, 64, 128]},
    "a": {"fixed": {"b": 1, "c": 1e6, "d": 1, "n_run": 128, "n_ite": 1e4},
          "values": [1, 1e1, 1e2, 1e3, 1e4]},
    "b": {"fixed": {"a": 1e3, "c": 1e6, "d": 1, "n_run": 128, "n_ite": 1e4},
          "values": [1, 1e1, 1e2, 1e3, 1e4]},
    "c": {"fixed": {"a": 1e2, "b": 1e2, "d": 1, "n_run": 128, "n_ite": 1e4},
          "values": [1e2, 1e3, 1e4, 1e5, 1e6]},
    "d": {"fixed": {"a": 1e2, "b": 1e2, "c": 1e6, "n_run": 128, "n_ite": 1e4},
          "values": [1, 1e1, 1e2, 1e3, 1e4]},
}


def _reject_unknown(data: dict, known: set, block: str):
    if not isinstance(data, dict):
        raise ConfigError(f"Le bloc {block} doit être un objet JSON")
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Clé(s) inconnue(s) dans {block} : {', '.join(sorted(unknown))}")


def check_range(name: str, value: float) -> bool:
    """Avertit si value sort de la plage documentée ; retourne True si dans la plage"""
    bounds = PARAMETER_RANGES.get(name)
    if bounds is None or bounds[0] <= value <= bounds[1]:
        return True
    logger.warning("%s = %g hors de la plage étudiée [%g, %g]", name, value, bounds[0], bounds[1])
    return False


@dataclass
class ManifestSpec:
    bitrates_mbps: List[float] = field(default_factory=lambda: [1, 2.5, 5, 8, 16, 40])
    labels: Optional[List[str]] = None
    segment_duration_s: float = 2.0
    num_segments: int = 50
    size_model: Dict[str, Any] = field(default_factory=lambda: {"kind": "cbr"})

    @classmethod
    def from_dict(cls, data: dict) -> "ManifestSpec":
        _reject_unknown(data, set(cls.__dataclass_fields__), "manifest")
        spec = cls(**data)
        if int(spec.num_segments) < 1:
            raise ConfigError(f"num_segments doit être >= 1 (reçu {spec.num_segments})")
        _reject_unknown(spec.size_model, {"kind", "jitter", "seed"}, "manifest.size_model")
        if spec.size_model.get("kind", "cbr") not in ("cbr", "vbr"):
            raise ConfigError(f"Modèle de taille inconnu : {spec.size_model.get('kind')!r}")
        return spec

    def build(self) -> Manifest:
        labels = tuple(self.labels) if self.labels else ()
        ladder = BitrateLadder(tuple(self.bitrates_mbps), labels, float(self.segment_duration_s))
        if self.size_model.get("kind", "cbr") == "vbr":
            return Manifest.vbr(ladder, int(self.num_segments),
                                jitter=float(self.size_model.get("jitter", 0.1)),
                                seed=int(self.size_model.get("seed", 0)))
        return Manifest.cbr(ladder, int(self.num_segments))


@dataclass
class TraceSource:
    """Trace lue depuis un fichier ou générée depuis un profil"""
    path: Optional[str] = None
    profile: Optional[str] = None
    name: Optional[str] = None
    scenario: Optional[str] = None
    wraparound: bool = False
    seed: Optional[int] = None
    duration_s: int = 100
    mean: Optional[float] = None
    stddev: Optional[float] = None
    drop_rate: Optional[float] = None
    drop_depth: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict) -> "TraceSource":
        _reject_unknown(data, set(cls.__dataclass_fields__), "traces[]")
        source = cls(**data)
        if (source.path is None) == (source.profile is None):
            raise ConfigError("Chaque trace doit avoir soit 'path' soit 'profile'")
        return source

    def load(self, global_seed: int = 0, base_dir: Optional[Path] = None) -> ThroughputTrace:
        """
        Charge ou génère la trace

        Args:
            global_seed: Graine mélangée aux profils sans graine explicite
            base_dir: Répertoire de référence des chemins relatifs
        """
        if self.path is not None:
            path = Path(self.path)
            if base_dir is not None and not path.is_absolute() and not path.exists():
                path = base_dir / path
            trace = load_csv(path, wraparound=self.wraparound, scenario=self.scenario)
            if self.name:
                trace = ThroughputTrace(trace.samples, self.name, trace.wraparound, trace.scenario)
            return trace

        overrides = {k: getattr(self, k) for k in ("mean", "stddev", "drop_rate", "drop_depth")
                     if getattr(self, k) is not None}
        seed = self.seed if self.seed is not None else global_seed
        profile = ScenarioProfile.preset(self.profile, duration=int(self.duration_s), seed=int(seed), **overrides)
        trace = synth_trace(profile, name=self.name or f"{self.profile}{seed}")
        return ThroughputTrace(trace.samples, trace.name, self.wraparound, self.scenario or self.profile)


@dataclass
class AlgorithmSpec:
    name: str
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "AlgorithmSpec":
        _reject_unknown(data, {"name", "kind", "params"}, "algorithms[]")
        if "kind" not in data:
            raise ConfigError("Algorithme sans 'kind'")
        spec = cls(name=data.get("name") or data["kind"], kind=data["kind"], params=dict(data.get("params") or {}))
        if spec.kind not in ALGORITHM_KINDS:
            raise ConfigError(f"Type d'algorithme inconnu : {spec.kind!r} (attendu {', '.join(ALGORITHM_KINDS)})")
        if spec.kind == "qudash":
            params = QudashParams.from_dict(spec.params)
            for name in ("a", "b", "c", "d"):
                check_range(name, getattr(params, name))
        return spec

    def build(self, session: SessionConfig, seed: int = 0) -> AbrAlgorithm:
        return create_algorithm(self.kind, self.name, self.params, qoe_w=session.qoe_w,
                                max_buffer=session.max_buffer, seed=seed)


@dataclass
class SweepSpec:
    algorithm: str
    param: str
    values: List[float]
    fixed: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        _reject_unknown(data, {"algorithm", "param", "values", "preset"}, "sweep")
        if "algorithm" not in data:
            raise ConfigError("Le balayage doit nommer son algorithme")
        if "preset" in data:
            preset = SWEEP_PRESETS.get(data["preset"])
            if preset is None:
                raise ConfigError(f"Préréglage inconnu {data['preset']!r} (attendu {', '.join(SWEEP_PRESETS)})")
            spec = cls(data["algorithm"], data["preset"], list(data.get("values") or preset["values"]),
                       dict(preset["fixed"]))
        else:
            if "param" not in data or "values" not in data:
                raise ConfigError("Le balayage exige 'param' et 'values' (ou 'preset')")
            spec = cls(data["algorithm"], data["param"], list(data["values"]))
        return spec.validate()

    def validate(self) -> "SweepSpec":
        if self.param not in SWEEPABLE:
            raise ConfigError(f"Paramètre de balayage inconnu {self.param!r} (attendu {', '.join(SWEEPABLE)})")
        if not self.values:
            raise ConfigError("Liste de valeurs de balayage vide")
        seen = set()
        for value in self.values:
            if value in seen:
                raise ConfigError(f"Valeur de balayage dupliquée : {value}")
            seen.add(value)
            check_range(self.param, value)
        return self

    def params_for(self, base: QudashParams, value) -> QudashParams:
        params = base
        for name, fixed in self.fixed.items():
            params = params.with_override(name, fixed)
        return params.with_override(self.param, value)


@dataclass
class ExperimentConfig:
    """Description complète d'une expérience"""
    manifest: ManifestSpec = field(default_factory=ManifestSpec)
    traces: List[TraceSource] = field(default_factory=list)
    algorithms: List[AlgorithmSpec] = field(default_factory=list)
    sweep: Optional[SweepSpec] = None
    session: SessionConfig = field(default_factory=SessionConfig)
    output_dir: str = "results"
    seed: int = 0
    jobs: int = 1
    base_dir: Optional[Path] = None

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        """
        Construit la configuration depuis un dictionnaire JSON

        Raises:
            ConfigError: bloc ou clé invalide
        """
        _reject_unknown(data, {"manifest", "traces", "algorithms", "sweep", "session",
                               "output_dir", "seed", "jobs"}, "configuration")
        session_data = dict(data.get("session") or {})
        _reject_unknown(session_data, {"max_buffer_s", "qoe_w", "startup_level_rule"}, "session")
        session = SessionConfig(
            max_buffer=float(session_data.get("max_buffer_s", 60.0)),
            qoe_w=float(session_data.get("qoe_w", 40.0)),
            startup_level_rule=session_data.get("startup_level_rule", "algorithm"),
        )
        config = cls(
            manifest=ManifestSpec.from_dict(data.get("manifest") or {}),
            traces=[TraceSource.from_dict(t) for t in data.get("traces") or []],
            algorithms=[AlgorithmSpec.from_dict(a) for a in data.get("algorithms") or []],
            sweep=SweepSpec.from_dict(data["sweep"]) if data.get("sweep") else None,
            session=session,
            output_dir=str(data.get("output_dir", "results")),
            seed=int(data.get("seed", 0)),
            jobs=int(data.get("jobs", 1)),
            base_dir=base_dir,
        )
        return config.validate()

    def validate(self) -> "ExperimentConfig":
        if not self.traces:
            raise ConfigError("Au moins une trace est requise")
        if not self.algorithms:
            raise ConfigError("Au moins un algorithme est requis")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigError(f"Noms d'algorithmes dupliqués : {names}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"La graine doit tenir sur 64 bits non signés (reçu {self.seed})")
        if self.jobs < 1:
            raise ConfigError(f"jobs doit être >= 1 (reçu {self.jobs})")
        self.session.validate(float(self.manifest.segment_duration_s))
        if self.sweep is not None and self.sweep.algorithm not in names:
            raise ConfigError(f"Algorithme de balayage inconnu : {self.sweep.algorithm!r}")
        if self.sweep is not None and self.algorithm(self.sweep.algorithm).kind != "qudash":
            raise ConfigError("Seuls les paramètres de qudash peuvent être balayés")
        return self

    def apply_overrides(self, out: Optional[str] = None, seed: Optional[int] = None,
                        jobs: Optional[int] = None) -> "ExperimentConfig":
        """Les options --out, --seed et --jobs priment sur le fichier"""
        if out is not None:
            self.output_dir = out
        if seed is not None:
            self.seed = int(seed)
        if jobs is not None:
            self.jobs = int(jobs)
        return self.validate()

    def algorithm(self, name: str) -> AlgorithmSpec:
        for spec in self.algorithms:
            if spec.name == name:
                return spec
        raise ConfigError(f"Algorithme inconnu : {name!r} (disponibles : {', '.join(a.name for a in self.algorithms)})")

    def load_traces(self) -> List[ThroughputTrace]:
        return [source.load(self.seed, self.base_dir) for source in self.traces]


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Lit un fichier de configuration JSON

    Raises:
        ConfigError: fichier introuvable, JSON invalide ou schéma non respecté
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Fichier de configuration introuvable : {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} (ligne {e.lineno}) : JSON invalide ({e.msg})") from e
    return ExperimentConfig.from_dict(data, base_dir=path.parent)
