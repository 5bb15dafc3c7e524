"""
Traces de débit
Chargement et validation des CSV "t,mbps", lecture par morceaux constants
et génération de scénarios synthétiques (static, walk, bus)
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple, Union

import numpy as np

from src.errors import ConfigError, TraceExhaustedError, TraceFormatError


logger = logging.getLogger(__name__)

CSV_HEADER = ("t", "mbps")
MIN_SYNTH_MBPS = 0.1

# Paramètres inventés : ils imitent qualitativement des mesures LTE
# (bus plus instable que walk, walk plus instable que static)
PROFILE_PRESETS: Dict[str, Dict[str, float]] = {
    "static": {"mean": 40.0, "stddev": 2.0, "drop_rate": 0.0},
    "walk": {"mean": 30.0, "stddev": 6.0, "drop_rate": 0.02},
    "bus": {"mean": 25.0, "stddev": 12.0, "drop_rate": 0.05},
}

# nombre de traces par scénario du jeu de référence
SCENARIO_SUITE = (("static", 7), ("walk", 9), ("bus", 6))


@dataclass(frozen=True)
class ThroughputTrace:
    """Échantillons de débit (Mbps) à t = 0, 1, 2, ... secondes"""
    samples: Tuple[float, ...]
    name: str = "trace"
    wraparound: bool = False
    scenario: Optional[str] = None

    def __post_init__(self):
        samples = tuple(float(s) for s in self.samples)
        object.__setattr__(self, "samples", samples)
        if not samples:
            raise TraceFormatError(f"La trace {self.name!r} ne contient aucun échantillon")
        for t, value in enumerate(samples):
            if not math.isfinite(value) or value < 0:
                raise TraceFormatError(f"Débit invalide {value} à t={t} dans {self.name!r}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return float(len(self.samples))

    @property
    def timestamps(self) -> List[int]:
        return list(range(len(self.samples)))

    def sample(self, index: int) -> float:
        """
        Débit de la seconde index (modulo la longueur si bouclage)

        Raises:
            TraceExhaustedError: index au-delà de la fin sans bouclage
        """
        if index < len(self.samples):
            return self.samples[index]
        if self.wraparound:
            return self.samples[index % len(self.samples)]
        raise TraceExhaustedError(
            f"Trace {self.name!r} épuisée à t={index} s (durée {len(self.samples)} s, bouclage désactivé)"
        )

    def throughput_at(self, t: float) -> float:
        """Débit à l'instant t (la frontière entière appartient à l'échantillon suivant)"""
        if t < 0:
            raise TraceFormatError(f"Instant négatif : {t}")
        return self.sample(int(math.floor(t)))

    def integrate(self, start: float, end: float) -> float:
        """Mégabits transférables sur [start, end]"""
        total = 0.0
        t = start
        while t < end:
            index = int(math.floor(t))
            boundary = min(float(index + 1), end)
            total += self.sample(index) * (boundary - t)
            t = boundary
        return total


def throughput_at(trace: ThroughputTrace, t: float) -> float:
    return trace.throughput_at(t)


class TraceParser:
    """Lit un CSV "t,mbps" et valide chaque ligne"""

    def __init__(self, name: Optional[str] = None, wraparound: bool = False,
                 scenario: Optional[str] = None):
        self.name = name
        self.wraparound = wraparound
        self.scenario = scenario

    def parse_path(self, path: Union[str, Path]) -> ThroughputTrace:
        """
        Charge un fichier de trace

        Args:
            path: Chemin du CSV

        Returns:
            Trace validée
        """
        path = Path(path)
        if not path.is_file():
            raise TraceFormatError("fichier introuvable", path=str(path))
        with open(path, "r", encoding="utf-8", newline="") as f:
            return self.parse(f, name=self.name or path.stem, path=str(path))

    def parse(self, stream: TextIO, name: Optional[str] = None,
              path: Optional[str] = None) -> ThroughputTrace:
        """
        Analyse un flux CSV

        Les horodatages doivent valoir 0, 1, 2, ... ; un espacement non
        uniforme est rejeté, jamais rééchantillonné.
        """
        reader = csv.reader(stream)
        header = None
        samples: List[float] = []

        for line, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            cells = [cell.strip() for cell in row]
            if header is None:
                header = tuple(cells)
                if header != CSV_HEADER:
                    raise TraceFormatError(f"en-tête attendu 't,mbps', reçu {','.join(cells)!r}",
                                           line=line, path=path)
                continue
            if len(cells) != 2:
                raise TraceFormatError(f"2 colonnes attendues, {len(cells)} reçues", line=line, path=path)
            try:
                t, mbps = float(cells[0]), float(cells[1])
            except ValueError:
                raise TraceFormatError(f"ligne mal formée {','.join(cells)!r}", line=line, path=path)
            if not math.isfinite(mbps) or mbps < 0:
                raise TraceFormatError(f"débit négatif ou non fini : {cells[1]}", line=line, path=path)
            if t != len(samples):
                raise TraceFormatError(
                    f"espacement non uniforme : t={cells[0]} au lieu de {len(samples)}",
                    line=line, path=path,
                )
            samples.append(mbps)

        if header is None:
            raise TraceFormatError("fichier vide", path=path)
        if not samples:
            raise TraceFormatError("aucun échantillon après l'en-tête", path=path)

        logger.debug("Trace %s : %d échantillons", name or self.name, len(samples))
        return ThroughputTrace(tuple(samples), name=name or self.name or "trace",
                               wraparound=self.wraparound, scenario=self.scenario)


def load_csv(source: Union[str, Path, TextIO], wraparound: bool = False,
             scenario: Optional[str] = None) -> ThroughputTrace:
    """Charge une trace depuis un chemin ou un flux texte"""
    parser = TraceParser(wraparound=wraparound, scenario=scenario)
    if isinstance(source, (str, Path)):
        return parser.parse_path(source)
    return parser.parse(source)


def format_mbps(value: float) -> str:
    """Décimal à 6 chiffres au plus, zéros de fin retirés"""
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return text or "0"


def dumps_csv(trace: ThroughputTrace) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for t, value in zip(trace.timestamps, trace.samples):
        buf.write(f"{t},{format_mbps(value)}\n")
    return buf.getvalue()


def write_csv(trace: ThroughputTrace, path: Union[str, Path]) -> Path:
    """Écrit la trace au format "t,mbps" (lignes terminées par \\n)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(dumps_csv(trace))
    return path


@dataclass(frozen=True)
class ScenarioProfile:
    """Profil de génération synthétique"""
    kind: str = "walk"
    mean: float = 30.0
    stddev: float = 6.0
    drop_rate: float = 0.02
    drop_depth: float = 0.3
    duration: int = 100
    seed: int = 0

    def validate(self) -> "ScenarioProfile":
        if not self.mean > 0:
            raise ConfigError(f"mean doit être > 0 (reçu {self.mean})")
        if self.stddev < 0:
            raise ConfigError(f"stddev doit être >= 0 (reçu {self.stddev})")
        if not 0 <= self.drop_rate <= 1:
            raise ConfigError(f"drop_rate doit être dans [0, 1] (reçu {self.drop_rate})")
        if not 0 <= self.drop_depth <= 1:
            raise ConfigError(f"drop_depth doit être dans [0, 1] (reçu {self.drop_depth})")
        if int(self.duration) < 1:
            raise ConfigError(f"duration doit être >= 1 (reçu {self.duration})")
        if int(self.seed) < 0:
            raise ConfigError(f"seed doit être >= 0 (reçu {self.seed})")
        return self

    @classmethod
    def preset(cls, kind: str, **overrides) -> "ScenarioProfile":
        """Profil par défaut d'un scénario, surchargé champ par champ"""
        if kind not in PROFILE_PRESETS:
            raise ConfigError(f"Scénario inconnu {kind!r} (attendu {', '.join(PROFILE_PRESETS)})")
        unknown = set(overrides) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Clés inconnues dans le profil : {', '.join(sorted(unknown))}")
        return replace(cls(kind=kind, **PROFILE_PRESETS[kind]), **overrides).validate()


def synth_trace(profile: ScenarioProfile, name: Optional[str] = None) -> ThroughputTrace:
    """
    Trace synthétique reproductible

    Fluctuation gaussienne autour de mean, plancher à 0.1 Mbps ; à chaque
    seconde, avec la probabilité drop_rate, une chute de 3 à 8 s multiplie
    le débit par drop_depth.

    Args:
        profile: Profil validé
        name: Nom de la trace (défaut : kind + seed)

    Returns:
        Trace arrondie à 6 décimales
    """
    profile.validate()
    duration = int(profile.duration)
    rng = np.random.default_rng(int(profile.seed))
    values = profile.mean + profile.stddev * rng.standard_normal(duration)

    factors = np.ones(duration)
    t = 0
    while t < duration:
        if rng.random() < profile.drop_rate:
            burst = int(rng.integers(3, 9))
            factors[t:t + burst] = profile.drop_depth
            t += burst
        else:
            t += 1

    values = np.round(np.maximum(values * factors, MIN_SYNTH_MBPS), 6)
    return ThroughputTrace(tuple(float(v) for v in values),
                           name=name or f"{profile.kind}{profile.seed}",
                           scenario=profile.kind)


def synth_suite(duration: int = 100, seed: int = 0) -> List[ThroughputTrace]:
    """Jeu static/walk/bus : 7, 9 et 6 traces"""
    traces = []
    for kind, count in SCENARIO_SUITE:
        for i in range(count):
            profile = ScenarioProfile.preset(kind, duration=duration, seed=seed + i)
            traces.append(synth_trace(profile, name=f"{kind}{i + 1}"))
    return traces
