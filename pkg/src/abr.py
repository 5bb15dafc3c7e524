"""
Algorithmes d'adaptation de débit (ABR)
Échelle de débits, manifeste, prédicteur harmonique et algorithmes de référence
RB (débit), BB (tampon) et MPC derrière une interface de décision commune
"""

import itertools
import logging
import time
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigError


logger = logging.getLogger(__name__)

DEFAULT_BITRATES = (1.0, 2.5, 5.0, 8.0, 16.0, 40.0)
DEFAULT_LABELS = ("360p", "480p", "720p", "1080p", "1440p", "2160p")
DEFAULT_SEGMENT_DURATION = 2.0
DEFAULT_WINDOW = 5
DEFAULT_QOE_W = 40.0
DEFAULT_MAX_BUFFER = 60.0


@dataclass(frozen=True)
class BitrateLadder:
    """Niveaux de débit croissants (Mbps), qualité q(l) et durée de segment M"""
    bitrates: Tuple[float, ...] = DEFAULT_BITRATES
    labels: Tuple[str, ...] = DEFAULT_LABELS
    segment_duration: float = DEFAULT_SEGMENT_DURATION
    qualities: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        bitrates = tuple(float(b) for b in self.bitrates)
        object.__setattr__(self, "bitrates", bitrates)
        if not bitrates:
            raise ConfigError("L'échelle de débits est vide")
        if any(b <= 0 for b in bitrates):
            raise ConfigError(f"Débits non positifs : {bitrates}")
        if any(b2 <= b1 for b1, b2 in zip(bitrates, bitrates[1:])):
            raise ConfigError(f"Débits non strictement croissants : {bitrates}")
        if not self.segment_duration > 0:
            raise ConfigError(f"Durée de segment invalide : {self.segment_duration}")

        labels = tuple(self.labels) if self.labels else tuple(f"{b:g}Mbps" for b in bitrates)
        if len(labels) != len(bitrates):
            labels = tuple(f"{b:g}Mbps" for b in bitrates)
        object.__setattr__(self, "labels", labels)

        # q(l) := débit en Mbps par défaut
        qualities = tuple(float(q) for q in (self.qualities or bitrates))
        if len(qualities) != len(bitrates) or any(q2 <= q1 for q1, q2 in zip(qualities, qualities[1:])):
            raise ConfigError(f"Qualités invalides : {qualities}")
        object.__setattr__(self, "qualities", qualities)

    @property
    def num_levels(self) -> int:
        return len(self.bitrates)

    @property
    def lowest(self) -> int:
        return 0

    @property
    def highest(self) -> int:
        return len(self.bitrates) - 1

    def quality(self, level: int) -> float:
        return self.qualities[level]

    def highest_at_most(self, rate: Optional[float]) -> int:
        """Plus haut niveau dont le débit est <= rate (niveau le plus bas sinon)"""
        if rate is None:
            return self.lowest
        chosen = self.lowest
        for level, bitrate in enumerate(self.bitrates):
            if bitrate <= rate:
                chosen = level
        return chosen


class Manifest:
    """Manifeste DASH : échelle, nombre de segments et tailles S_n(l) en mégabits"""

    def __init__(self, ladder: BitrateLadder, sizes: Sequence[Sequence[float]]):
        """
        Initialise le manifeste

        Args:
            ladder: Échelle de débits
            sizes: Matrice (num_segments, L) des tailles en mégabits
        """
        self.ladder = ladder
        self.sizes = np.array(sizes, dtype=float).reshape(-1, ladder.num_levels)
        if self.sizes.shape[0] == 0:
            raise ConfigError("Le manifeste ne contient aucun segment")
        if np.any(self.sizes <= 0) or not np.all(np.isfinite(self.sizes)):
            raise ConfigError("Les tailles de segment doivent être finies et > 0")
        if np.any(np.diff(self.sizes, axis=1) <= 0):
            raise ConfigError("Les tailles doivent croître strictement avec le niveau")

    @property
    def num_segments(self) -> int:
        return self.sizes.shape[0]

    @property
    def segment_duration(self) -> float:
        return self.ladder.segment_duration

    def size(self, n: int, level: int) -> float:
        """Taille du segment n (0-indexé) au niveau level, en mégabits"""
        return float(self.sizes[n, level])

    @classmethod
    def cbr(cls, ladder: BitrateLadder, num_segments: int) -> "Manifest":
        """Débit constant : S_n(l) = débit(l)·M"""
        row = [b * ladder.segment_duration for b in ladder.bitrates]
        return cls(ladder, [row] * num_segments)

    @classmethod
    def vbr(cls, ladder: BitrateLadder, num_segments: int, jitter: float = 0.1,
            seed: int = 0) -> "Manifest":
        """
        Débit variable : facteur aléatoire par segment, commun à tous les niveaux

        Args:
            jitter: Écart-type relatif du facteur (tronqué à [0.5, 1.5])
            seed: Graine du tirage
        """
        rng = np.random.default_rng(seed)
        factors = np.clip(1.0 + jitter * rng.standard_normal(num_segments), 0.5, 1.5)
        base = np.array([b * ladder.segment_duration for b in ladder.bitrates])
        return cls(ladder, factors[:, None] * base[None, :])


@dataclass(frozen=True)
class DecisionContext:
    """État vu par l'algorithme au moment de choisir le segment suivant"""
    next_segment_index: int
    buffer: float
    last_level: Optional[int]
    throughput_history: Tuple[float, ...]
    remaining_segments: int


@dataclass
class Decision:
    """Niveau choisi et rapport de décision"""
    level: int
    algorithm: str
    segment: int = 0
    flags: List[str] = field(default_factory=list)
    c_pred: Optional[float] = None
    qubo_vars: Optional[int] = None
    qubo_edges: Optional[int] = None
    energy: Optional[float] = None
    violation: bool = False
    plan: Optional[List[int]] = None
    # échantillons non positifs écartés par le prédicteur pour cette décision
    excluded_samples: int = 0
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        data = asdict(self)
        if not include_timing:
            data.pop("wall_time")
        return data


class HarmonicMeanPredictor:
    """Prédicteur de débit par moyenne harmonique des derniers segments"""

    def __init__(self, window: int = DEFAULT_WINDOW):
        """
        Args:
            window: Nombre d'échantillons récents pris en compte (>= 1)
        """
        if int(window) < 1:
            raise ConfigError(f"La fenêtre du prédicteur doit être >= 1 (reçu {window})")
        self.window = int(window)
        # cumul sur la vie du prédicteur, et pour le dernier appel
        self.excluded = 0
        self.last_excluded = 0

    def predict(self, history: Sequence[float]) -> Optional[float]:
        """
        Moyenne harmonique des min(window, len) derniers échantillons positifs

        Returns:
            Débit prédit en Mbps, ou None si aucun échantillon utilisable
        """
        positives = [s for s in history if s > 0]
        rejected = len(history) - len(positives)
        self.last_excluded = rejected
        if rejected:
            self.excluded += rejected
            logger.warning("%d échantillon(s) de débit non positif(s) exclu(s)", rejected)
        recent = positives[-self.window:]
        if not recent:
            return None
        return len(recent) / sum(1.0 / s for s in recent)


def harmonic_mean_predict(history: Sequence[float], window: int = DEFAULT_WINDOW) -> Optional[float]:
    """Moyenne harmonique des derniers débits observés (None si historique vide)"""
    return HarmonicMeanPredictor(window).predict(history)


def rb_decide(ctx: DecisionContext, manifest: Manifest, window: int = DEFAULT_WINDOW,
              predictor: Optional[HarmonicMeanPredictor] = None) -> int:
    """
    Rate-based : plus haut niveau dont le débit est <= débit prédit

    Args:
        predictor: Prédicteur de l'algorithme appelant (défaut : neuf, de fenêtre window)

    Returns:
        Indice de niveau (le plus bas si aucune prédiction)
    """
    if predictor is None:
        predictor = HarmonicMeanPredictor(window)
    return manifest.ladder.highest_at_most(predictor.predict(ctx.throughput_history))


def bb_rate_map(buffer: float, ladder: BitrateLadder, reservoir: float, cushion: float) -> float:
    """f(B) : R_min sous le réservoir, R_max au-delà de réservoir + coussin, linéaire entre"""
    r_min, r_max = ladder.bitrates[0], ladder.bitrates[-1]
    if buffer <= reservoir:
        return r_min
    if buffer >= reservoir + cushion:
        return r_max
    return r_min + (buffer - reservoir) / cushion * (r_max - r_min)


def bb_decide(ctx: DecisionContext, manifest: Manifest, reservoir: float = 5.0,
              cushion: float = 55.0) -> int:
    """
    Buffer-based : niveau le plus haut dont le débit est <= f(B)

    Returns:
        Indice de niveau
    """
    target = bb_rate_map(ctx.buffer, manifest.ladder, reservoir, cushion)
    return manifest.ladder.highest_at_most(target)


@lru_cache(maxsize=32)
def all_plans(num_levels: int, horizon: int) -> np.ndarray:
    """Tous les plans L^h, ordre lexicographique"""
    return np.array(list(itertools.product(range(num_levels), repeat=horizon)), dtype=np.int64)


def mpc_plan(ctx: DecisionContext, manifest: Manifest, horizon: int = 5,
             window: int = DEFAULT_WINDOW, qoe_w: float = DEFAULT_QOE_W,
             max_buffer: float = DEFAULT_MAX_BUFFER,
             predictor: Optional[HarmonicMeanPredictor] = None
             ) -> Tuple[List[int], Optional[float], Optional[float]]:
    """
    Énumère les plans sur l'horizon et retourne le meilleur

    Chaque plan est simulé avec C_pred constant : dynamique du tampon
    (rebuffering si Δt > B, B' = M ensuite), plafond max_buffer, score
    qualité − w·rebuffering − lissage (amorcé par last_level).

    Returns:
        (plan, score, C_pred) ; plan = [niveau le plus bas] sans prédiction
    """
    ladder = manifest.ladder
    if predictor is None:
        predictor = HarmonicMeanPredictor(window)
    prediction = predictor.predict(ctx.throughput_history)
    h = min(horizon, ctx.remaining_segments, manifest.num_segments - ctx.next_segment_index)
    if prediction is None or h <= 0:
        return [ladder.lowest], None, prediction

    plans = all_plans(ladder.num_levels, h)
    start = ctx.next_segment_index
    sizes = manifest.sizes[start:start + h]
    steps = np.arange(h)
    download = sizes[steps[None, :], plans] / prediction
    qualities = np.array(ladder.qualities)[plans]

    buffer = np.full(len(plans), float(ctx.buffer))
    rebuffer = np.zeros(len(plans))
    M = ladder.segment_duration
    for i in range(h):
        rebuffer += np.maximum(download[:, i] - buffer, 0.0)
        buffer = np.minimum(np.maximum(buffer - download[:, i], 0.0) + M, max_buffer)

    smoothness = np.abs(np.diff(qualities, axis=1)).sum(axis=1)
    if ctx.last_level is not None:
        smoothness += np.abs(qualities[:, 0] - ladder.quality(ctx.last_level))
    scores = qualities.sum(axis=1) - qoe_w * rebuffer - smoothness

    best = scores.max()
    tied = np.flatnonzero(scores >= best - 1e-9 * max(1.0, abs(best)))
    # égalité : premier segment au débit le plus haut
    winner = tied[np.argmax(plans[tied, 0])]
    return [int(l) for l in plans[winner]], float(scores[winner]), prediction


def mpc_decide(ctx: DecisionContext, manifest: Manifest, horizon: int = 5,
               window: int = DEFAULT_WINDOW, qoe_w: float = DEFAULT_QOE_W,
               max_buffer: float = DEFAULT_MAX_BUFFER) -> int:
    """MPC : premier niveau du meilleur plan sur min(horizon, segments restants)"""
    plan, _, _ = mpc_plan(ctx, manifest, horizon, window, qoe_w, max_buffer)
    return plan[0]


class AbrAlgorithm:
    """Interface commune : decide(ctx, manifest) -> Decision"""

    kind = "abstract"

    def __init__(self, name: Optional[str] = None):
        self.name = name or self.kind

    def decide(self, ctx: DecisionContext, manifest: Manifest) -> Decision:
        raise NotImplementedError

    def _timed(self, ctx: DecisionContext, started: float, **report) -> Decision:
        decision = Decision(segment=ctx.next_segment_index, algorithm=self.name, **report)
        decision.wall_time = time.perf_counter() - started
        return decision


class RateBasedAbr(AbrAlgorithm):
    kind = "rb"

    def __init__(self, name: Optional[str] = None, window: int = DEFAULT_WINDOW):
        super().__init__(name)
        self.window = int(window)
        self.predictor = HarmonicMeanPredictor(window)

    def decide(self, ctx: DecisionContext, manifest: Manifest) -> Decision:
        started = time.perf_counter()
        prediction = self.predictor.predict(ctx.throughput_history)
        level = manifest.ladder.highest_at_most(prediction)
        return self._timed(ctx, started, level=level, c_pred=prediction,
                           excluded_samples=self.predictor.last_excluded)


class BufferBasedAbr(AbrAlgorithm):
    kind = "bb"

    def __init__(self, name: Optional[str] = None, reservoir: float = 5.0, cushion: float = 55.0):
        super().__init__(name)
        if reservoir < 0 or cushion <= 0:
            raise ConfigError(f"Réservoir/coussin invalides : {reservoir}, {cushion}")
        self.reservoir = float(reservoir)
        self.cushion = float(cushion)

    def decide(self, ctx: DecisionContext, manifest: Manifest) -> Decision:
        started = time.perf_counter()
        level = bb_decide(ctx, manifest, self.reservoir, self.cushion)
        return self._timed(ctx, started, level=level)


class MpcAbr(AbrAlgorithm):
    kind = "mpc"

    def __init__(self, name: Optional[str] = None, horizon: int = 5, window: int = DEFAULT_WINDOW,
                 qoe_w: float = DEFAULT_QOE_W, max_buffer: float = DEFAULT_MAX_BUFFER):
        super().__init__(name)
        if int(horizon) < 1:
            raise ConfigError(f"L'horizon MPC doit être >= 1 (reçu {horizon})")
        self.horizon = int(horizon)
        self.window = int(window)
        self.qoe_w = float(qoe_w)
        self.max_buffer = float(max_buffer)
        self.predictor = HarmonicMeanPredictor(window)

    def decide(self, ctx: DecisionContext, manifest: Manifest) -> Decision:
        started = time.perf_counter()
        plan, _, prediction = mpc_plan(ctx, manifest, self.horizon, self.window, self.qoe_w,
                                       self.max_buffer, self.predictor)
        return self._timed(ctx, started, level=plan[0], c_pred=prediction, plan=plan,
                           excluded_samples=self.predictor.last_excluded)


class ReplayAbr(AbrAlgorithm):
    """Rejoue une séquence de niveaux enregistrée"""

    kind = "replay"

    def __init__(self, levels: Sequence[int], name: Optional[str] = None):
        super().__init__(name)
        self.levels = [int(l) for l in levels]

    def decide(self, ctx: DecisionContext, manifest: Manifest) -> Decision:
        started = time.perf_counter()
        return self._timed(ctx, started, level=self.levels[ctx.next_segment_index])


def create_algorithm(kind: str, name: Optional[str] = None, params: Optional[Dict] = None,
                     qoe_w: float = DEFAULT_QOE_W, max_buffer: float = DEFAULT_MAX_BUFFER,
                     seed: int = 0) -> AbrAlgorithm:
    """
    Fabrique d'algorithmes par type

    Args:
        kind: rb, bb, mpc ou qudash
        name: Nom affiché dans les rapports
        params: Bloc de paramètres de l'algorithme
        qoe_w, max_buffer: Paramètres de session repris par MPC
        seed: Graine globale mélangée à celle du recuit de QuDASH

    Returns:
        Instance d'AbrAlgorithm
    """
    params = dict(params or {})
    try:
        if kind == "rb":
            return RateBasedAbr(name, **params)
        if kind == "bb":
            return BufferBasedAbr(name, **params)
        if kind == "mpc":
            params.setdefault("qoe_w", qoe_w)
            params.setdefault("max_buffer", max_buffer)
            return MpcAbr(name, **params)
        if kind == "qudash":
            from src.qudash import QudashAbr, QudashParams
            return QudashAbr(name, QudashParams.from_dict(params, global_seed=seed))
    except TypeError as e:
        raise ConfigError(f"Paramètres invalides pour l'algorithme {kind!r} : {e}") from e
    raise ConfigError(f"Type d'algorithme inconnu : {kind!r} (attendu rb, bb, mpc, qudash)")
