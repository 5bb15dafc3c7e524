"""
Simulation d'une session DASH sur une trace de débit
Téléchargement exact sur débit constant par morceaux, dynamique du tampon,
rebuffering et attente imposée par la taille maximale du tampon
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from src.abr import AbrAlgorithm, Decision, DecisionContext, Manifest, ReplayAbr
from src.errors import ConfigError, QuDashError, SessionError, TraceExhaustedError
from src.metrics import QoeReport, qoe
from src.trace import ThroughputTrace


logger = logging.getLogger(__name__)

RECORD_HEADER = (
    "segment", "level", "bitrate_mbps", "size_mb", "download_s", "wait_s",
    "rebuffer_s", "buffer_after_s", "observed_mbps",
)
STARTUP_RULES = ("algorithm", "lowest")


@dataclass(frozen=True)
class SessionConfig:
    """Paramètres de lecture"""
    max_buffer: float = 60.0
    qoe_w: float = 40.0
    # "algorithm" : le premier niveau vient de l'algorithme ; "lowest" : imposé au plus bas
    startup_level_rule: str = "algorithm"

    def validate(self, segment_duration: Optional[float] = None) -> "SessionConfig":
        if self.qoe_w < 0:
            raise ConfigError(f"qoe_w doit être >= 0 (reçu {self.qoe_w})")
        if not self.max_buffer > 0:
            raise ConfigError(f"max_buffer doit être > 0 (reçu {self.max_buffer})")
        if segment_duration is not None and self.max_buffer < segment_duration:
            raise ConfigError(
                f"max_buffer ({self.max_buffer} s) inférieur à la durée de segment ({segment_duration} s)"
            )
        if self.startup_level_rule not in STARTUP_RULES:
            raise ConfigError(f"Règle de démarrage inconnue : {self.startup_level_rule!r}")
        return self


@dataclass(frozen=True)
class SessionState:
    clock: float = 0.0
    buffer: float = 0.0
    next_segment: int = 0
    last_level: Optional[int] = None


@dataclass(frozen=True)
class SegmentRecord:
    """Résultat du téléchargement d'un segment"""
    segment: int
    level: int
    bitrate: float
    quality: float
    size: float
    start_time: float
    download_time: float
    rebuffer_time: float
    wait_time: float
    buffer_before: float
    buffer_after: float
    throughput_observed: float

    def to_csv_row(self) -> List[str]:
        return [
            str(self.segment), str(self.level), f"{self.bitrate:g}", f"{self.size:.6f}",
            f"{self.download_time:.6f}", f"{self.wait_time:.6f}", f"{self.rebuffer_time:.6f}",
            f"{self.buffer_after:.6f}", f"{self.throughput_observed:.6f}",
        ]


def download_time(size: float, trace: ThroughputTrace, start_time: float) -> float:
    """
    Plus petit Δt tel que ∫_{start}^{start+Δt} C dt = size

    Intégration exacte seconde par seconde (débit constant sur [k, k+1)).

    Raises:
        TraceExhaustedError: fin de trace atteinte sans bouclage
    """
    if not size > 0 or not math.isfinite(size):
        raise QuDashError(f"Taille de segment invalide : {size}")
    if start_time < 0:
        raise QuDashError(f"Instant de départ négatif : {start_time}")
    if trace.wraparound and max(trace.samples) <= 0:
        raise TraceExhaustedError(f"Trace {trace.name!r} à débit nul : téléchargement impossible")

    remaining = size
    t = start_time
    while True:
        index = int(math.floor(t))
        rate = trace.sample(index)
        boundary = float(index + 1)
        capacity = rate * (boundary - t)
        if rate > 0 and capacity >= remaining:
            return t + remaining / rate - start_time
        remaining -= capacity
        t = boundary


def step(state: SessionState, level: int, trace: ThroughputTrace, manifest: Manifest,
         config: SessionConfig) -> Tuple[SessionState, SegmentRecord]:
    """
    Télécharge le segment state.next_segment au niveau level

    1. Attente avant requête si B + M − Δt dépasserait max_buffer ; le
       tampon se vide pendant l'attente.
    2. Téléchargement depuis l'horloge (éventuellement avancée).
    3. Δt <= B : B' = B − Δt + M ; sinon rebuffering Δt − B et B' = M.

    Returns:
        (nouvel état, enregistrement)
    """
    n = state.next_segment
    if not 0 <= n < manifest.num_segments:
        raise QuDashError(f"Segment {n} hors du manifeste ({manifest.num_segments} segments)")
    if not 0 <= level < manifest.ladder.num_levels:
        raise QuDashError(f"Niveau {level} hors de l'échelle ({manifest.ladder.num_levels} niveaux)")

    M = manifest.segment_duration
    size = manifest.size(n, level)
    clock, buffer = state.clock, state.buffer

    dt = download_time(size, trace, clock)
    wait = max(0.0, buffer + M - config.max_buffer - dt)
    if wait > 0:
        clock += wait
        buffer -= wait
        dt = download_time(size, trace, clock)
    buffer_before = buffer
    download_start = clock

    if dt <= buffer:
        rebuffer = 0.0
        buffer_after = buffer - dt + M
    else:
        rebuffer = dt - buffer
        buffer_after = M
    clock += dt

    # le débit a pu changer pendant l'attente : l'excédent devient une pause après téléchargement
    excess = buffer_after - config.max_buffer
    if excess > 0:
        wait += excess
        clock += excess
        buffer_after = config.max_buffer

    record = SegmentRecord(
        segment=n,
        level=level,
        bitrate=manifest.ladder.bitrates[level],
        quality=manifest.ladder.quality(level),
        size=size,
        start_time=download_start,
        download_time=dt,
        rebuffer_time=rebuffer,
        wait_time=wait,
        buffer_before=buffer_before,
        buffer_after=buffer_after,
        throughput_observed=size / dt,
    )
    new_state = replace(state, clock=clock, buffer=buffer_after, next_segment=n + 1, last_level=level)
    return new_state, record


def run_session(trace: ThroughputTrace, manifest: Manifest, algorithm: AbrAlgorithm,
                config: Optional[SessionConfig] = None,
                decisions: Optional[List[Decision]] = None) -> Tuple[List[SegmentRecord], QoeReport]:
    """
    Joue tous les segments du manifeste

    Args:
        trace: Trace de débit
        manifest: Manifeste
        algorithm: Algorithme ABR
        config: Paramètres de lecture
        decisions: Liste optionnelle qui reçoit les rapports de décision

    Returns:
        (enregistrements, rapport QoE)

    Raises:
        SessionError: échec d'une étape ; porte les enregistrements déjà produits
    """
    config = (config or SessionConfig()).validate(manifest.segment_duration)
    state = SessionState()
    records: List[SegmentRecord] = []
    history: List[float] = []

    for n in range(manifest.num_segments):
        ctx = DecisionContext(
            next_segment_index=n,
            buffer=state.buffer,
            last_level=state.last_level,
            throughput_history=tuple(history),
            remaining_segments=manifest.num_segments - n,
        )
        try:
            if n == 0 and config.startup_level_rule == "lowest":
                decision = Decision(level=manifest.ladder.lowest, algorithm=algorithm.name,
                                    segment=0, flags=["startup"])
            else:
                decision = algorithm.decide(ctx, manifest)
            state, record = step(state, decision.level, trace, manifest, config)
        except (QuDashError, IndexError) as e:
            raise SessionError(
                f"Session {algorithm.name} sur {trace.name} interrompue au segment {n} : {e}", records
            ) from e

        records.append(record)
        history.append(record.throughput_observed)
        if decisions is not None:
            decisions.append(decision)

    report = qoe(records, w=config.qoe_w)
    logger.info("Session %s / %s : QoE par segment %.3f, rebuffering %.3f s",
                algorithm.name, trace.name, report.qoe_per_chunk, report.total_rebuffer)
    return records, report


def replay_session(trace: ThroughputTrace, manifest: Manifest, levels: Sequence[int],
                   config: Optional[SessionConfig] = None) -> Tuple[List[SegmentRecord], QoeReport]:
    """Rejoue une séquence de niveaux enregistrée, sans algorithme"""
    if len(levels) != manifest.num_segments:
        raise SessionError(f"{len(levels)} niveaux pour {manifest.num_segments} segments")
    return run_session(trace, manifest, ReplayAbr(levels, name="replay"), config)
