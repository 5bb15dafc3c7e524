"""
Calcul de la QoE et des métriques de session
Score qualité − w·rebuffering − lissage et indicateurs de diagnostic
"""

from dataclasses import dataclass, asdict
from typing import Dict, Optional, Sequence

from src.errors import EmptyRecordsError


@dataclass(frozen=True)
class QoeReport:
    """Décomposition de la QoE d'une session"""
    total_quality: float
    total_rebuffer: float
    total_smoothness: float
    qoe_total: float
    qoe_per_chunk: float
    num_chunks: int
    w: float = 40.0

    def to_dict(self) -> dict:
        return asdict(self)


def qoe(records: Sequence, last_level_seed: Optional[float] = None, w: float = 40.0) -> QoeReport:
    """
    QoE = Σ q[l_n] − w·Σ T_rebuf − Σ |q[l_n] − q[l_{n−1}]|

    Args:
        records: Enregistrements de segments (attributs quality et rebuffer_time)
        last_level_seed: Qualité du segment précédant la session ; None = aucun
            terme de lissage pour le premier segment
        w: Poids du rebuffering

    Returns:
        QoeReport

    Raises:
        EmptyRecordsError: aucun enregistrement
    """
    if not records:
        raise EmptyRecordsError("Impossible de calculer la QoE : aucun segment")

    qualities = [r.quality for r in records]
    total_quality = sum(qualities)
    total_rebuffer = sum(r.rebuffer_time for r in records)
    total_smoothness = sum(abs(b - a) for a, b in zip(qualities, qualities[1:]))
    if last_level_seed is not None:
        total_smoothness += abs(qualities[0] - last_level_seed)

    qoe_total = total_quality - w * total_rebuffer - total_smoothness
    return QoeReport(
        total_quality=total_quality,
        total_rebuffer=total_rebuffer,
        total_smoothness=total_smoothness,
        qoe_total=qoe_total,
        qoe_per_chunk=qoe_total / len(records),
        num_chunks=len(records),
        w=w,
    )


class SessionMetricsCalculator:
    """Indicateurs de diagnostic d'une session (au-delà de la QoE)"""

    def __init__(self, records: Sequence):
        """
        Args:
            records: Enregistrements de segments (non vide)
        """
        if not records:
            raise EmptyRecordsError("Aucun segment à analyser")
        self.records = list(records)

    def avg_bitrate(self) -> float:
        return sum(r.bitrate for r in self.records) / len(self.records)

    def num_switches(self) -> int:
        """Nombre de changements de niveau entre segments consécutifs"""
        levels = [r.level for r in self.records]
        return sum(1 for a, b in zip(levels, levels[1:]) if a != b)

    def startup_delay(self) -> float:
        """Attente avant la lecture : rebuffering du premier segment"""
        return self.records[0].rebuffer_time

    def total_rebuffer(self) -> float:
        return sum(r.rebuffer_time for r in self.records)

    def rebuffer_events(self) -> int:
        """Arrêts de lecture hors démarrage"""
        return sum(1 for r in self.records[1:] if r.rebuffer_time > 0)

    def total_wait(self) -> float:
        return sum(r.wait_time for r in self.records)

    def calculate_all_metrics(self) -> Dict[str, float]:
        """
        Calcule toutes les métriques

        Returns:
            Dictionnaire nom -> valeur
        """
        return {
            "avg_bitrate_mbps": self.avg_bitrate(),
            "num_switches": self.num_switches(),
            "startup_delay_s": self.startup_delay(),
            "total_rebuffer_s": self.total_rebuffer(),
            "rebuffer_events": self.rebuffer_events(),
            "total_wait_s": self.total_wait(),
        }
