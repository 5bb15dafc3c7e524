"""
Écriture des rapports - CSV, JSON et JSON lines dans le dossier de sortie
En-têtes fixes et ordre déterministe : deux exécutions identiques
produisent des fichiers identiques octet par octet
"""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Sequence

from src.abr import Decision
from src.metrics import QoeReport
from src.simulator import RECORD_HEADER, SegmentRecord


logger = logging.getLogger(__name__)

SWEEP_HEADER = ("trace", "param", "value", "qoe_per_chunk", "total_rebuffer_s",
                "avg_bitrate_mbps", "num_switches", "status")
COMPARE_HEADER = ("trace", "scenario", "algorithm", "qoe_per_chunk", "total_rebuffer_s",
                  "avg_bitrate_mbps", "num_switches", "status")
CDF_HEADER = ("algorithm", "rank", "qoe_per_chunk", "cdf")


class ReportWriter:
    """Écrit les fichiers de résultats dans un dossier"""

    def __init__(self, output_dir: str = "results"):
        """
        Initialise le dossier de sortie

        Args:
            output_dir: Dossier créé si besoin
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        path = self.output_dir / name
        self.written.append(path)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
        logger.debug("CSV écrit : %s", path)
        return path

    def write_json(self, name: str, data) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
            f.write("\n")
        logger.debug("JSON écrit : %s", path)
        return path

    def write_jsonl(self, name: str, items: Iterable[dict]) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as f:
            for item in items:
                f.write(json.dumps(item, ensure_ascii=False) + "\n")
        return path

    def write_records(self, records: Sequence[SegmentRecord], name: str = "segments.csv") -> Path:
        """Un enregistrement par segment, en-tête segment,level,bitrate_mbps,..."""
        return self.write_csv(name, RECORD_HEADER, (r.to_csv_row() for r in records))

    def write_qoe(self, report: QoeReport, extra: dict, name: str = "qoe.json") -> Path:
        return self.write_json(name, {**extra, "qoe": report.to_dict()})

    def write_decisions(self, decisions: Sequence[Decision], include_timing: bool = False,
                        name: str = "decisions.jsonl") -> Path:
        return self.write_jsonl(name, (d.to_dict(include_timing) for d in decisions))


def format_value(value) -> str:
    """Nombre en texte stable pour les CSV de résultats"""
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.6f}"
