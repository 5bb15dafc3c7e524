"""
Exécution des expériences
Une cellule = (trace, algorithme, valeur balayée) ; les cellules sont
indépendantes et peuvent tourner dans un pool de processus, l'écriture
des résultats reste séquentielle et ordonnée
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from src.abr import Decision, Manifest
from src.comparer import AlgorithmComparer
from src.config import AlgorithmSpec, ExperimentConfig
from src.errors import ConfigError, QuDashError
from src.metrics import SessionMetricsCalculator
from src.qudash import QudashAbr, QudashParams
from src.reporter import CDF_HEADER, COMPARE_HEADER, SWEEP_HEADER, ReportWriter, format_value
from src.simulator import SessionConfig, run_session
from src.trace import ScenarioProfile, ThroughputTrace, synth_suite, synth_trace, write_csv


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cell:
    """Session indépendante à simuler"""
    trace: ThroughputTrace
    manifest: Manifest
    spec: AlgorithmSpec
    session: SessionConfig
    seed: int = 0
    param: Optional[str] = None
    value: Optional[float] = None
    params: Optional[QudashParams] = None


def run_cell(cell: Cell) -> dict:
    """
    Simule une cellule et résume la session

    Returns:
        Ligne de résultats ; status "failed" si la session échoue
    """
    row = {
        "trace": cell.trace.name,
        "scenario": cell.trace.scenario or "custom",
        "algorithm": cell.spec.name,
        "param": cell.param,
        "value": cell.value,
        "qoe_per_chunk": None,
        "total_rebuffer_s": None,
        "avg_bitrate_mbps": None,
        "num_switches": None,
        "status": "ok",
    }
    try:
        if cell.params is not None:
            algorithm = QudashAbr(cell.spec.name, cell.params)
        else:
            algorithm = cell.spec.build(cell.session, cell.seed)
        records, report = run_session(cell.trace, cell.manifest, algorithm, cell.session)
    except QuDashError as e:
        logger.warning("Cellule %s / %s en échec : %s", cell.trace.name, cell.spec.name, e)
        row["status"] = "failed"
        return row

    metrics = SessionMetricsCalculator(records).calculate_all_metrics()
    row.update({
        "qoe_per_chunk": report.qoe_per_chunk,
        "total_rebuffer_s": metrics["total_rebuffer_s"],
        "avg_bitrate_mbps": metrics["avg_bitrate_mbps"],
        "num_switches": metrics["num_switches"],
    })
    return row


def _row_values(row: dict, header: Sequence[str]) -> List[str]:
    values = []
    for column in header:
        value = row.get(column)
        if column == "value":
            values.append(f"{value:g}")
        elif isinstance(value, str):
            values.append(value)
        else:
            values.append(format_value(value))
    return values


class ExperimentRunner:
    """Orchestre run, sweep et compare pour une configuration"""

    def __init__(self, config: ExperimentConfig, timing: bool = False, decisions: bool = False):
        """
        Args:
            config: Configuration validée
            timing: Inclure le temps de décision dans decisions.jsonl
            decisions: Écrire decisions.jsonl pour run
        """
        self.config = config
        self.timing = timing
        self.decisions = decisions or timing
        self.manifest = config.manifest.build()
        self.traces = config.load_traces()

    def map_cells(self, cells: Sequence[Cell]) -> List[dict]:
        """Résultats dans l'ordre des cellules, quel que soit le nombre de processus"""
        if self.config.jobs > 1 and len(cells) > 1:
            with ProcessPoolExecutor(max_workers=self.config.jobs) as pool:
                return list(pool.map(run_cell, cells))
        return [run_cell(cell) for cell in cells]

    def find_trace(self, name: Optional[str]) -> ThroughputTrace:
        if name is None:
            return self.traces[0]
        for trace in self.traces:
            if trace.name == name:
                return trace
        raise ConfigError(f"Trace inconnue : {name!r} (disponibles : {', '.join(t.name for t in self.traces)})")

    def run(self, trace_name: Optional[str] = None, algorithm_name: Optional[str] = None) -> List[Path]:
        """
        Une session ; écrit segments.csv, qoe.json (et decisions.jsonl sur demande)

        Raises:
            SessionError: la session a échoué
        """
        trace = self.find_trace(trace_name)
        spec = self.config.algorithm(algorithm_name) if algorithm_name else self.config.algorithms[0]
        algorithm = spec.build(self.config.session, self.config.seed)

        decisions: List[Decision] = []
        records, report = run_session(trace, self.manifest, algorithm, self.config.session, decisions)

        writer = ReportWriter(self.config.output_dir)
        writer.write_records(records)
        writer.write_qoe(report, {
            "trace": trace.name,
            "scenario": trace.scenario or "custom",
            "algorithm": spec.name,
            "kind": spec.kind,
            "params": spec.params,
            "metrics": SessionMetricsCalculator(records).calculate_all_metrics(),
        })
        if self.decisions:
            writer.write_decisions(decisions, include_timing=self.timing)
        return writer.written

    def sweep(self) -> List[Path]:
        """Toutes les (trace, valeur) du balayage ; sweep.csv trié par (trace, valeur)"""
        sweep = self.config.sweep
        if sweep is None:
            raise ConfigError("La configuration ne définit pas de balayage")
        spec = self.config.algorithm(sweep.algorithm)
        base = QudashParams.from_dict(spec.params, global_seed=self.config.seed)

        cells = [
            Cell(trace, self.manifest, spec, self.config.session, self.config.seed,
                 param=sweep.param, value=value, params=sweep.params_for(base, value))
            for trace in self.traces
            for value in sweep.values
        ]
        rows = self.map_cells(cells)
        rows.sort(key=lambda r: (r["trace"], float(r["value"])))

        failed = sum(1 for r in rows if r["status"] != "ok")
        if failed:
            logger.warning("%d cellule(s) en échec sur %d", failed, len(rows))

        writer = ReportWriter(self.config.output_dir)
        writer.write_csv("sweep.csv", SWEEP_HEADER, (_row_values(r, SWEEP_HEADER) for r in rows))
        return writer.written

    def compare(self) -> Dict:
        """
        Toutes les paires (trace, algorithme)

        Returns:
            {"paths": fichiers écrits, "summary": résumé, "highlights": messages}
        """
        if len(self.config.algorithms) < 2:
            raise ConfigError("La comparaison exige au moins deux algorithmes")

        cells = [
            Cell(trace, self.manifest, spec, self.config.session, self.config.seed)
            for trace in self.traces
            for spec in self.config.algorithms
        ]
        rows = self.map_cells(cells)

        comparer = AlgorithmComparer(rows, [a.name for a in self.config.algorithms])
        summary = comparer.compare()

        writer = ReportWriter(self.config.output_dir)
        writer.write_csv("compare.csv", COMPARE_HEADER, (_row_values(r, COMPARE_HEADER) for r in rows))
        writer.write_json("summary.json", summary)
        writer.write_csv("cdf.csv", CDF_HEADER, (_row_values(p, CDF_HEADER) for p in comparer.cdf_points()))
        return {"paths": writer.written, "summary": summary, "highlights": comparer.get_highlights()}


def cmd_run(config: ExperimentConfig, trace: Optional[str] = None, algorithm: Optional[str] = None,
            timing: bool = False, decisions: bool = False) -> List[Path]:
    return ExperimentRunner(config, timing=timing, decisions=decisions).run(trace, algorithm)


def cmd_sweep(config: ExperimentConfig) -> List[Path]:
    return ExperimentRunner(config).sweep()


def cmd_compare(config: ExperimentConfig) -> Dict:
    return ExperimentRunner(config).compare()


def cmd_synth(kind: str, out: str, duration: int = 100, seed: int = 0, suite: bool = False,
              **overrides) -> List[Path]:
    """
    Génère une trace (ou le jeu static/walk/bus) au format CSV

    Args:
        kind: Scénario (ignoré avec suite)
        out: Fichier CSV, ou dossier avec suite
        duration: Durée en secondes
        seed: Graine
        suite: Générer les 22 traces du jeu de référence
        overrides: mean, stddev, drop_rate, drop_depth
    """
    if suite:
        return [write_csv(trace, Path(out) / f"{trace.name}.csv") for trace in synth_suite(duration, seed)]
    overrides = {k: v for k, v in overrides.items() if v is not None}
    profile = ScenarioProfile.preset(kind, duration=duration, seed=seed, **overrides)
    return [write_csv(synth_trace(profile), out)]
