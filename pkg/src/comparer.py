"""
Comparateur d'algorithmes - Agrège les QoE par trace et désigne les gagnants
"""

from typing import Dict, List, Optional, Sequence


class AlgorithmComparer:
    """Compare plusieurs algorithmes sur les mêmes traces"""

    def __init__(self, rows: Sequence[dict], algorithms: Optional[Sequence[str]] = None):
        """
        Args:
            rows: Lignes {trace, scenario, algorithm, qoe_per_chunk, status}
            algorithms: Ordre d'affichage (défaut : ordre d'apparition)
        """
        self.rows = [r for r in rows if r.get("status", "ok") == "ok" and r.get("qoe_per_chunk") is not None]
        if algorithms is None:
            algorithms = []
            for r in rows:
                if r["algorithm"] not in algorithms:
                    algorithms.append(r["algorithm"])
        self.algorithms = list(algorithms)

    def compare(self) -> dict:
        """Effectue la comparaison complète et retourne le résumé"""
        overall = self._compare_group(self.rows)
        scenarios = sorted({r.get("scenario") or "custom" for r in self.rows})
        per_scenario = {
            s: self._compare_group([r for r in self.rows if (r.get("scenario") or "custom") == s])
            for s in scenarios
        }
        return {
            **overall,
            "ranking": self._compare_ranking(overall["algorithms"]),
            "ratios": self._compare_ratios(overall["algorithms"]),
            "per_scenario": per_scenario,
        }

    def _by_trace(self, rows: Sequence[dict]) -> Dict[str, Dict[str, float]]:
        table: Dict[str, Dict[str, float]] = {}
        for r in rows:
            table.setdefault(r["trace"], {})[r["algorithm"]] = float(r["qoe_per_chunk"])
        return table

    def _compare_group(self, rows: Sequence[dict]) -> dict:
        """Moyennes, victoires strictes et égalités sur un groupe de traces"""
        table = self._by_trace(rows)
        stats = {a: {"mean_qoe_per_chunk": None, "traces": 0, "wins": 0, "ties": 0} for a in self.algorithms}
        tied_traces = 0

        for trace in sorted(table):
            scores = table[trace]
            for algo, value in scores.items():
                entry = stats[algo]
                entry["traces"] += 1
                entry["mean_qoe_per_chunk"] = (entry["mean_qoe_per_chunk"] or 0.0) + value
            best = max(scores.values())
            leaders = [a for a, v in scores.items() if v == best]
            if len(leaders) == 1:
                stats[leaders[0]]["wins"] += 1
            else:
                tied_traces += 1
                for a in leaders:
                    stats[a]["ties"] += 1

        num_traces = len(table)
        for entry in stats.values():
            if entry["traces"]:
                entry["mean_qoe_per_chunk"] /= entry["traces"]
            entry["win_fraction"] = entry["wins"] / num_traces if num_traces else 0.0

        return {"num_traces": num_traces, "tied_traces": tied_traces, "algorithms": stats}

    def _compare_ranking(self, stats: Dict[str, dict]) -> dict:
        """Meilleur algorithme et écart relatif au second"""
        ranked = sorted(
            (a for a in self.algorithms if stats[a]["mean_qoe_per_chunk"] is not None),
            key=lambda a: (-stats[a]["mean_qoe_per_chunk"], self.algorithms.index(a)),
        )
        if len(ranked) < 2:
            return {"order": ranked, "best": ranked[0] if ranked else None, "second": None, "gap": None}
        best, second = stats[ranked[0]]["mean_qoe_per_chunk"], stats[ranked[1]]["mean_qoe_per_chunk"]
        return {
            "order": ranked,
            "best": ranked[0],
            "second": ranked[1],
            "gap": (best - second) / abs(second) if second else None,
        }

    def _compare_ratios(self, stats: Dict[str, dict]) -> Dict[str, Dict[str, Optional[float]]]:
        """Rapport des moyennes : ratios[a][b] = moyenne(a) / moyenne(b)"""
        ratios: Dict[str, Dict[str, Optional[float]]] = {}
        for a in self.algorithms:
            ratios[a] = {}
            for b in self.algorithms:
                if a == b:
                    continue
                mean_a, mean_b = stats[a]["mean_qoe_per_chunk"], stats[b]["mean_qoe_per_chunk"]
                ratios[a][b] = mean_a / mean_b if mean_a is not None and mean_b else None
        return ratios

    def cdf_points(self) -> List[dict]:
        """Valeurs de QoE triées par algorithme (points de CDF)"""
        points = []
        for algo in self.algorithms:
            values = sorted(float(r["qoe_per_chunk"]) for r in self.rows if r["algorithm"] == algo)
            for rank, value in enumerate(values, start=1):
                points.append({
                    "algorithm": algo,
                    "rank": rank,
                    "qoe_per_chunk": value,
                    "cdf": rank / len(values),
                })
        return points

    def get_highlights(self) -> List[dict]:
        """Messages de synthèse pour la ligne de commande"""
        comparison = self.compare()
        highlights = []

        ranking = comparison["ranking"]
        if ranking["best"] is not None and ranking["gap"] is not None:
            highlights.append({
                "type": "success",
                "message": f"{ranking['best']} en tête : QoE moyenne supérieure de "
                           f"{100 * ranking['gap']:.1f}% à {ranking['second']}.",
            })

        for algo, entry in comparison["algorithms"].items():
            if entry["wins"]:
                highlights.append({
                    "type": "info",
                    "message": f"{algo} gagne strictement sur {entry['wins']}/{comparison['num_traces']} trace(s).",
                })

        if comparison["tied_traces"]:
            highlights.append({
                "type": "warning",
                "message": f"{comparison['tied_traces']} trace(s) sans gagnant strict (égalité).",
            })
        return highlights
