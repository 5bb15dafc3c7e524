"""
Contrôleur QuDASH
Construit l'objectif QUBO de sélection de débit sur un horizon glissant,
le minimise par recuit simulé et extrait le niveau du prochain segment
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.abr import (
    AbrAlgorithm,
    BitrateLadder,
    Decision,
    DecisionContext,
    HarmonicMeanPredictor,
    Manifest,
)
from src.annealer import AnnealConfig, Solution, anneal, brute_force_solve, plan_search
from src.errors import AnnealConfigError, ConfigError, InfeasibleBoundError, PredictionError, QuDashError
from src.graph_builder import InteractionGraphBuilder
from src.qubo import QuboProblem, SlackEncoding


logger = logging.getLogger(__name__)

SOLVERS = ("anneal", "exact", "plans")
SWEEPABLE = ("a", "b", "c", "d", "horizon", "n_run", "n_ite", "time_unit")


@dataclass
class QudashParams:
    """Coefficients des termes, horizon, prédicteur et budget de recuit"""
    a: float = 1e3
    b: float = 1.0
    c: float = 1e6
    d: float = 1.0
    horizon: int = 5
    predictor_window: int = 5
    # secondes par pas d'écart de la contrainte de tampon (la milliseconde)
    time_unit: float = 0.001
    solver: str = "anneal"
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    global_seed: int = 0

    def validate(self) -> "QudashParams":
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"Coefficient {name} invalide : {value} (fini et >= 0 attendu)")
        if not self.c > 0:
            raise ConfigError("Le coefficient c doit être > 0 pour imposer le one-hot")
        if int(self.horizon) < 1:
            raise ConfigError(f"horizon doit être >= 1 (reçu {self.horizon})")
        if int(self.predictor_window) < 1:
            raise ConfigError(f"predictor_window doit être >= 1 (reçu {self.predictor_window})")
        if not self.time_unit > 0:
            raise ConfigError(f"time_unit doit être > 0 (reçu {self.time_unit})")
        if self.solver not in SOLVERS:
            raise ConfigError(f"Solveur inconnu {self.solver!r} (attendu {', '.join(SOLVERS)})")
        try:
            self.anneal.validate()
        except AnnealConfigError as e:
            raise ConfigError(str(e)) from e
        return self

    def to_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "c": self.c, "d": self.d,
            "horizon": self.horizon,
            "predictor_window": self.predictor_window,
            "time_unit": self.time_unit,
            "solver": self.solver,
            "anneal": self.anneal.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Optional[dict] = None, global_seed: int = 0) -> "QudashParams":
        """
        Construit les paramètres depuis un bloc JSON

        Raises:
            ConfigError: clé inconnue ou valeur hors domaine
        """
        data = dict(data or {})
        known = {"a", "b", "c", "d", "horizon", "predictor_window", "time_unit", "solver", "anneal"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Clés inconnues dans params qudash : {', '.join(sorted(unknown))}")
        try:
            anneal_cfg = AnnealConfig.from_dict(data.pop("anneal", {}) or {})
        except (AnnealConfigError, TypeError) as e:
            raise ConfigError(str(e)) from e
        params = cls(anneal=anneal_cfg, global_seed=int(global_seed), **data)
        params.horizon = int(params.horizon)
        params.predictor_window = int(params.predictor_window)
        for name in ("a", "b", "c", "d", "time_unit"):
            setattr(params, name, float(getattr(params, name)))
        return params.validate()

    def with_override(self, name: str, value) -> "QudashParams":
        """Copie avec un paramètre balayable remplacé"""
        if name not in SWEEPABLE:
            raise ConfigError(f"Paramètre non balayable : {name!r} (attendu {', '.join(SWEEPABLE)})")
        if name in ("n_run", "n_ite"):
            return replace(self, anneal=replace(self.anneal, **{name: int(value)})).validate()
        if name == "horizon":
            return replace(self, horizon=int(value)).validate()
        return replace(self, **{name: float(value)}).validate()

    def decision_seed(self, segment: int) -> int:
        """Graine du recuit pour un segment : mélange graine du recuit, graine globale et segment"""
        seq = np.random.SeedSequence([int(self.anneal.seed), int(self.global_seed), int(segment)])
        return int(seq.generate_state(1, dtype=np.uint64)[0])

    def objective_scale(self, ladder: BitrateLadder) -> float:
        """Plus grand écart d'énergie de qualité ou de lissage sur un segment (>= 1)"""
        span = ladder.qualities[-1] - ladder.qualities[0]
        return max(self.a * span, self.b * span * span, 1.0)

    def anneal_config(self, ladder: BitrateLadder, segment: int) -> AnnealConfig:
        """
        Recuit d'un segment : graine dérivée, et sans température explicite,
        schéma de objective_scale à 1e−4 de cette valeur

        Les pénalités one-hot et de tampon n'entrent pas dans l'échelle : le
        recuit contraint les traite hors des sauts d'énergie.
        """
        cfg = replace(self.anneal, seed=self.decision_seed(segment))
        if cfg.t_init is None and cfg.native_constraints:
            t_init = max(self.objective_scale(ladder), cfg.t_final or 0.0)
            t_final = cfg.t_final if cfg.t_final is not None else 1e-4 * t_init
            cfg = replace(cfg, t_init=t_init, t_final=t_final)
        return cfg


@dataclass
class VariableMap:
    """Disposition des variables : x_{n,l} d'abord (n-major), puis les blocs d'écart"""
    horizon: int
    num_levels: int
    slack: List[SlackEncoding] = field(default_factory=list)

    def index(self, n: int, level: int) -> int:
        """Indice de x_{n,l} (n et l 0-indexés)"""
        return n * self.num_levels + level

    def block(self, n: int) -> List[int]:
        start = n * self.num_levels
        return list(range(start, start + self.num_levels))

    @property
    def num_decision_vars(self) -> int:
        return self.horizon * self.num_levels

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "num_levels": self.num_levels,
            "slack_sizes": [enc.K for enc in self.slack],
        }


@dataclass
class SelectionDiagnostics:
    violation: bool
    set_levels: List[int]


def build_qudash_objective(ctx: DecisionContext, manifest: Manifest, params: QudashParams,
                           c_pred: float, horizon: Optional[int] = None) -> Tuple[QuboProblem, VariableMap]:
    """
    Construit −a·Σq·x + b·Σ(Δq)² + c·Σ(Σx − 1)² + d·Σ H_n

    Les contraintes de tampon Σ_{i<=n} Σ_l w_{i,l}·x_{i,l} < U_n, avec
    U_n = B₁ + (n−1)·M et w_{i,l} = S_i(l)/C_pred, sont exprimées en unités
    de time_unit secondes puis encodées par bits d'écart.

    Args:
        ctx: Contexte de décision (B₁, dernier niveau)
        manifest: Manifeste de la vidéo
        params: Paramètres QuDASH
        c_pred: Débit prédit en Mbps
        horizon: Horizon effectif (défaut : params.horizon tronqué aux segments restants)

    Returns:
        (QuboProblem, VariableMap)

    Raises:
        PredictionError: C_pred absent ou <= 0
        InfeasibleBoundError: U₁ <= 0
    """
    if c_pred is None or not c_pred > 0 or not math.isfinite(c_pred):
        raise PredictionError(f"Débit prédit invalide : {c_pred}")
    if not ctx.buffer > 0:
        raise InfeasibleBoundError(ctx.buffer, "Première contrainte de tampon")

    ladder = manifest.ladder
    L = ladder.num_levels
    available = manifest.num_segments - ctx.next_segment_index
    N = horizon if horizon is not None else min(params.horizon, ctx.remaining_segments, available)
    if N < 1:
        raise QuDashError(f"Horizon vide au segment {ctx.next_segment_index}")

    vmap = VariableMap(horizon=N, num_levels=L)
    problem = QuboProblem(N * L)
    q = ladder.qualities

    # qualité
    if params.a:
        for n in range(N):
            for l in range(L):
                problem.add_term(vmap.index(n, l), vmap.index(n, l), -params.a * q[l])

    # lissage ; n = 0 amorcé par le dernier niveau joué
    if params.b:
        for n in range(N):
            terms = [(vmap.index(n, l), q[l]) for l in range(L)]
            if n == 0:
                if ctx.last_level is None:
                    continue
                problem.add_squared_linear(terms, -q[ctx.last_level], params.b)
            else:
                terms += [(vmap.index(n - 1, l), -q[l]) for l in range(L)]
                problem.add_squared_linear(terms, 0.0, params.b)

    # one-hot
    for n in range(N):
        problem.add_one_hot(vmap.block(n), params.c)

    # tampon
    if params.d:
        M = ladder.segment_duration
        start = ctx.next_segment_index
        for n in range(N):
            bound = (ctx.buffer + n * M) / params.time_unit
            indices, weights = [], []
            for i in range(n + 1):
                for l in range(L):
                    indices.append(vmap.index(i, l))
                    weights.append(manifest.size(start + i, l) / c_pred / params.time_unit)
            vmap.slack.append(problem.add_less_than(indices, weights, bound, params.d))

    return problem, vmap


def extract_selection(solution: Union[Solution, Sequence[int]], vmap: VariableMap,
                      n: int = 0) -> Tuple[int, SelectionDiagnostics]:
    """
    Lit le bloc du segment n de la solution

    Un bloc one-hot donne son niveau ; sinon le plus bas des niveaux
    actifs (ou le niveau 0 si aucun) avec le drapeau de violation.

    Returns:
        (niveau, diagnostics)
    """
    bits = solution.assignment if isinstance(solution, Solution) else solution
    if len(bits) < vmap.num_decision_vars:
        raise QuDashError(
            f"Affectation de longueur {len(bits)} trop courte pour {vmap.num_decision_vars} variables"
        )
    set_levels = [l for l, idx in enumerate(vmap.block(n)) if bits[idx]]
    if len(set_levels) == 1:
        return set_levels[0], SelectionDiagnostics(False, set_levels)
    level = set_levels[0] if set_levels else 0
    return level, SelectionDiagnostics(True, set_levels)


def solve(problem: QuboProblem, params: QudashParams, segment: int,
          ladder: Optional[BitrateLadder] = None) -> Solution:
    """
    Résout selon params.solver : exact (force brute), plans (énumération
    des plans one-hot) ou anneal (schéma mis à l'échelle si ladder est fourni)
    """
    if params.solver == "exact":
        return brute_force_solve(problem)
    if params.solver == "plans":
        return plan_search(problem)
    if ladder is None:
        cfg = replace(params.anneal, seed=params.decision_seed(segment))
    else:
        cfg = params.anneal_config(ladder, segment)
    return anneal(problem, cfg)


def qudash_decide(ctx: DecisionContext, manifest: Manifest, params: QudashParams,
                  predictor: Optional[HarmonicMeanPredictor] = None) -> Tuple[int, Decision]:
    """
    Décision QuDASH de bout en bout

    Amorçage (ni historique ni tampon) : niveau le plus bas sans QUBO.
    Toute erreur de construction ou de résolution bascule sur RB.

    Args:
        predictor: Prédicteur de l'algorithme (défaut : neuf, de fenêtre params.predictor_window)

    Returns:
        (niveau, rapport de décision)
    """
    started = time.perf_counter()
    report = Decision(level=manifest.ladder.lowest, algorithm="qudash", segment=ctx.next_segment_index)

    if not ctx.throughput_history and ctx.buffer <= 0:
        report.flags.append("bootstrap")
        report.wall_time = time.perf_counter() - started
        return report.level, report

    if predictor is None:
        predictor = HarmonicMeanPredictor(params.predictor_window)
    c_pred = predictor.predict(ctx.throughput_history)
    report.c_pred = c_pred
    report.excluded_samples = predictor.last_excluded
    try:
        problem, vmap = build_qudash_objective(ctx, manifest, params, c_pred)
        solution = solve(problem, params, ctx.next_segment_index, manifest.ladder)
    except QuDashError as e:
        logger.warning("Segment %d : repli sur RB (%s)", ctx.next_segment_index, e)
        report.flags.append("rb_fallback")
        # même prédiction que rb_decide
        report.level = manifest.ladder.highest_at_most(c_pred)
        report.wall_time = time.perf_counter() - started
        return report.level, report

    level, diagnostics = extract_selection(solution, vmap)
    if diagnostics.violation:
        logger.warning("Segment %d : bloc one-hot violé (niveaux actifs %s)",
                       ctx.next_segment_index, diagnostics.set_levels)
        report.flags.append("one_hot_violation")

    builder = InteractionGraphBuilder()
    builder.build_graph(problem)
    info = builder.get_graph_info()

    report.level = level
    report.violation = diagnostics.violation
    report.qubo_vars = problem.num_vars
    report.qubo_edges = info["edges"]
    report.energy = solution.energy
    report.plan = [extract_selection(solution, vmap, n)[0] for n in range(vmap.horizon)]
    report.wall_time = time.perf_counter() - started
    logger.debug("Segment %d : niveau %d, C_pred=%.3f, %d variables, E=%.6g",
                 ctx.next_segment_index, level, c_pred, problem.num_vars, solution.energy)
    return level, report


class QudashAbr(AbrAlgorithm):
    """QuDASH derrière l'interface commune"""

    kind = "qudash"

    def __init__(self, name: Optional[str] = None, params: Optional[QudashParams] = None):
        super().__init__(name)
        self.params = (params or QudashParams()).validate()
        self.predictor = HarmonicMeanPredictor(self.params.predictor_window)

    def decide(self, ctx: DecisionContext, manifest: Manifest) -> Decision:
        _, report = qudash_decide(ctx, manifest, self.params, self.predictor)
        report.algorithm = self.name
        return report
