"""
Recuit simulé de type Digital Annealer
Metropolis-Hastings avec essais parallèles, répliques indépendantes
et oracle exhaustif pour les petites instances
"""

import logging
import math
from dataclasses import dataclass, asdict
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import AnnealConfigError, ConstraintStructureError, ProblemTooLargeError
from src.graph_builder import InteractionGraphBuilder
from src.qubo import QuboProblem


logger = logging.getLogger(__name__)

SINGLE_FLIP = "single-flip"
PARALLEL_TRIAL = "parallel-trial"
MODES = (SINGLE_FLIP, PARALLEL_TRIAL)

BRUTE_FORCE_MAX_VARS = 24
PLAN_SEARCH_MAX_STATES = 2 ** 20


@dataclass
class AnnealConfig:
    """Budget et schéma de température d'un recuit"""
    n_run: int = 16
    n_ite: int = 5000
    t_init: Optional[float] = None
    t_final: Optional[float] = None
    seed: int = 0
    mode: str = PARALLEL_TRIAL
    polish: bool = True
    offset_increment: Optional[float] = None
    # groupes one-hot et bits d'écart traités par ConstrainedAnnealer
    native_constraints: bool = True

    def validate(self) -> "AnnealConfig":
        """Vérifie les invariants ; lève AnnealConfigError sinon"""
        if int(self.n_run) < 1:
            raise AnnealConfigError(f"n_run doit être >= 1 (reçu {self.n_run})")
        if int(self.n_ite) < 1:
            raise AnnealConfigError(f"n_ite doit être >= 1 (reçu {self.n_ite})")
        if self.mode not in MODES:
            raise AnnealConfigError(f"Mode inconnu {self.mode!r} (attendu {', '.join(MODES)})")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise AnnealConfigError(f"La graine doit tenir sur 64 bits non signés (reçu {self.seed})")
        if self.t_init is not None and not self.t_init > 0:
            raise AnnealConfigError(f"t_init doit être > 0 (reçu {self.t_init})")
        if self.t_final is not None and not self.t_final > 0:
            raise AnnealConfigError(f"t_final doit être > 0 (reçu {self.t_final})")
        if self.t_init is not None and self.t_final is not None and self.t_final > self.t_init:
            raise AnnealConfigError(f"t_final ({self.t_final}) doit être <= t_init ({self.t_init})")
        if self.offset_increment is not None and self.offset_increment < 0:
            raise AnnealConfigError("offset_increment doit être >= 0")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AnnealConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise AnnealConfigError(f"Clés inconnues dans anneal : {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.n_run = int(cfg.n_run)
        cfg.n_ite = int(cfg.n_ite)
        cfg.seed = int(cfg.seed)
        return cfg.validate()


@dataclass
class Solution:
    """
    Meilleure affectation trouvée

    iterations_used compte les n_ite pas du schéma plus les pas de polissage
    (nombre d'états énumérés pour les oracles exhaustifs).
    """
    assignment: Tuple[int, ...]
    energy: float
    replica_id: int
    iterations_used: int
    found_at: int = 0


@dataclass
class ReplicaState:
    """
    État d'un lot de répliques (une ligne par réplique)

    fields[r, k] = coeffs[k,k] + Σ_{i≠k} coeff(i,k)·bits[r,i] est tenu à jour
    incrémentalement à chaque flip.
    """
    bits: np.ndarray
    fields: np.ndarray
    energy: np.ndarray
    e_off: np.ndarray
    best_bits: np.ndarray
    best_energy: np.ndarray
    best_step: np.ndarray
    step: int = 0

    @property
    def n_replicas(self) -> int:
        return self.bits.shape[0]


@dataclass
class ConstrainedState(ReplicaState):
    """
    État du recuit contraint : bits des seules variables libres

    active[r, g] est la position du bit actif du groupe one-hot g ;
    gaps[r, b] = slack_offset_b − Σ w·x pour le bloc d'écart b.
    """
    active: Optional[np.ndarray] = None
    gaps: Optional[np.ndarray] = None


def metropolis_accept(delta_e: float, temperature: float, u: float) -> bool:
    """
    Critère de Metropolis-Hastings : min(1, exp(−ΔE / T)) > u

    Args:
        delta_e: Variation d'énergie proposée
        temperature: Température T > 0
        u: Tirage uniforme dans [0, 1)

    Returns:
        True si la transition est acceptée
    """
    if not temperature > 0:
        raise AnnealConfigError(f"La température doit être > 0 (reçu {temperature})")
    if delta_e <= 0:
        return 1.0 > u
    return math.exp(-delta_e / temperature) > u


def geometric_schedule(t_init: float, t_final: float, n_ite: int) -> np.ndarray:
    """
    Schéma géométrique T(s) = t_init·(t_final / t_init)^(s / (n_ite − 1))

    Returns:
        Tableau de n_ite températures, T(0) = t_init, T(n_ite − 1) = t_final
    """
    AnnealConfig(n_ite=n_ite, t_init=t_init, t_final=t_final).validate()
    if n_ite == 1:
        return np.array([float(t_init)])
    if t_init == t_final:
        return np.full(n_ite, float(t_init))
    temps = np.geomspace(t_init, t_final, n_ite)
    temps[0] = t_init
    temps[-1] = t_final
    return temps


def replica_rngs(seed: int, n_run: int) -> List[np.random.Generator]:
    """Un générateur indépendant par réplique, dérivé de (seed, indice)"""
    return [np.random.default_rng(np.random.SeedSequence([int(seed), r])) for r in range(n_run)]


class SimulatedAnnealer:
    """Minimise un QuboProblem par recuit simulé sur un lot de répliques"""

    def __init__(self, problem: QuboProblem):
        """
        Prépare les matrices du problème

        Args:
            problem: Problème QUBO (partagé en lecture)
        """
        self.problem = problem
        self.num_vars = problem.num_vars
        builder = InteractionGraphBuilder()
        builder.build_graph(problem)
        self.coupling = builder.coupling_matrix()
        self.linear = builder.linear_vector()
        self.field_bound = builder.max_field_bound()
        self.upper = problem.upper_matrix()

    def default_temperatures(self) -> Tuple[float, float]:
        """t_init = max_k |c_kk| + Σ|c_ik| (1 si nul), t_final = 1e−3·t_init"""
        t_init = self.field_bound if self.field_bound > 0 else 1.0
        return t_init, 1e-3 * t_init

    def resolve_temperatures(self, cfg: AnnealConfig) -> Tuple[float, float]:
        t_init, t_final = self.default_temperatures()
        if cfg.t_init is not None:
            t_init = cfg.t_init
            if cfg.t_final is None:
                t_final = 1e-3 * t_init
        if cfg.t_final is not None:
            t_final = cfg.t_final
        if t_final > t_init:
            raise AnnealConfigError(f"t_final ({t_final}) doit être <= t_init ({t_init})")
        return t_init, t_final

    @property
    def draw_width(self) -> int:
        """Uniformes par réplique et par pas : un par candidat, plus le tirage du choix"""
        return self.num_vars + 1

    def full_assignment(self, bits: np.ndarray) -> Tuple[int, ...]:
        return tuple(int(b) for b in bits)

    # --- état ---

    def energies(self, bits: np.ndarray) -> np.ndarray:
        """Énergies vectorisées d'un lot d'affectations (R, N)"""
        x = bits.astype(float)
        return self.problem.offset + np.einsum("ri,ij,rj->r", x, self.upper, x)

    def init_state(self, bits: np.ndarray) -> ReplicaState:
        """Construit l'état d'un lot à partir d'affectations initiales"""
        bits = np.array(bits, dtype=np.int8).reshape(-1, self.num_vars)
        fields = self.linear[None, :] + bits.astype(float) @ self.coupling
        energy = self.energies(bits)
        return ReplicaState(
            bits=bits,
            fields=fields,
            energy=energy,
            e_off=np.zeros(bits.shape[0]),
            best_bits=bits.copy(),
            best_energy=energy.copy(),
            best_step=np.zeros(bits.shape[0], dtype=np.int64),
        )

    def random_state(self, rngs: Sequence[np.random.Generator]) -> ReplicaState:
        """État initial uniforme, une ligne par générateur"""
        bits = np.array([rng.integers(0, 2, self.num_vars) for rng in rngs], dtype=np.int8)
        return self.init_state(bits.reshape(len(rngs), self.num_vars))

    def resync(self, state: ReplicaState):
        """Recalcule champs et énergies depuis les bits (borne la dérive flottante)"""
        state.fields = self.linear[None, :] + state.bits.astype(float) @ self.coupling
        state.energy = self.energies(state.bits)

    def _flip(self, state: ReplicaState, rows: np.ndarray, ks: np.ndarray):
        if rows.size == 0:
            return
        old = state.bits[rows, ks].astype(float)
        sign = 1.0 - 2.0 * old
        state.energy[rows] += sign * state.fields[rows, ks]
        state.bits[rows, ks] = (1 - state.bits[rows, ks]).astype(np.int8)
        state.fields[rows] += sign[:, None] * self.coupling[ks]

    def _record_incumbents(self, state: ReplicaState):
        better = state.energy < state.best_energy
        if np.any(better):
            state.best_bits[better] = state.bits[better]
            state.best_energy[better] = state.energy[better]
            state.best_step[better] = state.step

    def step_with_draws(self, state: ReplicaState, temperature: float, draws: np.ndarray,
                        mode: str = PARALLEL_TRIAL, offset_increment: Optional[float] = None):
        """
        Un pas de Metropolis pour chaque réplique, tirages fournis

        Args:
            state: Lot de répliques (modifié en place)
            temperature: Température courante
            draws: (R, N + 1) uniformes ; colonnes 0..N−1 pour les tests
                d'acceptation, colonne N pour le choix de l'indice
            mode: single-flip ou parallel-trial
            offset_increment: Pas de l'offset dynamique (défaut : température)
        """
        n = self.num_vars
        state.step += 1
        if n == 0:
            return
        rows_all = np.arange(state.n_replicas)
        picks = draws[:, n]

        if mode == SINGLE_FLIP:
            ks = np.minimum((picks * n).astype(np.int64), n - 1)
            deltas = (1.0 - 2.0 * state.bits[rows_all, ks]) * state.fields[rows_all, ks]
            with np.errstate(over="ignore"):
                prob = np.exp(np.minimum(0.0, -deltas / temperature))
            accepted = prob > draws[:, 0]
            self._flip(state, rows_all[accepted], ks[accepted])
        else:
            deltas = (1.0 - 2.0 * state.bits) * state.fields
            effective = deltas + state.e_off[:, None]
            with np.errstate(over="ignore"):
                prob = np.exp(np.minimum(0.0, -effective / temperature))
            accept = prob > draws[:, :n]
            counts = accept.sum(axis=1)
            moved = counts > 0

            rank = np.minimum((picks * counts).astype(np.int64), np.maximum(counts - 1, 0))
            cumulative = np.cumsum(accept, axis=1)
            ks = np.argmax(cumulative > rank[:, None], axis=1)
            self._flip(state, rows_all[moved], ks[moved])

            increment = temperature if offset_increment is None else offset_increment
            state.e_off[moved] = 0.0
            state.e_off[~moved] -= increment

        self._record_incumbents(state)

    def replica_step(self, state: ReplicaState, temperature: float,
                     rngs: Sequence[np.random.Generator], mode: str = PARALLEL_TRIAL,
                     offset_increment: Optional[float] = None) -> ReplicaState:
        """
        Un pas de recuit, tirages pris dans le générateur de chaque réplique

        Returns:
            L'état mis à jour
        """
        if not temperature > 0:
            raise AnnealConfigError(f"La température doit être > 0 (reçu {temperature})")
        draws = np.stack([rng.random(self.draw_width) for rng in rngs])
        self.step_with_draws(state, temperature, draws, mode, offset_increment)
        return state

    def polish(self, state: ReplicaState, max_rounds: Optional[int] = None):
        """Descente gloutonne à température nulle (meilleur flip tant qu'il améliore)"""
        n = self.num_vars
        if n == 0:
            return
        rounds = max_rounds if max_rounds is not None else 10 * n + 10
        rows_all = np.arange(state.n_replicas)
        for _ in range(rounds):
            deltas = (1.0 - 2.0 * state.bits) * state.fields
            ks = np.argmin(deltas, axis=1)
            improving = deltas[rows_all, ks] < 0
            if not np.any(improving):
                break
            self._flip(state, rows_all[improving], ks[improving])
            state.step += 1
            self._record_incumbents(state)

    # --- recuit complet ---

    def run(self, cfg: AnnealConfig) -> Solution:
        """
        Exécute n_run répliques de n_ite pas et retourne le meilleur état visité

        Le résultat ne dépend que de (problème, cfg).
        """
        cfg.validate()
        if self.num_vars == 0:
            return Solution((), self.problem.energy([]), 0, 0, 0)

        t_init, t_final = self.resolve_temperatures(cfg)
        temps = geometric_schedule(t_init, t_final, cfg.n_ite)
        rngs = replica_rngs(cfg.seed, cfg.n_run)
        state = self.random_state(rngs)

        width = self.draw_width
        chunk = max(1, min(cfg.n_ite, 2 ** 20 // (cfg.n_run * width)))
        for start in range(0, cfg.n_ite, chunk):
            stop = min(start + chunk, cfg.n_ite)
            block = np.stack([rng.random((stop - start, width)) for rng in rngs], axis=1)
            for offset, temperature in enumerate(temps[start:stop]):
                self.step_with_draws(state, float(temperature), block[offset], cfg.mode,
                                     cfg.offset_increment)
            self.resync(state)

        if cfg.polish:
            self.polish(state)

        return self._best_solution(state, state.step)

    def _best_solution(self, state: ReplicaState, iterations: int) -> Solution:
        best: Optional[Solution] = None
        for r in range(state.n_replicas):
            bits = self.full_assignment(state.best_bits[r])
            exact = self.problem.energy(bits)
            if best is None or exact < best.energy:
                best = Solution(bits, exact, r, iterations, int(state.best_step[r]))
        logger.debug("Recuit : énergie %.6g (réplique %d, pas %d)", best.energy, best.replica_id,
                     best.found_at)
        return best


class ConstrainedAnnealer(SimulatedAnnealer):
    """
    Recuit qui traite nativement groupes one-hot et bits d'écart

    Un groupe one-hot bouge par réaffectation de son bit actif : il reste
    exactement à un. Les bits d'écart disparaissent de la recherche : à
    décisions fixées, chaque bloc prend sa valeur optimale
    S* = clip(rint(−A), 0, 2^K − 1) avec A = slack_offset − Σ w·x, et
    l'énergie marginale vaut E(x, 0) + Σ_b d_b·S*·(S* + 2A).
    Les autres variables libres bougent par flip simple.
    """

    def __init__(self, problem: QuboProblem):
        """
        Args:
            problem: Problème construit avec add_one_hot / add_less_than

        Raises:
            ConstraintStructureError: bits d'écart partagés, ou pris dans un
                groupe ou dans une contrainte
        """
        self.problem = problem
        self.num_vars = problem.num_vars
        blocks = list(problem.slack_blocks)
        slack = [i for block in blocks for i in block.slack_indices]
        slack_set = set(slack)
        grouped = {i for g in problem.one_hot_groups for i in g}
        if len(slack_set) != len(slack):
            raise ConstraintStructureError("Bits d'écart partagés entre contraintes")
        if slack_set & grouped or any(slack_set.intersection(b.decision_indices) for b in blocks):
            raise ConstraintStructureError("Bits d'écart utilisés comme variables de décision")

        self.free = np.array(sorted(set(range(self.num_vars)) - slack_set), dtype=np.int64)
        position = {int(v): p for p, v in enumerate(self.free)}
        n_free = len(self.free)
        self.num_free = n_free

        builder = InteractionGraphBuilder()
        builder.build_graph(problem)
        coupling = builder.coupling_matrix()[np.ix_(self.free, self.free)]
        self.linear = builder.linear_vector()[self.free]
        # ligne et colonne n_free : candidat absent
        self.coupling = np.zeros((n_free + 1, n_free + 1))
        self.coupling[:n_free, :n_free] = coupling
        self.weights = np.zeros((n_free + 1, len(blocks)))
        for b, block in enumerate(blocks):
            for w, idx in zip(block.weights, block.decision_indices):
                self.weights[position[idx], b] += w
        self.base_gaps = np.array([block.slack_offset for block in blocks], dtype=float)
        self.penalties = np.array([block.penalty for block in blocks], dtype=float)
        self.max_slack = np.array([block.max_slack for block in blocks], dtype=float)

        self.groups = [tuple(position[i] for i in g) for g in problem.one_hot_groups]
        self.group_of = np.full(n_free + 1, -1, dtype=np.int64)
        for g, members in enumerate(self.groups):
            self.group_of[list(members)] = g
        self.singles = np.array([p for p in range(n_free) if self.group_of[p] < 0], dtype=np.int64)
        self.move_target = np.array([p for members in self.groups for p in members], dtype=np.int64)
        self.move_group = self.group_of[self.move_target]
        self.num_moves = len(self.singles) + len(self.move_target)

        magnitudes = np.abs(coupling).sum(axis=0) + np.abs(self.linear) if n_free else np.zeros(0)
        self.field_bound = float(magnitudes.max(initial=0.0))
        self.tolerance = 1e-12 * max(1.0, float(np.abs(coupling).max(initial=0.0)),
                                     float(np.abs(self.linear).max(initial=0.0)))

    @property
    def draw_width(self) -> int:
        return self.num_moves + 1

    def full_assignment(self, bits: np.ndarray) -> Tuple[int, ...]:
        """Réinsère les bits d'écart optimaux autour des variables libres"""
        full = np.zeros(self.num_vars, dtype=np.int64)
        full[self.free] = bits
        for block in self.problem.slack_blocks:
            full[list(block.slack_indices)] = block.slack_bits(block.best_slack(full))
        return tuple(int(b) for b in full)

    # --- énergie marginale ---

    def slack_energy(self, gaps: np.ndarray) -> np.ndarray:
        """Σ_b d_b·S*·(S* + 2A) sur le dernier axe"""
        best = np.clip(np.rint(-gaps), 0.0, self.max_slack)
        return (self.penalties * best * (best + 2.0 * gaps)).sum(axis=-1)

    def gaps_of(self, x: np.ndarray) -> np.ndarray:
        return self.base_gaps[None, :] - x @ self.weights[:self.num_free]

    def energies(self, bits: np.ndarray) -> np.ndarray:
        """Énergies marginales d'un lot (R, n_free)"""
        x = bits.astype(float)
        inner = self.coupling[:self.num_free, :self.num_free]
        decision = self.problem.offset + x @ self.linear + 0.5 * np.einsum("ri,ij,rj->r", x, inner, x)
        return decision + self.slack_energy(self.gaps_of(x))

    def init_state(self, bits: np.ndarray) -> ConstrainedState:
        """
        Raises:
            ConstraintStructureError: un groupe n'a pas exactement un bit actif
        """
        bits = np.array(bits, dtype=np.int8).reshape(-1, self.num_free)
        x = bits.astype(float)
        active = np.zeros((bits.shape[0], len(self.groups)), dtype=np.int64)
        for g, members in enumerate(self.groups):
            sub = bits[:, list(members)]
            if np.any(sub.sum(axis=1) != 1):
                raise ConstraintStructureError(f"Le groupe {g} doit avoir exactement un bit actif")
            active[:, g] = np.array(members)[np.argmax(sub, axis=1)]
        energy = self.energies(bits)
        return ConstrainedState(
            bits=bits,
            fields=self.linear[None, :] + x @ self.coupling[:self.num_free, :self.num_free],
            energy=energy,
            e_off=np.zeros(bits.shape[0]),
            best_bits=bits.copy(),
            best_energy=energy.copy(),
            best_step=np.zeros(bits.shape[0], dtype=np.int64),
            active=active,
            gaps=self.gaps_of(x),
        )

    def random_state(self, rngs: Sequence[np.random.Generator]) -> ConstrainedState:
        """Bits libres uniformes, un membre tiré au hasard par groupe"""
        bits = np.zeros((len(rngs), self.num_free), dtype=np.int8)
        for r, rng in enumerate(rngs):
            bits[r] = rng.integers(0, 2, self.num_free)
            for members in self.groups:
                bits[r, list(members)] = 0
                bits[r, members[int(rng.integers(len(members)))]] = 1
        return self.init_state(bits)

    def resync(self, state: ConstrainedState):
        x = state.bits.astype(float)
        state.fields = self.linear[None, :] + x @ self.coupling[:self.num_free, :self.num_free]
        state.gaps = self.gaps_of(x)
        state.energy = self.energies(state.bits)

    # --- mouvements ---

    def moves(self, state: ConstrainedState) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Candidats de chaque réplique : variable allumée, variable éteinte
        (n_free si aucune) et validité

        Returns:
            (plus, minus, valid), chacun de forme (R, num_moves)
        """
        n_free = self.num_free
        bits = state.bits[:, self.singles]
        plus_single = np.where(bits == 0, self.singles[None, :], n_free)
        minus_single = np.where(bits == 1, self.singles[None, :], n_free)
        plus_group = np.broadcast_to(self.move_target, (state.n_replicas, len(self.move_target)))
        minus_group = state.active[:, self.move_group]
        plus = np.concatenate([plus_single, plus_group], axis=1)
        minus = np.concatenate([minus_single, minus_group], axis=1)
        return plus, minus, plus != minus

    def move_deltas(self, state: ConstrainedState, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
        rows = np.arange(state.n_replicas)[:, None]
        fields = np.concatenate([state.fields, np.zeros((state.n_replicas, 1))], axis=1)
        decision = fields[rows, plus] - fields[rows, minus] - self.coupling[plus, minus]
        new_gaps = state.gaps[:, None, :] + self.weights[minus] - self.weights[plus]
        return decision + self.slack_energy(new_gaps) - self.slack_energy(state.gaps)[:, None]

    def _apply(self, state: ConstrainedState, rows: np.ndarray, plus: np.ndarray,
               minus: np.ndarray, deltas: np.ndarray):
        if rows.size == 0:
            return
        n_free = self.num_free
        on, off = plus < n_free, minus < n_free
        state.bits[rows[off], minus[off]] = 0
        state.bits[rows[on], plus[on]] = 1
        state.fields[rows] += self.coupling[plus, :n_free] - self.coupling[minus, :n_free]
        state.gaps[rows] += self.weights[minus] - self.weights[plus]
        state.energy[rows] += deltas
        groups = self.group_of[plus]
        grouped = groups >= 0
        state.active[rows[grouped], groups[grouped]] = plus[grouped]

    def step_with_draws(self, state: ConstrainedState, temperature: float, draws: np.ndarray,
                        mode: str = PARALLEL_TRIAL, offset_increment: Optional[float] = None):
        """
        Un pas pour chaque réplique ; draws est de forme (R, num_moves + 1)

        Même règle d'acceptation que SimulatedAnnealer.step_with_draws, sur
        les mouvements au lieu des flips.
        """
        m = self.num_moves
        state.step += 1
        if m == 0:
            return
        rows_all = np.arange(state.n_replicas)
        picks = draws[:, m]
        plus, minus, valid = self.moves(state)
        deltas = self.move_deltas(state, plus, minus)

        if mode == SINGLE_FLIP:
            ks = np.minimum((picks * m).astype(np.int64), m - 1)
            chosen = deltas[rows_all, ks]
            with np.errstate(over="ignore"):
                prob = np.exp(np.minimum(0.0, -chosen / temperature))
            accepted = valid[rows_all, ks] & (prob > draws[:, 0])
            rows = rows_all[accepted]
            self._apply(state, rows, plus[rows, ks[accepted]], minus[rows, ks[accepted]],
                        chosen[accepted])
        else:
            effective = deltas + state.e_off[:, None]
            with np.errstate(over="ignore"):
                prob = np.exp(np.minimum(0.0, -effective / temperature))
            accept = (prob > draws[:, :m]) & valid
            counts = accept.sum(axis=1)
            moved = counts > 0

            rank = np.minimum((picks * counts).astype(np.int64), np.maximum(counts - 1, 0))
            ks = np.argmax(np.cumsum(accept, axis=1) > rank[:, None], axis=1)
            rows = rows_all[moved]
            ks = ks[moved]
            self._apply(state, rows, plus[rows, ks], minus[rows, ks], deltas[rows, ks])

            increment = temperature if offset_increment is None else offset_increment
            state.e_off[moved] = 0.0
            state.e_off[~moved] -= increment

        self._record_incumbents(state)

    def polish(self, state: ConstrainedState, max_rounds: Optional[int] = None):
        """Meilleur mouvement tant qu'il améliore au-delà de la tolérance numérique"""
        if self.num_moves == 0:
            return
        rounds = max_rounds if max_rounds is not None else 10 * self.num_moves + 10
        rows_all = np.arange(state.n_replicas)
        for _ in range(rounds):
            plus, minus, valid = self.moves(state)
            deltas = np.where(valid, self.move_deltas(state, plus, minus), np.inf)
            ks = np.argmin(deltas, axis=1)
            improving = deltas[rows_all, ks] < -self.tolerance
            if not np.any(improving):
                break
            rows = rows_all[improving]
            ks = ks[improving]
            self._apply(state, rows, plus[rows, ks], minus[rows, ks], deltas[rows, ks])
            state.step += 1
            self._record_incumbents(state)


def anneal(problem: QuboProblem, cfg: AnnealConfig) -> Solution:
    """
    Recuit simulé de problem selon cfg

    Avec cfg.native_constraints, un problème qui déclare groupes one-hot ou
    bits d'écart passe par ConstrainedAnnealer.
    """
    if cfg.native_constraints and problem.has_constraint_structure:
        return ConstrainedAnnealer(problem).run(cfg)
    return SimulatedAnnealer(problem).run(cfg)


def plan_search(problem: QuboProblem, max_states: int = PLAN_SEARCH_MAX_STATES) -> Solution:
    """
    Minimum exact sur les affectations qui respectent les groupes one-hot

    Énumère un membre par groupe et les bits libres restants ; les bits
    d'écart prennent leur valeur optimale. Égalités départagées par le
    plus petit code d'énumération.

    Raises:
        ProblemTooLargeError: plus de max_states combinaisons
    """
    solver = ConstrainedAnnealer(problem)
    radices = [len(members) for members in solver.groups] + [2] * len(solver.singles)
    total = math.prod(radices)
    if total > max_states:
        raise ProblemTooLargeError(f"{total} combinaisons : énumération limitée à {max_states}")

    chunk = min(total, 2 ** 16)
    best_bits, best_energy = None, math.inf
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = np.zeros((len(codes), solver.num_free), dtype=np.int8)
        rest = codes.copy()
        for members in solver.groups:
            choice = rest % len(members)
            rest //= len(members)
            bits[np.arange(len(codes)), np.array(members)[choice]] = 1
        for p in solver.singles:
            bits[:, p] = rest % 2
            rest //= 2
        energies = solver.energies(bits)
        pos = int(np.argmin(energies))
        if energies[pos] < best_energy:
            best_energy = float(energies[pos])
            best_bits = bits[pos]

    assignment = solver.full_assignment(best_bits)
    return Solution(assignment, problem.energy(assignment), 0, total, 0)


def brute_force_solve(problem: QuboProblem, max_vars: int = BRUTE_FORCE_MAX_VARS) -> Solution:
    """
    Énumération exhaustive (oracle)

    Les égalités sont départagées par le plus petit entier Σ x_i·2^i.

    Raises:
        ProblemTooLargeError: num_vars > max_vars
    """
    n = problem.num_vars
    if n > max_vars:
        raise ProblemTooLargeError(f"{n} variables : énumération limitée à {max_vars}")
    if n == 0:
        return Solution((), problem.energy([]), 0, 1, 0)

    upper = problem.upper_matrix()
    shifts = np.arange(n, dtype=np.int64)
    total = 2 ** n
    chunk = min(total, 2 ** 16)

    best_code, best_energy = 0, math.inf
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(float)
        energies = problem.offset + np.einsum("ri,ij,rj->r", bits, upper, bits)
        pos = int(np.argmin(energies))
        if energies[pos] < best_energy:
            best_energy = float(energies[pos])
            best_code = int(codes[pos])

    assignment = tuple((best_code >> i) & 1 for i in range(n))
    return Solution(assignment, problem.energy(assignment), 0, total, 0)
