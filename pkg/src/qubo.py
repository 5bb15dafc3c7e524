"""
Problèmes QUBO (optimisation binaire quadratique sans contrainte)
Forme canonique triangulaire supérieure, énergies, deltas de flip,
conversion Ising et encodage d'inégalités par variables d'écart
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import AssignmentError, InfeasibleBoundError, QuboIndexError, QuDashError


Assignment = Sequence[int]


def slack_count(bound: float) -> int:
    """
    Nombre de variables d'écart K pour une borne U

    K est le plus petit entier (>= 1) tel que 2^K > U.

    Args:
        bound: Borne U (> 0)

    Returns:
        K
    """
    k = 1
    while 2 ** k <= bound:
        k += 1
    return k


@dataclass(frozen=True)
class SlackEncoding:
    """Description d'une contrainte Σ w·x < U encodée par K bits d'écart"""
    K: int
    slack_offset: float
    weights: Tuple[float, ...]
    bound: float
    penalty: float
    decision_indices: Tuple[int, ...] = ()
    slack_indices: Tuple[int, ...] = ()

    @property
    def max_slack(self) -> int:
        return 2 ** self.K - 1

    def load(self, bits: Assignment) -> float:
        """Σ w·x sur les variables de décision"""
        return sum(w * bits[idx] for w, idx in zip(self.weights, self.decision_indices))

    def residual(self, bits: Assignment) -> float:
        """Valeur de l'expression élevée au carré pour une affectation complète"""
        slack = sum((2 ** k) * bits[idx] for k, idx in enumerate(self.slack_indices))
        return slack + self.slack_offset - self.load(bits)

    def best_slack(self, bits: Assignment) -> int:
        """Entier S ∈ [0, 2^K − 1] qui minimise |résidu| à décisions fixées"""
        target = self.load(bits) - self.slack_offset
        return int(min(max(np.rint(target), 0), self.max_slack))

    def slack_bits(self, value: int) -> Tuple[int, ...]:
        """Décomposition binaire de S sur les K bits d'écart (poids faible d'abord)"""
        if not 0 <= value <= self.max_slack:
            raise QuDashError(f"Écart {value} hors de [0, {self.max_slack}]")
        return tuple((int(value) >> k) & 1 for k in range(self.K))


class QuboProblem:
    """
    Forme quadratique f(x) = offset + Σ_{i<=j} coeffs[i,j]·x_i·x_j sur x ∈ {0,1}^N

    Les entrées diagonales (i, i) jouent le rôle de termes linéaires (x² = x).
    Un problème construit n'est plus modifié : il peut être partagé en lecture
    par plusieurs répliques du recuit.
    """

    def __init__(self, num_vars: int = 0, offset: float = 0.0):
        """
        Initialise un problème vide

        Args:
            num_vars: Nombre de variables binaires N_v
            offset: Constante ajoutée à toutes les énergies
        """
        if num_vars < 0:
            raise QuDashError(f"num_vars doit être >= 0 (reçu {num_vars})")
        self.num_vars = num_vars
        self.offset = float(offset)
        self.coeffs: Dict[Tuple[int, int], float] = {}
        # voisins hors diagonale : k -> {i: coeff(i, k)}
        self._neighbors: Dict[int, Dict[int, float]] = {}
        # structure des contraintes, exploitée par le recuit contraint
        self.one_hot_groups: List[Tuple[int, ...]] = []
        self.slack_blocks: List[SlackEncoding] = []

    # --- construction ---

    def add_variables(self, count: int) -> List[int]:
        """
        Ajoute des variables fraîches

        Args:
            count: Nombre de variables à ajouter

        Returns:
            Liste des indices créés
        """
        start = self.num_vars
        self.num_vars += count
        return list(range(start, start + count))

    def add_term(self, i: int, j: int, coeff: float) -> "QuboProblem":
        """
        Accumule un coefficient sur (min(i,j), max(i,j))

        Args:
            i, j: Indices de variables
            coeff: Coefficient réel fini

        Returns:
            Le problème lui-même (chaînage)
        """
        for idx in (i, j):
            if not 0 <= idx < self.num_vars:
                raise QuboIndexError(idx, self.num_vars)
        if not math.isfinite(coeff):
            raise QuDashError(f"Coefficient non fini sur ({i}, {j}) : {coeff}")

        key = (min(i, j), max(i, j))
        self.coeffs[key] = self.coeffs.get(key, 0.0) + coeff
        if key[0] != key[1]:
            a, b = key
            self._neighbors.setdefault(a, {})[b] = self.coeffs[key]
            self._neighbors.setdefault(b, {})[a] = self.coeffs[key]
        return self

    def add_constant(self, value: float) -> "QuboProblem":
        """Ajoute une constante à l'offset"""
        self.offset += value
        return self

    def add_squared_linear(self, terms: Iterable[Tuple[int, float]], constant: float,
                           weight: float) -> "QuboProblem":
        """
        Ajoute weight·(Σ a_v·x_v + constant)² développé symboliquement

        Les termes croisés valent 2·a_u·a_v, les carrés a_v²·x_v (x² = x).

        Args:
            terms: Paires (indice, coefficient a_v) ; les doublons sont fusionnés
            constant: Terme constant de l'expression
            weight: Poids du terme carré
        """
        merged: Dict[int, float] = {}
        for idx, a in terms:
            merged[idx] = merged.get(idx, 0.0) + a
        items = sorted((idx, a) for idx, a in merged.items() if a != 0.0)

        for pos, (u, a_u) in enumerate(items):
            self.add_term(u, u, weight * (a_u * a_u + 2.0 * constant * a_u))
            for v, a_v in items[pos + 1:]:
                self.add_term(u, v, weight * 2.0 * a_u * a_v)
        self.offset += weight * constant * constant
        return self

    def add_less_than(self, indices: Sequence[int], weights: Sequence[float], bound: float,
                      penalty: float) -> SlackEncoding:
        """
        Encode Σ w·x < U par des bits d'écart propres à cette contrainte

        Ajoute penalty·(Σ_k 2^k·y_k − 2^K + 1 + U − Σ w·x)².

        Args:
            indices: Variables de décision portant les poids
            weights: Poids w >= 0
            bound: Borne U > 0
            penalty: Coefficient de pénalité > 0

        Returns:
            SlackEncoding avec les indices des bits d'écart créés
        """
        if len(indices) != len(weights):
            raise QuDashError("indices et weights doivent avoir la même longueur")
        _validate_less_than(weights, bound, penalty)

        k = slack_count(bound)
        slack_indices = self.add_variables(k)
        slack_offset = -(2 ** k - 1) + bound

        terms = [(idx, float(2 ** pos)) for pos, idx in enumerate(slack_indices)]
        terms += [(idx, -float(w)) for idx, w in zip(indices, weights)]
        self.add_squared_linear(terms, slack_offset, penalty)

        encoding = SlackEncoding(
            K=k,
            slack_offset=slack_offset,
            weights=tuple(float(w) for w in weights),
            bound=float(bound),
            penalty=float(penalty),
            decision_indices=tuple(indices),
            slack_indices=tuple(slack_indices),
        )
        self.slack_blocks.append(encoding)
        return encoding

    def add_one_hot(self, indices: Sequence[int], penalty: float) -> "QuboProblem":
        """
        Ajoute penalty·(Σ x − 1)² et déclare le groupe « exactement un »

        Raises:
            QuDashError: groupe vide, indice répété ou déjà pris dans un groupe
        """
        group = tuple(int(i) for i in indices)
        if not group or len(set(group)) != len(group):
            raise QuDashError(f"Groupe one-hot invalide : {group}")
        taken = {i for g in self.one_hot_groups for i in g}
        if taken.intersection(group):
            raise QuDashError(f"Variables déjà dans un groupe one-hot : {sorted(taken.intersection(group))}")
        self.add_squared_linear([(i, 1.0) for i in group], -1.0, penalty)
        self.one_hot_groups.append(group)
        return self

    @property
    def has_constraint_structure(self) -> bool:
        return bool(self.one_hot_groups or self.slack_blocks)

    # --- évaluation ---

    def validate_assignment(self, x: Assignment) -> List[int]:
        """
        Vérifie une affectation et la normalise en liste d'entiers 0/1

        Raises:
            AssignmentError: longueur ou valeur invalide
        """
        if len(x) != self.num_vars:
            raise AssignmentError(
                f"Longueur d'affectation {len(x)} différente de num_vars={self.num_vars}"
            )
        bits = [int(v) for v in x]
        for pos, (raw, bit) in enumerate(zip(x, bits)):
            if bit not in (0, 1) or raw != bit:
                raise AssignmentError(f"Valeur non binaire {raw!r} à la position {pos}")
        return bits

    def energy(self, x: Assignment) -> float:
        """
        Énergie offset + Σ coeffs[i,j]·x_i·x_j

        Args:
            x: Affectation binaire de longueur num_vars

        Returns:
            Énergie (ordre de sommation fixe : clés triées)
        """
        bits = self.validate_assignment(x)
        total = self.offset
        for (i, j), c in sorted(self.coeffs.items()):
            if bits[i] and bits[j]:
                total += c
        return total

    def local_field(self, x: Assignment, k: int) -> float:
        """coeffs[k,k] + Σ_{i≠k} coeff(i,k)·x_i"""
        value = self.coeffs.get((k, k), 0.0)
        for i, c in sorted(self._neighbors.get(k, {}).items()):
            if x[i]:
                value += c
        return value

    def delta_energy(self, x: Assignment, k: int) -> float:
        """
        Variation d'énergie provoquée par le flip de x_k

        Forme fermée (1 − 2·x_k)·(coeffs[k,k] + Σ_{i≠k} coeff(i,k)·x_i),
        sans réévaluation complète.
        """
        if not 0 <= k < self.num_vars:
            raise QuboIndexError(k, self.num_vars)
        bits = self.validate_assignment(x)
        return (1 - 2 * bits[k]) * self.local_field(bits, k)

    def upper_matrix(self) -> np.ndarray:
        """Matrice triangulaire supérieure dense (diagonale = termes linéaires)"""
        q = np.zeros((self.num_vars, self.num_vars))
        for (i, j), c in self.coeffs.items():
            q[i, j] = c
        return q

    # --- conversions ---

    def to_ising(self) -> "IsingModel":
        """Conversion exacte vers la forme de spins σ = 2x − 1"""
        return qubo_to_ising(self)

    def to_da_form(self, symmetric: bool = False) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Coefficients de l'énergie du recuit numérique

        E(x) = offset − Σ W_ij·x_i·x_j − Σ b_i·x_i avec W_ij = −coeffs[i,j]
        (i < j, ou moitié de chaque côté si symmetric) et b_i = −coeffs[i,i].

        Returns:
            (W, b, offset)
        """
        w = np.zeros((self.num_vars, self.num_vars))
        b = np.zeros(self.num_vars)
        for (i, j), c in self.coeffs.items():
            if i == j:
                b[i] = -c
            elif symmetric:
                w[i, j] = -c / 2.0
                w[j, i] = -c / 2.0
            else:
                w[i, j] = -c
        return w, b, self.offset

    @classmethod
    def from_da_form(cls, w: np.ndarray, b: np.ndarray, offset: float = 0.0) -> "QuboProblem":
        """Reconstruit un QUBO depuis (W, b, offset) ; W peut être triangulaire ou symétrique"""
        n = len(b)
        problem = cls(n, offset)
        for i in range(n):
            linear = -float(b[i]) - float(w[i][i])
            if linear != 0.0:
                problem.add_term(i, i, linear)
            for j in range(i + 1, n):
                c = -(float(w[i][j]) + float(w[j][i]))
                if c != 0.0:
                    problem.add_term(i, j, c)
        return problem

    def to_dict(self) -> dict:
        """Export de débogage {num_vars, offset, terms} trié lexicographiquement"""
        return {
            "num_vars": self.num_vars,
            "offset": self.offset,
            "terms": [[i, j, c] for (i, j), c in sorted(self.coeffs.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "QuboProblem":
        problem = cls(int(data["num_vars"]), float(data.get("offset", 0.0)))
        for i, j, c in data.get("terms", []):
            problem.add_term(int(i), int(j), float(c))
        return problem

    def __repr__(self) -> str:
        return f"QuboProblem(num_vars={self.num_vars}, terms={len(self.coeffs)}, offset={self.offset})"


class IsingModel:
    """Modèle d'Ising H(σ) = offset − Σ J_ij·σ_i·σ_j − Σ h_i·σ_i, σ ∈ {−1, +1}"""

    def __init__(self, num_spins: int, couplings: Optional[Dict[Tuple[int, int], float]] = None,
                 fields: Optional[List[float]] = None, offset: float = 0.0):
        self.num_spins = num_spins
        self.couplings: Dict[Tuple[int, int], float] = dict(couplings or {})
        self.fields: List[float] = list(fields) if fields is not None else [0.0] * num_spins
        self.offset = offset

    def energy(self, spins: Sequence[int]) -> float:
        """Énergie d'une configuration de spins"""
        if len(spins) != self.num_spins:
            raise AssignmentError(
                f"Longueur de configuration {len(spins)} différente de num_spins={self.num_spins}"
            )
        for pos, s in enumerate(spins):
            if s not in (-1, 1):
                raise AssignmentError(f"Spin {s!r} invalide à la position {pos}")
        total = self.offset
        for (i, j), coupling in sorted(self.couplings.items()):
            total -= coupling * spins[i] * spins[j]
        for i, h in enumerate(self.fields):
            total -= h * spins[i]
        return total


def new_problem(num_vars: int) -> QuboProblem:
    """Problème vide à num_vars variables"""
    return QuboProblem(num_vars)


def add_term(problem: QuboProblem, i: int, j: int, coeff: float) -> QuboProblem:
    """Accumule coeff sur (min(i,j), max(i,j))"""
    return problem.add_term(i, j, coeff)


def energy(problem: QuboProblem, x: Assignment) -> float:
    return problem.energy(x)


def delta_energy(problem: QuboProblem, x: Assignment, k: int) -> float:
    return problem.delta_energy(x, k)


def qubo_to_ising(problem: QuboProblem) -> IsingModel:
    """
    Conversion QUBO -> Ising par x = (σ + 1) / 2

    J_ij = −c_ij / 4, h_i = −(c_ii / 2 + Σ_{j≠i} c_ij / 4),
    offset' = offset + Σ c_ii / 2 + Σ_{i<j} c_ij / 4.
    """
    fields = [0.0] * problem.num_vars
    couplings: Dict[Tuple[int, int], float] = {}
    offset = problem.offset

    for (i, j), c in sorted(problem.coeffs.items()):
        if i == j:
            fields[i] -= c / 2.0
            offset += c / 2.0
        else:
            couplings[(i, j)] = -c / 4.0
            fields[i] -= c / 4.0
            fields[j] -= c / 4.0
            offset += c / 4.0

    return IsingModel(problem.num_vars, couplings, fields, offset)


def ising_to_qubo(model: IsingModel) -> QuboProblem:
    """Conversion inverse par σ = 2x − 1"""
    problem = QuboProblem(model.num_spins, model.offset)
    for (i, j), coupling in sorted(model.couplings.items()):
        # −J·(4·x_i·x_j − 2·x_i − 2·x_j + 1)
        problem.add_term(i, j, -4.0 * coupling)
        problem.add_term(i, i, 2.0 * coupling)
        problem.add_term(j, j, 2.0 * coupling)
        problem.add_constant(-coupling)
    for i, h in enumerate(model.fields):
        if h != 0.0:
            # −h·(2·x_i − 1)
            problem.add_term(i, i, -2.0 * h)
            problem.add_constant(h)
    return problem


def _validate_less_than(weights: Sequence[float], bound: float, penalty: float):
    if not math.isfinite(bound) or bound <= 0:
        raise InfeasibleBoundError(bound)
    if not math.isfinite(penalty) or penalty <= 0:
        raise QuDashError(f"La pénalité doit être > 0 (reçu {penalty})")
    for w in weights:
        if not math.isfinite(w) or w < 0:
            raise QuDashError(f"Poids invalide {w} : attendu fini et >= 0")


def encode_less_than(weights: Sequence[float], bound: float,
                     penalty: float) -> Tuple[SlackEncoding, QuboProblem]:
    """
    Encode Σ w·x < U comme terme QUBO autonome

    Les variables de décision occupent les indices 0..len(weights)−1,
    les K bits d'écart les indices suivants.

    Args:
        weights: Poids w par variable de décision
        bound: Borne U (secondes)
        penalty: Coefficient de pénalité

    Returns:
        (SlackEncoding, terme QUBO)
    """
    _validate_less_than(weights, bound, penalty)
    term = QuboProblem(len(weights))
    encoding = term.add_less_than(list(range(len(weights))), weights, bound, penalty)
    return encoding, term
