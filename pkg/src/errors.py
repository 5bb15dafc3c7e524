"""
Hiérarchie d'exceptions du simulateur
Chaque erreur porte un message lisible qui nomme la valeur fautive
"""

from typing import List, Optional


class QuDashError(Exception):
    """Erreur de base de toute la boîte à outils"""


class QuboIndexError(QuDashError):
    """Indice de variable hors de [0, num_vars)"""

    def __init__(self, index: int, num_vars: int):
        super().__init__(f"Indice de variable {index} hors limites (num_vars={num_vars})")
        self.index = index
        self.num_vars = num_vars


class AssignmentError(QuDashError):
    """Affectation binaire invalide (longueur ou valeurs)"""


class InfeasibleBoundError(QuDashError):
    """Borne d'inégalité U <= 0 : aucune affectation ne peut la satisfaire"""

    def __init__(self, bound: float, what: str = "borne"):
        super().__init__(f"{what} infaisable : U={bound} (doit être > 0)")
        self.bound = bound


class AnnealConfigError(QuDashError):
    """Paramètres de recuit incohérents"""


class ProblemTooLargeError(QuDashError):
    """Trop de variables pour l'énumération exhaustive"""


class ConstraintStructureError(QuDashError):
    """Groupes one-hot et bits d'écart qui se chevauchent"""


class PredictionError(QuDashError):
    """Débit prédit absent ou non positif"""


class TraceFormatError(QuDashError):
    """Fichier de trace mal formé"""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        location = ""
        if path:
            location += f"{path}"
        if line is not None:
            location += f" (ligne {line})" if location else f"ligne {line}"
        super().__init__(f"{location} : {message}" if location else message)
        self.line = line
        self.path = path


class TraceExhaustedError(QuDashError):
    """Trace épuisée sans bouclage autorisé"""


class EmptyRecordsError(QuDashError):
    """Aucun segment à évaluer"""


class SessionError(QuDashError):
    """Échec d'une session ; les enregistrements déjà produits sont conservés"""

    def __init__(self, message: str, records: Optional[List] = None):
        super().__init__(message)
        self.records = list(records or [])


class ConfigError(QuDashError):
    """Configuration d'expérience invalide"""
