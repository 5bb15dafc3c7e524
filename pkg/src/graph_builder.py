"""
Graphe d'interaction d'un problème QUBO avec NetworkX
Nœuds = variables (coefficient linéaire), arêtes = couplages quadratiques
"""

import networkx as nx
import numpy as np

from src.qubo import QuboProblem


class InteractionGraphBuilder:
    """Construit le graphe d'interaction et en dérive les matrices du recuit"""

    def __init__(self):
        """Initialise le graphe"""
        self.graph = nx.Graph()

    def build_graph(self, problem: QuboProblem) -> nx.Graph:
        """
        Construit le graphe d'interaction

        Args:
            problem: Problème QUBO

        Returns:
            Graphe NetworkX non orienté
        """
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(problem.num_vars), linear=0.0)

        for (i, j), c in sorted(problem.coeffs.items()):
            if i == j:
                self.graph.nodes[i]["linear"] = c
            elif c != 0.0:
                self.graph.add_edge(i, j, coeff=c, strength=abs(c))

        return self.graph

    def coupling_matrix(self) -> np.ndarray:
        """
        Matrice symétrique S avec S[i,j] = coeff(min(i,j), max(i,j)), diagonale nulle

        Returns:
            Tableau (N, N)
        """
        n = self.graph.number_of_nodes()
        if n == 0:
            return np.zeros((0, 0))
        return nx.to_numpy_array(self.graph, nodelist=range(n), weight="coeff", nonedge=0.0)

    def linear_vector(self) -> np.ndarray:
        """Coefficients diagonaux coeffs[k,k]"""
        n = self.graph.number_of_nodes()
        return np.array([self.graph.nodes[k]["linear"] for k in range(n)], dtype=float)

    def max_field_bound(self) -> float:
        """
        Borne max_k |coeffs[k,k]| + Σ_i |coeff(i,k)|

        Sert de température initiale par défaut : à cette température
        presque tous les flips sont acceptés.
        """
        best = 0.0
        for node, linear in self.graph.nodes(data="linear"):
            bound = abs(linear) + self.graph.degree(node, weight="strength")
            best = max(best, bound)
        return best

    def get_graph_info(self) -> dict:
        """
        Retourne des informations sur le graphe

        Returns:
            Dictionnaire avec les statistiques du graphe
        """
        num_nodes = self.graph.number_of_nodes()
        return {
            "nodes": num_nodes,
            "edges": self.graph.number_of_edges(),
            "density": nx.density(self.graph) if num_nodes > 1 else 0.0,
            "components": nx.number_connected_components(self.graph) if num_nodes else 0,
        }
