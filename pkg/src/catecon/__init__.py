"""Local optimisation problems, games and polynomial interfaces, with executable law checks."""
from .equilibria import Concept, EquilibriumSet, combine_equilibria, pure_nash
from .games import Combinator, Game, amalgamate, coproduct, load_game
from .org import embed_game, embed_problem, load_library, mech_design
from .poly import Coalgebra, Poly, PolyMorphism, coalg_run, internal_hom, poly_compose, poly_tensor
from .principal_agent import PAProblem, pa_inverse, pa_solve
from .problems import LocalProblem, load_problem, solve_problem
from .report import Report

__version__ = "0.1.0"
