from app.qubo.matrix import QuboMatrix, energy, solve_exact
from app.qubo.solver import AnnealParams, solve_sa, solve_sa_batch

__all__ = ["QuboMatrix", "energy", "solve_exact", "AnnealParams", "solve_sa", "solve_sa_batch"]
