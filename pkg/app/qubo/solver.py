import logging
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt, model_validator

from app.exceptions import ContractViolation
from app.qubo.matrix import BitVector, QuboMatrix, bits_to_int, energy

logger = logging.getLogger(__name__)

SWEEPS_PER_VARIABLE = 100


class AnnealParams(BaseModel):
    """Simulated annealing schedule.

    `initial_temperature` and `sweeps` may be left as None ("auto"); they are
    filled per instance by `resolve` as max |Q_ij| and 100·n.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_temperature: Optional[PositiveFloat] = None
    final_temperature: PositiveFloat = 1e-3
    sweeps: Optional[PositiveInt] = None
    restarts: PositiveInt = 4
    seed: int = 0

    @model_validator(mode="after")
    def _check_endpoints(self):
        if self.initial_temperature is not None and self.final_temperature >= self.initial_temperature:
            raise ValueError("final_temperature must be below initial_temperature")
        return self

    def resolve(self, q: QuboMatrix) -> "AnnealParams":
        t0 = self.initial_temperature
        if t0 is None:
            # an all-zero instance has no scale; anneal over one decade instead
            t0 = max(q.max_abs(), 10.0 * self.final_temperature)
        sweeps = self.sweeps if self.sweeps is not None else SWEEPS_PER_VARIABLE * q.n
        return self.model_copy(update={"initial_temperature": t0, "sweeps": sweeps})


def _cooling(t0: float, t1: float, sweeps: int) -> float:
    if sweeps <= 1:
        return 1.0
    return (t1 / t0) ** (1.0 / (sweeps - 1))


def solve_sa(q: QuboMatrix, p: AnnealParams) -> BitVector:
    return solve_sa_batch([q], p)[0]


def solve_sa_batch(qs: Sequence[QuboMatrix], p: AnnealParams) -> List[BitVector]:
    """Anneal several same-size instances in lockstep.

    One chain per (restart, instance). Restart r draws its start state and its
    per-sweep uniforms from default_rng([seed, r]) regardless of the batch, so
    each result equals what a single-instance call returns.
    Single-flip Metropolis over sequential sweeps, geometric cooling,
    O(n) incremental delta per flip.
    """
    if not qs:
        return []
    n = qs[0].n
    if any(q.n != n for q in qs):
        raise ContractViolation("batched instances must share the same size")

    resolved = [p.resolve(q) for q in qs]
    sweeps = resolved[0].sweeps
    R, B = p.restarts, len(qs)

    Q = np.stack([q.coeffs for q in qs])                       # (B, n, n)
    diag = np.stack([np.diag(q.coeffs) for q in qs])           # (B, n)
    t0 = np.array([r.initial_temperature for r in resolved])   # (B,)
    ratio = np.array([_cooling(r.initial_temperature, p.final_temperature, sweeps) for r in resolved])

    gens = [np.random.default_rng([p.seed, r]) for r in range(R)]
    starts = np.stack([g.integers(0, 2, size=n) for g in gens]).astype(np.float64)  # (R, n)

    X = np.repeat(starts[:, None, :], B, axis=1)               # (R, B, n)
    Qx = np.empty_like(X)
    for b in range(B):
        Qx[:, b, :] = X[:, b, :] @ Q[b]
    E = np.einsum("rbi,rbi->rb", X, Qx)

    best_X = X.copy()
    best_E = E.copy()

    for sweep in range(sweeps):
        U = np.stack([g.random(n) for g in gens])             # (R, n)
        T = t0 * ratio ** sweep                                # (B,)

        for i in range(n):
            s = 1.0 - 2.0 * X[:, :, i]
            dE = diag[None, :, i] + 2.0 * s * Qx[:, :, i]
            threshold = np.exp(-np.maximum(dE, 0.0) / T[None, :])
            accept = (dE <= 0.0) | (U[:, i][:, None] < threshold)
            if not accept.any():
                continue

            step = s * accept
            X[:, :, i] += step
            Qx += step[:, :, None] * Q[None, :, :, i]
            E += dE * accept

            improved = E < best_E
            if improved.any():
                best_E = np.where(improved, E, best_E)
                best_X[improved] = X[improved]

    results = []
    for b, q in enumerate(qs):
        candidates = [best_X[r, b].astype(np.int8) for r in range(R)]
        energies = [energy(q, x) for x in candidates]
        e_min = min(energies)
        tol = 1e-9 * max(1.0, abs(e_min))
        tied = [x for e, x in zip(energies, candidates) if e <= e_min + tol]
        results.append(min(tied, key=bits_to_int))

    logger.debug(f"annealed {B} instance(s) of size {n}: {R} restarts x {sweeps} sweeps")
    return results
