"""Simulated annealing for dense QUBOs with cached local fields.

Each read restarts from a uniform random bit state and performs
``num_sweeps`` Metropolis sweeps; a sweep proposes one flip per variable
in a fresh random permutation.  The inverse temperature follows a
geometric schedule from beta_min to beta_max.  The flip cost is O(1)
through the cached local field h_i = q_i + Q_ii + 2 sum_{j != i} Q_ij b_j,
so flipping variable i changes the energy by (1 - 2 b_i) h_i; an accepted
flip updates all fields in O(n).

Results are deterministic in (problem, config): read r reseeds from a
child of the config seed, so reads could run in any order or in parallel
without changing the returned sample.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from gramqubo.qubo import QuboProblem, Sample, evaluate


@dataclass(frozen=True)
class AnnealConfig:
    num_sweeps: int = 1000
    num_reads: int = 1
    beta_min: float = 0.01
    beta_max: float = 3.0
    seed: int = 0

    def validate(self) -> None:
        if self.num_sweeps < 1:
            raise ValueError(f"num_sweeps must be >= 1, got {self.num_sweeps}")
        if self.num_reads < 1:
            raise ValueError(f"num_reads must be >= 1, got {self.num_reads}")
        if not (0 < self.beta_min < self.beta_max):
            raise ValueError(
                f"need 0 < beta_min < beta_max, got ({self.beta_min}, {self.beta_max})"
            )


class LocalFieldState:
    """Incremental energy bookkeeping for one bit state of a QUBO.

    Reference implementation of the field cache used by the compiled
    annealing kernel; kept in plain numpy so tests can compare cached
    values against from-scratch recomputation.
    """

    def __init__(self, problem: QuboProblem, bits: np.ndarray):
        self.problem = problem
        self.bits = np.asarray(bits, dtype=np.uint8).copy()
        if self.bits.shape != (problem.n,):
            raise ValueError(f"expected {problem.n} bits, got {self.bits.shape}")
        b = self.bits.astype(np.float64)
        diag = np.diag(problem.Q)
        # h_i = q_i + Q_ii + 2 sum_{j != i} Q_ij b_j; independent of b_i
        self.fields = problem.q + diag + 2.0 * (problem.Q @ b - diag * b)
        self.energy = float(b @ problem.Q @ b + problem.q @ b)

    def flip_delta(self, i: int) -> float:
        """Energy change of flipping bit i, in O(1)."""
        return float((1.0 - 2.0 * self.bits[i]) * self.fields[i])

    def apply_flip(self, i: int) -> None:
        """Flip bit i and refresh energy and all fields in O(n)."""
        sgn = 1.0 - 2.0 * self.bits[i]
        self.energy += sgn * self.fields[i]
        self.bits[i] ^= 1
        self.fields += 2.0 * sgn * self.problem.Q[i]
        self.fields[i] -= 2.0 * sgn * self.problem.Q[i, i]


def flip_delta(state: LocalFieldState, i: int) -> float:
    """Energy change of flipping bit i of ``state``."""
    return state.flip_delta(i)


def anneal(problem: QuboProblem, cfg: AnnealConfig) -> Sample:
    """Run simulated annealing and return the best state seen.

    The best-so-far state is tracked across the whole trajectory of all
    reads, not just final states.  The returned energy is recomputed
    exactly for the winning bits (offset excluded).
    """
    sample, _ = anneal_with_read_energies(problem, cfg)
    return sample


def anneal_with_read_energies(
    problem: QuboProblem, cfg: AnnealConfig
) -> tuple[Sample, np.ndarray]:
    """Like :func:`anneal` but also returns each read's best energy."""
    cfg.validate()
    if problem.n < 1:
        raise ValueError("problem must have at least one variable")
    betas = np.geomspace(cfg.beta_min, cfg.beta_max, cfg.num_sweeps)
    # one independent child seed per read: results do not depend on the
    # order in which reads execute
    read_seeds = np.random.SeedSequence(cfg.seed).generate_state(cfg.num_reads)
    bits, _, read_best = _anneal_kernel(
        np.ascontiguousarray(problem.Q, dtype=np.float64),
        np.ascontiguousarray(problem.q, dtype=np.float64),
        betas,
        read_seeds,
        cfg.num_sweeps,
    )
    return Sample(bits=bits, energy=evaluate(problem, bits)), read_best


@njit(cache=True, nogil=True)
def _anneal_kernel(Q, q, betas, read_seeds, num_sweeps):
    n = q.shape[0]
    best_energy = np.inf
    best_bits = np.zeros(n, np.uint8)
    read_best = np.empty(read_seeds.shape[0])
    for read in range(read_seeds.shape[0]):
        np.random.seed(read_seeds[read])
        bits = np.empty(n, np.uint8)
        for i in range(n):
            bits[i] = 1 if np.random.random() < 0.5 else 0
        fields = np.empty(n)
        energy = 0.0
        for i in range(n):
            acc = q[i] + Q[i, i]
            row_e = 0.0
            for j in range(n):
                if bits[j]:
                    row_e += Q[i, j]
                    if j != i:
                        acc += 2.0 * Q[i, j]
            fields[i] = acc
            if bits[i]:
                energy += q[i] + row_e
        read_energy = energy
        if energy < best_energy:
            best_energy = energy
            best_bits = bits.copy()
        perm = np.arange(n)
        for s in range(num_sweeps):
            beta = betas[s]
            np.random.shuffle(perm)
            for t in range(n):
                i = perm[t]
                sgn = 1.0 - 2.0 * bits[i]
                delta = sgn * fields[i]
                if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                    bits[i] = 1 - bits[i]
                    energy += delta
                    for j in range(n):
                        fields[j] += 2.0 * sgn * Q[i, j]
                    fields[i] -= 2.0 * sgn * Q[i, i]
                    if energy < read_energy:
                        read_energy = energy
                    if energy < best_energy:
                        best_energy = energy
                        best_bits = bits.copy()
        read_best[read] = read_energy
    return best_bits, best_energy, read_best
