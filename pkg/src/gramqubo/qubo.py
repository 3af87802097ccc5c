"""Dense per-class QUBO assembly, normalization, evaluation, and oracles.

A problem is minimize E(b) = b^T Q b + q^T b over binary b, with Q stored
symmetric so both (i, j) and (j, i) contribute to the energy.  Head QUBOs
are built from the regularized Gram matrix and a per-class gradient via
the Kronecker structure Q = 4 (G_lambda kron p p^T), which follows from
the encoding matrix P = I kron p^T.  The constant part of the surrogate
is kept in ``offset`` so tests can assert the affine relation between
QUBO energies and the continuous quadratic model.
"""

from dataclasses import dataclass, replace

import numpy as np

from gramqubo.encoding import PrecisionVector

BRUTE_FORCE_MAX_VARS = 24


@dataclass(frozen=True)
class QuboProblem:
    """Dense QUBO: minimize b^T Q b + q^T b (+ offset) over binary b."""

    n: int
    Q: np.ndarray
    q: np.ndarray
    offset: float = 0.0
    scale: float = 1.0


@dataclass(frozen=True)
class Sample:
    """A bit assignment and its energy on the problem's current scale."""

    bits: np.ndarray
    energy: float


def build_class_qubo(
    G_lambda: np.ndarray,
    g_c: np.ndarray,
    p: PrecisionVector,
    diagonal_mode: bool = False,
) -> QuboProblem:
    """Assemble the unnormalized QUBO for one class head update.

    Q = 4 P^T G_lambda P and q = 4 P^T (g_c - delta_max G_lambda 1), with
    P = I kron p^T, so Q depends only on the shared curvature and is
    identical for every class while q carries the class gradient.  With
    ``diagonal_mode`` the off-diagonal entries of G_lambda are zeroed
    first, giving a separable block-diagonal problem.
    """
    G_lambda = np.asarray(G_lambda, dtype=np.float64)
    g_c = np.asarray(g_c, dtype=np.float64)
    m = G_lambda.shape[0]
    if G_lambda.shape != (m, m) or g_c.shape != (m,):
        raise ValueError(
            f"shape mismatch: G_lambda {G_lambda.shape}, gradient {g_c.shape}"
        )
    if diagonal_mode:
        G_lambda = np.diag(np.diag(G_lambda))
    delta = p.delta_max
    ones = np.ones(m)
    ppT = np.outer(p.p, p.p)
    Q = 4.0 * np.kron(G_lambda, ppT)
    v = g_c - delta * (G_lambda @ ones)
    q = 4.0 * np.kron(v, p.p)
    offset = 0.5 * delta**2 * (ones @ G_lambda @ ones) - delta * (g_c @ ones)
    return QuboProblem(n=m * p.bits, Q=Q, q=q, offset=float(offset))


def normalize(problem: QuboProblem) -> QuboProblem:
    """Divide all coefficients by the maximum absolute coefficient.

    The divisor is recorded in ``scale`` (composed with any existing
    scale) so energies can be mapped back.  A problem whose coefficients
    are all zero is returned unchanged.
    """
    s = max(np.abs(problem.Q).max(initial=0.0), np.abs(problem.q).max(initial=0.0))
    if s == 0.0:
        return problem
    return replace(
        problem,
        Q=problem.Q / s,
        q=problem.q / s,
        offset=problem.offset / s,
        scale=problem.scale * s,
    )


def evaluate(problem: QuboProblem, bits: np.ndarray) -> float:
    """Energy b^T Q b + q^T b of a bit assignment (offset excluded)."""
    b = _as_bits(problem, bits)
    return float(b @ problem.Q @ b + problem.q @ b)


def evaluate_with_offset(problem: QuboProblem, bits: np.ndarray) -> float:
    """Energy including the constant term, on the problem's current scale."""
    return evaluate(problem, bits) + problem.offset


def brute_force_min(problem: QuboProblem, chunk: int = 1 << 16) -> Sample:
    """Exhaustive global minimizer for small problems (n <= 24).

    Bit i of the enumeration integer is variable i, so ties resolve to
    the lowest bit-pattern integer.
    """
    n = problem.n
    if n > BRUTE_FORCE_MAX_VARS:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_VARS}, got {n}")
    shifts = np.arange(n, dtype=np.uint32)
    best_energy = np.inf
    best_index = 0
    for start in range(0, 1 << n, chunk):
        stop = min(start + chunk, 1 << n)
        codes = np.arange(start, stop, dtype=np.uint32)
        B = ((codes[:, None] >> shifts) & 1).astype(np.float64)
        energies = np.einsum("ij,jk,ik->i", B, problem.Q, B) + B @ problem.q
        k = int(np.argmin(energies))
        if energies[k] < best_energy:
            best_energy = float(energies[k])
            best_index = start + k
    bits = ((best_index >> shifts) & 1).astype(np.uint8)
    return Sample(bits=bits, energy=best_energy)


def write_qubo_file(problem: QuboProblem, path) -> None:
    """Serialize a problem in the solver text format.

    First line is n; each following line ``i j v`` gives the linear
    coefficient when i == j (diagonal quadratic terms are folded in,
    since b^2 = b) and the unordered pair coefficient when i < j.  The
    constant offset is not representable in this format.
    """
    with open(path, "w") as fh:
        fh.write(f"{problem.n}\n")
        for i in range(problem.n):
            v = float(problem.q[i] + problem.Q[i, i])
            if v != 0.0:
                fh.write(f"{i} {i} {v!r}\n")
        for i in range(problem.n):
            for j in range(i + 1, problem.n):
                v = float(problem.Q[i, j] + problem.Q[j, i])
                if v != 0.0:
                    fh.write(f"{i} {j} {v!r}\n")


def read_qubo_file(path) -> QuboProblem:
    """Parse the solver text format; raises ValueError naming bad lines."""
    n = None
    Q = None
    q = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if n is None:
                try:
                    n = int(line)
                except ValueError:
                    raise ValueError(f"line {lineno}: expected variable count, got {line!r}")
                if n < 1:
                    raise ValueError(f"line {lineno}: variable count must be >= 1")
                Q = np.zeros((n, n))
                q = np.zeros(n)
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'i j v', got {line!r}")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(f"line {lineno}: could not parse 'i j v' from {line!r}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"line {lineno}: index out of range for n={n}")
            if i > j:
                raise ValueError(f"line {lineno}: expected i <= j, got {i} > {j}")
            if i == j:
                q[i] += v
            else:
                Q[i, j] += v / 2.0
                Q[j, i] += v / 2.0
    if n is None:
        raise ValueError("empty QUBO file")
    return QuboProblem(n=n, Q=Q, q=q)


def _as_bits(problem: QuboProblem, bits: np.ndarray) -> np.ndarray:
    b = np.asarray(bits, dtype=np.float64)
    if b.shape != (problem.n,):
        raise ValueError(f"expected {problem.n} bits, got shape {b.shape}")
    return b
