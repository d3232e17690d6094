"""Random problem generators shared by the test modules."""

import numpy as np

from ltvprop.coeff import CoeffMatrix


def poly_text(rng: np.random.Generator, degree: int = 2, scale: float = 1.0) -> str:
    c = rng.uniform(-scale, scale, degree + 1)
    return " + ".join(f"({float(c[k])!r})*x^{k}" for k in range(degree + 1))


def random_polynomial(rng, rows, cols, domain=(0.0, 1.0), degree=2, scale=1.0) -> CoeffMatrix:
    """Entries are polynomials of the given degree with coefficients in [-scale, scale]."""
    return CoeffMatrix.from_text([[poly_text(rng, degree, scale) for _ in range(cols)] for _ in range(rows)], domain)


def random_constant(rng, n, domain=(0.0, 1.0)):
    A = rng.uniform(-1, 1, (n, n))
    return A, CoeffMatrix.from_text([[repr(float(v)) for v in row] for row in A], domain)


def random_riccati(rng, n, m, grid, scale=0.5, w0_scale=0.5, zero_q=False, zero_w0=False):
    from ltvprop.solvers import RiccatiProblem

    d = (grid.x_lo, grid.x_hi)
    A = random_polynomial(rng, n, n, d, scale=scale)
    B = random_polynomial(rng, m, m, d, scale=scale)
    P = random_polynomial(rng, m, n, d, scale=scale)
    Q = CoeffMatrix.zeros(n, m, d) if zero_q else random_polynomial(rng, n, m, d, scale=scale)
    W0 = np.zeros((n, m)) if zero_w0 else rng.uniform(-w0_scale, w0_scale, (n, m))
    return RiccatiProblem(A, B, P, Q, W0, grid)


def riccati_suite(seed, count, grid, max_size=5, **kwargs):
    """``count`` random problems with n + m <= max_size and no blow-up on the grid."""
    from ltvprop.solvers import solve_riccati_block_E

    rng = np.random.default_rng(seed)
    problems = []
    while len(problems) < count:
        n = int(rng.integers(1, max_size))
        m = int(rng.integers(1, max_size - n + 1))
        p = random_riccati(rng, n, m, grid, **kwargs)
        if solve_riccati_block_E(p)[0].blow_up_node is None:
            problems.append(p)
    return problems


def random_linear(rng, n, grid, scale=1.0):
    from ltvprop.solvers import LinearIvp

    d = (grid.x_lo, grid.x_hi)
    return LinearIvp(
        random_polynomial(rng, n, n, d, scale=scale),
        random_polynomial(rng, n, 1, d, scale=scale),
        rng.uniform(-1, 1, (n, 1)),
        grid,
    )
