import numpy as np
import pytest


def naive_dft(x):
    """O(N^2) direct summation; independent of numpy.fft."""
    x = np.asarray(x, dtype=complex)
    n = x.size
    t = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * m * t / n)) for m in range(n)])


def l1_reference(matrix, values):
    """Minimum modulus-l1 solution of ``matrix @ x = values`` by a real-embedded SOCP.

    Real and imaginary parts become separate variables; each |x_m| is a
    second-order cone.  Solved with cvxpy (Clarabel), so it shares nothing
    with the ADMM under test.
    """
    cp = pytest.importorskip("cvxpy")
    a = np.asarray(matrix)
    b = np.asarray(values, dtype=complex)
    n = a.shape[1]
    re = cp.Variable(n)
    im = cp.Variable(n)
    cons = [
        a.real @ re - a.imag @ im == b.real,
        a.imag @ re + a.real @ im == b.imag,
    ]
    objective = cp.sum(cp.norm(cp.vstack([re, im]), 2, axis=0))
    prob = cp.Problem(cp.Minimize(objective), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return float(prob.value), re.value + 1j * im.value


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
