"""The numba kernels and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from bilinplan import _kernels
from bilinplan.linalg import lu_factor, svd, symmetric_eig
from bilinplan.lp import LpProblem, solve_lp
from bilinplan.models import compile_decmdp, example4, generate_rover, oracle_enumerate
from bilinplan.pipeline import PipelineConfig, run

from helpers import random_decmdp

needs_numba = pytest.mark.skipif(_kernels.numba_backend is None, reason="numba not installed")


def both(fn):
    with _kernels.use_backend("numpy"):
        a = fn()
    with _kernels.use_backend("numba"):
        b = fn()
    return a, b


@needs_numba
@pytest.mark.parametrize("seed", range(10))
def test_simplex_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 25))
    m = int(rng.integers(1, n))
    A = rng.uniform(-1, 1, (m, n))
    p = LpProblem(rng.uniform(-1, 1, n), A, A @ rng.uniform(0, 1, n), np.ones((1, n)), [5.0 * n])
    a, b = both(lambda: solve_lp(p))
    assert a.status is b.status
    np.testing.assert_allclose(a.x, b.x, atol=1e-12)
    np.testing.assert_allclose(a.duals, b.duals, atol=1e-10)


@needs_numba
def test_lu_backends_agree(rng):
    M = rng.standard_normal((12, 12))
    a, b = both(lambda: lu_factor(M))
    np.testing.assert_array_equal(a.perm, b.perm)
    np.testing.assert_allclose(a.lu, b.lu, atol=1e-13)


@needs_numba
def test_jacobi_backends_agree(rng):
    M = rng.standard_normal((15, 15))
    M = M + M.T
    a, b = both(lambda: symmetric_eig(M))
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-12)
    np.testing.assert_allclose(np.abs(a.eigenvectors.T @ b.eigenvectors), np.eye(15), atol=1e-8)
    sa, sb = both(lambda: svd(M[:, :7])[1])
    np.testing.assert_allclose(sa, sb, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_occupancy_backends_agree(seed):
    m = random_decmdp(np.random.default_rng(seed))
    (va, pa), (vb, pb) = both(lambda: oracle_enumerate(m))
    assert va == pytest.approx(vb, abs=1e-13)
    assert pa == pb


@needs_numba
def test_solver_backends_agree():
    p = compile_decmdp(generate_rover(horizon=8, shared_sites=(1, 2), seed=3))
    a, b = both(lambda: run(p, PipelineConfig()))
    assert a.value == pytest.approx(b.value, abs=1e-9)
    assert a.iterations == b.iterations


def test_numpy_backend_solves_example4():
    with _kernels.use_backend("numpy"):
        r = run(compile_decmdp(example4()), PipelineConfig())
    assert r.value == pytest.approx(1.0)


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, BILINPLAN_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from bilinplan import _kernels; print(_kernels.backend.name)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["BILINPLAN_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", "from bilinplan import _kernels; print(_kernels.backend.name)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if _kernels.HAVE_NUMBA else "numpy")


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        with _kernels.use_backend("fortran"):
            pass
