"""Backend agreement: the numba kernels and the numpy fallbacks must tell the
same story (same convergence step, same final state up to rounding)."""

import os
import subprocess
import sys

import numpy as np
import pytest

from haplomw import _kernels
from haplomw.backend import ENV_BACKEND
from haplomw.experiments import random_landscape

needs_numba = pytest.mark.skipif(
    _kernels.run_to_convergence_numba is None, reason="numba unavailable"
)


@needs_numba
@pytest.mark.parametrize("kind", [_kernels.ASEXUAL, _kernels.SR, _kernels.RS])
def test_dynamics_kernels_agree(kind):
    for seed in (0, 1, 2):
        w = random_landscape((8, 5), 0.2, seed=seed).values
        p0 = np.full((8, 5), 1 / 40.0)
        t_np, p_np = _kernels.run_to_convergence_numpy(w, p0.copy(), kind, 0.5, 50_000, 1 - 1e-5)
        t_nb, p_nb = _kernels.run_to_convergence_numba(w, p0.copy(), kind, 0.5, 50_000, 1 - 1e-5)
        assert t_np == t_nb
        assert np.abs(p_np - p_nb).max() < 1e-11


@needs_numba
def test_product_pw_kernels_agree():
    w = np.array([[1.01, 1.0], [1.0, 1.0099603]])
    x0 = np.array([0.499, 0.501])
    t_np, x_np, y_np = _kernels.product_pw_numpy(w, x0, x0, 10_000, 1 - 1e-5)
    t_nb, x_nb, y_nb = _kernels.product_pw_numba(w, x0.copy(), x0.copy(), 10_000, 1 - 1e-5)
    assert t_np == t_nb
    assert np.abs(x_np - x_nb).max() < 1e-12
    assert np.abs(y_np - y_nb).max() < 1e-12


def test_kernel_rejects_bad_shapes():
    with pytest.raises(ValueError):
        _kernels.run_to_convergence(np.ones((2, 2)), np.full((3, 3), 1 / 9), 0, 0.0, 10, 0.5)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_env_flag_selects_backend(backend):
    if backend == "numba" and _kernels.run_to_convergence_numba is None:
        pytest.skip("numba unavailable")
    code = (
        "from haplomw import _kernels\n"
        "import numpy as np\n"
        f"assert _kernels.ACTIVE_BACKEND == '{backend}', _kernels.ACTIVE_BACKEND\n"
        "w = np.array([[1.2, 1.0], [1.0, 0.8]])\n"
        "p = np.full((2, 2), 0.25)\n"
        "t, out = _kernels.run_to_convergence(w, p, _kernels.SR, 0.5, 5000, 1 - 1e-5)\n"
        "assert t > 0 and abs(out.sum() - 1) < 1e-9\n"
        "print('ok', t)\n"
    )
    env = dict(os.environ, **{ENV_BACKEND: backend})
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("ok")


def test_unknown_backend_rejected():
    env = dict(os.environ, **{ENV_BACKEND: "cuda"})
    proc = subprocess.run(
        [sys.executable, "-c", "import haplomw._kernels"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode != 0
    assert "cuda" in proc.stderr
