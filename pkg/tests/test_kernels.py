import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.special import comb

from cavitylab import _kernels as K


@pytest.mark.parametrize("n_sites,n_particles", [(5, 1), (6, 2), (7, 3)])
def test_determinant_enumeration_and_rank(n_sites, n_particles):
    dets = K.enumerate_determinants(n_sites, n_particles)
    assert len(dets) == comb(n_sites, n_particles, exact=True)
    assert np.all(np.diff(dets, axis=1) > 0)
    binom = K.binomial_table(n_sites, n_particles)
    assert np.array_equal(K.rank_determinants(dets, binom), np.arange(len(dets)))


def test_one_body_paths_agree(rng):
    n_sites, n_particles = 7, 3
    dets = K.enumerate_determinants(n_sites, n_particles)
    binom = K.binomial_table(n_sites, n_particles)
    op = rng.standard_normal((n_sites, n_sites))
    op = op + op.T
    a = K.one_body_coo_numpy(dets, op, binom, 0.0)
    b = K.one_body_coo_numba(dets, op, binom, 0.0)
    ma = sp.coo_matrix((a[2], (a[0], a[1])), shape=(len(dets),) * 2).toarray()
    mb = sp.coo_matrix((b[2], (b[0], b[1])), shape=(len(dets),) * 2).toarray()
    assert np.allclose(ma, mb, atol=1e-14)
    assert np.allclose(ma, ma.T)


def test_one_body_fermion_signs_match_second_quantization():
    n_sites = 4
    dets = K.enumerate_determinants(n_sites, 2)
    binom = K.binomial_table(n_sites, 2)
    # hopping 0 <-> 3 passes over occupied sites 1 or 2
    op = np.zeros((n_sites, n_sites))
    op[0, 3] = op[3, 0] = 1.0
    r, c, v = K.one_body_coo_numpy(dets, op, binom, 0.0)
    m = sp.coo_matrix((v, (r, c)), shape=(len(dets),) * 2).toarray()
    idx = {tuple(d): i for i, d in enumerate(dets)}
    assert m[idx[(1, 3)], idx[(0, 1)]] == -1.0
    assert m[idx[(2, 3)], idx[(0, 2)]] == -1.0


def test_diagonal_paths_agree(rng):
    dets = K.enumerate_determinants(8, 3)
    site = rng.standard_normal(8)
    pair = rng.standard_normal((8, 8))
    pair = pair + pair.T
    assert np.allclose(K.diagonal_energy_numpy(dets, site, pair), K.diagonal_energy_numba(dets, site, pair))


def test_matmat_paths_agree(rng):
    a = sp.random(300, 300, density=0.05, random_state=3, format="csr")
    parts = (a.indptr, a.indices, a.data)
    x = rng.standard_normal((300, 4))
    assert np.allclose(K.csr_matmat_numpy(*parts, x), a @ x)
    assert np.allclose(K.csr_matmat_numba(*parts, x), a @ x)
    xc = x + 1j * rng.standard_normal((300, 4))
    assert np.allclose(K.csr_matmat_numba(*parts, xc), a @ xc)


def test_env_flag_selects_numpy_path():
    code = "from cavitylab import _kernels as K; print(K.backend())"
    env = dict(os.environ, CAVITYLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
