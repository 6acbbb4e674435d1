"""Timing of the numba kernels against their numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``.  Both paths are imported
directly, so ``CAVITYLAB_DISABLE_NUMBA`` does not need to be toggled.
"""

import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from cavitylab import _kernels as kr
from cavitylab.core.matter import kinetic_matrix
from cavitylab.core.types import Grid


def best_of(fn, repeat, number=1):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def cases(n_sites, n_particles, block, seed):
    rng = np.random.default_rng(seed)
    dets = kr.enumerate_determinants(n_sites, n_particles)
    binom = kr.binomial_table(n_sites, n_particles)
    op = kinetic_matrix(Grid(-10.0, 10.0, n_sites), 1.0, "fd")
    site = rng.normal(size=n_sites)
    pair = rng.normal(size=(n_sites, n_sites))
    pair = pair + pair.T
    rows, cols, vals = kr.one_body_coo_numpy(dets, op, binom, 1e-14)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(len(dets),) * 2)
    x = rng.normal(size=(len(dets), block))
    return {
        "one_body_coo": (lambda: kr.one_body_coo_numpy(dets, op, binom, 1e-14),
                         lambda: kr.one_body_coo_numba(dets, op, binom, 1e-14)),
        "diagonal_energy": (lambda: kr.diagonal_energy_numpy(dets, site, pair),
                            lambda: kr.diagonal_energy_numba(dets, site, pair)),
        "csr_matmat": (lambda: kr.csr_matmat_numpy(m.indptr, m.indices, m.data, x),
                       lambda: kr.csr_matmat_numba(m.indptr, m.indices, m.data, x)),
    }, len(dets)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sites", type=int, default=60)
    p.add_argument("--particles", type=int, default=3)
    p.add_argument("--block", type=int, default=8)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not kr.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    table, dim = cases(args.sites, args.particles, args.block, args.seed)
    print(f"{args.particles} fermions on {args.sites} sites: {dim} determinants, block {args.block}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn) in table.items():
        nb_fn()  # compile outside the timing
        t_np = best_of(np_fn, args.repeat)
        t_nb = best_of(nb_fn, args.repeat)
        print(f"{name:<16}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
