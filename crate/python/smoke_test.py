"""Smoke test for the robscatter Python module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math
import sys

import numpy as np

import robscatter


def main():
    rng = np.random.default_rng(7)
    p, n = 5, 120
    sigma0 = 0.5 ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    x = rng.multivariate_normal(np.zeros(p), sigma0, size=n)

    planted = [(i, i % p) for i in range(0, n, 10)]
    for i, j in planted:
        x[i, j] = 12.0
    x[3, 1] = np.nan
    rows = [[None if math.isnan(v) else float(v) for v in r] for r in x]

    fit = robscatter.estimate(rows, seed=1)
    assert fit["converged"], fit
    sigma = np.array(fit["sigma"])
    assert sigma.shape == (p, p)
    assert np.allclose(sigma, sigma.T)
    assert np.all(np.linalg.eigvalsh(sigma) > 0)
    assert len(fit["weights"]) == n
    assert all(fit["flagged"][i][j] for i, j in planted)
    assert not fit["flagged"][3][1], "a missing cell is never flagged"

    lrt = robscatter.lrt_distance(fit["sigma"], sigma0.tolist())
    mle = np.cov(np.nan_to_num(x), rowvar=False, bias=True)
    lrt_mle = robscatter.lrt_distance(mle.tolist(), sigma0.tolist())
    assert lrt < lrt_mle, (lrt, lrt_mle)

    flags = robscatter.filter_cells(rows, filter="uf")
    assert sum(map(sum, flags)) >= len(planted)

    rows_out = robscatter.simulate("table1-p10", replicates=1, estimators=["mle"], seed=3)
    assert rows_out and all(r["mean_lrt"] > 0 for r in rows_out)

    try:
        robscatter.estimate(rows, estimator="nope")
    except ValueError as e:
        assert "nope" in str(e)
    else:
        raise AssertionError("bad estimator accepted")

    print(f"ok: lrt {lrt:.3f} vs mle {lrt_mle:.3f}, {sum(map(sum, fit['flagged']))} cells flagged")
    return 0


if __name__ == "__main__":
    sys.exit(main())
