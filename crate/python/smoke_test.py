"""Smoke test for the pylogcwt extension.

Build and run from the repository root:

    cargo build --release -p logcwt-py
    cp target/release/libpylogcwt.so python/pylogcwt.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pylogcwt as lc


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    close(lc.psi2_norm_squared(), 1.0, 1e-9)
    close(lc.psi2_admissibility(), 90 * 1.2020569031595942 / math.pi**2, 1e-6)
    close(lc.logistic(0.0), 0.5, 0.0)

    w = lc.Wave("w", 5.0, 100.0, 1000.0)
    clean = lc.synthesize(lc.Model(0.0, [w]), 200)
    cum = [0.0]
    for v in clean:
        cum.append(cum[-1] + v)
    s = lc.scalogram(lc.first_diff(clean), lc.alpha_grid(1.0, 30.0, 0.5))
    assert s.shape == (59, 199)
    top = s.extrema()[0]
    assert abs(top["alpha"] - 5.0) <= 0.5 and abs(top["beta"] - 100.0) <= 1.0, top

    truth = lc.table1_model()
    assert len(truth.waves) == 22 and truth.d == 13.9
    close(truth.waves[0].amplitude(), -1240.5, 0.05)
    x = lc.synthesize(truth, 514, noise_sigma=50.0, seed=2025)
    model, r2, rmse = lc.decompose(x)
    assert r2 >= 0.99, r2
    print(f"decompose: {len(model.waves)} waves, R2={r2:.5f}, rmse={rmse:.2f}")

    chains = json.loads(lc.auto_group(truth.waves))
    assert any(c["member_ids"] == ["11", "12", "13"] for c in chains)

    xor = lc.Distribution([["0", "0", "0"], ["0", "1", "1"], ["1", "0", "1"], ["1", "1", "0"]], [0.25] * 4)
    close(xor.configurational_information(), -1.0, 1e-12)
    same = lc.Distribution([["0", "0", "0"], ["1", "1", "1"]], [0.5, 0.5])
    close(same.configurational_information(), 1.0, 1e-12)
    try:
        xor.mutual_information()
    except ValueError:
        pass
    else:
        raise AssertionError("arity error expected")
    close(lc.redundancy_fraction(1.5, 2.0), 0.25, 0.0)
    close(lc.synergy_balance([1, 2, 2], [2, 2, 1]), 0.0, 0.0)

    r1 = lc.soliton_residual(1.0, 0.05, 0.001)
    r2_ = lc.soliton_residual(1.0, 0.025, 0.0005)
    assert 3.3 <= r1 / r2_ <= 4.8, r1 / r2_
    print("pylogcwt smoke test passed")


if __name__ == "__main__":
    main()
