"""Regenerates the frozen reference values used by the unit tests."""

import json
from pathlib import Path

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.optimize import linprog
from scipy.stats import norm

HERE = Path(__file__).resolve().parent


def maximin(payoff):
    # variables: p (defender stop prob), v; maximize v s.t. v <= (1-p) A[0,j] + p A[1,j]
    a = np.asarray(payoff)
    cols = a.shape[1]
    c = np.array([0.0, -1.0])
    a_ub = np.column_stack([-(a[1] - a[0]), np.ones(cols)])
    b_ub = a[0]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0.0, 1.0), (None, None)], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.success
    return -res.fun


def stage_games(rng, count=200):
    out = []
    for k in range(count):
        scale = 10.0 if k % 2 else 1.0
        payoff = rng.uniform(-scale, scale, size=(2, 4))
        if k % 5 == 0:
            payoff[:, 3] = payoff[:, 1]
        out.append({"payoff": payoff.tolist(), "value": maximin(payoff)})
    return out


def gate_value():
    mpmath.mp.dps = 50
    a, b, k = mpmath.mpf(0), mpmath.mpf("0.6"), mpmath.mpf(20)
    s = 1 / (1 + mpmath.e ** (-a))
    odds = (b * (1 - s)) / (s * (1 - b))
    return float(1 / (1 + odds ** (-k)))


def bin_masses(rng, count=20, n=12):
    out = []
    for _ in range(count):
        k = int(rng.integers(1, 4))
        w = rng.dirichlet(np.ones(k))
        mu = rng.uniform(-1.0, n + 1.0, size=k)
        sd = rng.uniform(0.3, 4.0, size=k)

        def density(x):
            return float(sum(wi * norm.pdf(x, m, s) for wi, m, s in zip(w, mu, sd)))

        raw = []
        for o in range(n):
            lo = -np.inf if o == 0 else o
            hi = np.inf if o == n - 1 else o + 1
            raw.append(quad(density, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0])
        raw = np.maximum(np.array(raw), 1e-12)
        out.append({"weights": w.tolist(), "means": mu.tolist(), "sds": sd.tolist(), "n": n,
                    "pmf": (raw / raw.sum()).tolist()})
    return out


def main():
    rng = np.random.default_rng(20240611)
    data = {
        "stage_games": stage_games(rng),
        "smooth_gate_a0_b06_k20": gate_value(),
        "discretize": bin_masses(rng),
    }
    (HERE / "oracles.json").write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main()
