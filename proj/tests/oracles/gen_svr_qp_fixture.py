"""Dense QP reference for the epsilon-SVR dual.

Writes tests/data/svr_qp_fixture.json. Each instance stores the raw rows,
targets, parameters, the optimal dual objective and the reference predictions
at the training rows and at held-out points. Features are standardised the
same way the library does (mean, population sd, sd < 1e-12 -> 1).

    python3 tests/oracles/gen_svr_qp_fixture.py
"""

import json
import pathlib

import numpy as np
from cvxopt import matrix, solvers

solvers.options.update(show_progress=False, abstol=1e-13, reltol=1e-13, feastol=1e-13, maxiters=200)

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "svr_qp_fixture.json"


def standardise(x):
    shift = x.mean(axis=0)
    sd = x.std(axis=0)
    scale = np.where(sd > 1e-12, sd, 1.0)
    return shift, scale


def kernel(a, b, gamma):
    d = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * d)


def solve(x, y, c, eps, gamma):
    n = len(y)
    shift, scale = standardise(x)
    z = (x - shift) / scale
    k = kernel(z, z, gamma)
    # variables v = [alpha; alpha*], beta = alpha - alpha*
    e = np.hstack([np.eye(n), -np.eye(n)])
    p = e.T @ k @ e + 1e-14 * np.eye(2 * n)
    q = eps * np.ones(2 * n) - e.T @ y
    g = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.hstack([np.zeros(2 * n), c * np.ones(2 * n)])
    a = np.hstack([np.ones(n), -np.ones(n)])[None, :]
    sol = solvers.qp(matrix(p), matrix(q), matrix(g), matrix(h), matrix(a), matrix(0.0))
    if sol["status"] != "optimal":
        return None
    v = np.array(sol["x"]).ravel()
    beta = v[:n] - v[n:]
    beta[np.abs(beta) < 1e-9 * c] = 0.0
    objective = -0.5 * beta @ k @ beta - eps * np.abs(beta).sum() + y @ beta
    # Intercept from the equality multiplier, checked against free rows.
    bias = float(np.array(sol["y"]).ravel()[0])
    free = np.where((np.abs(beta) > 1e-6 * c) & (np.abs(beta) < c * (1 - 1e-6)))[0]
    if len(free) == 0:
        return None
    kb = k @ beta
    from_free = np.mean(y[free] - eps * np.sign(beta[free]) - kb[free])
    if abs(from_free - bias) > 1e-6:
        return None
    return dict(shift=shift, scale=scale, z=z, beta=beta, bias=bias, objective=float(objective))


def predict(ref, x, gamma):
    z = (x - ref["shift"]) / ref["scale"]
    return kernel(z, ref["z"], gamma) @ ref["beta"] + ref["bias"]


def instance(x, y, c, eps, gamma, x_test):
    ref = solve(x, y, c, eps, gamma)
    if ref is None:
        return None
    return {
        "x": x.tolist(),
        "y": y.tolist(),
        "C": c,
        "epsilon": eps,
        "gamma": gamma,
        "objective": ref["objective"],
        "bias": ref["bias"],
        "beta": ref["beta"].tolist(),
        "pred_train": predict(ref, x, gamma).tolist(),
        "x_test": x_test.tolist(),
        "pred_test": predict(ref, x_test, gamma).tolist(),
    }


def main():
    rng = np.random.default_rng(20240917)
    instances = []
    x1 = np.array([[0.0], [1.0], [2.0]])
    first = instance(x1, np.array([0.0, 1.0, 2.0]), 100.0, 0.1, 1.0, np.array([[0.5], [1.5], [3.0]]))
    assert first is not None
    first["name"] = "line3"
    instances.append(first)
    seed = 0
    while len(instances) < 50:
        seed += 1
        n = int(rng.integers(5, 21))
        d = int(rng.integers(1, 6))
        x = rng.uniform(-2.0, 2.0, size=(n, d))
        y = np.sin(x.sum(axis=1)) + 0.1 * rng.normal(size=n)
        c = float(rng.choice([0.5, 1.0, 10.0]))
        eps = float(rng.choice([0.01, 0.05, 0.1]))
        gamma = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
        x_test = rng.uniform(-2.0, 2.0, size=(5, d))
        inst = instance(x, y, c, eps, gamma, x_test)
        if inst is None:
            continue
        inst["name"] = f"random{seed}"
        instances.append(inst)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"instances": instances}, indent=1) + "\n")
    print(f"wrote {len(instances)} instances to {OUT}")


if __name__ == "__main__":
    main()
