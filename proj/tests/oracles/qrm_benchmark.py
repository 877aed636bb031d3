"""Line-by-line numpy transliteration of the published qrm.benchmark R routine.

Used once to freeze expected weights for the parity fixture:

    python3 tests/oracles/qrm_benchmark.py tests/data/parity12

R's 1-based loops are kept as written; only indexing is shifted.
"""

import sys
from pathlib import Path

import numpy as np


def calc_load(load, load1):
    x = load1.sum(axis=0)
    return (load1.T @ load) / x[:, None]


def calc_theta(x, b, z_min, z_max):
    x = np.atleast_2d(x)
    b = np.atleast_1d(b)
    if x.size == 1:
        return (1 - z_max**2) * x[0, 0] / b[0] ** 2
    s = np.sqrt(np.diag(x))
    x = (x / s[:, None]).T / s[:, None]
    b = b / s
    t_min = (1 - z_max**2) / np.min(b**2)
    t_max = (1 - z_min**2) / np.max(b**2)
    x = (x * b[:, None]).T * b[:, None]
    x = x.sum() - np.trace(x)
    b = np.sum(b**2) ** 2 - np.sum(b**4)
    t = x / b
    t = min(max(t, t_min), t_max)
    return t


def qrm_benchmark(ret, ind, beta, mkt_fac=True, z_min=0.1, z_max=0.9):
    ind = list(ind) + [np.ones((ind[0].shape[0], 1))]
    x = np.cov(ret)  # rows are variables, T - 1 denominator
    y = []
    v = []
    w = beta.copy()
    b = beta.copy()

    for lvl in range(1, len(ind) + 1):
        if lvl > 1:
            flm = calc_load(ind[lvl - 1], ind[lvl - 2])
            b = np.ones(flm.shape[0])
        else:
            flm = ind[lvl - 1]

        k = flm.shape[1]
        G = np.zeros(k)
        y1 = np.zeros(flm.shape[0])
        v1 = np.zeros(k)

        for a in range(k):
            take = flm[:, a] == 1
            if lvl == len(ind) and not mkt_fac:
                G[a] = 0
            else:
                G[a] = calc_theta(x[np.ix_(take, take)], b[take], z_min, z_max)
            y1[take] = np.diag(x)[take] - b[take] ** 2 * G[a]
            if lvl == 1:
                v1[a] = np.sum(b[take] ** 2 / y1[take])
            else:
                v1[a] = np.sum(v[lvl - 2][take] / (1 + y1[take] * v[lvl - 2][take]))

        y.append(y1)
        v.append(v1)
        x1 = flm.T @ x @ flm
        u = np.sqrt(G / np.diag(x1))
        x = (x1 * u[:, None]).T * u[:, None]

    w = w / y[0]

    for lvl in range(1, len(ind)):
        for a in range(ind[lvl - 1].shape[1]):
            take = ind[lvl - 1][:, a] == 1
            w[take] = w[take] / (1 + y[lvl][a] * v[lvl - 1][a])

    w = w / np.sum(w * beta)
    return w


def read_rows(path):
    return [line.strip().split(",") for line in open(path) if line.strip()]


def indicator(labels):
    names = list(dict.fromkeys(labels))
    m = np.zeros((len(labels), len(names)))
    for i, lab in enumerate(labels):
        m[i, names.index(lab)] = 1.0
    return m


def main(fixture):
    fixture = Path(fixture)
    rows = read_rows(fixture / "returns.csv")
    tickers = [r[0] for r in rows[1:]]
    ret = np.array([[float(c) for c in r[1:]] for r in rows[1:]])

    cls = {r[0]: r[1:] for r in read_rows(fixture / "classification.csv")[1:]}
    levels = len(next(iter(cls.values())))
    ind = [indicator([cls[t][l] for t in tickers]) for l in range(levels)]

    betas = {r[0]: float(r[1]) for r in read_rows(fixture / "betas.csv")[1:]}
    beta = np.array([betas[t] for t in tickers])

    for mkt_fac, name in ((True, "expected_weights_mkt.csv"), (False, "expected_weights_nomkt.csv")):
        w = qrm_benchmark(ret, ind, beta, mkt_fac=mkt_fac)
        with open(fixture / name, "w") as f:
            f.write("ticker,weight\n")
            for t, wi in zip(tickers, w):
                f.write(f"{t},{float(wi)!r}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data" / "parity12")
