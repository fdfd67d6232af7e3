"""Regenerate oracles.json: closed-form reference values evaluated with
mpmath at 50 significant digits, independently of the package code.

    python3 tests/oracles/make_oracles.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
L = 16 + mp.mpf(2) ** (mp.mpf(23) / 4)


def error_bounds(s0, lam, gamma, k, M_inf, l_min):
    s0, lam, g, k = map(mp.mpf, (s0, lam, gamma, k))
    l2 = 4 * (g + 2) ** 2 * s0 * lam ** 2 / (g * k ** 4)
    l1 = 8 * (g + 1) * (g + 2) * s0 * lam / (g ** mp.mpf(1.5) * k ** 2)
    l0 = 64 * mp.mpf(M_inf) * (g + 1) * (g + 2) * s0 / (g ** mp.mpf(1.5) * mp.mpf(l_min) ** 2)
    return l2, l1, l0


def lambda1(p, T, eps, Delta1, gamma_43, C):
    p, T, eps, C = map(mp.mpf, (p, T, eps, C))
    log_term = mp.log(2 * L * p) + mp.log(2 / eps)
    a = mp.sqrt(log_term / (2 * T))
    b = ((2 * C) ** (mp.mpf(1) / 3) / 6 * log_term / T) ** (mp.mpf(3) / 4)
    return 4 * L * mp.mpf(Delta1) * max(a, b) + 4 * L * mp.mpf(gamma_43) / mp.sqrt(T)


def T1(s0, p, C, l_min, Delta2, gamma_2, c0, eps0):
    s2 = 2 * mp.mpf(s0)
    p = mp.mpf(p)
    count = mp.mpf(21) ** s2 * min(p ** s2, (mp.e * p / s2) ** s2)
    inner = mp.mpf(Delta2) * mp.sqrt(mp.log(count) + mp.log(L / mp.mpf(eps0))) + mp.mpf(gamma_2)
    return 2592 * (mp.mpf(c0) + 2) ** 4 * L ** 2 * mp.mpf(C) / mp.mpf(l_min) ** 2 * inner ** 2


def ou_time_average_variance(a, T):
    # (2 / T^2) int_0^T int_0^t exp(-a (t - s)) / (2a) ds dt by quadrature
    a, T = mp.mpf(a), mp.mpf(T)
    inner = lambda t: mp.quad(lambda s: mp.exp(-a * (t - s)) / (2 * a), [0, t])
    return 2 * mp.quad(inner, [0, T]) / T ** 2


def main():
    rows = {
        "error_bounds": [],
        "lambda1": [],
        "T1": [],
        "ou_time_average_variance": [],
    }
    for args in [(5, 0.1, 2.0, 0.5, 1.0, 1.0), (3, 0.05, 1.0, 0.2, 2.5, 0.4), (10, 1.0, 7.0, 1.3, 0.1, 3.0)]:
        l2, l1, l0 = error_bounds(*args)
        rows["error_bounds"].append({"s0": args[0], "lam": args[1], "gamma": args[2], "k": args[3],
                                     "M_inf": args[4], "l_min": args[5],
                                     "l2": str(l2), "l1": str(l1), "l0": str(l0)})
    for args in [(100, 20, 0.05, 1.0, 1.0, 1.0), (100, 20, 0.05, 1.0, 0.0, 1.0),
                 (10, 0.5, 0.1, 2.0, 0.3, 50.0), (1000, 400, 0.01, 0.5, 0.0, 1e4)]:
        rows["lambda1"].append({"p": args[0], "T": args[1], "eps": args[2], "Delta1": args[3],
                                "gamma_43": args[4], "C": args[5], "lambda1": str(lambda1(*args))})
    for args in [(2, 100, 1.0, 0.5, 1.0, 1.0, 5.0, 0.05), (5, 20, 0.3, 2.0, 0.1, 0.0, 3.5, 0.01),
                 (1, 3, 2.0, 1.0, 1.0, 1.0, 5.0, 0.1)]:
        keys = ("s0", "p", "C", "l_min", "Delta2", "gamma_2", "c0", "eps0")
        rows["T1"].append({**dict(zip(keys, args)), "T1": str(T1(*args))})
    for a, T in [(1.0, 50.0), (1.0, 2.0), (2.5, 10.0)]:
        rows["ou_time_average_variance"].append({"a": a, "T": T,
                                                 "var": str(ou_time_average_variance(a, T))})
    out = Path(__file__).with_name("oracles.json")
    out.write_text(json.dumps(rows, indent=2) + "\n")


if __name__ == "__main__":
    main()
