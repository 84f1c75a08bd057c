# Copyright 2026 The avinpaint Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

"""Deterministic clean/noisy signal pairs shared with tests/oracles/stoi_signals.h.

Running this file prints the reference STOI values computed with pystoi
for the cases the C++ tests regenerate.
"""
import json
import math
import sys

MASK64 = (1 << 64) - 1


class SplitMix:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self):
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def case_rate(index):
    return 8000 if index % 2 == 0 else 10000


def make_case(index):
    rate = case_rate(index)
    rng = SplitMix(1000 + index)
    n = 3 * rate
    f0 = 90.0 + 120.0 * rng.uniform()
    am = 2.0 + 4.0 * rng.uniform()
    phases = [2.0 * math.pi * rng.uniform() for _ in range(8)]
    snr_db = -5.0 + 25.0 * (index / 19.0)
    clean = []
    for i in range(n):
        t = i / rate
        gate = 1.0 if (t % 1.0) < 0.7 else 0.001
        env = 0.5 * (1.0 - math.cos(2.0 * math.pi * am * t))
        s = 0.0
        for h in range(8):
            s += math.sin(2.0 * math.pi * (h + 1) * f0 * t + phases[h]) / (h + 1)
        clean.append(0.3 * gate * env * s)
    power = sum(v * v for v in clean) / n
    sigma = math.sqrt(power / (10.0 ** (snr_db / 10.0)))
    noisy = [v + sigma * rng.normal() for v in clean]
    return rate, clean, noisy


def main():
    import numpy as np
    from pystoi import stoi

    out = []
    for k in range(20):
        rate, clean, noisy = make_case(k)
        out.append({"case": k, "rate": rate,
                    "stoi": float(stoi(np.array(clean), np.array(noisy), rate))})
    from importlib.metadata import version
    json.dump({"reference": "pystoi " + version("pystoi"), "cases": out}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
