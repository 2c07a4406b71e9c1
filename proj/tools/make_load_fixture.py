#!/usr/bin/env python3
"""Writes tests/fixtures/load_weekday_weekend.csv.

Half-hourly kWh curves for 24 consumers over four weeks. Each curve is a
consumer level plus Haar detail coefficients; the (D4, D3) coefficients of a
day follow 0.9 * previous day on weekdays and 0.9 * R * previous day on
Saturdays and Sundays, R a fixed rotation. D2 and D1 carry small noise.
"""
import datetime as dt
import pathlib

import numpy as np

CONSUMERS = 24
DAYS = 28
START = dt.date(2010, 1, 4)  # a Monday


def haar_synthesis(a4, d4, d3, d2, d1):
    s = np.asarray(a4, dtype=float)
    for d in (d4, d3, d2, d1):
        up = np.empty(2 * len(s))
        up[0::2] = (s + d) / np.sqrt(2.0)
        up[1::2] = (s - d) / np.sqrt(2.0)
        s = up
    return s


def main():
    rng = np.random.default_rng(20100104)
    rotation, _ = np.linalg.qr(rng.standard_normal((9, 9)))
    rows = []
    for c in range(CONSUMERS):
        level = rng.uniform(0.5, 1.5)
        f = rng.standard_normal(9) * 0.4 * level
        for d in range(DAYS):
            day = START + dt.timedelta(days=d)
            if d > 0:
                law = rotation if day.weekday() >= 5 else np.eye(9)
                f = 0.9 * law @ f + rng.standard_normal(9) * 0.2 * level
            curve = haar_synthesis(
                np.full(3, 4.0 * level), f[:3], f[3:], rng.standard_normal(12) * 0.02 * level,
                rng.standard_normal(24) * 0.02 * level)
            rows.append((f"c{c + 1:02d}", day.isoformat(), curve))
    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "load_weekday_weekend.csv"
    with out.open("w") as fh:
        fh.write("consumer,date," + ",".join(f"h{t:02d}" for t in range(48)) + "\n")
        for cid, date, curve in rows:
            fh.write(cid + "," + date + "," + ",".join(f"{v:.4f}" for v in curve) + "\n")
    lo = min(r[2].min() for r in rows)
    print(f"wrote {len(rows)} curves to {out} (min reading {lo:.3f})")


if __name__ == "__main__":
    main()
