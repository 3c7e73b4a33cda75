#!/usr/bin/env python3
# Copyright 2026 The lmpdrive Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds synthetic trajectory logs whose metrics equal a metric-table row.

Acceleration cycles +A, +A, -A, -A so every interior central difference has
magnitude A/dt; dt = A/J then gives mean |jerk| = J. Speeds alternate
v0 + s, v0 - s (even count) for a population variance of s^2. One sample
carries gap = ttc with closing speed 1, the rest have no lead.
"""

import argparse
import csv
import math
import pathlib

N_SAMPLES = 400
V0 = 12.0


def build_log(ttc, variance, accel, jerk):
    dt = accel / jerk
    spread = math.sqrt(variance)
    rows = []
    for i in range(N_SAMPLES):
        t = i * dt
        a = accel if i % 4 in (0, 1) else -accel
        v = V0 + spread if i % 2 == 0 else V0 - spread
        gap = closing = ""
        if ttc is not None and i == N_SAMPLES // 2:
            gap, closing = repr(ttc), "1.0"
        rows.append(f"{t!r},{V0 * t!r},0,0,{v!r},{a!r},{gap},1,{closing}")
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    root = pathlib.Path(__file__).resolve().parent.parent
    parser.add_argument("--table", default=root / "fixtures/behaviors/metrics.csv", type=pathlib.Path)
    parser.add_argument("--out", default=root / "fixtures/behaviors/logs", type=pathlib.Path)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    lines = [ln for ln in args.table.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    for rec in csv.DictReader(lines):
        ttc = float(rec["ttc"]) if rec["ttc"] else None
        rows = build_log(ttc, float(rec["speed_variance"]), float(rec["mean_abs_accel"]), float(rec["mean_abs_jerk"]))
        path = args.out / f"{rec['behavior']}_{rec['row']}.csv"
        path.write_text("# t,x,y,heading,speed,accel,lead_gap,engaged,closing_speed\n" + "\n".join(rows) + "\n")
        print(path.relative_to(root))


if __name__ == "__main__":
    main()
