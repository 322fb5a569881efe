#!/usr/bin/env python3
"""Writes the synthetic 15-minute net-load profiles for the five-prosumer example day.

Net load = household demand - rooftop PV output (kW). Deterministic; no RNG.
"""
import math
import sys

INTERVALS = 96
STEP_H = 0.25

# id: (pv peak kW, demand scale)
PROSUMERS = {
    "B1": (0.0, 1.6),
    "B2": (0.0, 1.3),
    "S1": (4.2, 0.9),
    "S2": (6.0, 0.8),
    "S3": (5.0, 0.85),
}


def pv(peak, hour):
    if hour < 6.0 or hour > 18.0:
        return 0.0
    return peak * math.sin(math.pi * (hour - 6.0) / 12.0) ** 1.5


def demand(scale, hour, phase):
    morning = math.exp(-((hour - 7.5) ** 2) / 2.0)
    evening = 1.6 * math.exp(-((hour - 19.0) ** 2) / 4.0)
    ripple = 0.08 * math.sin(2.0 * math.pi * hour / 3.0 + phase)
    return scale * (0.45 + morning + evening + ripple)


def main(out):
    out.write("interval_start,prosumer_id,net_load_kw\n")
    for t in range(INTERVALS):
        hour = t * STEP_H
        for k, (pid, (peak, scale)) in enumerate(PROSUMERS.items()):
            net = demand(scale, hour, phase=k) - pv(peak, hour)
            out.write(f"{t // 4:02d}:{(t % 4) * 15:02d},{pid},{net:.3f}\n")


if __name__ == "__main__":
    main(sys.stdout)
