"""Regenerates crates/core/data/summer_residential_288.csv.

Hourly anchor values sit at hour centers; five-minute values are obtained by
periodic linear interpolation and rescaled to mean 1.
"""
import pathlib

HOURLY = [
    0.58, 0.50, 0.46, 0.44, 0.43, 0.45, 0.52, 0.60,
    0.62, 0.60, 0.60, 0.63, 0.68, 0.74, 0.82, 0.90,
    0.97, 1.00, 1.00, 0.96, 0.90, 0.83, 0.74, 0.65,
]

def main():
    n = 288
    vals = []
    for t in range(n):
        hour = (t + 0.5) / 12.0 - 0.5
        i0 = int(hour // 1) % 24
        frac = hour - (hour // 1)
        vals.append(HOURLY[i0] * (1 - frac) + HOURLY[(i0 + 1) % 24] * frac)
    mean = sum(vals) / n
    out = pathlib.Path(__file__).resolve().parent.parent / "crates/core/data/summer_residential_288.csv"
    out.write_text("".join(f"{v / mean:.6f}\n" for v in vals))

if __name__ == "__main__":
    main()
