"""Intersatellite separation against its slow/fast detector bracket.

Shows the solved separation next to both bounds, and how the slow-detector
rate compares with the fast-detector rate at the solved distance.
"""

from qnetcap.config import get_preset
from qnetcap.optics import intersatellite_capacity
from qnetcap.planner import intersat_bounds, max_intersatellite_separation, slow_detector_capacity


def main():
    s = get_preset("table1-setup1").setup
    print(f"{'C':>7} {'lower [km]':>11} {'z [km]':>10} {'upper [km]':>11} {'ok':>3} {'slow/fast @ z':>13}")
    for c in (1e-3, 1e-2, 1e-1, 1.0):
        z = max_intersatellite_separation(c, 4, s).value
        b = intersat_bounds(c, 4, s, clock_ratio=1.0)
        ok = b.lower is not None and b.upper is not None and b.lower <= z <= b.upper
        ratio = slow_detector_capacity(s, z) / intersatellite_capacity(s, z).value
        lo = "n/a" if b.lower is None else f"{b.lower / 1e3:.1f}"
        hi = "n/a" if b.upper is None else f"{b.upper / 1e3:.1f}"
        print(f"{c:7.0e} {lo:>11} {z / 1e3:10.1f} {hi:>11} {'yes' if ok else 'no':>3} {ratio:13.3f}")


if __name__ == "__main__":
    main()
