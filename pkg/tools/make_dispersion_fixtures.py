"""Regenerate the shipped effective-index fixture tables.

The tables are synthetic. They are pinned to the two published index
values (n_eff(775 nm) = 2.1669, n_eff(1550 nm) = 2.1152) and the telecom
band carries a Taylor expansion of the propagation constant about 1550 nm
whose even orders were fitted so that a 12 mm uniformly poled waveguide
shows a 58 THz first-zero and 37 THz half-maximum phase-matching span.
They are NOT a mode-solver output.

    python tools/make_dispersion_fixtures.py
"""

from pathlib import Path

import numpy as np

C = 299792458.0
OUT = Path(__file__).resolve().parents[1] / "src" / "tbent" / "data"

# telecom band: beta(omega) Taylor coefficients about 1550 nm (SI units)
N_1550 = 2.1152
GROUP_INDEX = 2.30
BETA2 = 1.81221827e-26  # s^2/m
BETA3 = 1.0e-41  # s^3/m, cancels in the degenerate mismatch
BETA4 = 12 * -0.70833753e-55  # s^4/m

# pump band: quadratic in wavelength about 775 nm
N_775 = 2.1669
DN_DLAMBDA = -1.72e-4  # 1/nm
D2N_DLAMBDA2 = 2.0e-7  # 1/nm^2


def telecom_table():
    lam = np.arange(1250.0, 2000.0 + 1e-9, 10.0)
    w0 = 2 * np.pi * C / 1550e-9
    w = 2 * np.pi * C / (lam * 1e-9)
    d = w - w0
    beta = (N_1550 * w0 / C + GROUP_INDEX / C * d + BETA2 * d**2 / 2
            + BETA3 * d**3 / 6 + BETA4 * d**4 / 24)
    return lam, beta * C / w


def pump_table():
    lam = np.arange(740.0, 810.0 + 1e-9, 5.0)
    x = lam - 775.0
    return lam, N_775 + DN_DLAMBDA * x + D2N_DLAMBDA2 * x**2


def write(path, lam, n):
    with open(path, "w") as fh:
        fh.write("wavelength_nm,n_eff\n")
        for a, b in zip(lam, n):
            fh.write(f"{a:.1f},{b:.10f}\n")


if __name__ == "__main__":
    write(OUT / "neff_pump_band.csv", *pump_table())
    write(OUT / "neff_telecom_band.csv", *telecom_table())
    print("wrote", OUT)
