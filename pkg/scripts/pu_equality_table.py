#!/usr/bin/env python3
"""Both sides of Pu's averaged-length identity for a few profiles."""

from __future__ import annotations

import argparse

from systolic.projections import pu_equality_sides
from systolic.verify import pu_fixtures


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--betas", default="0.5,0.8,1.0,1.3")
    args = ap.parse_args()
    print(f"{'beta':>6} {'profile':>9} {'int phi phi0':>16} {'curve average':>16} {'residual':>10}")
    for beta in (float(b) for b in args.betas.split(",")):
        for name, prof in pu_fixtures(beta).items():
            lhs, rhs = pu_equality_sides(beta, prof)
            print(f"{beta:6.3f} {name:>9} {lhs:16.12f} {rhs:16.12f} {abs(lhs - rhs):10.2e}")


if __name__ == "__main__":
    main()
