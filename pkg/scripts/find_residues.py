"""Exhaustive search for residue roots of the builtin families.

Writes ``src/ultrabroyden/data/initial_residues.json``: for each family and
prime, the first point of F_p^m (in lexicographic order of the balanced
representatives -(p-1)/2 .. (p-1)/2) where the family vanishes at t = 0 and
the Jacobian is invertible modulo p.

    python scripts/find_residues.py --prime 17
"""

import argparse
import itertools
import json
import pathlib

from ultrabroyden.field import Qp
from ultrabroyden.linalg import is_unimodular, vector
from ultrabroyden.systems import builtin_family, evaluate, jacobian

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "ultrabroyden" / "data" / "initial_residues.json"


def search(name, p):
    sys = builtin_family(name)
    ctx = Qp(p)
    t = ctx.zero()
    half = (p - 1) // 2
    reps = sorted(range(-half, half + 1), key=lambda r: (abs(r), -r))
    for point in itertools.product(reps, repeat=sys.m):
        x = vector(ctx, point, 1)
        if any(not e.is_apparent_zero for e in evaluate(sys, t, x)):
            continue
        if is_unimodular(jacobian(sys, t, x)):
            return list(point)
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--prime", type=int, action="append", default=None)
    args = ap.parse_args()
    primes = args.prime or [17]
    data = json.loads(OUT.read_text()) if OUT.exists() else {}
    for p in primes:
        for name in ("F1", "F2", "F3"):
            root = search(name, p)
            data.setdefault(name, {})[str(p)] = root
            print(name, p, root)
    OUT.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
