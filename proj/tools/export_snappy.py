#!/usr/bin/env python3
"""Write an nzdatum-v1 file from a SnapPy triangulation.

Gluing rows are copied verbatim from Manifold.gluing_equations():
edge rows first, then the meridian and longitude of cusp 0.
"""
import argparse
import json
import re

import snappy


def export(name):
    M = snappy.ManifoldHP(name)
    if M.num_cusps() != 1:
        raise SystemExit("only one-cusped manifolds are supported")
    n = M.num_tetrahedra()
    rows = [[int(x) for x in r] for r in M.gluing_equations()]
    g = [[r[3 * i] for i in range(n)] for r in rows]
    gp = [[r[3 * i + 1] for i in range(n)] for r in rows]
    gpp = [[r[3 * i + 2] for i in range(n)] for r in rows]
    shapes = []
    for z in M.tetrahedra_shapes("rect"):
        shapes.append({"re": str(z.real()),
                       "im": str(z.imag())})
    return {
        "format": "nzdatum-v1",
        "n": n,
        "gluing": {"g": g, "gp": gp, "gpp": gpp},
        "shapes": shapes,
        "meta": {
            "name": name,
            "source": "SnapPy %s ManifoldHP gluing_equations" % snappy.__version__,
            "volume": str(M.volume()),
        },
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("name")
    ap.add_argument("out")
    a = ap.parse_args()
    text = json.dumps(export(a.name), indent=1)
    # one matrix row per line
    text = re.sub(r"\[\s*(-?\d+(?:,\s*-?\d+)*)\s*\]",
                  lambda m: "[" + ",".join(m.group(1).split()).replace(",,", ",") + "]", text)
    with open(a.out, "w") as fh:
        fh.write(text + "\n")


if __name__ == "__main__":
    main()
