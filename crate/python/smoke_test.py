"""Smoke test for the xnet Python module.

Build and install first:

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
"""

import cmath
import json
import math
import sys

import xnet


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    return ok


def main():
    ok = True
    phi = xnet.reference_phi()
    ok &= check("reference phi", abs(phi - math.atan(2) / 2) < 1e-15)

    q = xnet.Constellation("qpsk", phi)
    ok &= check("qpsk size", len(q) == 4 and q.bits_per_symbol == 2)
    energy = sum(abs(p) ** 2 for p in q.points()) / len(q)
    ok &= check("unit energy", abs(energy - 1) < 1e-12, f"{energy:.15f}")
    ok &= check("cpd positive", q.cpd() > 0, f"{q.cpd():.6f}")
    ok &= check("cpd zero unrotated", xnet.Constellation("qpsk").cpd() == 0)
    ok &= check("gray roundtrip", all(q.bits_to_point(q.label_bits(k)) == q.points()[k] for k in range(4)))

    x = xnet.encode("proposed", [q.points()[k % 4] for k in range(6)], math.pi / 4)
    ok &= check("codeword shape", len(x) == 3 and all(len(r) == 4 for r in x))
    ok &= check("cancellation", xnet.verify_cancellation("proposed") and xnet.verify_cancellation("sr"))

    for theta in (0.0, 1.0):
        c = xnet.certificate(theta)
        det_r = complex(*c["det_r"])
        ok &= check(f"det(R) theta={theta}", abs(det_r + 2) < 1e-9, f"{det_r:.12f}")

    rep = xnet.verify("cancellation", draws=50)
    ok &= check("verify cancellation", all(c["passed"] for c in rep["checks"]))

    cfg = {
        "scheme": "ljj3",
        "constellation": "qpsk",
        "rotation_phi": phi,
        "p_db_list": [4.0, 8.0, 12.0],
        "target_bit_errors": 50,
        "seed": 7,
    }
    curve = xnet.simulate(json.dumps(cfg))
    bers = [p["bit_errors"] / (p["trials"] * p["bits_per_trial"]) for p in curve["points"]]
    ok &= check("ber decreasing", bers[0] > bers[-1] > 0, " ".join(f"{b:.3e}" for b in bers))
    csv = xnet.simulate_csv(json.dumps(cfg))
    ok &= check("csv deterministic", csv == xnet.simulate_csv(json.dumps(cfg)))
    ok &= check("slope finite", math.isfinite(xnet.diversity_slope(csv, 3)))

    try:
        xnet.Constellation("17-qam")
        ok &= check("bad constellation raises", False)
    except ValueError:
        ok &= check("bad constellation raises", True)

    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
