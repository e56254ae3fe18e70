"""Smoke test for the plc extension module.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

from fractions import Fraction

import plc


def main():
    ident = plc.Term(r"\x. x")
    assert plc.Term(r"\y. y") == ident
    assert hash(plc.Term(r"\y. y")) == hash(ident)
    assert ident.is_value() and ident.is_closed()

    # xor: call-by-value flips once, call-by-name twice
    xor = plc.parse(r"(\x. XOR x x) (TT (+) FF)")
    tt, ff = plc.parse("TT"), plc.parse("FF")
    cbv = plc.eval_small(xor, "cbv", fuel=50)
    assert cbv.stable and cbv.lower == {ff: Fraction(1)}
    cbn = plc.eval_small(xor, "cbn", fuel=50)
    assert cbn.lower == {tt: Fraction(1, 2), ff: Fraction(1, 2)}
    assert plc.eval_big(xor, "cbn", fuel=50) == cbn.lower

    omega = plc.parse("OMEGA")
    assert plc.divergence(omega, fuel=3) == (Fraction(1), Fraction(1))
    mixed = plc.eval_small(plc.parse(r"OMEGA (+) \x. x"), "cbn", fuel=5)
    assert mixed.residual == Fraction(1, 2) and mixed.mass == Fraction(1, 2)

    geo = plc.parse("GEO")
    b = plc.eval_small(geo, fuel=200)
    for n in range(5):
        assert b.lower[plc.nat(n)] == Fraction(1, 2 ** (n + 1))
    counts, timeouts = plc.sample(geo, samples=20_000, seed=2024)
    assert timeouts == 0
    freq = counts[plc.nat(0)] / 20_000
    assert abs(freq - 0.5) < 0.02, freq

    for direction in ("v2n", "n2v"):
        assert plc.check_simulation(xor, direction, fuel=500) == "PASS"
    assert str(plc.cps(plc.parse("x"))) == r"\k#0. k#0 x"

    d = {0: Fraction(1, 4), 2: Fraction(3, 4)}
    assert plc.fdt(d).is_closed()
    assert plc.decode_nat(plc.nat(7)) == 7
    term, mass, exact = plc.completeness(d, rounds=2)
    assert exact
    assert plc.soundness(term, 2, 3) == "110"
    assert plc.soundness(geo, 1, 4) == "0100"

    try:
        plc.parse(r"\x.")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error expected")

    print("smoke test ok")


if __name__ == "__main__":
    main()
