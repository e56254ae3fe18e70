use num_bigint::BigUint;
use plc_core::Dyadic;
use proptest::prelude::*;

// Reference arithmetic on reduced fractions of machine integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frac(u128, u128);

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Frac {
    fn new(n: u128, d: u128) -> Frac {
        let g = gcd(n, d).max(1);
        if n == 0 {
            Frac(0, 1)
        } else {
            Frac(n / g, d / g)
        }
    }
    fn add(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn mul(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.0, self.1 * o.1)
    }
    fn sub(self, o: Frac) -> Option<Frac> {
        let (a, b) = (self.0 * o.1, o.0 * self.1);
        (a >= b).then(|| Frac::new(a - b, self.1 * o.1))
    }
    fn lt(self, o: Frac) -> bool {
        self.0 * o.1 < o.0 * self.1
    }
}

fn frac(d: &Dyadic) -> Frac {
    let n: u128 = d.numerator().try_into().unwrap();
    Frac::new(n, 1u128 << d.exponent())
}

fn pair() -> impl Strategy<Value = (Dyadic, Frac)> {
    (0u64..1 << 30, 0u64..30).prop_map(|(n, e)| (Dyadic::from_ratio(n, e), Frac::new(n as u128, 1 << e)))
}

proptest! {
    #[test]
    fn normalized((a, fa) in pair()) {
        prop_assert_eq!(frac(&a), fa);
        prop_assert!(a.exponent() == 0 || a.numerator().bit(0));
    }

    #[test]
    fn addition((a, fa) in pair(), (b, fb) in pair()) {
        prop_assert_eq!(frac(&(&a + &b)), fa.add(fb));
    }

    #[test]
    fn multiplication((a, fa) in pair(), (b, fb) in pair()) {
        prop_assert_eq!(frac(&(&a * &b)), fa.mul(fb));
    }

    #[test]
    fn subtraction((a, fa) in pair(), (b, fb) in pair()) {
        prop_assert_eq!(a.checked_sub(&b).map(|d| frac(&d)), fa.sub(fb));
        prop_assert_eq!(frac(&a.saturating_sub(&b)), fa.sub(fb).unwrap_or(Frac(0, 1)));
    }

    #[test]
    fn ordering((a, fa) in pair(), (b, fb) in pair()) {
        prop_assert_eq!(a < b, fa.lt(fb));
        prop_assert_eq!(a == b, fa == fb);
    }

    #[test]
    fn halving_and_doubling((a, fa) in pair()) {
        prop_assert_eq!(frac(&a.halve()), fa.mul(Frac(1, 2)));
        prop_assert_eq!(frac(&a.double()), fa.mul(Frac(2, 1)));
    }

    #[test]
    fn floor_scaled((a, fa) in pair(), bits in 0u64..40) {
        let want = (fa.0 << bits) / fa.1;
        prop_assert_eq!(a.floor_scaled(bits), BigUint::from(want));
    }

    #[test]
    fn display_round_trip((a, _) in pair()) {
        prop_assert_eq!(a.to_string().parse::<Dyadic>().unwrap(), a.clone());
    }

    #[test]
    fn decimal_parse(n in 0u64..1 << 20, e in 0u32..12) {
        // n / 2^e has an exact decimal expansion with e fractional digits
        let scaled = n as u128 * 5u128.pow(e);
        let int = scaled / 10u128.pow(e);
        let frac_part = scaled % 10u128.pow(e);
        let s = if e == 0 { int.to_string() } else { format!("{int}.{frac_part:0width$}", width = e as usize) };
        prop_assert_eq!(s.parse::<Dyadic>().unwrap(), Dyadic::from_ratio(n, e as u64));
    }

    #[test]
    fn f64_conversion((a, fa) in pair()) {
        prop_assert_eq!(a.to_f64(), fa.0 as f64 / fa.1 as f64);
    }
}

#[test]
fn rejects_non_dyadic() {
    for s in ["1/3", "0.1", "1/0", "-1", "x", "1/6"] {
        assert!(s.parse::<Dyadic>().is_err(), "{s}");
    }
}
