//! Double-double arithmetic for the O(n^2) reference sums, whose terms
//! cancel heavily when the kernel weight is concentrated on few points.

use std::ops::{Add, Mul, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct TwoFloat {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl TwoFloat {
    /// `a - b` without rounding.
    pub(crate) fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        TwoFloat { hi, lo }
    }

    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for TwoFloat {
    fn from(hi: f64) -> Self {
        TwoFloat { hi, lo: 0.0 }
    }
}

impl Add for TwoFloat {
    type Output = TwoFloat;
    fn add(self, o: TwoFloat) -> TwoFloat {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = fast_two_sum(s, e + t);
        let (hi, lo) = fast_two_sum(s, e + f);
        TwoFloat { hi, lo }
    }
}

impl Sub for TwoFloat {
    type Output = TwoFloat;
    fn sub(self, o: TwoFloat) -> TwoFloat {
        self + TwoFloat { hi: -o.hi, lo: -o.lo }
    }
}

impl Mul for TwoFloat {
    type Output = TwoFloat;
    fn mul(self, o: TwoFloat) -> TwoFloat {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let (hi, lo) = fast_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        TwoFloat { hi, lo }
    }
}

impl Mul<f64> for TwoFloat {
    type Output = TwoFloat;
    fn mul(self, o: f64) -> TwoFloat {
        self * TwoFloat::from(o)
    }
}
