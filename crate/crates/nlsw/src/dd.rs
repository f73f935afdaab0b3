//! Double-double scalars (FMA-based error-free transforms).
//!
//! The two-level mode recurrence behind the integrator has characteristic
//! multipliers e^{iτβ₊}, e^{iτβ₋} whose gap can shrink to ~τ·δ; any rounding
//! of the recurrence coefficients or state is amplified by the reciprocal of
//! that gap over long runs. Representing the coefficients and the two state
//! levels as unevaluated f64 sums (roughly 31 significant digits) pushes that
//! floor far below the accuracy targets while staying in plain hardware
//! arithmetic.
//!
//! The phase build also needs argument reduction: for small ε the angles
//! τβ₊ ~ τ/ε² reach 10¹², where naive `f64::sin` has no correct digits. All
//! reductions happen here, modulo a double-double 2π.

use num_complex::Complex64;

/// π as an unevaluated double-f64 sum.
pub const PI_DD: Dd = Dd {
    hi: 3.141592653589793116e0,
    lo: 1.224646799147353207e-16,
};

/// 2π as an unevaluated double-f64 sum.
pub const TWO_PI_DD: Dd = Dd {
    hi: 6.283185307179586232e0,
    lo: 2.449293598294706414e-16,
};

/// Unevaluated sum hi + lo, |lo| ≤ ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Exact product via fused multiply-add: a·b = p + e.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[inline]
    pub fn new(a: f64) -> Self {
        Dd { hi: a, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = self.hi.mul_add(o.lo, self.lo.mul_add(o.hi, p2));
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, self.lo.mul_add(b, p2));
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::new(0.0);
        }
        let y = Dd::new(self.hi.sqrt());
        let corr = self.sub(y.mul(y)).div(y.mul_f64(2.0));
        y.add(corr)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Complex number with double-double components.
#[derive(Clone, Copy, Debug, Default)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    #[inline]
    pub fn from_c64(z: Complex64) -> Self {
        Cdd {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    #[inline]
    pub fn add_c64(self, z: Complex64) -> Cdd {
        Cdd {
            re: self.re.add(Dd::new(z.re)),
            im: self.im.add(Dd::new(z.im)),
        }
    }

    #[inline]
    pub fn sub(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.sub(o.re),
            im: self.im.sub(o.im),
        }
    }

    #[inline]
    pub fn conj(self) -> Cdd {
        Cdd {
            re: self.re,
            im: self.im.neg(),
        }
    }

    #[inline]
    pub fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    #[inline]
    pub fn mul_dd(self, s: Dd) -> Cdd {
        Cdd {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }

    #[inline]
    pub fn neg(self) -> Cdd {
        Cdd {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }
}

/// Reduce an angle to (approximately) [−π, π] modulo 2π.
pub fn reduce_2pi(x: Dd) -> Dd {
    let k = (x.hi / TWO_PI_DD.hi).round();
    if k == 0.0 {
        return x;
    }
    x.sub(TWO_PI_DD.mul_f64(k))
}

/// sin of a reduced angle (|r| ≲ π).
pub fn sin_reduced(r: Dd) -> Dd {
    let (rf, _) = fold(r);
    sin_taylor(rf)
}

/// cos of a reduced angle (|r| ≲ π).
pub fn cos_reduced(r: Dd) -> Dd {
    let (rf, flip) = fold(r);
    let c = cos_taylor(rf);
    if flip {
        c.neg()
    } else {
        c
    }
}

/// e^{ir} for a reduced angle (|r| ≲ π).
pub fn expi_reduced(r: Dd) -> Cdd {
    let (rf, flip) = fold(r);
    let c = cos_taylor(rf);
    Cdd {
        re: if flip { c.neg() } else { c },
        im: sin_taylor(rf),
    }
}

/// Map to |r'| ≤ π/2 with sin r = sin r', cos r = ±cos r'.
fn fold(r: Dd) -> (Dd, bool) {
    let half_pi = PI_DD.hi / 2.0;
    if r.hi > half_pi {
        (PI_DD.sub(r), true)
    } else if r.hi < -half_pi {
        (PI_DD.neg().sub(r), true)
    } else {
        (r, false)
    }
}

fn sin_taylor(r: Dd) -> Dd {
    let r2 = r.mul(r);
    let mut term = r;
    let mut sum = r;
    let mut k = 1.0f64;
    while k < 32.0 {
        term = term.mul(r2).mul_f64(-1.0).div(Dd::new((2.0 * k) * (2.0 * k + 1.0)));
        sum = sum.add(term);
        if term.hi.abs() < 1e-35 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn cos_taylor(r: Dd) -> Dd {
    let r2 = r.mul(r);
    let mut term = Dd::new(1.0);
    let mut sum = term;
    let mut k = 1.0f64;
    while k < 32.0 {
        term = term.mul(r2).mul_f64(-1.0).div(Dd::new((2.0 * k - 1.0) * (2.0 * k)));
        sum = sum.add(term);
        if term.hi.abs() < 1e-35 {
            break;
        }
        k += 1.0;
    }
    sum
}
