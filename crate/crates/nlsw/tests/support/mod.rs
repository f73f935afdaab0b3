//! Shared oracles for the integration tests.
//!
//! Everything in here is deliberately independent of the library's own
//! numerics: extended precision is built on Dekker-split double-double
//! arithmetic (the library uses FMA kernels), transforms are evaluated by
//! direct O(M²) summation with exact integer angle reduction, and special
//! functions come from their defining series. Expected values frozen into
//! tests were produced by these routines (cross-checked against 50-digit
//! arbitrary-precision runs) so that a regression in the library cannot
//! silently regenerate its own expectations.
#![allow(dead_code)]

use num_complex::Complex64;

// ---------------------------------------------------------------------------
// Double-double arithmetic (Dekker splitting, no FMA).
// ---------------------------------------------------------------------------

/// Splitter constant 2^27 + 1 for Dekker's exact product.
const SPLIT: f64 = 134_217_729.0;

/// π as a double-double (hi is the nearest f64, lo the residual).
pub const PI_DD: Dd = Dd {
    hi: 3.141592653589793116e0,
    lo: 1.224646799147353207e-16,
};

/// 2π as a double-double.
pub const TWO_PI_DD: Dd = Dd {
    hi: 6.283185307179586232e0,
    lo: 2.449293598294706414e-16,
};

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2: ~31 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

fn split(a: f64) -> (f64, f64) {
    let t = SPLIT * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Exact product a·b = p + err via Dekker splitting.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

impl Dd {
    pub fn from_f64(a: f64) -> Self {
        Dd { hi: a, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    /// Accurate (Knuth-style) double-double addition.
    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi, lo }
    }

    /// Long division: three quotient corrections give full dd accuracy.
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul_f64(q2));
        let q3 = r.hi / other.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::from_f64(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::from_f64(0.0);
        }
        let y0 = self.hi.sqrt();
        // One Newton step in dd: y ← y + (a − y²)/(2y).
        let y = Dd::from_f64(y0);
        let corr = self.sub(y.mul(y)).div(y.mul_f64(2.0));
        y.add(corr)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }
}

/// Complex number with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn zero() -> Self {
        Cdd {
            re: Dd::from_f64(0.0),
            im: Dd::from_f64(0.0),
        }
    }

    pub fn from_c64(z: Complex64) -> Self {
        Cdd {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }

    pub fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn sub(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.sub(o.re),
            im: self.im.sub(o.im),
        }
    }

    pub fn neg(self) -> Cdd {
        Cdd {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn mul_dd(self, s: Dd) -> Cdd {
        Cdd {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }

    pub fn div_dd(self, s: Dd) -> Cdd {
        Cdd {
            re: self.re.div(s),
            im: self.im.div(s),
        }
    }

    pub fn conj(self) -> Cdd {
        Cdd {
            re: self.re,
            im: self.im.neg(),
        }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn abs_f64(self) -> f64 {
        let m = self.re.mul(self.re).add(self.im.mul(self.im));
        m.sqrt().to_f64()
    }
}

// ---------------------------------------------------------------------------
// Argument reduction and trigonometry in double-double.
// ---------------------------------------------------------------------------

/// Reduce a double-double angle modulo 2π into (approximately) [−π, π].
pub fn reduce_2pi_dd(x: Dd) -> Dd {
    let k = (x.hi / TWO_PI_DD.hi).round();
    if k == 0.0 {
        return x;
    }
    x.sub(TWO_PI_DD.mul_f64(k))
}

pub fn reduce_2pi(x: f64) -> Dd {
    reduce_2pi_dd(Dd::from_f64(x))
}

/// sin of a reduced angle |r| ≲ π, by Taylor series after quadrant folding.
pub fn sin_dd(r: Dd) -> Dd {
    let (r, flip_cos) = fold_quadrant(r);
    let _ = flip_cos;
    sin_taylor(r)
}

/// cos of a reduced angle |r| ≲ π.
pub fn cos_dd(r: Dd) -> Dd {
    let (r, flip_cos) = fold_quadrant(r);
    let c = cos_taylor(r);
    if flip_cos {
        c.neg()
    } else {
        c
    }
}

/// e^{ir} for a reduced angle.
pub fn expi_dd(r: Dd) -> Cdd {
    let (rf, flip_cos) = fold_quadrant(r);
    let c = cos_taylor(rf);
    Cdd {
        re: if flip_cos { c.neg() } else { c },
        im: sin_taylor(rf),
    }
}

/// Fold |r| ≤ π (plus slack) into |r'| ≤ π/2 with sin(r) = sin(r'),
/// cos(r) = ±cos(r'); returns (r', cos-sign-flipped).
fn fold_quadrant(r: Dd) -> (Dd, bool) {
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
    // sin r = Σ (−1)^k r^{2k+1}/(2k+1)!; |r| ≤ π/2 + slack.
    let r2 = r.mul(r);
    let mut term = r;
    let mut sum = r;
    let mut k = 1.0f64;
    for _ in 0..30 {
        term = term.mul(r2).div(Dd::from_f64((2.0 * k) * (2.0 * k + 1.0))).neg();
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
    let mut term = Dd::from_f64(1.0);
    let mut sum = term;
    let mut k = 1.0f64;
    for _ in 0..30 {
        term = term.mul(r2).div(Dd::from_f64((2.0 * k - 1.0) * (2.0 * k))).neg();
        sum = sum.add(term);
        if term.hi.abs() < 1e-35 {
            break;
        }
        k += 1.0;
    }
    sum
}

// ---------------------------------------------------------------------------
// Characteristic roots, σ, and (1−σ)/β oracles.
// ---------------------------------------------------------------------------

/// β₊, β₋, δ for one mode, from the quadratic's textbook form evaluated in
/// double-double (32 digits absorb the catastrophic cancellation in β₋).
pub fn oracle_char_roots(mu: f64, eps: f64) -> (Dd, Dd, Dd) {
    let e2 = {
        let (p, e) = two_prod(eps, eps);
        Dd { hi: p, lo: e }
    };
    let mu2 = {
        let (p, e) = two_prod(mu, mu);
        Dd { hi: p, lo: e }
    };
    let disc = Dd::from_f64(1.0).add(e2.mul(mu2).mul_f64(4.0));
    let root = disc.sqrt();
    let two_e2 = e2.mul_f64(2.0);
    let beta_plus = Dd::from_f64(1.0).add(root).div(two_e2);
    let beta_minus = Dd::from_f64(1.0).sub(root).div(two_e2);
    let delta = root.div(e2);
    (beta_plus, beta_minus, delta)
}

/// σ(x) = e^{ix}·sin(x)/x (= ∫₀¹ e^{2ixs} ds), σ(0) = 1.
///
/// Small |x|: defining series Σ_{k≥0} (2ix)^k/(k+1)!. Large |x|: reduced-angle
/// trigonometric form (the series cancellation exceeds dd headroom past
/// |x| ≈ 5, so the branch point sits well inside both regions of validity).
pub fn oracle_sigma(x: f64) -> Cdd {
    oracle_sigma_dd(Dd::from_f64(x))
}

/// Same as [`oracle_sigma`], for an argument carried in double-double (used
/// to keep τ·β products exact inside composite oracles).
pub fn oracle_sigma_dd(x: Dd) -> Cdd {
    if x.hi == 0.0 {
        return Cdd {
            re: Dd::from_f64(1.0),
            im: Dd::from_f64(0.0),
        };
    }
    if x.hi.abs() <= 5.0 {
        let z = Cdd {
            re: Dd::from_f64(0.0),
            im: x.mul_f64(2.0),
        };
        let mut term = Cdd {
            re: Dd::from_f64(1.0),
            im: Dd::from_f64(0.0),
        };
        let mut sum = term;
        for k in 1..=60 {
            term = term.mul(z).div_dd(Dd::from_f64((k + 1) as f64));
            sum = sum.add(term);
            if term.re.hi.abs() < 1e-36 && term.im.hi.abs() < 1e-36 {
                break;
            }
        }
        sum
    } else {
        let r = reduce_2pi_dd(x);
        let s = sin_dd(r);
        expi_dd(r).mul_dd(s.div(x))
    }
}

/// (1 − σ(τβ/2))/β, the well-conditioned factor inside the q-coefficients.
///
/// Small |τβ|: the division is taken analytically term by term,
/// (1−σ(τβ/2))/β = −iτ Σ_{m≥0} (iτβ)^m/(m+2)!, which stays finite as β → 0
/// (limit −iτ/2). Large |τβ|: direct evaluation in dd.
pub fn oracle_oms_over_beta(beta: f64, tau: f64) -> Cdd {
    let tb = Dd::prod(tau, beta);
    if tb.hi.abs() <= 1.0 {
        let z = Cdd {
            re: Dd::from_f64(0.0),
            im: tb,
        };
        let mut term = Cdd {
            re: Dd::from_f64(0.5),
            im: Dd::from_f64(0.0),
        };
        let mut sum = term;
        for m in 1..=40 {
            term = term.mul(z).div_dd(Dd::from_f64((m + 2) as f64));
            sum = sum.add(term);
            if term.re.hi.abs() < 1e-36 && term.im.hi.abs() < 1e-36 {
                break;
            }
        }
        // × (−iτ)
        let mit = Cdd {
            re: Dd::from_f64(0.0),
            im: Dd::from_f64(-tau),
        };
        mit.mul(sum)
    } else {
        let one = Cdd {
            re: Dd::from_f64(1.0),
            im: Dd::from_f64(0.0),
        };
        one.sub(oracle_sigma_dd(tb.mul_f64(0.5)))
            .div_dd(Dd::from_f64(beta))
    }
}

// ---------------------------------------------------------------------------
// Exact linear (f ≡ 0) mode evolution.
// ---------------------------------------------------------------------------

/// Exact solution of the linear mode ODE iψ̂′ − ε²ψ̂″ − μ²ψ̂ = 0 at t = n·τ:
/// ψ̂(t) = γ e^{iβ₊t} + ν e^{iβ₋t} with γ, ν fixed by (ψ̂(0), ψ̂′(0)).
/// Returns the value and the interference-free mode scale |γ| + |ν|.
pub fn oracle_linear_mode(
    psi0_hat: Complex64,
    dpsi0_hat: Complex64,
    mu: f64,
    eps: f64,
    tau: f64,
    n_steps: u64,
) -> (Complex64, f64) {
    let (bp, bm, delta) = oracle_char_roots(mu, eps);
    let p0 = Cdd::from_c64(psi0_hat);
    // i·ψ̂′(0)
    let ip1 = Cdd::from_c64(Complex64::new(-dpsi0_hat.im, dpsi0_hat.re));
    // γ = −(β₋ψ̂₀ + iψ̂′₀)/δ, ν = (β₊ψ̂₀ + iψ̂′₀)/δ.
    let gamma = p0.mul_dd(bm).add(ip1).neg().div_dd(delta);
    let nu = p0.mul_dd(bp).add(ip1).div_dd(delta);

    let (t_hi, t_lo) = two_prod(n_steps as f64, tau);
    let t = Dd { hi: t_hi, lo: t_lo };
    let ephp = expi_dd(reduce_2pi_dd(bp.mul(t)));
    let ephm = expi_dd(reduce_2pi_dd(bm.mul(t)));
    let value = gamma.mul(ephp).add(nu.mul(ephm));
    (value.to_c64(), gamma.abs_f64() + nu.abs_f64())
}

// ---------------------------------------------------------------------------
// Direct O(M²) sine transform with exact integer angle reduction.
// ---------------------------------------------------------------------------

/// Forward transform by direct summation: out_l = (2/M) Σ_j in_j sin(jlπ/M),
/// l = 1..M−1, from interior samples in_j (j = 1..M−1). All angles are
/// sin((j·l mod 2M)·π/M) from a table built in double-double, sums in dd.
pub fn direct_forward_dst(interior: &[Complex64]) -> Vec<Complex64> {
    direct_dst_kernel(interior, true)
}

/// Synthesis by direct summation: out_j = Σ_l in_l sin(jlπ/M) (no prefactor).
pub fn direct_inverse_dst(coeffs: &[Complex64]) -> Vec<Complex64> {
    direct_dst_kernel(coeffs, false)
}

fn direct_dst_kernel(data: &[Complex64], forward: bool) -> Vec<Complex64> {
    let m = data.len() + 1;
    // sin(k·π/M) for k = 0..2M−1, in double-double.
    let table: Vec<Dd> = (0..2 * m)
        .map(|k| sin_dd(reduce_2pi_dd(PI_DD.mul_f64(k as f64).mul_f64(1.0 / m as f64))))
        .collect();
    let scale = if forward {
        Dd::from_f64(2.0).div(Dd::from_f64(m as f64))
    } else {
        Dd::from_f64(1.0)
    };
    (1..m)
        .map(|l| {
            let mut re = Dd::from_f64(0.0);
            let mut im = Dd::from_f64(0.0);
            for (idx, z) in data.iter().enumerate() {
                let j = idx + 1;
                let s = table[(j * l) % (2 * m)];
                re = re.add(s.mul_f64(z.re));
                im = im.add(s.mul_f64(z.im));
            }
            Complex64::new(re.mul(scale).to_f64(), im.mul(scale).to_f64())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Quadrature and closed forms for the benchmark data.
// ---------------------------------------------------------------------------

/// Composite Simpson rule with n (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// ψ₀(x) = π^{−1/4} e^{−x²/2}.
pub fn gauss_psi0(x: f64) -> f64 {
    std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp()
}

/// ψ₀′(x) = −x·π^{−1/4} e^{−x²/2}.
pub fn gauss_dpsi0(x: f64) -> f64 {
    -x * gauss_psi0(x)
}

/// ψ₁ = i(∂ₓₓψ₀ + f(|ψ₀|²)ψ₀) for the cubic f(s) = −s and Gaussian ψ₀:
/// i(π^{−1/4}(x²−1)e^{−x²/2} − π^{−3/4}e^{−3x²/2}).
pub fn gauss_psi1(x: f64) -> Complex64 {
    let pi = std::f64::consts::PI;
    let lap = pi.powf(-0.25) * (x * x - 1.0) * (-x * x / 2.0).exp();
    let cubic = -pi.powf(-0.75) * (-1.5 * x * x).exp();
    Complex64::new(0.0, lap + cubic)
}

/// Perturbation profile ω(x) = e^{−x²/2}.
pub fn gauss_omega(x: f64) -> f64 {
    (-x * x / 2.0).exp()
}

/// Independent Tf(z) = f(|z|²)·z for a caller-supplied f.
pub fn tf_of<F: Fn(f64) -> f64>(f: &F, z: Complex64) -> Complex64 {
    f(z.norm_sqr()) * z
}

// ---------------------------------------------------------------------------
// Convenience: nodal and mode-space norms (plain f64, used only to compare
// library output against *independently constructed* fields).
// ---------------------------------------------------------------------------

pub fn nodal_l2(h: f64, interior: &[Complex64]) -> f64 {
    (h * interior.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
