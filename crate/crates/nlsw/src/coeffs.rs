//! Per-mode integrator coefficients for fixed (grid, ε, τ).
//!
//! Each sine mode obeys i ψ̂′ − ε² ψ̂″ − μ² ψ̂ = nonlinear terms, whose free
//! evolution mixes two characteristic phases e^{iβ±t}. The scheme weights
//! below integrate those phases exactly and the nonlinearity by quadrature
//! of its Duhamel integral against linear-in-time interpolants, which is what
//! keeps the accuracy uniform as ε → 0.
//!
//! Numerical hazards handled here:
//! - β₋ suffers catastrophic cancellation in its textbook form for ε²μ² ≪ 1;
//!   it is always computed from the rationalized form −2μ²/(1+√(1+4ε²μ²)).
//! - The phase angles τβ₊ ~ τ/ε² reach 10¹² for the smallest ε of interest;
//!   all angles are built in double-double arithmetic from exact products and
//!   reduced modulo 2π before any trigonometry (naive `f64::sin` would return
//!   noise and, worse, coefficient phase errors get amplified by the two-level
//!   recurrence over long runs).
//! - (1−σ)/β has a removable singularity at β = 0; a series branch covers
//!   small |τβ|.
//! - The recurrence weights `c` and `d` are also kept in double-double: the
//!   recurrence's characteristic-root gap can shrink to ~τ per mode, and the
//!   one-time f64 rounding of c, d would shift those roots by ~ulp/gap —
//!   enough to break the 1e−10 long-run exactness target on resonant modes.

use num_complex::Complex64;

use crate::dd::{self, Cdd, Dd};
use crate::spectral::Grid;
use crate::{Error, Result};

/// Characteristic roots of −ε²β² + β − μ² = 0 for one mode.
#[derive(Clone, Copy, Debug)]
pub struct CharRoots {
    /// Fast root β₊ = (1 + √(1+4ε²μ²))/(2ε²) > 0.
    pub beta_plus: f64,
    /// Slow (Schrödinger) root β₋ = −2μ²/(1 + √(1+4ε²μ²)) ≤ 0.
    pub beta_minus: f64,
    /// Gap δ = β₊ − β₋ = √(1+4ε²μ²)/ε².
    pub delta: f64,
}

/// Characteristic roots for one mode frequency.
///
/// β₋ uses the rationalized form throughout: the textbook difference
/// (1 − √(1+4ε²μ²))/(2ε²) loses every significant digit once ε²μ² ≪ 1.
pub fn char_roots(mu: f64, eps: f64) -> Result<CharRoots> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::Config(format!("mu must be >= 0, got {mu}")));
    }
    let e2 = eps * eps;
    let root = (1.0 + 4.0 * e2 * mu * mu).sqrt();
    Ok(CharRoots {
        beta_plus: (1.0 + root) / (2.0 * e2),
        beta_minus: -2.0 * mu * mu / (1.0 + root),
        delta: root / e2,
    })
}

/// Filtered phase σ(β, τ) = e^{iτβ/2}·sinc(τβ/2), σ(·, 0-argument) = 1.
///
/// For |τβ/2| < 1e−4 the sinc factor uses its Taylor polynomial
/// 1 − x²/6 + x⁴/120 to avoid 0/0 noise.
pub fn sigma(beta: f64, tau: f64) -> Complex64 {
    let x = tau * beta / 2.0;
    let phase = Complex64::new(x.cos(), x.sin());
    let sinc = if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    };
    phase * sinc
}

/// The well-conditioned quotient (1 − σ(β, τ))/β.
///
/// For |τβ| < 1e−3 the quotient is expanded as
/// −iτ Σ_{m=0..3} (iτβ)^m/(m+2)!, which stays finite as β → 0 (limit −iτ/2);
/// otherwise the direct formula is used. Both branches carry ≥ 11 accurate
/// digits in the overlap band.
pub fn one_minus_sigma_over_beta(beta: f64, tau: f64) -> Complex64 {
    let tb = tau * beta;
    if tb.abs() < 1e-3 {
        let z = Complex64::new(0.0, tb);
        let poly = Complex64::new(0.5, 0.0)
            + z / 6.0
            + z * z / 24.0
            + z * z * z / 120.0;
        Complex64::new(0.0, -tau) * poly
    } else {
        (Complex64::new(1.0, 0.0) - sigma(beta, tau)) / beta
    }
}

/// All per-mode scheme weights for one (grid, ε, τ), plus the ± split used
/// by the decomposition identities. Index i holds mode l = i+1.
#[derive(Clone, Debug)]
pub struct SchemeCoefficients {
    pub grid: Grid,
    pub eps: f64,
    pub tau: f64,
    pub beta_plus: Vec<f64>,
    pub beta_minus: Vec<f64>,
    /// First-step weight of ψ̃⁰.
    pub c0: Vec<Complex64>,
    /// First-step weight of ψ̃₁ᵉ.
    pub d0: Vec<Complex64>,
    /// Recurrence weight of ψ̃^{n−1} (c = −e^{iτ/ε²}, mode-independent).
    pub c: Vec<Complex64>,
    /// Recurrence weight of ψ̃ⁿ (d = 2e^{iτ/2ε²}cos(τδ/2)).
    pub d: Vec<Complex64>,
    /// Weight of T̃f(ψⁿ).
    pub p: Vec<Complex64>,
    /// Weight of D̃(ψⁿ).
    pub q: Vec<Complex64>,
    /// Weight of T̃f(ψ^{n−1}) (subtracted).
    pub p_star: Vec<Complex64>,
    /// Weight of D̃(ψ^{n−1}) (subtracted).
    pub q_star: Vec<Complex64>,
    pub p_plus: Vec<Complex64>,
    pub p_minus: Vec<Complex64>,
    pub q_plus: Vec<Complex64>,
    pub q_minus: Vec<Complex64>,
    /// e^{iτβ₊} per mode.
    pub phase_plus: Vec<Complex64>,
    /// e^{iτβ₋} per mode.
    pub phase_minus: Vec<Complex64>,
    /// Double-double c, shared by all modes (see module notes on why the
    /// recurrence weights keep their extended representation).
    pub(crate) c_dd: Cdd,
    /// Double-double d per mode.
    pub(crate) d_dd: Vec<Cdd>,
}

/// Precompute every scheme weight for (grid, ε, τ).
pub fn build_coefficients(grid: &Grid, eps: f64, tau: f64) -> Result<SchemeCoefficients> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!(
            "tau must be positive and finite, got {tau}"
        )));
    }

    let n = grid.m() - 1;
    let e2 = Dd::prod(eps, eps);
    // τ/ε² and τ/(2ε²), reduced independently.
    let s_full = Dd::new(tau).div(e2);
    let es = dd::expi_reduced(dd::reduce_2pi(s_full));
    let eh = dd::expi_reduced(dd::reduce_2pi(s_full.mul_f64(0.5)));
    let c_dd = es.neg();
    let c_f64 = c_dd.to_c64();

    let mut out = SchemeCoefficients {
        grid: grid.clone(),
        eps,
        tau,
        beta_plus: Vec::with_capacity(n),
        beta_minus: Vec::with_capacity(n),
        c0: Vec::with_capacity(n),
        d0: Vec::with_capacity(n),
        c: vec![c_f64; n],
        d: Vec::with_capacity(n),
        p: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        p_star: Vec::with_capacity(n),
        q_star: Vec::with_capacity(n),
        p_plus: Vec::with_capacity(n),
        p_minus: Vec::with_capacity(n),
        q_plus: Vec::with_capacity(n),
        q_minus: Vec::with_capacity(n),
        phase_plus: Vec::with_capacity(n),
        phase_minus: Vec::with_capacity(n),
        c_dd,
        d_dd: Vec::with_capacity(n),
    };

    for &mu in grid.mu() {
        let m = ModeWeights::build(mu, eps, tau, e2, es, eh);
        out.beta_plus.push(m.beta_plus);
        out.beta_minus.push(m.beta_minus);
        out.c0.push(m.c0);
        out.d0.push(m.d0);
        out.d.push(m.d_dd.to_c64());
        out.p.push(m.p);
        out.q.push(m.q);
        out.p_star.push(m.p_star);
        out.q_star.push(m.q_star);
        out.p_plus.push(m.p_plus);
        out.p_minus.push(m.p_minus);
        out.q_plus.push(m.q_plus);
        out.q_minus.push(m.q_minus);
        out.phase_plus.push(m.phase_plus);
        out.phase_minus.push(m.phase_minus);
        out.d_dd.push(m.d_dd);
    }
    Ok(out)
}

/// One mode's weights, assembled in double-double throughout.
struct ModeWeights {
    beta_plus: f64,
    beta_minus: f64,
    c0: Complex64,
    d0: Complex64,
    d_dd: Cdd,
    p: Complex64,
    q: Complex64,
    p_star: Complex64,
    q_star: Complex64,
    p_plus: Complex64,
    p_minus: Complex64,
    q_plus: Complex64,
    q_minus: Complex64,
    phase_plus: Complex64,
    phase_minus: Complex64,
}

impl ModeWeights {
    fn build(mu: f64, eps: f64, tau: f64, e2: Dd, es: Cdd, eh: Cdd) -> ModeWeights {
        let _ = eps;
        // Roots in double-double from exact products.
        let mu2 = Dd::prod(mu, mu);
        let disc = Dd::new(1.0).add(e2.mul(mu2).mul_f64(4.0));
        // r = √(1+4ε²μ²) = ε²δ; τ/(ε²δ) = τ/r needs no cancellation care.
        let r = disc.sqrt();
        let one_plus_r = Dd::new(1.0).add(r);
        let bp = one_plus_r.div(e2.mul_f64(2.0));
        let bm = mu2.mul_f64(-2.0).div(one_plus_r);
        let delta = r.div(e2);

        // Every angle reduced independently from its full dd value.
        let ang_p = dd::reduce_2pi(bp.mul_f64(tau));
        let ang_m = dd::reduce_2pi(bm.mul_f64(tau));
        let ang_p_half = dd::reduce_2pi(bp.mul_f64(tau * 0.5));
        let ang_m_half = dd::reduce_2pi(bm.mul_f64(tau * 0.5));
        let ang_d_half = dd::reduce_2pi(delta.mul_f64(tau * 0.5));

        let php = dd::expi_reduced(ang_p);
        let phm = dd::expi_reduced(ang_m);

        // c0 = (β₊ e^{iτβ₋} − β₋ e^{iτβ₊})/δ.
        let c0 = phm
            .mul_dd(bp)
            .add(php.mul_dd(bm).neg())
            .mul_dd(Dd::new(1.0).div(delta));

        // d0 = τ e^{iτ/2ε²} sinc(τδ/2): sin from the reduced angle, the
        // (possibly huge) true argument in the denominator.
        let x_d = delta.mul_f64(tau * 0.5);
        let sinc_d = dd::sin_reduced(ang_d_half).div(x_d);
        let d0 = eh.mul_dd(sinc_d.mul_f64(tau));

        // d = 2 e^{iτ/2ε²} cos(τδ/2), kept in dd for the recurrence.
        let d_dd = eh.mul_dd(dd::cos_reduced(ang_d_half).mul_f64(2.0));

        // σ± = e^{iτβ±/2} sinc(τβ±/2); sinc via reduced sin over true arg.
        let sigma_of = |ang_half: Dd, beta: Dd| -> Cdd {
            let x = beta.mul_f64(tau * 0.5);
            if x.hi == 0.0 {
                return Cdd {
                    re: Dd::new(1.0),
                    im: Dd::new(0.0),
                };
            }
            dd::expi_reduced(ang_half).mul_dd(dd::sin_reduced(ang_half).div(x))
        };
        let sig_p = sigma_of(ang_p_half, bp);
        let sig_m = sigma_of(ang_m_half, bm);

        // (1−σ±)/β±: series for small |τβ| (β₋ → 0 on low modes), else direct.
        let oms_of = |sig: Cdd, beta: Dd| -> Cdd {
            let tb = beta.mul_f64(tau);
            if tb.hi.abs() <= 1.0 {
                let z = Cdd {
                    re: Dd::new(0.0),
                    im: tb,
                };
                let mut term = Cdd {
                    re: Dd::new(0.5),
                    im: Dd::new(0.0),
                };
                let mut sum = term;
                for m in 1..=40 {
                    term = term.mul(z).mul_dd(Dd::new(1.0).div(Dd::new((m + 2) as f64)));
                    sum = sum.add(term);
                    if term.re.hi.abs() < 1e-36 && term.im.hi.abs() < 1e-36 {
                        break;
                    }
                }
                Cdd {
                    re: Dd::new(0.0),
                    im: Dd::new(-tau),
                }
                .mul(sum)
            } else {
                Cdd {
                    re: Dd::new(1.0).sub(sig.re),
                    im: sig.im.neg(),
                }
                .mul_dd(Dd::new(1.0).div(beta))
            }
        };
        let oms_p = oms_of(sig_p, bp);
        let oms_m = oms_of(sig_m, bm);

        // Shared prefactors: τ/(ε²δ) = τ/r; −i·(τ/r).
        let t_over_r = Dd::new(tau).div(r);
        let mit_over_r = Cdd {
            re: Dd::new(0.0),
            im: t_over_r.neg(),
        };

        // p± = (−iτ/ε²δ)·conj(σ±);  q± = (τ/ε²δ)·(1−σ±)/β± · e^{−iτβ±}.
        let p_plus = mit_over_r.mul(sig_p.conj());
        let p_minus = mit_over_r.mul(sig_m.conj());
        let q_plus = oms_p.mul_dd(t_over_r).mul(php.conj());
        let q_minus = oms_m.mul_dd(t_over_r).mul(phm.conj());

        // p = (−iτ/ε²δ)(σ₊−σ₋);  q = (τ/ε²δ)[(1−σ₊)/β₊ − (1−σ₋)/β₋];
        // p* = e^{iτ/ε²}(p₊−p₋);  q* = e^{iτ/ε²}(q₊−q₋).
        let p = mit_over_r.mul(sig_p.sub(sig_m));
        let q = oms_p.sub(oms_m).mul_dd(t_over_r);
        let p_star = es.mul(p_plus.sub(p_minus));
        let q_star = es.mul(q_plus.sub(q_minus));

        ModeWeights {
            beta_plus: bp.to_f64(),
            beta_minus: bm.to_f64(),
            c0: c0.to_c64(),
            d0: d0.to_c64(),
            d_dd,
            p: p.to_c64(),
            q: q.to_c64(),
            p_star: p_star.to_c64(),
            q_star: q_star.to_c64(),
            p_plus: p_plus.to_c64(),
            p_minus: p_minus.to_c64(),
            q_plus: q_plus.to_c64(),
            q_minus: q_minus.to_c64(),
            phase_plus: php.to_c64(),
            phase_minus: phm.to_c64(),
        }
    }
}

impl SchemeCoefficients {
    /// Number of modes (M − 1).
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Debug dump: one row per mode with every weight's re/im pair.
    pub fn dump_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "l,mu,beta_plus,beta_minus,c0_re,c0_im,d0_re,d0_im,c_re,c_im,d_re,d_im,\
             p_re,p_im,q_re,q_im,p_star_re,p_star_im,q_star_re,q_star_im,\
             p_plus_re,p_plus_im,p_minus_re,p_minus_im,q_plus_re,q_plus_im,\
             q_minus_re,q_minus_im,phase_plus_re,phase_plus_im,phase_minus_re,phase_minus_im"
        )?;
        for i in 0..self.len() {
            let z = |v: &Vec<Complex64>| format!("{:.17e},{:.17e}", v[i].re, v[i].im);
            writeln!(
                w,
                "{},{:.17e},{:.17e},{:.17e},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                i + 1,
                self.grid.mu()[i],
                self.beta_plus[i],
                self.beta_minus[i],
                z(&self.c0),
                z(&self.d0),
                z(&self.c),
                z(&self.d),
                z(&self.p),
                z(&self.q),
                z(&self.p_star),
                z(&self.q_star),
                z(&self.p_plus),
                z(&self.p_minus),
                z(&self.q_plus),
                z(&self.q_minus),
                z(&self.phase_plus),
                z(&self.phase_minus),
            )?;
        }
        Ok(())
    }
}
