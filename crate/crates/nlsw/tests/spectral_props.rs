//! Transform-layer properties checked against independent constructions:
//! a direct double-double summation oracle, Parseval, quadrature of analytic
//! derivatives, and the discrete norm equivalence used by the stability
//! theory.

mod support;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nlsw::spectral::{
    build_grid, dst_forward, dst_inverse, restrict_modes, restrict_nodal, spectral_l2_norm,
    spectral_semi_h1_norm, GridField, SpectralField,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_field(grid: &nlsw::spectral::Grid, rng: &mut ChaCha8Rng) -> GridField {
    GridField {
        grid: grid.clone(),
        values: (1..grid.m())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    }
}

/// Both transform paths (direct summation for small M, FFT elsewhere) match
/// the independent extended-precision summation oracle.
#[test]
fn transforms_match_direct_summation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in [8usize, 16, 32, 64] {
        let grid = build_grid(-16.0, 16.0, m).unwrap();
        let u = random_field(&grid, &mut rng);
        let got = dst_forward(&u);
        let want = support::direct_forward_dst(&u.values);
        assert!(
            support::max_abs_diff(&got.modes, &want) < 1e-13,
            "forward mismatch at M = {m}"
        );
        let coeffs = SpectralField {
            grid: grid.clone(),
            modes: u.values.clone(),
        };
        let got_inv = dst_inverse(&coeffs);
        let want_inv = support::direct_inverse_dst(&coeffs.modes);
        assert!(
            support::max_abs_diff(&got_inv.values, &want_inv) < 1e-13,
            "inverse mismatch at M = {m}"
        );
    }
}

#[test]
fn round_trip_and_linearity_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = build_grid(-16.0, 16.0, 64).unwrap();
    for _ in 0..50 {
        let u = random_field(&grid, &mut rng);
        let back = dst_inverse(&dst_forward(&u));
        assert!(support::max_abs_diff(&back.values, &u.values) < 1e-13);

        let v = random_field(&grid, &mut rng);
        let alpha = c(0.7, -0.2);
        let beta = c(-1.3, 0.4);
        let combo = GridField {
            grid: grid.clone(),
            values: u
                .values
                .iter()
                .zip(&v.values)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        };
        let lhs = dst_forward(&combo);
        let fu = dst_forward(&u);
        let fv = dst_forward(&v);
        let rhs: Vec<Complex64> = fu
            .modes
            .iter()
            .zip(&fv.modes)
            .map(|(&a, &b)| alpha * a + beta * b)
            .collect();
        assert!(support::max_abs_diff(&lhs.modes, &rhs) < 1e-13);
    }
}

/// The nodal l² norm of samples equals the mode-space L² norm of the
/// interpolant (Parseval for the sine basis).
#[test]
fn parseval_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for m in [16usize, 128] {
        let grid = build_grid(-16.0, 16.0, m).unwrap();
        for _ in 0..20 {
            let u = random_field(&grid, &mut rng);
            let nodal = support::nodal_l2(grid.h(), &u.values);
            let modal = spectral_l2_norm(&dst_forward(&u));
            assert!(
                (nodal - modal).abs() < 1e-13 * nodal.max(1.0),
                "M = {m}: {nodal} vs {modal}"
            );
        }
    }
}

/// Discrete norm equivalence: the forward-difference quotient norm bounds
/// the interpolant's derivative norm from below, and times π/2 from above.
/// This pair of inequalities is what transfers l² stability of the
/// recurrence into H¹ bounds on the interpolant.
#[test]
fn difference_quotient_and_derivative_norms_are_equivalent() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let grid = build_grid(-16.0, 16.0, 32).unwrap();
    let h = grid.h();
    for trial in 0..100 {
        let u = random_field(&grid, &mut rng);
        let semi = spectral_semi_h1_norm(&dst_forward(&u));
        // Forward differences over the full trace (boundary zeros included).
        let trace = u.full_trace();
        let mut sum = 0.0;
        for w in trace.windows(2) {
            let d = (w[1].1 - w[0].1) / h;
            sum += d.norm_sqr();
        }
        let diff_norm = (h * sum).sqrt();
        assert!(
            diff_norm <= semi * (1.0 + 1e-12),
            "trial {trial}: lower bound violated: {diff_norm} > {semi}"
        );
        assert!(
            semi <= std::f64::consts::FRAC_PI_2 * diff_norm * (1.0 + 1e-12),
            "trial {trial}: upper bound violated: {semi} > pi/2 * {diff_norm}"
        );
    }
}

/// The mode-space semi-H¹ norm agrees with direct quadrature of the
/// interpolant's analytic derivative.
#[test]
fn semi_h1_matches_quadrature_of_analytic_derivative() {
    let grid = build_grid(-16.0, 16.0, 32).unwrap();
    // A handful of fixed low modes with complex amplitudes.
    let amps = [(1usize, c(0.9, -0.2)), (4, c(-0.3, 0.5)), (9, c(0.1, 0.08))];
    let mut modes = vec![c(0.0, 0.0); 31];
    for &(l, a) in &amps {
        modes[l - 1] = a;
    }
    let field = SpectralField {
        grid: grid.clone(),
        modes,
    };
    let semi = spectral_semi_h1_norm(&field);

    // ∇u(x) = Σ a_l μ_l cos(μ_l (x − a)); integrate |∇u|² by Simpson.
    let integrand = |x: f64| {
        let mut d = c(0.0, 0.0);
        for &(l, a) in &amps {
            let mu = std::f64::consts::PI * l as f64 / 32.0;
            d += a * mu * (mu * (x + 16.0)).cos();
        }
        d.norm_sqr()
    };
    let integral = support::simpson(integrand, -16.0, 16.0, 20_000);
    assert!(
        (semi * semi - integral).abs() < 1e-10 * integral,
        "{} vs {}",
        semi * semi,
        integral
    );
}

/// Mode restriction is an orthogonal projection: norms never grow, dropped
/// tails carry the removed mass, and band-limited fields restrict exactly
/// (nodal subsampling agrees with mode truncation).
#[test]
fn restriction_is_a_contraction_and_exact_on_band_limited_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fine = build_grid(-16.0, 16.0, 64).unwrap();
    let coarse = build_grid(-16.0, 16.0, 16).unwrap();
    for _ in 0..50 {
        let u = random_field(&fine, &mut rng);
        let hat = dst_forward(&u);
        let cut = restrict_modes(&hat, &coarse).unwrap();
        assert!(spectral_l2_norm(&cut) <= spectral_l2_norm(&hat) * (1.0 + 1e-13));
        assert!(spectral_semi_h1_norm(&cut) <= spectral_semi_h1_norm(&hat) * (1.0 + 1e-13));
        // Removed mass accounted for exactly (Pythagoras).
        let w = 16.0; // (b − a)/2
        let full: f64 = hat.modes.iter().map(|z| z.norm_sqr()).sum::<f64>() * w;
        let kept: f64 = cut.modes.iter().map(|z| z.norm_sqr()).sum::<f64>() * w;
        let dropped: f64 = hat.modes[15..].iter().map(|z| z.norm_sqr()).sum::<f64>() * w;
        assert!((full - kept - dropped).abs() < 1e-12 * full.max(1.0));
    }

    // Band-limited: only modes below the coarse cut are populated.
    let mut modes = vec![c(0.0, 0.0); 63];
    for (l, z) in modes.iter_mut().enumerate().take(15) {
        *z = c(0.1 * (l as f64 + 1.0), -0.05);
    }
    let hat = SpectralField {
        grid: fine.clone(),
        modes,
    };
    let nodal_fine = dst_inverse(&hat);
    let sub = restrict_nodal(&nodal_fine, &coarse).unwrap();
    let cut = restrict_modes(&hat, &coarse).unwrap();
    let synth = dst_inverse(&cut);
    assert!(support::max_abs_diff(&sub.values, &synth.values) < 1e-13);
}
