//! Error metrics and the convergence-study drivers.
//!
//! The error of a coarse run against a fine reference is the H¹ error of the
//! *interpolant*: the coarse solution's sine series is zero-extended onto the
//! reference's mode set, so the norms count both the mode-wise differences on
//! the shared (coarse) modes and the reference's unresolved tail. On heavily
//! under-resolved grids the tail **is** the spatial error; on resolved grids
//! it vanishes and the comparison degenerates to a plain mode-wise
//! difference. The H¹ figure is the sum ‖e‖_{L²} + ‖∇e‖_{L²} (not the
//! root-sum-square), matching the convention of the benchmark tables.
//!
//! Three drivers produce the standard studies: a spatial sweep (fixed tiny τ,
//! h halving), a temporal sweep (fixed fine grid, τ divided by 4), and the
//! diagonal scan along τ ~ ε² where the ill-prepared problem's order
//! degenerates.

use serde::Serialize;
use std::path::Path;

use crate::reference::{ewi_reference, ProblemData, ReferenceSpec};
use crate::spectral::{
    dst_inverse, restrict_modes, restrict_nodal, SpectralField,
};
use crate::{Error, Result};

/// Run parameters stamped into an [`ErrorReport`] (the grid spacing h is
/// taken from the coarse field itself).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunMeta {
    pub eps: f64,
    pub alpha: f64,
    pub tau: f64,
    pub t: f64,
}

/// Error norms of one coarse run against a reference, plus the parameters
/// that produced it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorReport {
    /// ‖e‖_{L²} of the interpolant error.
    pub l2: f64,
    /// ‖∇e‖_{L²}.
    pub semi_h1: f64,
    /// l2 + semi_h1, exactly that sum.
    pub h1: f64,
    /// max |e| over the coarse interior nodes.
    pub linf: f64,
    pub eps: f64,
    pub alpha: f64,
    pub tau: f64,
    pub h: f64,
    pub t: f64,
}

/// Compare a numeric solution against a reference on an equal or finer
/// nested grid.
///
/// L² and semi-H¹ are computed over the reference's full mode set (numeric
/// zero-extended); the sup norm is the nodal difference at the coarse nodes.
pub fn error_report(
    numeric: &SpectralField,
    reference: &SpectralField,
    meta: RunMeta,
) -> Result<ErrorReport> {
    // Validates nesting and hands back the shared low modes.
    let overlap = restrict_modes(reference, &numeric.grid)?;
    let n_shared = numeric.modes.len();

    let w = (numeric.grid.b() - numeric.grid.a()) / 2.0;
    let mut sum_l2 = 0.0;
    let mut sum_h1 = 0.0;
    for l in 0..reference.modes.len() {
        let d = if l < n_shared {
            numeric.modes[l] - overlap.modes[l]
        } else {
            -reference.modes[l]
        };
        let mu = reference.grid.mu()[l];
        let d2 = d.norm_sqr();
        sum_l2 += d2;
        sum_h1 += mu * mu * d2;
    }
    let l2 = (w * sum_l2).sqrt();
    let semi_h1 = (w * sum_h1).sqrt();

    let coarse_nodal = dst_inverse(numeric);
    let ref_nodal = restrict_nodal(&dst_inverse(reference), &numeric.grid)?;
    let linf = coarse_nodal
        .values
        .iter()
        .zip(&ref_nodal.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    Ok(ErrorReport {
        l2,
        semi_h1,
        h1: l2 + semi_h1,
        linf,
        eps: meta.eps,
        alpha: meta.alpha,
        tau: meta.tau,
        h: numeric.grid.h(),
        t: meta.t,
    })
}

/// Alternative comparison convention: sample the reference at the coarse
/// nodes, transform there, and difference on the coarse mode set only (no
/// reference tail). Useful to quantify how much of a reported error is
/// unresolved tail versus in-space mismatch.
pub fn error_report_sampled(
    numeric: &SpectralField,
    reference: &SpectralField,
    meta: RunMeta,
) -> Result<ErrorReport> {
    let ref_nodal = restrict_nodal(&dst_inverse(reference), &numeric.grid)?;
    let ref_coarse = crate::spectral::dst_forward(&ref_nodal);
    let w = (numeric.grid.b() - numeric.grid.a()) / 2.0;
    let mut sum_l2 = 0.0;
    let mut sum_h1 = 0.0;
    for (l, (&a, &b)) in numeric.modes.iter().zip(&ref_coarse.modes).enumerate() {
        let d = (a - b).norm_sqr();
        let mu = numeric.grid.mu()[l];
        sum_l2 += d;
        sum_h1 += mu * mu * d;
    }
    let l2 = (w * sum_l2).sqrt();
    let semi_h1 = (w * sum_h1).sqrt();
    let coarse_nodal = dst_inverse(numeric);
    let linf = coarse_nodal
        .values
        .iter()
        .zip(&ref_nodal.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(ErrorReport {
        l2,
        semi_h1,
        h1: l2 + semi_h1,
        linf,
        eps: meta.eps,
        alpha: meta.alpha,
        tau: meta.tau,
        h: numeric.grid.h(),
        t: meta.t,
    })
}

fn check_errors_positive(errs: &[f64]) -> Result<()> {
    if errs.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::Config(
            "rate computation needs strictly positive finite errors".to_string(),
        ));
    }
    Ok(())
}

/// Rates for a τ-sweep with ratio 4: rates[k] = log₂(e_k / e_{k+1}) / 2,
/// which is the observed order in τ (a 4× step refinement at order r shrinks
/// the error by 4^r = 2^{2r}).
pub fn temporal_rate(errs: &[f64]) -> Result<Vec<f64>> {
    check_errors_positive(errs)?;
    Ok(errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2() / 2.0)
        .collect())
}

/// Rates along the diagonal path (ε, τ) → (ε/2, τ/4): the same formula as
/// [`temporal_rate`]; on this path an order-one degeneracy shows up as rates
/// near 1 instead of 2.
pub fn diagonal_rate(errs: &[f64]) -> Result<Vec<f64>> {
    temporal_rate(errs)
}

/// Observed order per h-halving: log₂(e_k / e_{k+1}). For spectrally
/// accurate spatial sweeps this grows with refinement instead of settling.
pub fn refinement_order(errs: &[f64]) -> Result<Vec<f64>> {
    check_errors_positive(errs)?;
    Ok(errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// A full errors-and-rates table: one row per ε, one column per axis value
/// (τ or h).
#[derive(Clone, Debug, Serialize)]
pub struct RateTable {
    /// "tau" or "h".
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub eps: Vec<f64>,
    pub alpha: f64,
    pub t_final: f64,
    /// errors[row][col], row indexed like `eps`, col like `axis`.
    pub errors: Vec<Vec<f64>>,
    /// rates[row] has one entry fewer than the axis (the first table column
    /// has no rate).
    pub rates: Vec<Vec<f64>>,
    pub rate_definition: String,
}

/// The diagonal scan result: k-indexed path (ε₀/2ᵏ, τ₀/4ᵏ).
#[derive(Clone, Debug, Serialize)]
pub struct DiagonalScan {
    pub eps: Vec<f64>,
    pub tau: Vec<f64>,
    pub errors: Vec<f64>,
    pub rates: Vec<f64>,
    pub alpha: f64,
    pub t_final: f64,
    pub rate_definition: String,
}

// ---------------------------------------------------------------------------
// Sweep drivers.
// ---------------------------------------------------------------------------

/// Spatial study: fixed small τ (so the time error cancels against a
/// same-step reference), h halving across columns, one row per ε.
#[derive(Clone, Debug)]
pub struct SpatialSweepConfig {
    pub eps_list: Vec<f64>,
    pub h_list: Vec<f64>,
    pub tau: f64,
    pub alpha: f64,
    pub t_final: f64,
    pub ref_m: usize,
}

impl SpatialSweepConfig {
    /// Desk scale: minutes, not overnight. Reference M = 2048 at the same
    /// τ = 1e−5 as the coarse runs, so the temporal error cancels in the
    /// comparison and the spatial decay is exposed down to ~1e−10.
    pub fn desk() -> Self {
        SpatialSweepConfig {
            eps_list: vec![0.5, 0.125, 0.015625],
            h_list: vec![2.0, 1.0, 0.5, 0.25],
            tau: 1e-5,
            alpha: 0.0,
            t_final: 1.0,
            ref_m: 2048,
        }
    }

    /// Full-resolution settings (τ = 1e−6, reference M = 4096): ~100× the
    /// desk cost.
    pub fn paper_exact() -> Self {
        SpatialSweepConfig {
            tau: 1e-6,
            ref_m: 4096,
            ..SpatialSweepConfig::desk()
        }
    }
}

fn m_from_h(a: f64, b: f64, h: f64) -> Result<usize> {
    let m_real = (b - a) / h;
    let m = m_real.round();
    if !(m >= 8.0) || (m_real - m).abs() > 1e-9 * m {
        return Err(Error::Config(format!(
            "grid spacing h = {h} does not divide [{a}, {b}] into at least 8 cells"
        )));
    }
    Ok(m as usize)
}

/// Run the spatial study. References are computed per ε (one fine run each,
/// reused through `cache_dir` across processes); the coarse cells run in
/// parallel.
pub fn spatial_sweep(
    problem: &ProblemData,
    config: &SpatialSweepConfig,
    cache_dir: Option<&Path>,
) -> Result<RateTable> {
    if config.eps_list.is_empty() || config.h_list.is_empty() {
        return Err(Error::Config(
            "spatial sweep needs at least one eps and one h".to_string(),
        ));
    }
    let ms: Vec<usize> = config
        .h_list
        .iter()
        .map(|&h| m_from_h(problem.a, problem.b, h))
        .collect::<Result<Vec<_>>>()?;

    let mut refs = Vec::new();
    for &eps in &config.eps_list {
        let spec = ReferenceSpec {
            problem: problem.clone(),
            eps,
            alpha: config.alpha,
            t_final: config.t_final,
            fine_m: config.ref_m,
            fine_tau: config.tau,
        };
        refs.push(ewi_reference(&spec, cache_dir)?);
    }

    use rayon::prelude::*;
    let cells: Vec<(usize, usize)> = (0..config.eps_list.len())
        .flat_map(|i| (0..ms.len()).map(move |j| (i, j)))
        .collect();
    let reports: Vec<(usize, usize, f64)> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<(usize, usize, f64)> {
            let eps = config.eps_list[i];
            let numeric = problem.run(ms[j], eps, config.alpha, config.tau, config.t_final)?;
            let report = error_report(
                &numeric,
                &refs[i],
                RunMeta {
                    eps,
                    alpha: config.alpha,
                    tau: config.tau,
                    t: config.t_final,
                },
            )?;
            Ok((i, j, report.h1))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut errors = vec![vec![0.0; ms.len()]; config.eps_list.len()];
    for (i, j, e) in reports {
        errors[i][j] = e;
    }
    let rates = errors
        .iter()
        .map(|row| refinement_order(row))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable {
        axis_name: "h".to_string(),
        axis: config.h_list.clone(),
        eps: config.eps_list.clone(),
        alpha: config.alpha,
        t_final: config.t_final,
        errors,
        rates,
        rate_definition: "log2(e(2h)/e(h))".to_string(),
    })
}

/// Temporal study: fixed grid, τ divided by 4 across columns, one row per ε.
#[derive(Clone, Debug)]
pub struct TemporalSweepConfig {
    pub eps_list: Vec<f64>,
    pub tau_list: Vec<f64>,
    pub m: usize,
    pub alpha: f64,
    pub t_final: f64,
    pub ref_m: usize,
    pub ref_tau: f64,
}

impl TemporalSweepConfig {
    /// Desk scale: M = 512, τ = 0.2/4ᵏ for k = 0..4, reference (2048, 1e−5).
    pub fn desk(alpha: f64) -> Self {
        TemporalSweepConfig {
            eps_list: vec![
                0.5,
                0.25,
                0.125,
                0.0625,
                0.03125,
                0.015625,
                2f64.powi(-10),
            ],
            tau_list: (0..=4).map(|k| 0.2 / 4f64.powi(k)).collect(),
            m: 512,
            alpha,
            t_final: 1.0,
            ref_m: 2048,
            ref_tau: 1e-5,
        }
    }

    /// Full-resolution settings: M = 1024, k = 0..7, reference (4096, 1e−6),
    /// rows down to ε = 2⁻²⁰.
    pub fn paper_exact(alpha: f64) -> Self {
        let mut eps_list: Vec<f64> = vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];
        eps_list.push(2f64.powi(-10));
        eps_list.push(2f64.powi(-20));
        TemporalSweepConfig {
            eps_list,
            tau_list: (0..=7).map(|k| 0.2 / 4f64.powi(k)).collect(),
            m: 1024,
            alpha,
            t_final: 1.0,
            ref_m: 4096,
            ref_tau: 1e-6,
        }
    }
}

/// Run the temporal study; one fine reference per ε, coarse cells in
/// parallel.
pub fn temporal_sweep(
    problem: &ProblemData,
    config: &TemporalSweepConfig,
    cache_dir: Option<&Path>,
) -> Result<RateTable> {
    if config.eps_list.is_empty() || config.tau_list.is_empty() {
        return Err(Error::Config(
            "temporal sweep needs at least one eps and one tau".to_string(),
        ));
    }
    let mut refs = Vec::new();
    for &eps in &config.eps_list {
        let spec = ReferenceSpec {
            problem: problem.clone(),
            eps,
            alpha: config.alpha,
            t_final: config.t_final,
            fine_m: config.ref_m,
            fine_tau: config.ref_tau,
        };
        refs.push(ewi_reference(&spec, cache_dir)?);
    }

    use rayon::prelude::*;
    let cells: Vec<(usize, usize)> = (0..config.eps_list.len())
        .flat_map(|i| (0..config.tau_list.len()).map(move |j| (i, j)))
        .collect();
    let reports: Vec<(usize, usize, f64)> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<(usize, usize, f64)> {
            let eps = config.eps_list[i];
            let tau = config.tau_list[j];
            let numeric = problem.run(config.m, eps, config.alpha, tau, config.t_final)?;
            let report = error_report(
                &numeric,
                &refs[i],
                RunMeta {
                    eps,
                    alpha: config.alpha,
                    tau,
                    t: config.t_final,
                },
            )?;
            Ok((i, j, report.h1))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut errors = vec![vec![0.0; config.tau_list.len()]; config.eps_list.len()];
    for (i, j, e) in reports {
        errors[i][j] = e;
    }
    let rates = errors
        .iter()
        .map(|row| temporal_rate(row))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable {
        axis_name: "tau".to_string(),
        axis: config.tau_list.clone(),
        eps: config.eps_list.clone(),
        alpha: config.alpha,
        t_final: config.t_final,
        errors,
        rates,
        rate_definition: "log2(e(4tau)/e(tau))/2".to_string(),
    })
}

/// Diagonal scan along (ε, τ) = (ε₀/2ᵏ, τ₀/4ᵏ).
#[derive(Clone, Debug)]
pub struct DiagonalSweepConfig {
    pub eps0: f64,
    pub tau0: f64,
    pub k_max: usize,
    pub m: usize,
    pub alpha: f64,
    pub t_final: f64,
    pub ref_m: usize,
    pub ref_tau: f64,
}

impl DiagonalSweepConfig {
    /// Desk scale: k = 0..4, M = 512, reference (2048, 1e−5).
    pub fn desk() -> Self {
        DiagonalSweepConfig {
            eps0: 0.5,
            tau0: 0.2,
            k_max: 4,
            m: 512,
            alpha: 0.0,
            t_final: 1.0,
            ref_m: 2048,
            ref_tau: 1e-5,
        }
    }

    /// Full-resolution settings: k = 0..5, M = 1024, reference (4096, 1e−6).
    pub fn paper_exact() -> Self {
        DiagonalSweepConfig {
            k_max: 5,
            m: 1024,
            ref_m: 4096,
            ref_tau: 1e-6,
            ..DiagonalSweepConfig::desk()
        }
    }
}

/// Run the diagonal scan (each k has its own ε, hence its own reference).
pub fn diagonal_sweep(
    problem: &ProblemData,
    config: &DiagonalSweepConfig,
    cache_dir: Option<&Path>,
) -> Result<DiagonalScan> {
    let ks: Vec<usize> = (0..=config.k_max).collect();
    let eps: Vec<f64> = ks.iter().map(|&k| config.eps0 / 2f64.powi(k as i32)).collect();
    let tau: Vec<f64> = ks.iter().map(|&k| config.tau0 / 4f64.powi(k as i32)).collect();

    let mut refs = Vec::new();
    for &e in &eps {
        let spec = ReferenceSpec {
            problem: problem.clone(),
            eps: e,
            alpha: config.alpha,
            t_final: config.t_final,
            fine_m: config.ref_m,
            fine_tau: config.ref_tau,
        };
        refs.push(ewi_reference(&spec, cache_dir)?);
    }

    use rayon::prelude::*;
    let errors: Vec<f64> = ks
        .par_iter()
        .map(|&k| -> Result<f64> {
            let numeric = problem.run(config.m, eps[k], config.alpha, tau[k], config.t_final)?;
            let report = error_report(
                &numeric,
                &refs[k],
                RunMeta {
                    eps: eps[k],
                    alpha: config.alpha,
                    tau: tau[k],
                    t: config.t_final,
                },
            )?;
            Ok(report.h1)
        })
        .collect::<Result<Vec<_>>>()?;

    let rates = diagonal_rate(&errors)?;
    Ok(DiagonalScan {
        eps,
        tau,
        errors,
        rates,
        alpha: config.alpha,
        t_final: config.t_final,
        rate_definition: "log2(e(4tau,2eps)/e(tau,eps))/2".to_string(),
    })
}

// ---------------------------------------------------------------------------
// Deterministic text renderings (CSV for humans/diffing, JSON for machines).
// ---------------------------------------------------------------------------

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

/// Errors table as CSV: header row of axis values, one row per ε.
pub fn rate_table_errors_csv(table: &RateTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("eps\\{}", table.axis_name));
    for v in &table.axis {
        out.push_str(&format!(",{}", sci(*v)));
    }
    out.push('\n');
    for (i, &e) in table.eps.iter().enumerate() {
        out.push_str(&sci(e));
        for v in &table.errors[i] {
            out.push_str(&format!(",{}", sci(*v)));
        }
        out.push('\n');
    }
    out
}

/// Rates table as CSV; the first data column has no rate and is printed "-"
/// as in the published tables.
pub fn rate_table_rates_csv(table: &RateTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("eps\\{}", table.axis_name));
    for v in &table.axis {
        out.push_str(&format!(",{}", sci(*v)));
    }
    out.push('\n');
    for (i, &e) in table.eps.iter().enumerate() {
        out.push_str(&sci(e));
        out.push_str(",-");
        for r in &table.rates[i] {
            out.push_str(&format!(",{r:.2}"));
        }
        out.push('\n');
    }
    out
}

/// Diagonal scan as a single CSV (one row per k).
pub fn diagonal_csv(scan: &DiagonalScan) -> String {
    let mut out = String::from("k,eps,tau,h1_error,rate\n");
    for k in 0..scan.eps.len() {
        let rate = if k == 0 {
            "-".to_string()
        } else {
            format!("{:.2}", scan.rates[k - 1])
        };
        out.push_str(&format!(
            "{k},{},{},{},{rate}\n",
            sci(scan.eps[k]),
            sci(scan.tau[k]),
            sci(scan.errors[k])
        ));
    }
    out
}
