//! Reference solutions.
//!
//! Two kinds: a fine-grid, fine-step self-reference computed with the same
//! integrator (standing in for the unknown exact solution in convergence
//! studies), and an independent Strang-splitting solver for the limiting
//! Schrödinger equation i∂ₜψ + ∂ₓₓψ + f(|ψ|²)ψ = 0, used to measure how fast
//! the wave-operator solution approaches its ε → 0 limit.
//!
//! Fine references are expensive (10⁵–10⁶ steps), so they can be cached on
//! disk: a little-endian binary blob of the final mode coefficients plus a
//! JSON sidecar carrying a hash of the full configuration. A cache entry is
//! only trusted when the sidecar hash matches the requested configuration
//! bit for bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::spectral::{
    build_grid, dst_forward, dst_inverse, spectral_l2_norm, spectral_semi_h1_norm, Grid,
    GridField, SpectralField,
};
use crate::stepper::{integrate, Nonlinearity, SolverConfig, VelocityMode};
use crate::{Error, Result};

/// Version stamp written into cache blobs; bump on any layout change.
const CACHE_FORMAT_VERSION: u64 = 1;

type Sampler = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Continuous problem data: the interval, initial wave ψ₀, the velocity
/// perturbation profile ω, optionally a closed-form velocity ψ₁, and the
/// nonlinearity. Carried as samplers so the same problem can be realized on
/// any grid (coarse runs and fine references alike).
///
/// The `name` participates in cache keys: two problems with the same name,
/// interval, and nonlinearity are assumed identical.
#[derive(Clone)]
pub struct ProblemData {
    name: String,
    pub a: f64,
    pub b: f64,
    psi0: Sampler,
    omega: Sampler,
    psi1: Option<Sampler>,
    pub nonlinearity: Nonlinearity,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("nonlinearity", &self.nonlinearity)
            .field("velocity", &self.velocity_tag())
            .finish()
    }
}

impl ProblemData {
    /// The Gaussian benchmark: ψ₀ = π^{−1/4}e^{−x²/2}, ω = e^{−x²/2}, cubic
    /// f(s) = −s on [−16, 16] (wide enough that the Dirichlet truncation
    /// error sits far below every measured error).
    pub fn gaussian() -> Self {
        ProblemData {
            name: "gaussian".to_string(),
            a: -16.0,
            b: 16.0,
            psi0: Arc::new(|x| {
                Complex64::new(
                    std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp(),
                    0.0,
                )
            }),
            omega: Arc::new(|x| Complex64::new((-x * x / 2.0).exp(), 0.0)),
            psi1: None,
            nonlinearity: Nonlinearity::cubic(),
        }
    }

    /// A single sine mode l with f ≡ 0 and zero perturbation — every run on
    /// it has a closed form.
    pub fn single_mode(a: f64, b: f64, l: usize) -> Self {
        let mu = std::f64::consts::PI * l as f64 / (b - a);
        ProblemData {
            name: format!("single_mode_{l}"),
            a,
            b,
            psi0: Arc::new(move |x| Complex64::new((mu * (x - a)).sin(), 0.0)),
            omega: Arc::new(|_| Complex64::new(0.0, 0.0)),
            psi1: None,
            nonlinearity: Nonlinearity::none(),
        }
    }

    /// Fully custom problem data.
    pub fn custom(
        name: impl Into<String>,
        a: f64,
        b: f64,
        psi0: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        omega: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        psi1: Option<Sampler>,
        nonlinearity: Nonlinearity,
    ) -> Self {
        ProblemData {
            name: name.into(),
            a,
            b,
            psi0: Arc::new(psi0),
            omega: Arc::new(omega),
            psi1,
            nonlinearity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn velocity_tag(&self) -> &'static str {
        if self.psi1.is_some() {
            "exact"
        } else {
            "spectral"
        }
    }

    /// Sample (ψ₀, ω) on a grid.
    pub fn fields_on(&self, grid: &Grid) -> (GridField, GridField) {
        let psi0 = GridField::from_fn(grid.clone(), |x| (self.psi0)(x));
        let omega = GridField::from_fn(grid.clone(), |x| (self.omega)(x));
        (psi0, omega)
    }

    /// Assemble a full solver configuration on a grid.
    pub fn solver_config(
        &self,
        grid: &Grid,
        eps: f64,
        alpha: f64,
        tau: f64,
        t_final: f64,
    ) -> SolverConfig {
        let velocity_mode = match &self.psi1 {
            Some(s) => {
                let sampler = s.clone();
                VelocityMode::Exact(GridField::from_fn(grid.clone(), move |x| sampler(x)))
            }
            None => VelocityMode::SpectralApprox,
        };
        SolverConfig {
            grid: grid.clone(),
            eps,
            alpha,
            tau,
            t_final,
            nonlinearity: self.nonlinearity.clone(),
            velocity_mode,
        }
    }

    /// Convenience: run the integrator on this problem at the given
    /// resolution and return the final mode coefficients.
    pub fn run(
        &self,
        m: usize,
        eps: f64,
        alpha: f64,
        tau: f64,
        t_final: f64,
    ) -> Result<SpectralField> {
        let grid = build_grid(self.a, self.b, m)?;
        let config = self.solver_config(&grid, eps, alpha, tau, t_final);
        let (psi0, omega) = self.fields_on(&grid);
        let out = integrate(&config, &psi0, &omega, None)?;
        Ok(dst_forward(&out.psi))
    }
}

/// A fine-resolution reference run: the problem plus (ε, α, t) and the fine
/// grid/step to integrate at.
#[derive(Clone, Debug)]
pub struct ReferenceSpec {
    pub problem: ProblemData,
    pub eps: f64,
    pub alpha: f64,
    pub t_final: f64,
    pub fine_m: usize,
    pub fine_tau: f64,
}

impl ReferenceSpec {
    /// Desk-scale default: M = 2048, τ = 1e−5 — minutes, not overnight, and
    /// accurate to ~1e−9 on the Gaussian benchmark (the temporal error of
    /// the reference itself is ~τ² ≈ 1e−10).
    pub fn desk(problem: ProblemData, eps: f64, alpha: f64, t_final: f64) -> Self {
        ReferenceSpec {
            problem,
            eps,
            alpha,
            t_final,
            fine_m: 2048,
            fine_tau: 1e-5,
        }
    }

    /// Full-resolution reference: M = 4096 (h = 1/128 on [−16, 16]) and
    /// τ = 1e−6. Roughly 100× the desk cost; meant for overnight table
    /// reproduction.
    pub fn paper_exact(problem: ProblemData, eps: f64, alpha: f64, t_final: f64) -> Self {
        ReferenceSpec {
            problem,
            eps,
            alpha,
            t_final,
            fine_m: 4096,
            fine_tau: 1e-6,
        }
    }

    /// Check that this reference can serve a coarse run at (m, τ): nested
    /// grid and a step at least 16× finer.
    pub fn validate_for_target(&self, m: usize, tau: f64) -> Result<()> {
        if self.fine_m < m || self.fine_m % m != 0 {
            return Err(Error::Config(format!(
                "reference grid M = {} does not nest target M = {m}",
                self.fine_m
            )));
        }
        if self.fine_tau > tau / 16.0 {
            return Err(Error::Config(format!(
                "reference step {} is not 16x finer than target step {tau}",
                self.fine_tau
            )));
        }
        Ok(())
    }

    /// Hash of every quantity the reference depends on, over exact float
    /// bits — identical configurations hash identically on any platform.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        let desc = format!(
            "reference-v{CACHE_FORMAT_VERSION}|a={:016x}|b={:016x}|m={}|tau={:016x}|t={:016x}|eps={:016x}|alpha={:016x}|problem={}|nl={}|vel={}",
            self.problem.a.to_bits(),
            self.problem.b.to_bits(),
            self.fine_m,
            self.fine_tau.to_bits(),
            self.t_final.to_bits(),
            self.eps.to_bits(),
            self.alpha.to_bits(),
            self.problem.name,
            self.problem.nonlinearity.name(),
            self.problem.velocity_tag(),
        );
        hasher.update(desc.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn cache_paths(&self, dir: &Path) -> (PathBuf, PathBuf) {
        let stem = format!("ref-{}", &self.config_hash()[..16]);
        (dir.join(format!("{stem}.bin")), dir.join(format!("{stem}.json")))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheSidecar {
    format_version: u64,
    hash: String,
    problem: String,
    nonlinearity: String,
    velocity: String,
    a: f64,
    b: f64,
    m: usize,
    fine_tau: f64,
    t_final: f64,
    eps: f64,
    alpha: f64,
}

/// Compute (or load from `cache_dir`) the fine reference solution's mode
/// coefficients at t_final.
///
/// Cache protocol: a missing entry is computed and written atomically
/// (temp file + rename, safe under concurrent callers); an entry whose
/// sidecar hash or binary header disagrees with the request is reported as
/// [`Error::Cache`] rather than silently recomputed.
pub fn ewi_reference(spec: &ReferenceSpec, cache_dir: Option<&Path>) -> Result<SpectralField> {
    if let Some(dir) = cache_dir {
        if let Some(field) = load_cached(spec, dir)? {
            return Ok(field);
        }
    }
    let field = spec.problem.run(
        spec.fine_m,
        spec.eps,
        spec.alpha,
        spec.fine_tau,
        spec.t_final,
    )?;
    if let Some(dir) = cache_dir {
        store_cached(spec, dir, &field)?;
    }
    Ok(field)
}

fn load_cached(spec: &ReferenceSpec, dir: &Path) -> Result<Option<SpectralField>> {
    let (bin_path, json_path) = spec.cache_paths(dir);
    if !bin_path.exists() || !json_path.exists() {
        return Ok(None); // a half-written entry is a miss, not an error
    }
    let sidecar: CacheSidecar = serde_json::from_str(&fs::read_to_string(&json_path)?)
        .map_err(|e| Error::Cache(format!("unreadable sidecar {}: {e}", json_path.display())))?;
    let want = spec.config_hash();
    if sidecar.hash != want || sidecar.format_version != CACHE_FORMAT_VERSION {
        return Err(Error::Cache(format!(
            "cache entry {} does not match the requested configuration",
            json_path.display()
        )));
    }

    let mut file = fs::File::open(&bin_path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let m = spec.fine_m;
    let expected_len = 56 + (m - 1) * 16;
    if bytes.len() != expected_len {
        return Err(Error::Cache(format!(
            "cache blob {} has {} bytes, expected {expected_len}",
            bin_path.display(),
            bytes.len()
        )));
    }
    let f = |i: usize| f64::from_le_bytes(bytes[i * 8..(i + 1) * 8].try_into().unwrap());
    let header_ok = f(0).to_bits() == spec.problem.a.to_bits()
        && f(1).to_bits() == spec.problem.b.to_bits()
        && f(2).to_bits() == (m as f64).to_bits()
        && f(3).to_bits() == spec.t_final.to_bits()
        && f(4).to_bits() == spec.eps.to_bits()
        && f(5).to_bits() == spec.alpha.to_bits()
        && f(6).to_bits() == (CACHE_FORMAT_VERSION as f64).to_bits();
    if !header_ok {
        return Err(Error::Cache(format!(
            "cache blob {} header disagrees with the requested configuration",
            bin_path.display()
        )));
    }
    let mut modes = Vec::with_capacity(m - 1);
    for l in 0..m - 1 {
        let re = f(7 + 2 * l);
        let im = f(8 + 2 * l);
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Cache(format!(
                "cache blob {} contains non-finite values",
                bin_path.display()
            )));
        }
        modes.push(Complex64::new(re, im));
    }
    let grid = build_grid(spec.problem.a, spec.problem.b, m)?;
    Ok(Some(SpectralField { grid, modes }))
}

fn store_cached(spec: &ReferenceSpec, dir: &Path, field: &SpectralField) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (bin_path, json_path) = spec.cache_paths(dir);
    let m = spec.fine_m;

    let mut bytes = Vec::with_capacity(56 + (m - 1) * 16);
    for v in [
        spec.problem.a,
        spec.problem.b,
        m as f64,
        spec.t_final,
        spec.eps,
        spec.alpha,
        CACHE_FORMAT_VERSION as f64,
    ] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for z in &field.modes {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }

    let sidecar = CacheSidecar {
        format_version: CACHE_FORMAT_VERSION,
        hash: spec.config_hash(),
        problem: spec.problem.name.clone(),
        nonlinearity: spec.problem.nonlinearity.name().to_string(),
        velocity: spec.problem.velocity_tag().to_string(),
        a: spec.problem.a,
        b: spec.problem.b,
        m,
        fine_tau: spec.fine_tau,
        t_final: spec.t_final,
        eps: spec.eps,
        alpha: spec.alpha,
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Cache(format!("sidecar serialization failed: {e}")))?;

    // Blob first, sidecar second: a crash in between leaves a blob without a
    // sidecar, which readers treat as a miss.
    let pid = std::process::id();
    let bin_tmp = bin_path.with_extension(format!("bin.tmp.{pid}"));
    fs::write(&bin_tmp, &bytes)?;
    fs::rename(&bin_tmp, &bin_path)?;
    let json_tmp = json_path.with_extension(format!("json.tmp.{pid}"));
    fs::write(&json_tmp, json)?;
    fs::rename(&json_tmp, &json_path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Strang splitting for the limiting Schrödinger flow.
// ---------------------------------------------------------------------------

/// Half-step nonlinear phase rotation ψ ← e^{i·dt·f(|ψ|²)}ψ, applied nodally.
/// The modulus is invariant: f is real, so this is a pure phase.
fn nonlinear_phase(values: &mut [Complex64], dt: f64, nl: &Nonlinearity) {
    for z in values {
        let theta = dt * nl.f(z.norm_sqr());
        *z *= Complex64::from_polar(1.0, theta);
    }
}

/// One Strang step for i∂ₜψ + ∂ₓₓψ + f(|ψ|²)ψ = 0: half nonlinear phase,
/// full linear mode rotation e^{−iμ_l²τ}, half nonlinear phase.
pub fn nls_strang_step(state: &SpectralField, tau: f64, nl: &Nonlinearity) -> SpectralField {
    let grid = state.grid.clone();
    let mut u = dst_inverse(state);
    nonlinear_phase(&mut u.values, tau / 2.0, nl);
    let mut hat = dst_forward(&u);
    for (z, &mu) in hat.modes.iter_mut().zip(grid.mu()) {
        *z *= Complex64::from_polar(1.0, -mu * mu * tau);
    }
    let mut u = dst_inverse(&hat);
    nonlinear_phase(&mut u.values, tau / 2.0, nl);
    dst_forward(&u)
}

/// Integrate the limiting Schrödinger equation from ψ₀ to t_final by Strang
/// splitting; returns the final mode coefficients.
pub fn nls_strang_integrate(
    psi0: &GridField,
    nl: &Nonlinearity,
    tau: f64,
    t_final: f64,
) -> Result<SpectralField> {
    if !(tau > 0.0 && tau.is_finite() && t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!(
            "splitting needs positive tau and t_final, got {tau} and {t_final}"
        )));
    }
    let n = (t_final / tau).round();
    if n < 1.0 || (n * tau - t_final).abs() > 0.5 * f64::EPSILON * t_final {
        return Err(Error::Config(format!(
            "t_final = {t_final} is not an integer number of steps tau = {tau}"
        )));
    }
    let mut state = dst_forward(psi0);
    for _ in 0..n as u64 {
        state = nls_strang_step(&state, tau, nl);
    }
    if !state
        .modes
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(Error::BlowUp {
            step: n as u64,
            time: t_final,
        });
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// Model distance: wave-operator solution vs its small-ε limit.
// ---------------------------------------------------------------------------

/// One row of the model-distance sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ModelDistanceRow {
    pub eps: f64,
    /// H¹ distance between the wave-operator run and the limiting
    /// Schrödinger run at t_final.
    pub distance_h1: f64,
}

/// Result of a model-distance sweep with its fitted decay slope.
#[derive(Clone, Debug, Serialize)]
pub struct ModelDistanceTable {
    pub rows: Vec<ModelDistanceRow>,
    /// Least-squares slope of log₂(distance) against log₂(ε) over the
    /// `tail` smallest ε values. ~2 once ε is small enough that the ε²
    /// leading term dominates; the largest ε in a wide sweep saturate at
    /// O(1) distance and are excluded from the fit on purpose.
    pub slope: f64,
    pub tail: usize,
}

/// Resolutions for a model-distance sweep.
#[derive(Clone, Debug)]
pub struct ModelDistanceConfig {
    pub m: usize,
    /// Step for the wave-operator runs (uniformly accurate in ε).
    pub tau_wave: f64,
    /// Step for the limiting-model run.
    pub tau_limit: f64,
    pub t_final: f64,
    pub alpha: f64,
    /// How many of the smallest ε enter the slope fit (≥ 2).
    pub tail: usize,
}

impl Default for ModelDistanceConfig {
    fn default() -> Self {
        ModelDistanceConfig {
            m: 1024,
            tau_wave: 1e-4,
            tau_limit: 1e-4,
            t_final: 1.0,
            alpha: 2.0,
            tail: 4,
        }
    }
}

/// Sweep ε and measure the H¹ distance between the wave-operator solution
/// and the limiting Schrödinger solution at t_final (both at fixed fine
/// resolution; the limiting run does not depend on ε and is computed once).
pub fn model_distance(
    problem: &ProblemData,
    eps_sweep: &[f64],
    config: &ModelDistanceConfig,
) -> Result<ModelDistanceTable> {
    if eps_sweep.is_empty() {
        return Err(Error::Config("eps sweep must not be empty".to_string()));
    }
    if !eps_sweep.windows(2).all(|w| w[0] > w[1]) || eps_sweep.iter().any(|&e| e <= 0.0) {
        return Err(Error::Config(
            "eps sweep must be positive and strictly decreasing".to_string(),
        ));
    }
    if config.tail < 2 || config.tail > eps_sweep.len() {
        return Err(Error::Config(format!(
            "slope fit tail {} must lie in [2, {}]",
            config.tail,
            eps_sweep.len()
        )));
    }

    let grid = build_grid(problem.a, problem.b, config.m)?;
    let (psi0, _) = problem.fields_on(&grid);
    let limit = nls_strang_integrate(
        &psi0,
        &problem.nonlinearity,
        config.tau_limit,
        config.t_final,
    )?;

    use rayon::prelude::*;
    let rows: Vec<ModelDistanceRow> = eps_sweep
        .par_iter()
        .map(|&eps| -> Result<ModelDistanceRow> {
            let wave = problem.run(config.m, eps, config.alpha, config.tau_wave, config.t_final)?;
            let diff = SpectralField {
                grid: grid.clone(),
                modes: wave
                    .modes
                    .iter()
                    .zip(&limit.modes)
                    .map(|(&a, &b)| a - b)
                    .collect(),
            };
            Ok(ModelDistanceRow {
                eps,
                distance_h1: spectral_l2_norm(&diff) + spectral_semi_h1_norm(&diff),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fit = &rows[rows.len() - config.tail..];
    let slope = log_log_slope(
        &fit.iter().map(|r| r.eps).collect::<Vec<_>>(),
        &fit.iter().map(|r| r.distance_h1).collect::<Vec<_>>(),
    )?;
    Ok(ModelDistanceTable {
        rows,
        slope,
        tail: config.tail,
    })
}

/// Least-squares slope of log₂ y against log₂ x.
fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Config("slope fit needs at least two points".to_string()));
    }
    if y.iter().any(|&v| v <= 0.0) {
        return Err(Error::Config(
            "slope fit needs strictly positive values".to_string(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(num / den)
}
