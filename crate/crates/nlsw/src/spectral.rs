//! Grids, nodal/spectral fields, the discrete sine transform, and norms.
//!
//! Everything lives on a uniform grid over [a, b] with M subintervals and
//! homogeneous Dirichlet boundaries. Interior nodal values (j = 1..M−1) and
//! sine-mode coefficients (l = 1..M−1) are dual representations of one state;
//! boundary values are identically zero and never stored.
//!
//! Index convention: a `Vec` of length M−1 holds entry `i` for node/mode
//! index `i + 1` (so `values[0]` is ψ₁ at x₁ = a + h, `mu[0]` is μ₁).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Largest M that uses the direct O(M²) transform instead of the FFT path.
const DIRECT_DST_MAX: usize = 16;

/// Uniform Dirichlet grid on [a, b] with M subintervals.
///
/// Cheap to clone and safe to share across threads: the mode-frequency table
/// and the FFT plan sit behind `Arc`s. Two grids compare equal iff their
/// (a, b, M) agree.
#[derive(Clone)]
pub struct Grid {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
    mu: Arc<[f64]>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("m", &self.m)
            .field("h", &self.h)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.a.to_bits() == other.a.to_bits()
            && self.b.to_bits() == other.b.to_bits()
            && self.m == other.m
    }
}

impl Eq for Grid {}

/// Build the uniform grid with h = (b−a)/M and μ_l = πl/(b−a).
///
/// M must be a power of two (≥ 4): it keeps the transform fast and makes
/// every coarser power-of-two grid nested inside this one.
pub fn build_grid(a: f64, b: f64, m: usize) -> Result<Grid> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Config(format!(
            "domain endpoints must satisfy a < b, got [{a}, {b}]"
        )));
    }
    if m < 4 || !m.is_power_of_two() {
        return Err(Error::Config(format!(
            "subinterval count M must be a power of two >= 4, got {m}"
        )));
    }
    let h = (b - a) / m as f64;
    let mu: Arc<[f64]> = (1..m)
        .map(|l| std::f64::consts::PI * l as f64 / (b - a))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(2 * m);
    Ok(Grid { a, b, m, h, mu, fft })
}

impl Grid {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of subintervals M.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Mesh size h = (b−a)/M.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Mode frequencies μ_l = πl/(b−a), l = 1..M−1 (entry i is μ_{i+1}).
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Interior node abscissa x_j = a + j·h for j = 1..M−1 (0-based i = j−1).
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h
    }

    /// All interior nodes in order.
    pub fn interior_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m - 1).map(|i| self.node(i))
    }
}

/// Interior nodal values of a state (boundary values are implicit zeros).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

/// Sine-mode coefficients of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub modes: Vec<Complex64>,
}

impl GridField {
    /// Wrap interior values; checks length and finiteness.
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.m - 1 {
            return Err(Error::Config(format!(
                "field length {} does not match grid interior size {}",
                values.len(),
                grid.m - 1
            )));
        }
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Config(
                "field contains non-finite values".to_string(),
            ));
        }
        Ok(GridField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.m - 1;
        GridField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Sample a function at the interior nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.interior_nodes().map(f).collect();
        GridField { grid, values }
    }

    /// Nodal l² norm: sqrt(h Σ_j |u_j|²).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.h * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Nodal sup norm max_j |u_j|.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Full nodal trace including the two boundary zeros: (x_j, ψ_j) for
    /// j = 0..=M.
    pub fn full_trace(&self) -> Vec<(f64, Complex64)> {
        let zero = Complex64::new(0.0, 0.0);
        let mut out = Vec::with_capacity(self.grid.m + 1);
        out.push((self.grid.a, zero));
        for (i, &v) in self.values.iter().enumerate() {
            out.push((self.grid.node(i), v));
        }
        out.push((self.grid.b, zero));
        out
    }
}

impl SpectralField {
    pub fn new(grid: Grid, modes: Vec<Complex64>) -> Result<Self> {
        if modes.len() != grid.m - 1 {
            return Err(Error::Config(format!(
                "mode count {} does not match grid size {}",
                modes.len(),
                grid.m - 1
            )));
        }
        Ok(SpectralField { grid, modes })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.m - 1;
        SpectralField {
            grid,
            modes: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

/// Forward DST-I: modes_l = (2/M) Σ_{j=1}^{M−1} u_j sin(jlπ/M).
pub fn dst_forward(u: &GridField) -> SpectralField {
    let m = u.grid.m;
    let mut modes = dst_kernel(&u.grid, &u.values);
    let scale = 2.0 / m as f64;
    for z in &mut modes {
        *z *= scale;
    }
    SpectralField {
        grid: u.grid.clone(),
        modes,
    }
}

/// Inverse DST-I (synthesis): u_j = Σ_{l=1}^{M−1} c_l sin(jlπ/M).
pub fn dst_inverse(c: &SpectralField) -> GridField {
    GridField {
        grid: c.grid.clone(),
        values: dst_kernel(&c.grid, &c.modes),
    }
}

/// Core half-transform S_k = Σ_{j=1}^{M−1} v_j sin(jkπ/M) (its own inverse up
/// to the 2/M factor). FFT path: odd-extend to length 2M, complex FFT, then
/// S_k = i·X_k/2. Small grids use direct summation.
fn dst_kernel(grid: &Grid, v: &[Complex64]) -> Vec<Complex64> {
    let m = grid.m;
    debug_assert_eq!(v.len(), m - 1);
    if m <= DIRECT_DST_MAX {
        return dst_direct(m, v);
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * m];
    for (i, &z) in v.iter().enumerate() {
        let j = i + 1;
        buf[j] = z;
        buf[2 * m - j] = -z;
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); grid.fft.get_inplace_scratch_len()];
    grid.fft.process_with_scratch(&mut buf, &mut scratch);
    (1..m)
        .map(|k| Complex64::new(-0.5 * buf[k].im, 0.5 * buf[k].re))
        .collect()
}

/// Direct O(M²) summation with exact integer angle reduction:
/// sin(jkπ/M) = table[(j·k) mod 2M].
fn dst_direct(m: usize, v: &[Complex64]) -> Vec<Complex64> {
    let table: Vec<f64> = (0..2 * m)
        .map(|k| (std::f64::consts::PI * k as f64 / m as f64).sin())
        .collect();
    (1..m)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &z) in v.iter().enumerate() {
                acc += z * table[((i + 1) * k) % (2 * m)];
            }
            acc
        })
        .collect()
}

/// L² norm of the sine interpolant: sqrt((b−a)/2 · Σ_l |c_l|²).
pub fn spectral_l2_norm(c: &SpectralField) -> f64 {
    let w = (c.grid.b - c.grid.a) / 2.0;
    (w * c.modes.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// Semi-H¹ norm of the interpolant: sqrt((b−a)/2 · Σ_l μ_l² |c_l|²).
pub fn spectral_semi_h1_norm(c: &SpectralField) -> f64 {
    let w = (c.grid.b - c.grid.a) / 2.0;
    let s: f64 = c
        .modes
        .iter()
        .zip(c.grid.mu.iter())
        .map(|(z, &mu)| mu * mu * z.norm_sqr())
        .sum();
    (w * s).sqrt()
}

/// L² projection onto a coarser nested sine space: keep modes l = 1..Mc−1.
pub fn restrict_modes(c: &SpectralField, coarse: &Grid) -> Result<SpectralField> {
    check_nested(&c.grid, coarse)?;
    let modes = c.modes[..coarse.m - 1].to_vec();
    Ok(SpectralField {
        grid: coarse.clone(),
        modes,
    })
}

/// Nodal restriction onto a coarser nested grid: sample every (Mf/Mc)-th
/// interior node.
pub fn restrict_nodal(u: &GridField, coarse: &Grid) -> Result<GridField> {
    check_nested(&u.grid, coarse)?;
    let stride = u.grid.m / coarse.m;
    let values = (1..coarse.m).map(|j| u.values[j * stride - 1]).collect();
    Ok(GridField {
        grid: coarse.clone(),
        values,
    })
}

fn check_nested(fine: &Grid, coarse: &Grid) -> Result<()> {
    if fine.a.to_bits() != coarse.a.to_bits() || fine.b.to_bits() != coarse.b.to_bits() {
        return Err(Error::Config(format!(
            "grids cover different intervals: [{}, {}] vs [{}, {}]",
            fine.a, fine.b, coarse.a, coarse.b
        )));
    }
    if coarse.m > fine.m {
        return Err(Error::Config(format!(
            "restriction target M={} exceeds source M={}",
            coarse.m, fine.m
        )));
    }
    // Both are powers of two, so coarse.m <= fine.m implies divisibility.
    Ok(())
}
