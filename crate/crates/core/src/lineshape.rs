//! Second-order quadrupolar central-transition lineshapes under magic angle
//! spinning, and the pure-component library built from them.
//!
//! The central-transition frequency under infinitely fast MAS keeps only the
//! isotropic and fourth-rank terms of the second-order quadrupolar
//! interaction:
//!
//! ```text
//! ν = δ_iso − (ν_Q² / 6ν₀)·(I(I+1) − 3/4)·(A(φ,η)·cos⁴β + B(φ,η)·cos²β + C(φ,η))
//! ν_Q = 3·C_Q / (2I(2I − 1))
//! ```
//!
//! Powder averaging uses an equal-area grid that is uniform in `cos β` and in
//! `φ`. Spinning sidebands are not simulated; the spinning rate is carried as
//! metadata only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernels are truncated at this many standard deviations.
const KERNEL_SIGMAS: f64 = 8.0;

/// Uniform frequency axis shared by every spectrum in a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub n_points: usize,
    pub sweep_width_hz: f64,
    pub larmor_hz: f64,
    pub center_hz: f64,
}

impl SpectrumGrid {
    /// 1024 points over 10 kHz at a 100 MHz observe frequency.
    pub const fn standard() -> Self {
        Self {
            n_points: 1024,
            sweep_width_hz: 10_000.0,
            larmor_hz: 100e6,
            center_hz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::invalid("grid.n_points must be at least 2"));
        }
        if !(self.sweep_width_hz.is_finite() && self.sweep_width_hz > 0.0) {
            return Err(Error::invalid("grid.sweep_width_hz must be positive"));
        }
        if !(self.larmor_hz.is_finite() && self.larmor_hz > 0.0) {
            return Err(Error::invalid("grid.larmor_hz must be positive"));
        }
        if !self.center_hz.is_finite() {
            return Err(Error::invalid("grid.center_hz must be finite"));
        }
        Ok(())
    }

    pub fn bin_spacing(&self) -> f64 {
        self.sweep_width_hz / (self.n_points - 1) as f64
    }

    pub fn start_hz(&self) -> f64 {
        self.center_hz - self.sweep_width_hz / 2.0
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        self.start_hz() + bin as f64 * self.bin_spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.frequency(j)).collect()
    }

    /// Fractional bin index of a frequency.
    pub fn position(&self, hz: f64) -> f64 {
        (hz - self.start_hz()) / self.bin_spacing()
    }
}

impl Default for SpectrumGrid {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupolarParams {
    pub cq_hz: f64,
    pub eta: f64,
    /// Offset from the window centre.
    pub delta_iso_hz: f64,
    pub spin: f64,
    pub spin_rate_hz: f64,
    /// Smoothing value; the kernel standard deviation is
    /// `gaussian_broaden * sweep_width_hz / n_points` Hz.
    pub gaussian_broaden: f64,
}

impl QuadrupolarParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cq_hz.is_finite() && self.cq_hz >= 0.0) {
            return Err(Error::invalid("cq_hz must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid("eta must lie in [0, 1]"));
        }
        if !self.delta_iso_hz.is_finite() {
            return Err(Error::invalid("delta_iso_hz must be finite"));
        }
        let twice = 2.0 * self.spin;
        if !(twice.is_finite() && twice >= 3.0 && twice.fract() == 0.0 && twice % 2.0 == 1.0) {
            return Err(Error::invalid("spin must be half-integer and at least 3/2"));
        }
        if !(self.spin_rate_hz.is_finite() && self.spin_rate_hz > 0.0) {
            return Err(Error::invalid("spin_rate_hz must be positive"));
        }
        if !(self.gaussian_broaden.is_finite() && self.gaussian_broaden > 0.0) {
            return Err(Error::invalid("gaussian_broaden must be positive"));
        }
        Ok(())
    }

    /// `(ν_Q² / 6ν₀)·(I(I+1) − 3/4)` in Hz.
    pub fn second_order_scale(&self, larmor_hz: f64) -> f64 {
        let i = self.spin;
        let nu_q = 3.0 * self.cq_hz / (2.0 * i * (2.0 * i - 1.0));
        nu_q * nu_q / (6.0 * larmor_hz) * (i * (i + 1.0) - 0.75)
    }

    /// Isotropic second-order quadrupolar shift in Hz (the powder mean of the
    /// MAS frequency relative to `delta_iso_hz`).
    pub fn isotropic_quadrupolar_shift(&self, larmor_hz: f64) -> f64 {
        -self.second_order_scale(larmor_hz) * (1.0 + self.eta * self.eta / 3.0) / 5.0
    }
}

/// A simulated single-species spectrum and the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PureComponent {
    pub id: String,
    pub params: QuadrupolarParams,
    pub grid: SpectrumGrid,
    pub intensity: Vec<f64>,
}

/// Equal-area powder orientation grid, uniform in `cos β ∈ [0,1]` and
/// `φ ∈ [0, π/2]` (the MAS frequency is even in `cos β` and depends on `φ`
/// only through `cos 2φ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowderScheme {
    pub cos_beta_steps: usize,
    pub phi_steps: usize,
}

impl PowderScheme {
    pub const PRODUCTION: PowderScheme = PowderScheme {
        cos_beta_steps: 512,
        phi_steps: 32,
    };

    pub fn orientations(&self) -> usize {
        self.cos_beta_steps * self.phi_steps
    }
}

impl Default for PowderScheme {
    fn default() -> Self {
        Self::PRODUCTION
    }
}

/// MAS central-transition frequency offset (Hz, relative to `δ_iso`) for a
/// crystallite with `cos²β = c2` and the given `cos 2φ`.
pub fn mas_frequency(scale: f64, eta: f64, c2: f64, cos2phi: f64) -> f64 {
    let ec = eta * cos2phi;
    let ec2 = ec * ec;
    let a = 21.0 / 16.0 - 7.0 / 8.0 * ec + 7.0 / 48.0 * ec2;
    let b = -9.0 / 8.0 + eta * eta / 12.0 + ec - 7.0 / 24.0 * ec2;
    let c = 5.0 / 16.0 - ec / 8.0 + 7.0 / 48.0 * ec2;
    -scale * ((a * c2 + b) * c2 + c)
}

/// Pre-broadening intensity on an extended bin axis. Bin `first + i` of the
/// histogram corresponds to bin `first + i` of the grid (which may lie
/// outside `0..n_points`).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub first: i64,
    pub weights: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Powder-averaged stick spectrum deposited on the grid bins by linear
/// interpolation; total weight is 1.
pub fn powder_histogram(params: &QuadrupolarParams, grid: &SpectrumGrid, scheme: PowderScheme) -> Result<Histogram> {
    params.validate()?;
    grid.validate()?;
    if scheme.cos_beta_steps == 0 || scheme.phi_steps == 0 {
        return Err(Error::invalid("powder scheme needs at least one orientation"));
    }
    let scale = params.second_order_scale(grid.larmor_hz);
    let base = grid.position(grid.center_hz + params.delta_iso_hz);
    let per_hz = 1.0 / grid.bin_spacing();
    let weight = 1.0 / scheme.orientations() as f64;

    let mut positions = Vec::with_capacity(scheme.orientations());
    for ip in 0..scheme.phi_steps {
        let phi = (ip as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / scheme.phi_steps as f64;
        let cos2phi = (2.0 * phi).cos();
        for ic in 0..scheme.cos_beta_steps {
            let c = (ic as f64 + 0.5) / scheme.cos_beta_steps as f64;
            positions.push(base + mas_frequency(scale, params.eta, c * c, cos2phi) * per_hz);
        }
    }
    let lo = positions.iter().copied().fold(f64::INFINITY, f64::min).floor() as i64;
    let hi = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max).floor() as i64 + 1;
    let mut weights = vec![0.0; (hi - lo + 1) as usize];
    for x in positions {
        let fl = x.floor();
        let t = x - fl;
        let idx = (fl as i64 - lo) as usize;
        weights[idx] += weight * (1.0 - t);
        weights[idx + 1] += weight * t;
    }
    Ok(Histogram { first: lo, weights })
}

/// Kernel standard deviation in points for a smoothing value on `grid`.
pub fn smoothing_sigma_points(gaussian_broaden: f64, grid: &SpectrumGrid) -> f64 {
    gaussian_broaden * grid.sweep_width_hz / grid.n_points as f64 / grid.bin_spacing()
}

struct Kernel {
    table: Vec<f64>,
}

impl Kernel {
    /// Unit-area sampled Gaussian, tabulated for offsets `0..=reach`.
    fn new(sigma: f64, reach: usize) -> Self {
        let cutoff = (KERNEL_SIGMAS * sigma).ceil() as usize;
        let len = cutoff.min(reach) + 1;
        let norm = gaussian_norm(sigma);
        let table = (0..len)
            .map(|m| (-(m as f64).powi(2) / (2.0 * sigma * sigma)).exp() / norm)
            .collect();
        Self { table }
    }

    fn at(&self, offset: i64) -> f64 {
        self.table.get(offset.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }
}

/// Sum of `exp(-m²/2σ²)` over all integers `m`.
fn gaussian_norm(sigma: f64) -> f64 {
    if sigma >= 2.0 {
        // Poisson summation: the discrete sum equals the integral to within
        // exp(-2π²σ²).
        return sigma * (2.0 * std::f64::consts::PI).sqrt();
    }
    let cutoff = (KERNEL_SIGMAS * sigma).ceil() as i64 + 1;
    (-cutoff..=cutoff)
        .map(|m| (-(m as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .sum()
}

fn broaden_onto(hist: &Histogram, sigma: f64, n: usize) -> Vec<f64> {
    let last = hist.first + hist.weights.len() as i64 - 1;
    let reach = (n as i64 - 1 - hist.first).max(last).max(0) as usize;
    let kernel = Kernel::new(sigma, reach);
    let half = kernel.table.len() as i64 - 1;
    let mut out = vec![0.0; n];
    for (i, &w) in hist.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let f = hist.first + i as i64;
        let lo = (f - half).max(0);
        let hi = (f + half).min(n as i64 - 1);
        for j in lo..=hi {
            out[j as usize] += w * kernel.at(j - f);
        }
    }
    out
}

/// Convolves a spectrum with a unit-area Gaussian of standard deviation
/// `width` points. Intensity carried past the window edges is lost.
pub fn gaussian_broaden(intensity: &[f64], width: f64) -> Result<Vec<f64>> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid("broadening width must be positive"));
    }
    let hist = Histogram {
        first: 0,
        weights: intensity.to_vec(),
    };
    Ok(broaden_onto(&hist, width, intensity.len()))
}

/// Simulates one pure component with the production powder scheme.
pub fn simulate_pure(params: &QuadrupolarParams, grid: &SpectrumGrid) -> Result<PureComponent> {
    simulate_with_scheme(params, grid, PowderScheme::PRODUCTION)
}

pub fn simulate_with_scheme(params: &QuadrupolarParams, grid: &SpectrumGrid, scheme: PowderScheme) -> Result<PureComponent> {
    params.validate()?;
    grid.validate()?;
    let sigma = smoothing_sigma_points(params.gaussian_broaden, grid);
    let intensity = if params.cq_hz == 0.0 {
        // Without a quadrupolar coupling every crystallite resonates at
        // δ_iso: a single stick, broadened analytically at its exact position.
        let x = grid.position(grid.center_hz + params.delta_iso_hz);
        let norm = gaussian_norm(sigma);
        (0..grid.n_points)
            .map(|j| (-(j as f64 - x).powi(2) / (2.0 * sigma * sigma)).exp() / norm)
            .collect()
    } else {
        let hist = powder_histogram(params, grid, scheme)?;
        broaden_onto(&hist, sigma, grid.n_points)
    };
    if !(intensity.iter().sum::<f64>() > 0.0) {
        return Err(Error::invalid("line lies entirely outside the spectral window"));
    }
    Ok(PureComponent {
        id: format!(
            "cq{:.0}-eta{:.4}-iso{:.2}-gb{}",
            params.cq_hz, params.eta, params.delta_iso_hz, params.gaussian_broaden
        ),
        params: *params,
        grid: *grid,
        intensity,
    })
}

/// Parameter grid for the pure-component library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryGridSpec {
    pub cq_steps: usize,
    pub cq_max_hz: f64,
    pub eta_steps: usize,
    pub delta_steps: usize,
    /// Isotropic positions span `[-delta_span_hz/2, +delta_span_hz/2]`
    /// around the window centre, endpoints included.
    pub delta_span_hz: f64,
    /// Smoothing values are `2^n` for each listed `n`.
    pub smoothing_exponents: Vec<u32>,
    pub spin: f64,
    pub spin_rate_hz: f64,
}

impl LibraryGridSpec {
    /// 40 C_Q × 10 η × 10 δ_iso × 8 smoothing values.
    pub fn standard() -> Self {
        Self {
            cq_steps: 40,
            cq_max_hz: 4e6,
            eta_steps: 10,
            delta_steps: 10,
            delta_span_hz: 7_500.0,
            smoothing_exponents: (3..=10).collect(),
            spin: 1.5,
            spin_rate_hz: 10_000.0,
        }
    }

    /// Coarser grid over the same ranges for desk-scale benchmarks:
    /// 10 C_Q × 4 η × 5 δ_iso × 8 smoothing values = 1,600 components.
    pub fn desk() -> Self {
        Self {
            cq_steps: 10,
            eta_steps: 4,
            delta_steps: 5,
            ..Self::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, steps) in [
            ("cq_steps", self.cq_steps),
            ("eta_steps", self.eta_steps),
            ("delta_steps", self.delta_steps),
        ] {
            if steps == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if self.smoothing_exponents.is_empty() {
            return Err(Error::invalid("smoothing_exponents must not be empty"));
        }
        if self.smoothing_exponents.iter().any(|&n| n > 40) {
            return Err(Error::invalid("smoothing_exponents must be at most 40"));
        }
        if !(self.cq_max_hz.is_finite() && self.cq_max_hz >= 0.0) {
            return Err(Error::invalid("cq_max_hz must be finite and nonnegative"));
        }
        if !(self.delta_span_hz.is_finite() && self.delta_span_hz >= 0.0) {
            return Err(Error::invalid("delta_span_hz must be finite and nonnegative"));
        }
        let twice = 2.0 * self.spin;
        if !(twice >= 3.0 && twice.fract() == 0.0 && twice % 2.0 == 1.0) {
            return Err(Error::invalid("spin must be half-integer and at least 3/2"));
        }
        if !(self.spin_rate_hz.is_finite() && self.spin_rate_hz > 0.0) {
            return Err(Error::invalid("spin_rate_hz must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cq_steps * self.eta_steps * self.delta_steps * self.smoothing_exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point in a fixed nesting order (C_Q outermost).
    pub fn points(&self) -> Vec<(String, QuadrupolarParams)> {
        let cqs = linspace(0.0, self.cq_max_hz, self.cq_steps);
        let etas = linspace(0.0, 1.0, self.eta_steps);
        let deltas = linspace(-self.delta_span_hz / 2.0, self.delta_span_hz / 2.0, self.delta_steps);
        let mut out = Vec::with_capacity(self.len());
        for (ic, &cq_hz) in cqs.iter().enumerate() {
            for (ie, &eta) in etas.iter().enumerate() {
                for (id, &delta_iso_hz) in deltas.iter().enumerate() {
                    for &n in &self.smoothing_exponents {
                        out.push((
                            format!("cq{ic:02}-eta{ie:02}-iso{id:02}-sm{n:02}"),
                            QuadrupolarParams {
                                cq_hz,
                                eta,
                                delta_iso_hz,
                                spin: self.spin,
                                spin_rate_hz: self.spin_rate_hz,
                                gaussian_broaden: 2f64.powi(n as i32),
                            },
                        ));
                    }
                }
            }
        }
        out
    }
}

impl Default for LibraryGridSpec {
    fn default() -> Self {
        Self::standard()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Simulates every point of `spec`. Output order (and content) does not
/// depend on how the work is scheduled.
pub fn generate_library(spec: &LibraryGridSpec, grid: &SpectrumGrid) -> Result<Vec<PureComponent>> {
    spec.validate()?;
    grid.validate()?;
    let points = spec.points();
    let simulate = |(id, params): &(String, QuadrupolarParams)| -> Result<PureComponent> {
        let mut pure = simulate_pure(params, grid)?;
        pure.id = id.clone();
        Ok(pure)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(simulate).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(simulate).collect()
    }
}
