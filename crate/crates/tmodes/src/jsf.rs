//! Joint spectral kernels: the chirped double-Gaussian model and a two-stage
//! fiber model whose interference factor splits the kernel into islands.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::{rc, Real};

/// Pump pulse parameters entering a kernel constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec<T> {
    /// Center detuning of the pump sum-frequency ridge (same units as the
    /// grids); both the envelope and the chirp phase are functions of
    /// `Ω₁ + Ω₂ − center_detuning`.
    pub center_detuning: T,
    /// Pump bandwidth σ_p (> 0). With the crate's dimensionless convention
    /// this is 1; other values rescale the envelope.
    pub bandwidth_sigma_p: T,
    /// Dimensionless chirp: multiplies the phase exp(i·chirp·u²/(2σ_p²)).
    pub chirp_coefficient: T,
}

impl<T: Real> PumpSpec<T> {
    /// Pump with explicit detuning, bandwidth, and chirp.
    pub fn new(center_detuning: T, bandwidth_sigma_p: T, chirp_coefficient: T) -> Self {
        Self { center_detuning, bandwidth_sigma_p, chirp_coefficient }
    }

    /// Unchirped, undetuned pump of bandwidth σ_p = 1.
    pub fn unit() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    fn validate(&self) -> Result<()> {
        if !(self.bandwidth_sigma_p.is_finite() && self.bandwidth_sigma_p > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "bandwidth_sigma_p",
                reason: format!("must be finite and positive, got {}", self.bandwidth_sigma_p),
            });
        }
        if !(self.center_detuning.is_finite() && self.chirp_coefficient.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "pump",
                reason: "detuning and chirp must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Dispersion coefficients of the two-stage fiber model, with frequencies in
/// grid units: `beta2_*` are β₂·σ_p² in 1/m, `beta3_dsf` is β₃·σ_p³ in 1/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GvdParameters<T> {
    /// Quadratic dispersion of the nonlinear (DSF) stages, per meter.
    pub beta2_dsf: T,
    /// Cubic dispersion of the nonlinear stages, per meter.
    pub beta3_dsf: T,
    /// Quadratic dispersion of the linear (SMF) spacer, per meter.
    pub beta2_smf: T,
}

impl<T: Real> GvdParameters<T> {
    fn validate(&self) -> Result<()> {
        if self.beta2_dsf.is_finite() && self.beta3_dsf.is_finite() && self.beta2_smf.is_finite()
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "gvd",
                reason: "dispersion coefficients must be finite".into(),
            })
        }
    }
}

/// Geometry of the two-stage nonlinear interferometer: two identical
/// dispersion-shifted-fiber stages with a single-mode-fiber spacer between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliSpec<T> {
    /// Length of each nonlinear stage in meters (> 0).
    pub dsf_length: T,
    /// Length of the linear spacer in meters (≥ 0; 0 degenerates to a single
    /// stage).
    pub smf_length: T,
    /// Dispersion coefficients for both fiber types.
    pub gvd_parameters: GvdParameters<T>,
}

impl<T: Real> NliSpec<T> {
    fn validate(&self) -> Result<()> {
        if !(self.dsf_length.is_finite() && self.dsf_length > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "dsf_length",
                reason: format!("must be finite and positive, got {}", self.dsf_length),
            });
        }
        if !(self.smf_length.is_finite() && self.smf_length >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "smf_length",
                reason: format!("must be finite and non-negative, got {}", self.smf_length),
            });
        }
        self.gvd_parameters.validate()
    }
}

/// Discretized joint spectral kernel F(ω₁, ω₂) on a signal × idler grid.
///
/// Stored as a unit-norm shape `f` (Σ|f_{ij}|²·w_i·dω₁·w_j·dω₂ = 1) together
/// with the non-negative strength G, so F = G·f. Keeping the shape normalized
/// makes the Schmidt weights direct singular values and leaves G = 0
/// well-defined.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralKernel<T> {
    signal_grid: FrequencyGrid<T>,
    idler_grid: FrequencyGrid<T>,
    /// Row-major `n_s × n_i`, weighted Frobenius norm 1.
    shape: Vec<Complex<T>>,
    strength_g: T,
}

fn weighted_frobenius_sq<T: Real>(
    signal_grid: &FrequencyGrid<T>,
    idler_grid: &FrequencyGrid<T>,
    matrix: &[Complex<T>],
) -> T {
    let n_i = idler_grid.len();
    let mut acc = T::zero();
    for (idx, m) in matrix.iter().enumerate() {
        let (i, j) = (idx / n_i, idx % n_i);
        acc += m.norm_sqr() * signal_grid.measure(i) * idler_grid.measure(j);
    }
    acc
}

impl<T: Real> JointSpectralKernel<T> {
    /// Wrap a raw complex matrix (row-major `n_s × n_i`), normalizing its
    /// shape and attaching the strength `G ≥ 0`.
    pub fn from_matrix(
        signal_grid: FrequencyGrid<T>,
        idler_grid: FrequencyGrid<T>,
        matrix: Vec<Complex<T>>,
        strength_g: T,
    ) -> Result<Self> {
        if matrix.len() != signal_grid.len() * idler_grid.len() {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: format!(
                    "length {} does not match {}×{} grids",
                    matrix.len(),
                    signal_grid.len(),
                    idler_grid.len()
                ),
            });
        }
        if !(strength_g.is_finite() && strength_g >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "strength_g",
                reason: format!("must be finite and non-negative, got {strength_g}"),
            });
        }
        if matrix.iter().any(|m| !(m.re.is_finite() && m.im.is_finite())) {
            return Err(Error::NonFiniteKernel { context: "from_matrix" });
        }
        let norm_sq = weighted_frobenius_sq(&signal_grid, &idler_grid, &matrix);
        if !(norm_sq.is_finite() && norm_sq > T::zero()) {
            return Err(Error::ZeroNorm { context: "JointSpectralKernel::from_matrix" });
        }
        let inv = norm_sq.sqrt().recip();
        let shape = matrix.into_iter().map(|m| m * inv).collect();
        Ok(Self { signal_grid, idler_grid, shape, strength_g })
    }

    /// Signal-axis grid (ω₁).
    pub fn signal_grid(&self) -> &FrequencyGrid<T> {
        &self.signal_grid
    }

    /// Idler-axis grid (ω₂).
    pub fn idler_grid(&self) -> &FrequencyGrid<T> {
        &self.idler_grid
    }

    /// Overall strength G.
    pub fn strength_g(&self) -> T {
        self.strength_g
    }

    /// Normalized shape entry f(ω₁ᵢ, ω₂ⱼ).
    pub fn shape(&self, i: usize, j: usize) -> Complex<T> {
        self.shape[i * self.idler_grid.len() + j]
    }

    /// Full kernel entry F(ω₁ᵢ, ω₂ⱼ) = G·f(ω₁ᵢ, ω₂ⱼ).
    pub fn matrix_entry(&self, i: usize, j: usize) -> Complex<T> {
        self.shape(i, j) * Complex::new(self.strength_g, T::zero())
    }

    /// Row-major normalized shape, `n_s × n_i`.
    pub fn shape_slice(&self) -> &[Complex<T>] {
        &self.shape
    }

    /// Weighted Frobenius norm² of the normalized shape (≈ 1; exposed so
    /// callers can audit the invariant).
    pub fn shape_norm_sq(&self) -> T {
        weighted_frobenius_sq(&self.signal_grid, &self.idler_grid, &self.shape)
    }

    /// Kernel with the signal/idler roles swapped: grids exchanged, matrix
    /// transposed. The Schmidt spectrum is unchanged.
    pub fn transposed(&self) -> Self {
        let (n_s, n_i) = (self.signal_grid.len(), self.idler_grid.len());
        let mut shape = vec![Complex::new(T::zero(), T::zero()); n_s * n_i];
        for i in 0..n_s {
            for j in 0..n_i {
                shape[j * n_s + i] = self.shape[i * n_i + j];
            }
        }
        Self {
            signal_grid: self.idler_grid,
            idler_grid: self.signal_grid,
            shape,
            strength_g: self.strength_g,
        }
    }

    /// |F|² on a strided subgrid with at most `max_per_axis` samples per axis
    /// — a plotting aid, not a quadrature. Returns (signal frequencies, idler
    /// frequencies, row-major intensity rows).
    pub fn downsampled_intensity(&self, max_per_axis: usize) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
        let cap = max_per_axis.max(1);
        let stride = |n: usize| n.div_ceil(cap).max(1);
        let (ss, si) = (stride(self.signal_grid.len()), stride(self.idler_grid.len()));
        let rows_i: Vec<usize> = (0..self.signal_grid.len()).step_by(ss).collect();
        let cols_j: Vec<usize> = (0..self.idler_grid.len()).step_by(si).collect();
        let g_sq = self.strength_g * self.strength_g;
        let grid_vals = rows_i
            .iter()
            .map(|&i| cols_j.iter().map(|&j| self.shape(i, j).norm_sqr() * g_sq).collect())
            .collect();
        (
            rows_i.iter().map(|&i| self.signal_grid.omega(i)).collect(),
            cols_j.iter().map(|&j| self.idler_grid.omega(j)).collect(),
            grid_vals,
        )
    }
}

/// Double-Gaussian kernel with optional pump chirp:
/// F ∝ exp(−u²/4σ_p²)·exp(i·chirp·u²/2σ_p²)·exp(−(ω₁sinθ − ω₂cosθ)²/4σ_m²),
/// u = ω₁ + ω₂ − detuning, normalized to the unit-shape invariant and scaled
/// by `strength_g`.
///
/// `correlation_angle` θ (radians) and the phase-matching width σ_m control
/// how many Schmidt modes the kernel carries; θ = 45° with σ_m = σ_p/√2 is
/// exactly separable (single mode).
pub fn build_gaussian_jsf<T: Real>(
    pump: &PumpSpec<T>,
    correlation_angle: T,
    sigma_m: T,
    strength_g: T,
    signal_grid: FrequencyGrid<T>,
    idler_grid: FrequencyGrid<T>,
) -> Result<JointSpectralKernel<T>> {
    pump.validate()?;
    if !(sigma_m.is_finite() && sigma_m > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "sigma_m",
            reason: format!("must be finite and positive, got {sigma_m}"),
        });
    }
    if !correlation_angle.is_finite() {
        return Err(Error::InvalidParameter {
            name: "correlation_angle",
            reason: "must be finite".into(),
        });
    }
    let four = rc::<T>(4.0);
    let two = rc::<T>(2.0);
    let sp_sq = pump.bandwidth_sigma_p * pump.bandwidth_sigma_p;
    let sm_sq = sigma_m * sigma_m;
    let (sin_t, cos_t) = (correlation_angle.sin(), correlation_angle.cos());

    let n_i = idler_grid.len();
    let mut matrix = vec![Complex::new(T::zero(), T::zero()); signal_grid.len() * n_i];
    for (i, w1) in signal_grid.omegas().enumerate() {
        for (j, w2) in idler_grid.omegas().enumerate() {
            let u = w1 + w2 - pump.center_detuning;
            let envelope = (-(u * u) / (four * sp_sq)).exp();
            let phase = pump.chirp_coefficient * u * u / (two * sp_sq);
            let m = w1 * sin_t - w2 * cos_t;
            let matching = (-(m * m) / (four * sm_sq)).exp();
            matrix[i * n_i + j] = Complex::from_polar(envelope * matching, phase);
        }
    }
    JointSpectralKernel::from_matrix(signal_grid, idler_grid, matrix, strength_g)
}

fn sinc<T: Real>(x: T) -> T {
    if x.abs() < rc::<T>(1e-8) {
        T::one()
    } else {
        x.sin() / x
    }
}

/// Phase mismatch per meter in a nonlinear stage, quadratic plus cubic
/// dispersion: Δk(ω₁, ω₂) = β₂(ω₁² + ω₂²)/2 + β₃(ω₁³ + ω₂³)/6.
fn dsf_phase_mismatch<T: Real>(gvd: &GvdParameters<T>, w1: T, w2: T) -> T {
    let half = rc::<T>(0.5);
    let sixth = rc::<T>(1.0 / 6.0);
    gvd.beta2_dsf * (w1 * w1 + w2 * w2) * half
        + gvd.beta3_dsf * (w1 * w1 * w1 + w2 * w2 * w2) * sixth
}

/// Interference factor of the two-stage interferometer:
/// cos(δ/2)·e^{iδ/2} with δ = β₂_smf·(ω₁² + ω₂²)/2 · L_smf.
///
/// Exposed standalone so the zero structure (island boundaries) can be probed
/// independently of any grid.
pub fn nli_interference_factor<T: Real>(nli: &NliSpec<T>, omega1: T, omega2: T) -> Complex<T> {
    let half = rc::<T>(0.5);
    let delta =
        nli.gvd_parameters.beta2_smf * (omega1 * omega1 + omega2 * omega2) * half * nli.smf_length;
    Complex::from_polar(T::one(), delta * half) * Complex::new((delta * half).cos(), T::zero())
}

/// Two-stage fiber kernel: pump envelope (and chirp) × single-stage phase
/// matching sinc(ΔkL/2)·e^{iΔkL/2} × the spacer interference factor.
pub fn build_nli_jsf<T: Real>(
    pump: &PumpSpec<T>,
    nli: &NliSpec<T>,
    strength_g: T,
    signal_grid: FrequencyGrid<T>,
    idler_grid: FrequencyGrid<T>,
) -> Result<JointSpectralKernel<T>> {
    pump.validate()?;
    nli.validate()?;
    let four = rc::<T>(4.0);
    let two = rc::<T>(2.0);
    let half = rc::<T>(0.5);
    let sp_sq = pump.bandwidth_sigma_p * pump.bandwidth_sigma_p;

    let n_i = idler_grid.len();
    let mut matrix = vec![Complex::new(T::zero(), T::zero()); signal_grid.len() * n_i];
    for (i, w1) in signal_grid.omegas().enumerate() {
        for (j, w2) in idler_grid.omegas().enumerate() {
            let u = w1 + w2 - pump.center_detuning;
            let envelope = (-(u * u) / (four * sp_sq)).exp();
            let chirp = pump.chirp_coefficient * u * u / (two * sp_sq);
            let alpha_pump = Complex::from_polar(envelope, chirp);

            let dk_l = dsf_phase_mismatch(&nli.gvd_parameters, w1, w2) * nli.dsf_length;
            let matching = Complex::from_polar(sinc(dk_l * half), dk_l * half);

            matrix[i * n_i + j] =
                alpha_pump * matching * nli_interference_factor(nli, w1, w2);
        }
    }
    if matrix.iter().any(|m| !(m.re.is_finite() && m.im.is_finite())) {
        return Err(Error::NonFiniteKernel { context: "build_nli_jsf" });
    }
    JointSpectralKernel::from_matrix(signal_grid, idler_grid, matrix, strength_g)
}

/// Result of a hard spectral window ([`restrict_to_island`]).
#[derive(Debug, Clone, PartialEq)]
pub struct IslandRestriction<T> {
    /// Windowed kernel, renormalized to the unit-shape invariant.
    pub kernel: JointSpectralKernel<T>,
    /// Fraction of the original kernel energy removed by the window.
    pub discarded_energy_fraction: T,
}

/// Fraction of kernel energy a band must keep to count as non-empty; below
/// this the window is rejected rather than renormalizing numerical dust.
const MIN_KEPT_ENERGY: f64 = 1e-12;

/// Apply a hard spectral window (a coarse-WDM filter model): entries outside
/// `signal_band × idler_band` are zeroed, the rest renormalized.
///
/// Grids are preserved so the result stays comparable with the original.
/// Errors if either band selects no grid points or the windowed kernel keeps
/// a vanishing share of the energy.
pub fn restrict_to_island<T: Real>(
    kernel: &JointSpectralKernel<T>,
    signal_band: (T, T),
    idler_band: (T, T),
) -> Result<IslandRestriction<T>> {
    let (s_lo, s_hi) =
        kernel.signal_grid.band_indices(signal_band.0, signal_band.1, "restrict_to_island")?;
    let (i_lo, i_hi) =
        kernel.idler_grid.band_indices(idler_band.0, idler_band.1, "restrict_to_island")?;

    let n_i = kernel.idler_grid.len();
    let mut kept_energy = T::zero();
    let mut masked = vec![Complex::new(T::zero(), T::zero()); kernel.shape.len()];
    for i in s_lo..=s_hi {
        for j in i_lo..=i_hi {
            let f = kernel.shape[i * n_i + j];
            masked[i * n_i + j] = f;
            kept_energy +=
                f.norm_sqr() * kernel.signal_grid.measure(i) * kernel.idler_grid.measure(j);
        }
    }
    if !(kept_energy > rc::<T>(MIN_KEPT_ENERGY)) {
        return Err(Error::EmptyBand { context: "restrict_to_island: no kernel support in band" });
    }
    let inv = kept_energy.sqrt().recip();
    for m in &mut masked {
        *m *= inv;
    }
    Ok(IslandRestriction {
        kernel: JointSpectralKernel {
            signal_grid: kernel.signal_grid,
            idler_grid: kernel.idler_grid,
            shape: masked,
            strength_g: kernel.strength_g,
        },
        discarded_energy_fraction: T::one() - kept_energy,
    })
}

/// Number of disconnected regions where |F|² exceeds 1% of its peak,
/// connectivity taken 4-neighbor on the index lattice.
pub fn island_count<T: Real>(kernel: &JointSpectralKernel<T>) -> usize {
    let (n_s, n_i) = (kernel.signal_grid.len(), kernel.idler_grid.len());
    let peak = kernel.shape.iter().map(Complex::norm_sqr).fold(T::zero(), T::max);
    if !(peak > T::zero()) {
        return 0;
    }
    let threshold = peak * rc::<T>(0.01);
    let mut above: Vec<bool> = kernel.shape.iter().map(|f| f.norm_sqr() >= threshold).collect();

    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..above.len() {
        if !above[start] {
            continue;
        }
        count += 1;
        above[start] = false;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx / n_i, idx % n_i);
            let mut visit = |ni: usize, nj: usize| {
                let nidx = ni * n_i + nj;
                if above[nidx] {
                    above[nidx] = false;
                    stack.push(nidx);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < n_s {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < n_i {
                visit(i, j + 1);
            }
        }
    }
    count
}

/// Replication preset: chirped-Gaussian kernel with σ_p = 1, θ = 45°,
/// σ_m = σ_p/√32, grids ±8σ_p with 257 points.
///
/// The σ_m choice makes the unchirped Schmidt spectrum exactly geometric with
/// ratio 0.6 (mode weights r_k = 0.8·0.6^k): at θ = 45° the kernel is of
/// two-Gaussian form exp(−p(x²+y²)+2qxy) with p = 1/4 + 1/(8σ_m²) = 4.25 and
/// q = 1/(8σ_m²) − 1/4 = 3.75, whose Schmidt ratio (p − √(p²−q²))/q is 0.6.
pub fn chirped_gaussian_preset<T: Real>(
    chirp_coefficient: T,
    strength_g: T,
) -> Result<JointSpectralKernel<T>> {
    let pump = PumpSpec::new(T::zero(), T::one(), chirp_coefficient);
    let sigma_m = rc::<T>(32.0).sqrt().recip();
    let grid = FrequencyGrid::symmetric(rc::<T>(8.0), 257)?;
    build_gaussian_jsf(&pump, T::FRAC_PI_4(), sigma_m, strength_g, grid, grid)
}

/// Fiber-interferometer preset bundle: pump, fiber geometry, grids, and the
/// coarse-WDM pass bands used to cut out one island.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliFiberPreset<T> {
    /// Unchirped, undetuned pump (σ_p = 1 in grid units).
    pub pump: PumpSpec<T>,
    /// Fiber geometry and dispersion.
    pub nli: NliSpec<T>,
    /// Kernel strength used by the preset.
    pub strength_g: T,
    /// Signal grid, centered on +Ω₀.
    pub signal_grid: FrequencyGrid<T>,
    /// Idler grid, centered on −Ω₀.
    pub idler_grid: FrequencyGrid<T>,
    /// Signal pass band of the WDM filter.
    pub cwdm_signal_band: (T, T),
    /// Idler pass band of the WDM filter.
    pub cwdm_idler_band: (T, T),
}

impl<T: Real> NliFiberPreset<T> {
    /// Build the preset kernel.
    pub fn build(&self) -> Result<JointSpectralKernel<T>> {
        build_nli_jsf(&self.pump, &self.nli, self.strength_g, self.signal_grid, self.idler_grid)
    }
}

/// Two-stage fiber preset: 150 m nonlinear stages, 3.4 m spacer, signal and
/// idler windows ±8σ_p around ±Ω₀ with Ω₀ = 155.92 σ_p.
///
/// Dispersion coefficients are in grid units (σ_p-scaled, per meter), sized
/// so the single-stage sinc stays zero-free over the windows while the spacer
/// cosine crosses zero exactly once inside them — the kernel splits into two
/// islands, and the WDM bands (±[Ω₀+1.3, Ω₀+8]) keep exactly one.
pub fn nli_fiber_preset<T: Real>() -> NliFiberPreset<T> {
    let omega0 = rc::<T>(155.92);
    let eight = rc::<T>(8.0);
    let cut = rc::<T>(1.3);
    let signal_grid = FrequencyGrid::new(omega0 - eight, omega0 + eight, 257)
        .expect("preset signal grid is valid");
    let idler_grid = FrequencyGrid::new(-omega0 - eight, -omega0 + eight, 257)
        .expect("preset idler grid is valid");
    NliFiberPreset {
        pump: PumpSpec::unit(),
        nli: NliSpec {
            dsf_length: rc::<T>(150.0),
            smf_length: rc::<T>(3.4),
            gvd_parameters: GvdParameters {
                beta2_dsf: rc::<T>(-6.82309e-7),
                beta3_dsf: rc::<T>(9.89427e-8),
                beta2_smf: rc::<T>(-1.886113e-4),
            },
        },
        strength_g: rc::<T>(1.5),
        signal_grid,
        idler_grid,
        cwdm_signal_band: (omega0 + cut, omega0 + eight),
        cwdm_idler_band: (-omega0 - eight, -omega0 - cut),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_grid(n: usize) -> FrequencyGrid<f64> {
        FrequencyGrid::symmetric(8.0, n).unwrap()
    }

    fn gaussian_kernel(chirp: f64, sigma_m: f64) -> JointSpectralKernel<f64> {
        let pump = PumpSpec::new(0.0, 1.0, chirp);
        let g = sym_grid(129);
        build_gaussian_jsf(&pump, std::f64::consts::FRAC_PI_4, sigma_m, 2.0, g, g).unwrap()
    }

    #[test]
    fn constructors_satisfy_unit_shape_invariant() {
        let k = gaussian_kernel(1.0, 0.25);
        assert!((k.shape_norm_sq() - 1.0).abs() < 1e-12);
        let preset = nli_fiber_preset::<f64>();
        let nk = preset.build().unwrap();
        assert!((nk.shape_norm_sq() - 1.0).abs() < 1e-12);
        // Full entries are G times the shape.
        assert_eq!(k.matrix_entry(3, 5), k.shape(3, 5) * Complex::new(2.0, 0.0));
    }

    #[test]
    fn matched_width_kernel_is_separable() {
        // θ = 45°, σ_m = σ_p/√2 → exponent −(ω₁²+ω₂²)/(2σ_p²), rank 1.
        let k = gaussian_kernel(0.0, 1.0 / 2.0_f64.sqrt());
        // All 2×2 minors of a rank-1 matrix vanish.
        let peak = k
            .shape_slice()
            .iter()
            .map(|f| f.norm())
            .fold(0.0_f64, f64::max);
        for &(i, j, l, m) in &[(10usize, 20usize, 90usize, 100usize), (40, 64, 70, 80), (0, 0, 128, 128)] {
            let minor = k.shape(i, j) * k.shape(l, m) - k.shape(i, m) * k.shape(l, j);
            assert!(minor.norm() < 1e-12 * peak * peak);
        }
    }

    #[test]
    fn detuning_shifts_pump_ridge() {
        let pump = PumpSpec::new(1.5, 1.0, 0.0);
        let g = sym_grid(129);
        let k = build_gaussian_jsf(&pump, std::f64::consts::FRAC_PI_4, 0.25, 1.0, g, g).unwrap();
        let (mut best, mut best_idx) = (0.0, (0, 0));
        for i in 0..129 {
            for j in 0..129 {
                let v = k.shape(i, j).norm_sqr();
                if v > best {
                    best = v;
                    best_idx = (i, j);
                }
            }
        }
        let ridge = g.omega(best_idx.0) + g.omega(best_idx.1);
        assert!((ridge - 1.5).abs() <= 2.0 * g.d_omega(), "ridge at {ridge}");
    }

    #[test]
    fn chirp_only_changes_phases() {
        let flat = gaussian_kernel(0.0, 0.25);
        let chirped = gaussian_kernel(1.0, 0.25);
        for idx in (0..flat.shape_slice().len()).step_by(97) {
            let a = flat.shape_slice()[idx].norm();
            let b = chirped.shape_slice()[idx].norm();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spacer_recovers_single_stage_kernel() {
        let preset = nli_fiber_preset::<f64>();
        let mut nli0 = preset.nli;
        nli0.smf_length = 0.0;
        let k0 =
            build_nli_jsf(&preset.pump, &nli0, 1.0, preset.signal_grid, preset.idler_grid)
                .unwrap();

        // Independent reconstruction of the single-stage kernel.
        let sg = preset.signal_grid;
        let ig = preset.idler_grid;
        let gvd = preset.nli.gvd_parameters;
        let l = preset.nli.dsf_length;
        let mut expected = Vec::with_capacity(257 * 257);
        for w1 in sg.omegas() {
            for w2 in ig.omegas() {
                let u = w1 + w2;
                let envelope = (-u * u / 4.0).exp();
                let dk_l = (gvd.beta2_dsf * (w1 * w1 + w2 * w2) / 2.0
                    + gvd.beta3_dsf * (w1.powi(3) + w2.powi(3)) / 6.0)
                    * l;
                let x = dk_l / 2.0;
                let s = if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
                expected.push(Complex::from_polar(envelope * s, x));
            }
        }
        let reference =
            JointSpectralKernel::from_matrix(sg, ig, expected, 1.0).unwrap();
        for idx in 0..k0.shape_slice().len() {
            let d = (k0.shape_slice()[idx] - reference.shape_slice()[idx]).norm();
            assert!(d < 1e-12, "entry {idx} differs by {d}");
        }
        // And the interference factor itself is exactly 1.
        let f = nli_interference_factor(&nli0, 150.0, -160.0);
        assert!((f - Complex::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn interference_zero_spacing_halves_when_spacer_doubles() {
        // Probe u(s) = 1 − 2|factor|² along Ω₁ = √s, Ω₂ = 0; its roots are
        // equally spaced in s with spacing 2π/(|β₂_smf|·L).
        fn roots(nli: &NliSpec<f64>, s_max: f64, n_scan: usize) -> Vec<f64> {
            let u = |s: f64| {
                let f = nli_interference_factor(nli, s.sqrt(), 0.0).norm_sqr();
                1.0 - 2.0 * f
            };
            let mut found = Vec::new();
            let step = s_max / n_scan as f64;
            let mut prev = u(0.0);
            for m in 1..=n_scan {
                let s = step * m as f64;
                let cur = u(s);
                if prev * cur < 0.0 {
                    let (mut a, mut b) = (s - step, s);
                    for _ in 0..80 {
                        let mid = 0.5 * (a + b);
                        if u(a) * u(mid) <= 0.0 {
                            b = mid;
                        } else {
                            a = mid;
                        }
                    }
                    found.push(0.5 * (a + b));
                }
                prev = cur;
            }
            found
        }
        let preset = nli_fiber_preset::<f64>();
        let single = preset.nli;
        let mut double = single;
        double.smf_length *= 2.0;

        let r1 = roots(&single, 80_000.0, 4000);
        let r2 = roots(&double, 80_000.0, 8000);
        assert!(r1.len() >= 3 && r2.len() >= 3);
        let gap1 = r1[1] - r1[0];
        let gap2 = r2[1] - r2[0];
        let expected1 = 2.0 * std::f64::consts::PI / (1.886113e-4 * 3.4);
        assert!((gap1 / 2.0 - gap2).abs() < 1e-6 * gap1, "gap1 {gap1}, gap2 {gap2}");
        assert!((gap1 - expected1).abs() < 1e-6 * gap1);
    }

    #[test]
    fn full_band_restriction_is_identity() {
        let k = gaussian_kernel(1.0, 0.25);
        let r = restrict_to_island(&k, (-8.0, 8.0), (-8.0, 8.0)).unwrap();
        assert!(r.discarded_energy_fraction.abs() < 1e-12);
        for idx in 0..k.shape_slice().len() {
            assert!((k.shape_slice()[idx] - r.kernel.shape_slice()[idx]).norm() < 1e-12);
        }
    }

    #[test]
    fn unsupported_bands_are_rejected() {
        let k = gaussian_kernel(0.0, 0.25);
        // Band outside the grid entirely: no samples.
        assert!(matches!(
            restrict_to_island(&k, (9.0, 10.0), (-8.0, 8.0)),
            Err(Error::EmptyBand { .. })
        ));
        // Band on the grid but far from any kernel support.
        assert!(matches!(
            restrict_to_island(&k, (7.5, 8.0), (7.5, 8.0)),
            Err(Error::EmptyBand { .. })
        ));
    }

    #[test]
    fn gaussian_kernel_is_one_island() {
        assert_eq!(island_count(&gaussian_kernel(0.0, 0.25)), 1);
        assert_eq!(island_count(&gaussian_kernel(1.0, 0.25)), 1);
    }

    #[test]
    fn fiber_preset_splits_into_two_islands_and_wdm_keeps_one() {
        let preset = nli_fiber_preset::<f64>();
        let k = preset.build().unwrap();
        assert_eq!(island_count(&k), 2);
        let restricted =
            restrict_to_island(&k, preset.cwdm_signal_band, preset.cwdm_idler_band).unwrap();
        assert_eq!(island_count(&restricted.kernel), 1);
        assert!((restricted.kernel.shape_norm_sq() - 1.0).abs() < 1e-12);
        assert!(restricted.discarded_energy_fraction > 0.0);
        assert!(restricted.discarded_energy_fraction < 1.0);
    }

    #[test]
    fn transpose_swaps_grids_and_is_an_involution() {
        let preset = nli_fiber_preset::<f64>();
        let k = preset.build().unwrap();
        let t = k.transposed();
        assert_eq!(t.signal_grid(), k.idler_grid());
        assert_eq!(t.shape(5, 9), k.shape(9, 5));
        let back = t.transposed();
        assert_eq!(back, k);
    }

    #[test]
    fn downsampling_respects_caps_and_anchors_at_grid_min() {
        let k = gaussian_kernel(0.0, 0.25);
        let (ws, wi, rows) = k.downsampled_intensity(48);
        assert!(ws.len() <= 48 && wi.len() <= 48);
        assert_eq!(rows.len(), ws.len());
        assert_eq!(rows[0].len(), wi.len());
        assert_eq!(ws[0], -8.0);
        assert!(rows.iter().flatten().all(|v| v.is_finite() && *v >= 0.0));
    }
}
