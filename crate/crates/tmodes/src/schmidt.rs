//! Exact reference decomposition of a joint spectral kernel — mode numbers,
//! mode functions, per-mode gains — and the Bogoliubov kernels it induces.
//!
//! This is the oracle the feedback iteration is judged against: a singular
//! value decomposition of the quadrature-weighted kernel, with the weights
//! folded in so the recovered mode functions are orthonormal under the
//! continuum inner product.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::FrequencyGrid;
use crate::jsf::JointSpectralKernel;
use crate::{rc, Real};

/// Singular values closer than this are flagged as a degenerate subspace:
/// their mode functions are only defined up to rotation within the pair.
pub const DEGENERATE_SV_GAP: f64 = 1e-10;

/// Mode functions are retained until they capture all but this much of the
/// kernel energy.
const RETAINED_ENERGY_TAIL: f64 = 1e-6;

/// Schmidt decomposition F(ω₁, ω₂) = G·Σ_k r_k ψ_k(ω₁) φ_k(ω₂).
///
/// `r` holds the full singular spectrum of the normalized kernel shape
/// (descending, Σr² = 1 to machine precision); `psi`/`phi` hold mode
/// functions for the retained leading modes only — the smallest set capturing
/// all but 1e-6 of the kernel energy, capped by the `max_modes` argument of
/// [`decompose`]. Truncating at retained mode K leaves a reconstruction
/// residual of exactly the tail energy √(Σ_{k≥K} r_k²); with full retention
/// the residual reaches machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition<T> {
    r: Vec<T>,
    psi: Vec<SpectralField<T>>,
    phi: Vec<SpectralField<T>>,
    strength_g: T,
    degenerate_pairs: Vec<usize>,
}

impl<T: Real> SchmidtDecomposition<T> {
    /// Full singular spectrum of the normalized kernel, descending.
    pub fn r(&self) -> &[T] {
        &self.r
    }

    /// Number of retained mode functions.
    pub fn retained_len(&self) -> usize {
        self.psi.len()
    }

    /// Retained signal mode functions ψ_k, orthonormal.
    pub fn psi(&self) -> &[SpectralField<T>] {
        &self.psi
    }

    /// Retained idler mode functions φ_k, orthonormal.
    pub fn phi(&self) -> &[SpectralField<T>] {
        &self.phi
    }

    /// Kernel strength G.
    pub fn strength_g(&self) -> T {
        self.strength_g
    }

    /// Indices k (within the retained set) where |r_k − r_{k+1}| is below
    /// [`DEGENERATE_SV_GAP`]: comparisons there are only meaningful on the
    /// two-dimensional subspace, not on individual vectors.
    pub fn degenerate_pairs(&self) -> &[usize] {
        &self.degenerate_pairs
    }

    /// Grid of the signal modes.
    pub fn signal_grid(&self) -> &FrequencyGrid<T> {
        self.psi[0].grid()
    }

    /// Grid of the idler modes.
    pub fn idler_grid(&self) -> &FrequencyGrid<T> {
        self.phi[0].grid()
    }

    /// Per-mode gain G_k = r_k·G for a retained mode.
    pub fn gain_of_mode(&self, k: usize) -> Result<T> {
        if k >= self.psi.len() {
            return Err(Error::IndexOutOfRange { index: k, len: self.psi.len() });
        }
        Ok(self.r[k] * self.strength_g)
    }

    /// Energy amplification cosh²(G_k) of a seeded retained mode.
    pub fn power_gain_of_mode(&self, k: usize) -> Result<T> {
        let g = self.gain_of_mode(k)?;
        Ok(g.cosh() * g.cosh())
    }

    /// Dense Bogoliubov kernels C = Σ_k cosh(G_k) ψ_k ψ_k† and
    /// S = Σ_k sinh(G_k) ψ_k φ_kᵀ over the retained modes.
    pub fn bogoliubov_kernels(&self) -> BogoliubovKernels<T> {
        let sgrid = *self.signal_grid();
        let igrid = *self.idler_grid();
        let (n_s, n_i) = (sgrid.len(), igrid.len());
        let zero = Complex::new(T::zero(), T::zero());
        let mut c_signal = vec![zero; n_s * n_s];
        let mut s_cross = vec![zero; n_s * n_i];
        for k in 0..self.psi.len() {
            let g_k = self.r[k] * self.strength_g;
            let (ch, sh) = (Complex::new(g_k.cosh(), T::zero()), Complex::new(g_k.sinh(), T::zero()));
            let psi = self.psi[k].amplitudes();
            let phi = self.phi[k].amplitudes();
            for i in 0..n_s {
                let pi_ch = psi[i] * ch;
                let pi_sh = psi[i] * sh;
                for j in 0..n_s {
                    c_signal[i * n_s + j] += pi_ch * psi[j].conj();
                }
                for j in 0..n_i {
                    s_cross[i * n_i + j] += pi_sh * phi[j];
                }
            }
        }
        BogoliubovKernels { signal_grid: sgrid, idler_grid: igrid, c_signal, s_cross }
    }
}

/// Dense gain kernels of the input–output map, acting on spectral fields
/// through the quadrature measure: (M·a)_i = Σ_j M_ij·w_j·dω·a_j.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovKernels<T> {
    signal_grid: FrequencyGrid<T>,
    idler_grid: FrequencyGrid<T>,
    /// n_s × n_s, row-major: the cosh (signal-preserving) kernel.
    c_signal: Vec<Complex<T>>,
    /// n_s × n_i, row-major: the sinh (signal–idler) kernel.
    s_cross: Vec<Complex<T>>,
}

fn weighted_matvec<T: Real>(
    matrix: &[Complex<T>],
    rows: usize,
    cols: usize,
    in_grid: &FrequencyGrid<T>,
    amps: &[Complex<T>],
    conj_transpose: bool,
) -> Vec<Complex<T>> {
    let out_len = if conj_transpose { cols } else { rows };
    let mut out = vec![Complex::new(T::zero(), T::zero()); out_len];
    if conj_transpose {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..rows {
                acc += matrix[i * cols + j].conj() * amps[i] * in_grid.measure(i);
            }
            *o = acc;
        }
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..cols {
                acc += matrix[i * cols + j] * amps[j] * in_grid.measure(j);
            }
            *o = acc;
        }
    }
    out
}

impl<T: Real> BogoliubovKernels<T> {
    /// Signal grid both C axes live on.
    pub fn signal_grid(&self) -> &FrequencyGrid<T> {
        &self.signal_grid
    }

    /// Idler grid of the second S axis.
    pub fn idler_grid(&self) -> &FrequencyGrid<T> {
        &self.idler_grid
    }

    /// C applied to a signal field.
    pub fn apply_c(&self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.signal_grid.check_compatible(field.grid(), "apply_c")?;
        let n = self.signal_grid.len();
        let out =
            weighted_matvec(&self.c_signal, n, n, &self.signal_grid, field.amplitudes(), false);
        SpectralField::new(self.signal_grid, out)
    }

    /// C† applied to a signal field.
    pub fn apply_c_adjoint(&self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.signal_grid.check_compatible(field.grid(), "apply_c_adjoint")?;
        let n = self.signal_grid.len();
        let out =
            weighted_matvec(&self.c_signal, n, n, &self.signal_grid, field.amplitudes(), true);
        SpectralField::new(self.signal_grid, out)
    }

    /// S applied to an idler field, yielding a signal field.
    pub fn apply_s(&self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.idler_grid.check_compatible(field.grid(), "apply_s")?;
        let (n_s, n_i) = (self.signal_grid.len(), self.idler_grid.len());
        let out =
            weighted_matvec(&self.s_cross, n_s, n_i, &self.idler_grid, field.amplitudes(), false);
        SpectralField::new(self.signal_grid, out)
    }

    /// S† applied to a signal field, yielding an idler field.
    pub fn apply_s_adjoint(&self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.signal_grid.check_compatible(field.grid(), "apply_s_adjoint")?;
        let (n_s, n_i) = (self.signal_grid.len(), self.idler_grid.len());
        let out =
            weighted_matvec(&self.s_cross, n_s, n_i, &self.signal_grid, field.amplitudes(), true);
        SpectralField::new(self.idler_grid, out)
    }

    /// Idler generated from a classical seed: Sᵀ·W·conj(seed), the conjugate
    /// channel of the input–output relation.
    pub fn idler_response(&self, seed: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.signal_grid.check_compatible(seed.grid(), "idler_response")?;
        let n_i = self.idler_grid.len();
        let conj: Vec<Complex<T>> = seed.amplitudes().iter().map(Complex::conj).collect();
        let mut out = vec![Complex::new(T::zero(), T::zero()); n_i];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, c) in conj.iter().enumerate() {
                acc += self.s_cross[i * n_i + j] * *c * self.signal_grid.measure(i);
            }
            *o = acc;
        }
        SpectralField::new(self.idler_grid, out)
    }

    /// (C·C† − S·S†) applied to a signal field. On the span of the retained
    /// modes this is the identity (symplectic relation); outside it, zero.
    pub fn symplectic_image(&self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        let cc = self.apply_c(&self.apply_c_adjoint(field)?)?;
        let ss = self.apply_s(&self.apply_s_adjoint(field)?)?;
        cc.sub(&ss)
    }
}

/// Singular value decomposition of the kernel with quadrature weights folded
/// in, so that continuum orthonormality holds for the recovered modes.
///
/// The retained mode count is the smallest K capturing all but 1e-6 of the
/// kernel energy, capped by `max_modes`. The phase convention pins each ψ_k's
/// largest-magnitude sample to the positive real axis, with φ_k carrying the
/// compensating rotation.
pub fn decompose<T>(
    kernel: &JointSpectralKernel<T>,
    max_modes: usize,
) -> Result<SchmidtDecomposition<T>>
where
    T: Real + RealField,
    Complex<T>: nalgebra::ComplexField<RealField = T>,
{
    let sgrid = *kernel.signal_grid();
    let igrid = *kernel.idler_grid();
    let (n_s, n_i) = (sgrid.len(), igrid.len());
    let rank_cap = n_s.min(n_i);
    if max_modes == 0 || max_modes > rank_cap {
        return Err(Error::InvalidParameter {
            name: "max_modes",
            reason: format!("must be in 1..={rank_cap}, got {max_modes}"),
        });
    }
    if kernel
        .shape_slice()
        .iter()
        .any(|f| !(Float::is_finite(f.re) && Float::is_finite(f.im)))
    {
        return Err(Error::NonFiniteKernel { context: "decompose" });
    }

    // Weighted matrix M = D₁^{1/2}·f·D₂^{1/2}: its singular triplets give the
    // continuum modes after the weights are divided back out.
    let s_root: Vec<T> = (0..n_s).map(|i| Float::sqrt(sgrid.measure(i))).collect();
    let i_root: Vec<T> = (0..n_i).map(|j| Float::sqrt(igrid.measure(j))).collect();
    let weighted = DMatrix::<Complex<T>>::from_fn(n_s, n_i, |i, j| {
        kernel.shape(i, j) * Complex::new(s_root[i] * i_root[j], T::zero())
    });
    let svd = weighted.svd(true, true);
    let u = svd.u.as_ref().expect("SVD requested U");
    let v_t = svd.v_t.as_ref().expect("SVD requested Vᵀ");

    // Descending order; nalgebra does not guarantee one.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let r: Vec<T> = order.iter().map(|&k| svd.singular_values[k]).collect();

    // Smallest K with Σ_{k<K} r_k² > 1 − tail, capped by max_modes.
    let tail = rc::<T>(RETAINED_ENERGY_TAIL);
    let mut retained = r.len();
    let mut cum = T::zero();
    for (k, &rv) in r.iter().enumerate() {
        cum += rv * rv;
        if cum > T::one() - tail {
            retained = k + 1;
            break;
        }
    }
    let retained = retained.min(max_modes);

    let mut psi = Vec::with_capacity(retained);
    let mut phi = Vec::with_capacity(retained);
    for &k in order.iter().take(retained) {
        let mut psi_amps: Vec<Complex<T>> =
            (0..n_s).map(|i| u[(i, k)] / Complex::new(s_root[i], T::zero())).collect();
        let mut phi_amps: Vec<Complex<T>> =
            (0..n_i).map(|j| v_t[(k, j)] / Complex::new(i_root[j], T::zero())).collect();

        // Phase convention: rotate ψ's anchor sample to the positive real
        // axis; φ absorbs the conjugate rotation so the product
        // ψ_k(ω₁)·φ_k(ω₂) is untouched. The anchor is the FIRST sample whose
        // magnitude comes within a relative 1e-9 of the maximum — a strict
        // argmax would tie-break on rounding noise for modes with several
        // equal-height lobes and flip signs between otherwise identical
        // decompositions.
        let peak = psi_amps
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |acc, m| if m > acc { m } else { acc });
        let near = peak * (T::one() - rc::<T>(1e-9));
        let best = psi_amps
            .iter()
            .position(|a| a.norm_sqr() >= near)
            .unwrap_or(0);
        let anchor = psi_amps[best];
        let tau = anchor / Complex::new(anchor.norm(), T::zero());
        for a in &mut psi_amps {
            *a *= tau.conj();
        }
        for a in &mut phi_amps {
            *a *= tau;
        }
        psi.push(SpectralField::new(sgrid, psi_amps)?);
        phi.push(SpectralField::new(igrid, phi_amps)?);
    }

    let gap = rc::<T>(DEGENERATE_SV_GAP);
    let degenerate_pairs = (0..retained.saturating_sub(1))
        .filter(|&k| Float::abs(r[k] - r[k + 1]) < gap)
        .collect();

    Ok(SchmidtDecomposition { r, psi, phi, strength_g: kernel.strength_g(), degenerate_pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner_product;
    use crate::jsf::{build_gaussian_jsf, chirped_gaussian_preset, PumpSpec};
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn grid257() -> FrequencyGrid<f64> {
        FrequencyGrid::symmetric(8.0, 257).unwrap()
    }

    fn gaussian_kernel(sigma_m: f64, chirp: f64, g: f64) -> JointSpectralKernel<f64> {
        let pump = PumpSpec::new(0.0, 1.0, chirp);
        build_gaussian_jsf(&pump, std::f64::consts::FRAC_PI_4, sigma_m, g, grid257(), grid257())
            .unwrap()
    }

    /// Normalized Hermite function h_k(ξ)·α^{1/4} with argument √α·ω —
    /// the closed-form modes of a symmetric two-Gaussian kernel.
    fn hermite_mode(grid: FrequencyGrid<f64>, k: usize, alpha: f64) -> SpectralField<f64> {
        let amps = grid
            .omegas()
            .map(|w| {
                let xi = alpha.sqrt() * w;
                let h = match k {
                    0 => 1.0,
                    1 => std::f64::consts::SQRT_2 * xi,
                    2 => (2.0 * xi * xi - 1.0) / std::f64::consts::SQRT_2,
                    3 => (2.0 * xi * xi * xi - 3.0 * xi) / 3.0_f64.sqrt(),
                    _ => unreachable!("only orders 0..=3 are tabulated"),
                };
                let norm = std::f64::consts::PI.powf(-0.25) * alpha.powf(0.25);
                Complex::new(norm * h * (-xi * xi / 2.0).exp(), 0.0)
            })
            .collect();
        SpectralField::new(grid, amps).unwrap()
    }

    #[test]
    fn separable_kernel_has_unit_leading_weight() {
        let k = gaussian_kernel(1.0 / 2.0_f64.sqrt(), 0.0, 2.5);
        let dec = decompose(&k, 16).unwrap();
        assert!((dec.r()[0] - 1.0).abs() < 1e-10);
        assert!(dec.r()[1] < 1e-8);
        assert_eq!(dec.retained_len(), 1);
        assert!((dec.gain_of_mode(0).unwrap() - 2.5).abs() < 1e-9);
        let pg = dec.power_gain_of_mode(0).unwrap();
        assert!((pg - 2.5_f64.cosh().powi(2)).abs() < 1e-7);
        assert!((pg - 37.60497) .abs() < 1e-4);
    }

    #[test]
    fn two_gaussian_kernel_matches_closed_form_spectrum_and_modes() {
        // σ_p = 1, σ_m = 0.5, θ = 45°: the kernel is exp(−p(x²+y²)+2qxy)
        // with p = 1/4 + 1/(8σ_m²) = 0.75, q = 1/(8σ_m²) − 1/4 = 0.25, whose
        // closed-form Schmidt data are w = (p−√(p²−q²))/q, α = 2√(p²−q²),
        // r_k = √(1−w²)·w^k, and Hermite-function modes of width 1/√α.
        let (p, q) = (0.75, 0.25);
        let s = (p * p - q * q).sqrt();
        let w = (p - s) / q;
        let alpha = 2.0 * s;

        let k = gaussian_kernel(0.5, 0.0, 1.0);
        let dec = decompose(&k, 32).unwrap();

        for idx in 0..4 {
            let expected = (1.0 - w * w).sqrt() * w.powi(idx as i32);
            assert!(
                (dec.r()[idx] - expected).abs() < 1e-8,
                "r[{idx}] = {}, expected {expected}",
                dec.r()[idx]
            );
        }
        // Geometric ratio, as tight as the quadrature allows.
        for idx in 0..3 {
            let ratio = dec.r()[idx + 1] / dec.r()[idx];
            assert!((ratio - w).abs() < 1e-6, "ratio {ratio} vs w {w}");
        }
        // Modes match the Hermite functions up to the pinned phase.
        for idx in 0..dec.retained_len().min(4) {
            let h = hermite_mode(grid257(), idx, alpha);
            let ov_psi = inner_product(&dec.psi()[idx], &h).unwrap().norm();
            let ov_phi = inner_product(&dec.phi()[idx], &h).unwrap().norm();
            assert!(ov_psi > 1.0 - 1e-8, "psi[{idx}] overlap {ov_psi}");
            assert!(ov_phi > 1.0 - 1e-8, "phi[{idx}] overlap {ov_phi}");
        }
    }

    #[test]
    fn preset_spectrum_is_geometric_with_ratio_point_six() {
        let k = chirped_gaussian_preset(0.0, 2.5).unwrap();
        let dec = decompose(&k, 64).unwrap();
        assert!((dec.r()[0] - 0.8).abs() < 1e-9);
        for idx in 0..6 {
            let ratio = dec.r()[idx + 1] / dec.r()[idx];
            assert!((ratio - 0.6).abs() < 1e-8, "ratio[{idx}] = {ratio}");
        }
        // Energy-tail retention: smallest K with Σr² > 1 − 1e-6 is 14 for a
        // geometric spectrum with ratio 0.6 (0.36^K < 1e-6 ⇔ K ≥ 14).
        assert_eq!(dec.retained_len(), 14);
        assert!((dec.gain_of_mode(0).unwrap() - 2.0).abs() < 1e-8);
        assert!((dec.gain_of_mode(1).unwrap() - 1.2).abs() < 1e-8);
        // Full spectrum is normalized.
        let total: f64 = dec.r().iter().map(|r| r * r).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn orthonormality_of_retained_modes() {
        let k = gaussian_kernel(1.0 / 32.0_f64.sqrt(), 1.0, 2.5);
        let dec = decompose(&k, 64).unwrap();
        let n = dec.retained_len();
        for a in 0..n {
            for b in 0..n {
                let delta = if a == b { 1.0 } else { 0.0 };
                let ip_psi = inner_product(&dec.psi()[a], &dec.psi()[b]).unwrap();
                let ip_phi = inner_product(&dec.phi()[a], &dec.phi()[b]).unwrap();
                assert!((ip_psi.norm() - delta).abs() < 1e-8, "psi ({a},{b})");
                assert!((ip_phi.norm() - delta).abs() < 1e-8, "phi ({a},{b})");
            }
        }
    }

    #[test]
    fn global_phase_moves_only_mode_phases() {
        let base = gaussian_kernel(0.4, 0.7, 1.5);
        let rotated_matrix: Vec<Complex<f64>> = base
            .shape_slice()
            .iter()
            .map(|f| f * Complex::from_polar(1.0, 0.7))
            .collect();
        let rotated = JointSpectralKernel::from_matrix(
            *base.signal_grid(),
            *base.idler_grid(),
            rotated_matrix,
            base.strength_g(),
        )
        .unwrap();
        let d0 = decompose(&base, 16).unwrap();
        let d1 = decompose(&rotated, 16).unwrap();
        for idx in 0..d0.retained_len().min(d1.retained_len()) {
            assert!((d0.r()[idx] - d1.r()[idx]).abs() < 1e-12);
            // ψ is pinned identically by the phase convention...
            let dpsi: f64 = d0.psi()[idx]
                .sub(&d1.psi()[idx])
                .unwrap()
                .norm();
            assert!(dpsi < 1e-8, "psi[{idx}] moved by {dpsi}");
            // ...and φ absorbs the global phase: same mode up to a phase.
            let ov = inner_product(&d0.phi()[idx], &d1.phi()[idx]).unwrap().norm();
            assert!(ov > 1.0 - 1e-10);
        }
    }

    #[test]
    fn transposed_kernel_has_identical_spectrum() {
        let k = gaussian_kernel(0.3, 0.9, 2.0);
        let d0 = decompose(&k, 16).unwrap();
        let d1 = decompose(&k.transposed(), 16).unwrap();
        for idx in 0..d0.retained_len().min(d1.retained_len()) {
            assert!((d0.r()[idx] - d1.r()[idx]).abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_reaches_machine_precision_at_full_retention() {
        // Small random complex kernel, fully retained.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let sg = FrequencyGrid::new(-3.0, 3.0, 48).unwrap();
        let ig = FrequencyGrid::new(-2.0, 4.0, 40).unwrap();
        let matrix: Vec<Complex<f64>> = (0..48 * 40)
            .map(|_| Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let k = JointSpectralKernel::from_matrix(sg, ig, matrix, 1.7).unwrap();
        let dec = decompose(&k, 40).unwrap();
        assert_eq!(dec.retained_len(), 40, "random kernel needs every mode");

        let mut err_sq = 0.0;
        let mut norm_sq = 0.0;
        for i in 0..48 {
            for j in 0..40 {
                let mut sum = Complex::new(0.0, 0.0);
                for t in 0..dec.retained_len() {
                    sum += dec.psi()[t].amplitudes()[i]
                        * dec.phi()[t].amplitudes()[j]
                        * dec.r()[t];
                }
                sum *= dec.strength_g();
                let target = k.matrix_entry(i, j);
                err_sq += (sum - target).norm_sqr() * sg.measure(i) * ig.measure(j);
                norm_sq += target.norm_sqr() * sg.measure(i) * ig.measure(j);
            }
        }
        assert!((err_sq / norm_sq).sqrt() < 1e-8, "residual {}", (err_sq / norm_sq).sqrt());
    }

    #[test]
    fn truncated_reconstruction_residual_equals_tail_energy() {
        let k = gaussian_kernel(1.0 / 32.0_f64.sqrt(), 0.0, 2.5);
        let full = decompose(&k, 64).unwrap();
        let trunc = decompose(&k, 3).unwrap();
        assert_eq!(trunc.retained_len(), 3);

        let sg = *k.signal_grid();
        let ig = *k.idler_grid();
        let mut err_sq = 0.0;
        for i in 0..sg.len() {
            for j in 0..ig.len() {
                let mut sum = Complex::new(0.0, 0.0);
                for t in 0..3 {
                    sum += trunc.psi()[t].amplitudes()[i]
                        * trunc.phi()[t].amplitudes()[j]
                        * trunc.r()[t];
                }
                err_sq += (sum - k.shape(i, j)).norm_sqr() * sg.measure(i) * ig.measure(j);
            }
        }
        let tail: f64 = full.r().iter().skip(3).map(|r| r * r).sum();
        assert!((err_sq - tail).abs() < 0.1 * tail, "residual² {err_sq} vs tail {tail}");
    }

    #[test]
    fn zero_strength_kernel_has_trivial_gains() {
        let k = gaussian_kernel(0.25, 0.0, 0.0);
        let dec = decompose(&k, 8).unwrap();
        for idx in 0..dec.retained_len() {
            assert_eq!(dec.gain_of_mode(idx).unwrap(), 0.0);
            assert_eq!(dec.power_gain_of_mode(idx).unwrap(), 1.0);
        }
        assert!(matches!(
            dec.gain_of_mode(dec.retained_len()),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn bogoliubov_kernels_act_as_eigen_operators() {
        let k = chirped_gaussian_preset(1.0, 2.5).unwrap();
        let dec = decompose(&k, 64).unwrap();
        let bog = dec.bogoliubov_kernels();

        // C·ψ₂ = cosh(G₂)·ψ₂ (operator is Hermitian so adjoint acts alike).
        let target = &dec.psi()[1];
        let expected = target.scaled(Complex::new(dec.gain_of_mode(1).unwrap().cosh(), 0.0));
        let got = bog.apply_c(target).unwrap();
        assert!(got.sub(&expected).unwrap().norm() < 1e-10);

        // Symplectic identity on the span: (CC† − SS†)ψ_k = ψ_k.
        for idx in [0usize, 2, 5] {
            let img = bog.symplectic_image(&dec.psi()[idx]).unwrap();
            let resid = img.sub(&dec.psi()[idx]).unwrap().norm();
            assert!(resid < 1e-6, "mode {idx}: residual {resid}");
        }

        // Idler response of a seeded mode: sinh(G₁)·φ₁ for seed ψ₁ (real ξ).
        let idler = bog.idler_response(&dec.psi()[0]).unwrap();
        let expected_idler =
            dec.phi()[0].scaled(Complex::new(dec.gain_of_mode(0).unwrap().sinh(), 0.0));
        assert!(idler.sub(&expected_idler).unwrap().norm() < 1e-10);
    }

    #[test]
    fn zero_gain_bogoliubov_is_a_projector_with_no_idler() {
        let k = gaussian_kernel(0.25, 0.0, 0.0);
        let dec = decompose(&k, 8).unwrap();
        let bog = dec.bogoliubov_kernels();
        // C projects onto the retained span: eigenvalue cosh(0)=1 per mode.
        let psi1 = &dec.psi()[0];
        assert!(bog.apply_c(psi1).unwrap().sub(psi1).unwrap().norm() < 1e-10);
        // S vanishes.
        let idler = bog.idler_response(psi1).unwrap();
        assert!(idler.norm() < 1e-12);
    }

    #[test]
    fn equal_weight_islands_flag_a_degenerate_pair() {
        // Two identical, far-separated separable lobes: the two leading
        // singular values coincide exactly.
        let g = FrequencyGrid::symmetric(8.0, 161).unwrap();
        let lobe = |w: f64, c: f64| (-(w - c) * (w - c) / 0.5).exp();
        let n = g.len();
        let mut matrix = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let v = lobe(g.omega(i), 4.0) * lobe(g.omega(j), 4.0)
                    + lobe(g.omega(i), -4.0) * lobe(g.omega(j), -4.0);
                matrix[i * n + j] = Complex::new(v, 0.0);
            }
        }
        let k = JointSpectralKernel::from_matrix(g, g, matrix, 1.0).unwrap();
        let dec = decompose(&k, 8).unwrap();
        assert!((dec.r()[0] - dec.r()[1]).abs() < 1e-12);
        assert!(dec.degenerate_pairs().contains(&0));
        assert_eq!(crate::jsf::island_count(&k), 2);
    }
}
