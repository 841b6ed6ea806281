//! Gaussian-state layer: quadrature statistics of the unseeded amplifier
//! output, homodyne detection with arbitrary LO shapes, detection loss,
//! covariance-matrix assembly, and reproducible Monte Carlo sampling.
//!
//! Normalization: vacuum variance is 1 for both quadratures, so the
//! two-mode separability bound reads I < 2 (one unit per joint quadrature).
//! Per mode k the unseeded output is a two-mode squeezed state with
//! ⟨Δ²X⟩ = cosh(2G_k) per beam and ⟨ΔX_s ΔX_i⟩ = ±sinh(2G_k) between beams
//! (+ for X, − for Y); detection loss η admixes vacuum as
//! V ↦ η·V + (1 − η), and LO mode mismatch scales only the cross terms.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{inner_product, SpectralField};
use crate::{rc, Real};

/// Which output beam a mode lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beam {
    Signal,
    Idler,
}

/// One measured channel: a beam and a 1-based mode order (s1, i2, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub beam: Beam,
    pub order: usize,
}

impl ModeLabel {
    pub fn signal(order: usize) -> Self {
        ModeLabel { beam: Beam::Signal, order }
    }

    pub fn idler(order: usize) -> Self {
        ModeLabel { beam: Beam::Idler, order }
    }

    /// Compact text form: "s1", "i3", ...
    pub fn text(&self) -> String {
        match self.beam {
            Beam::Signal => format!("s{}", self.order),
            Beam::Idler => format!("i{}", self.order),
        }
    }
}

/// Quadrature selector: X = â + â†, Y = (â − â†)/i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    X,
    Y,
}

/// Gaussian model of the unseeded output: per-mode squeezing gains plus the
/// detection chain (per-beam efficiency, per-mode LO mode-matching).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureModel<T> {
    gains: Vec<T>,
    efficiency_signal: T,
    efficiency_idler: T,
    lo_overlap: Vec<T>,
}

fn check_unit_interval<T: Real>(value: T, name: &'static str) -> Result<()> {
    if !(value >= T::zero() && value <= T::one()) {
        return Err(Error::InvalidParameter { name, reason: "must lie in [0, 1]".into() });
    }
    Ok(())
}

impl<T: Real> QuadratureModel<T> {
    /// Model with explicit per-mode LO overlaps (one entry per gain).
    pub fn new(
        gains: Vec<T>,
        efficiency_signal: T,
        efficiency_idler: T,
        lo_overlap: Vec<T>,
    ) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidParameter {
                name: "gains",
                reason: "at least one mode is required".into(),
            });
        }
        if gains.iter().any(|g| !(*g >= T::zero()) || !g.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gains",
                reason: "must be finite and non-negative".into(),
            });
        }
        check_unit_interval(efficiency_signal, "efficiency_signal")?;
        check_unit_interval(efficiency_idler, "efficiency_idler")?;
        if lo_overlap.len() != gains.len() {
            return Err(Error::InvalidParameter {
                name: "lo_overlap",
                reason: format!("{} entries for {} modes", lo_overlap.len(), gains.len()),
            });
        }
        for v in &lo_overlap {
            check_unit_interval(*v, "lo_overlap")?;
        }
        Ok(QuadratureModel { gains, efficiency_signal, efficiency_idler, lo_overlap })
    }

    /// Model with perfect LO matching for every mode.
    pub fn uniform_lo(gains: Vec<T>, efficiency_signal: T, efficiency_idler: T) -> Result<Self> {
        let lo = vec![T::one(); gains.len()];
        Self::new(gains, efficiency_signal, efficiency_idler, lo)
    }

    /// Model from measured power gains: G_k = arccosh(√gain_k).
    /// Power gains below 1 are rejected (no such amplifier).
    pub fn from_power_gains(
        power_gains: &[T],
        efficiency_signal: T,
        efficiency_idler: T,
    ) -> Result<Self> {
        let mut gains = Vec::with_capacity(power_gains.len());
        for &g in power_gains {
            if !(g >= T::one()) {
                return Err(Error::GainNotAboveUnity { gain: g.to_f64().unwrap_or(f64::NAN) });
            }
            gains.push(g.sqrt().acosh());
        }
        Self::uniform_lo(gains, efficiency_signal, efficiency_idler)
    }

    pub fn mode_count(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[T] {
        &self.gains
    }

    pub fn efficiency_signal(&self) -> T {
        self.efficiency_signal
    }

    pub fn efficiency_idler(&self) -> T {
        self.efficiency_idler
    }

    pub fn lo_overlap(&self) -> &[T] {
        &self.lo_overlap
    }

    fn efficiency_of(&self, beam: Beam) -> T {
        match beam {
            Beam::Signal => self.efficiency_signal,
            Beam::Idler => self.efficiency_idler,
        }
    }

    fn gain_of_order(&self, order: usize) -> Result<T> {
        if order == 0 || order > self.gains.len() {
            return Err(Error::IndexOutOfRange { index: order, len: self.gains.len() });
        }
        Ok(self.gains[order - 1])
    }
}

/// Second moments of a channel pair, in vacuum units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments<T> {
    pub var_m: T,
    pub var_n: T,
    /// ⟨ΔX_m ΔX_n⟩ (equals var for m = n).
    pub covar_x: T,
    /// ⟨ΔY_m ΔY_n⟩ — the negative of `covar_x` for a signal–idler pair.
    pub covar_y: T,
}

/// Closed-form quadrature moments of a channel pair.
///
/// Per beam ⟨Δ²X⟩ = η·(cosh 2G_k − 1) + 1; only same-order signal–idler
/// pairs correlate: ⟨ΔX_s ΔX_i⟩ = √(η_s·η_i)·lo_k·sinh 2G_k, with the Y
/// covariance negated. Everything else is zero.
pub fn analytic_moments<T: Real>(
    model: &QuadratureModel<T>,
    m: ModeLabel,
    n: ModeLabel,
) -> Result<PairMoments<T>> {
    let variance = |label: ModeLabel| -> Result<T> {
        let g = model.gain_of_order(label.order)?;
        let two_g = rc::<T>(2.0) * g;
        Ok(model.efficiency_of(label.beam) * (two_g.cosh() - T::one()) + T::one())
    };
    let var_m = variance(m)?;
    let var_n = variance(n)?;

    let (covar_x, covar_y) = if m == n {
        (var_m, var_m)
    } else if m.order == n.order && m.beam != n.beam {
        let g = model.gain_of_order(m.order)?;
        let eta = (model.efficiency_signal * model.efficiency_idler).sqrt();
        let lo = model.lo_overlap[m.order - 1];
        let c = eta * lo * (rc::<T>(2.0) * g).sinh();
        (c, -c)
    } else {
        (T::zero(), T::zero())
    };
    Ok(PairMoments { var_m, var_n, covar_x, covar_y })
}

/// Variance measured by a homodyne detector on one beam with an arbitrary
/// LO shape, decomposed against that beam's mode basis.
///
/// The LO selects X̂_LO = Σ_k α_k X̂_k with α_k = ⟨ψ_k, LO⟩; the variance is
/// Σ_k |α_k|²⟨Δ²X_k⟩ plus the pairwise cross-covariances (zero between
/// distinct orders of one beam in this model) plus one vacuum unit for LO
/// content unmatched by any mode. Since each beam alone is thermal, X and Y
/// give the same number; the selector matters only for the cross terms'
/// sign convention.
pub fn homodyne_variance<T: Real>(
    model: &QuadratureModel<T>,
    beam: Beam,
    lo_shape: &SpectralField<T>,
    mode_basis: &[SpectralField<T>],
    quadrature: Quadrature,
) -> Result<T> {
    if (lo_shape.norm() - T::one()).abs() > rc::<T>(1e-8) {
        return Err(Error::InvalidParameter {
            name: "lo_shape",
            reason: "LO must be normalized to unit norm".into(),
        });
    }
    let tol = rc::<T>(1e-6);
    for (i, a) in mode_basis.iter().enumerate() {
        for (j, b) in mode_basis.iter().enumerate().take(i + 1) {
            let target = if i == j { T::one() } else { T::zero() };
            if (inner_product(a, b)?.norm() - target).abs() > tol {
                return Err(Error::BasisNotOrthonormal { context: "homodyne_variance" });
            }
        }
    }

    let mut alphas = Vec::with_capacity(mode_basis.len());
    for mode in mode_basis {
        alphas.push(inner_product(mode, lo_shape)?);
    }

    let mut variance = T::zero();
    let mut matched = T::zero();
    for (k, alpha) in alphas.iter().enumerate() {
        let label = ModeLabel { beam, order: k + 1 };
        let moments = analytic_moments(model, label, label)?;
        variance += alpha.norm_sqr() * moments.var_m;
        matched += alpha.norm_sqr();
    }
    for j in 0..alphas.len() {
        for k in (j + 1)..alphas.len() {
            let moments = analytic_moments(
                model,
                ModeLabel { beam, order: j + 1 },
                ModeLabel { beam, order: k + 1 },
            )?;
            let covar = match quadrature {
                Quadrature::X => moments.covar_x,
                Quadrature::Y => moments.covar_y,
            };
            variance += rc::<T>(2.0) * (alphas[j].conj() * alphas[k]).re * covar;
        }
    }
    variance += (T::one() - matched).max(T::zero());
    Ok(variance)
}

/// How [`build_covariance_matrix`] obtains its entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMethod {
    /// Closed forms.
    Analytic,
    /// Zero-mean Gaussian sampling with the analytic covariance, estimating
    /// every entry empirically through the measurement protocol.
    MonteCarlo { samples: usize, rng_seed: u64 },
}

/// One quadrature's worth of covariance data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceBlock<T> {
    /// Raw second moments ⟨ΔO_m ΔO_n⟩ in vacuum units.
    pub raw: Vec<Vec<T>>,
    /// Correlation-normalized entries raw/√(raw_mm·raw_nn); unit diagonal.
    pub normalized: Vec<Vec<T>>,
    /// Standard error of each raw entry (zero for the analytic method).
    pub raw_se: Vec<Vec<T>>,
    /// Standard error of each normalized entry (zero for analytic).
    pub normalized_se: Vec<Vec<T>>,
}

/// Covariance data for the 2K channels {s1..sK, iK..i1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport<T> {
    pub labels: Vec<ModeLabel>,
    pub x: CovarianceBlock<T>,
    pub y: CovarianceBlock<T>,
    /// 0 for the analytic method.
    pub sample_count: u64,
}

impl<T: Real + std::fmt::Display> CovarianceReport<T> {
    /// Fixed-width text rendering of both normalized blocks.
    pub fn render_text_table(&self) -> String {
        let mut out = String::new();
        for (name, block) in [("X", &self.x), ("Y", &self.y)] {
            out.push_str(&format!("{name} quadrature (normalized)\n"));
            out.push_str("      ");
            for label in &self.labels {
                out.push_str(&format!("{:>9}", label.text()));
            }
            out.push('\n');
            for (row, label) in self.labels.iter().enumerate() {
                out.push_str(&format!("{:<6}", label.text()));
                for col in 0..self.labels.len() {
                    let v = block.normalized[row][col].to_f64().unwrap_or(f64::NAN);
                    out.push_str(&format!("{v:>9.4}"));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

const MIN_SAMPLES: usize = 100;
const BATCH: usize = 4096;

fn label_order(mode_count: usize) -> Vec<ModeLabel> {
    let mut labels = Vec::with_capacity(2 * mode_count);
    for k in 1..=mode_count {
        labels.push(ModeLabel::signal(k));
    }
    for k in (1..=mode_count).rev() {
        labels.push(ModeLabel::idler(k));
    }
    labels
}

fn block_from_raw<T: Real>(raw: Vec<Vec<T>>, samples: usize) -> CovarianceBlock<T> {
    let dim = raw.len();
    let mut normalized = vec![vec![T::zero(); dim]; dim];
    let mut raw_se = vec![vec![T::zero(); dim]; dim];
    let mut normalized_se = vec![vec![T::zero(); dim]; dim];
    for m in 0..dim {
        for n in 0..dim {
            normalized[m][n] = if m == n {
                T::one()
            } else {
                raw[m][n] / (raw[m][m] * raw[n][n]).sqrt()
            };
            if samples > 0 {
                let ns = rc::<T>(samples as f64);
                raw_se[m][n] =
                    ((raw[m][m] * raw[n][n] + raw[m][n] * raw[m][n]) / ns).sqrt();
                if m != n {
                    let rho = normalized[m][n];
                    normalized_se[m][n] = (T::one() - rho * rho) / ns.sqrt();
                }
            }
        }
    }
    CovarianceBlock { raw, normalized, raw_se, normalized_se }
}

/// Assemble the 2K×2K covariance report in label order {s1..sK, iK..i1}.
///
/// The analytic method fills in closed forms. The Monte Carlo method draws
/// zero-mean Gaussian quadrature records with the analytic covariance
/// (Cholesky per signal–idler pair) and estimates entries through the
/// measurement protocol itself: variances directly, same-beam off-diagonals
/// from the three-measurement superposed-LO route, cross-beam entries from
/// the joint-difference route. Sampling is batched with one counter-based
/// RNG stream per batch, so results are reproducible for a given seed and
/// independent of batch scheduling.
pub fn build_covariance_matrix<T: Real>(
    model: &QuadratureModel<T>,
    mode_count: usize,
    method: CovarianceMethod,
) -> Result<CovarianceReport<T>> {
    if mode_count == 0 {
        return Err(Error::InvalidParameter {
            name: "mode_count",
            reason: "must be at least 1".into(),
        });
    }
    if mode_count > model.mode_count() {
        return Err(Error::IndexOutOfRange { index: mode_count, len: model.mode_count() });
    }
    let labels = label_order(mode_count);
    let dim = labels.len();

    match method {
        CovarianceMethod::Analytic => {
            let mut raw_x = vec![vec![T::zero(); dim]; dim];
            let mut raw_y = vec![vec![T::zero(); dim]; dim];
            for m in 0..dim {
                for n in 0..dim {
                    let pm = analytic_moments(model, labels[m], labels[n])?;
                    raw_x[m][n] = if m == n { pm.var_m } else { pm.covar_x };
                    raw_y[m][n] = if m == n { pm.var_m } else { pm.covar_y };
                }
            }
            Ok(CovarianceReport {
                labels,
                x: block_from_raw(raw_x, 0),
                y: block_from_raw(raw_y, 0),
                sample_count: 0,
            })
        }
        CovarianceMethod::MonteCarlo { samples, rng_seed } => {
            if samples < MIN_SAMPLES {
                return Err(Error::TooFewSamples { samples, min: MIN_SAMPLES });
            }
            // Per-order Cholesky factors of the 2×2 pair covariance
            // [[V_s, C], [C, V_i]]: o_s = a·z1, o_i = b·z1 + c·z2.
            let mut factors = Vec::with_capacity(mode_count);
            for k in 1..=mode_count {
                let pm = analytic_moments(model, ModeLabel::signal(k), ModeLabel::idler(k))?;
                let a = pm.var_m.sqrt();
                let b = pm.covar_x / a;
                let c = (pm.var_n - b * b).sqrt();
                factors.push((a, b, c));
            }
            // Index of each order's channels in label order.
            let signal_at = |k: usize| k - 1;
            let idler_at = |k: usize| 2 * mode_count - k;

            let mut diag_x = vec![T::zero(); dim];
            let mut diag_y = vec![T::zero(); dim];
            // Upper triangle: Σ(o_m + o_n)² for same-beam pairs (superposed
            // LO), Σ(o_m − o_n)² for cross-beam pairs (joint difference).
            let mut pair_x = vec![vec![T::zero(); dim]; dim];
            let mut pair_y = vec![vec![T::zero(); dim]; dim];

            let mut ox = vec![T::zero(); dim];
            let mut oy = vec![T::zero(); dim];
            let batches = samples.div_ceil(BATCH);
            for batch in 0..batches {
                let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
                rng.set_stream(batch as u64);
                let count = BATCH.min(samples - batch * BATCH);

                let mut b_diag_x = vec![T::zero(); dim];
                let mut b_diag_y = vec![T::zero(); dim];
                let mut b_pair_x = vec![vec![T::zero(); dim]; dim];
                let mut b_pair_y = vec![vec![T::zero(); dim]; dim];

                for _ in 0..count {
                    for k in 1..=mode_count {
                        let (a, b, c) = factors[k - 1];
                        let z1: f64 = StandardNormal.sample(&mut rng);
                        let z2: f64 = StandardNormal.sample(&mut rng);
                        let z3: f64 = StandardNormal.sample(&mut rng);
                        let z4: f64 = StandardNormal.sample(&mut rng);
                        let (z1, z2, z3, z4) =
                            (rc::<T>(z1), rc::<T>(z2), rc::<T>(z3), rc::<T>(z4));
                        ox[signal_at(k)] = a * z1;
                        ox[idler_at(k)] = b * z1 + c * z2;
                        oy[signal_at(k)] = a * z3;
                        oy[idler_at(k)] = -b * z3 + c * z4;
                    }
                    for m in 0..dim {
                        b_diag_x[m] += ox[m] * ox[m];
                        b_diag_y[m] += oy[m] * oy[m];
                        for n in (m + 1)..dim {
                            if labels[m].beam == labels[n].beam {
                                let sx = ox[m] + ox[n];
                                let sy = oy[m] + oy[n];
                                b_pair_x[m][n] += sx * sx;
                                b_pair_y[m][n] += sy * sy;
                            } else {
                                let dx = ox[m] - ox[n];
                                let dy = oy[m] - oy[n];
                                b_pair_x[m][n] += dx * dx;
                                b_pair_y[m][n] += dy * dy;
                            }
                        }
                    }
                }

                for m in 0..dim {
                    diag_x[m] += b_diag_x[m];
                    diag_y[m] += b_diag_y[m];
                    for n in (m + 1)..dim {
                        pair_x[m][n] += b_pair_x[m][n];
                        pair_y[m][n] += b_pair_y[m][n];
                    }
                }
            }

            let ns = rc::<T>(samples as f64);
            let two = rc::<T>(2.0);
            let mut raw_x = vec![vec![T::zero(); dim]; dim];
            let mut raw_y = vec![vec![T::zero(); dim]; dim];
            for m in 0..dim {
                raw_x[m][m] = diag_x[m] / ns;
                raw_y[m][m] = diag_y[m] / ns;
            }
            for m in 0..dim {
                for n in (m + 1)..dim {
                    let (cx, cy) = if labels[m].beam == labels[n].beam {
                        // Var((o_m + o_n)/√2) − (V_m + V_n)/2
                        (
                            pair_x[m][n] / (two * ns) - (raw_x[m][m] + raw_x[n][n]) / two,
                            pair_y[m][n] / (two * ns) - (raw_y[m][m] + raw_y[n][n]) / two,
                        )
                    } else {
                        // (V_m + V_n − ⟨Δ²(o_m − o_n)⟩)/2
                        (
                            (raw_x[m][m] + raw_x[n][n] - pair_x[m][n] / ns) / two,
                            (raw_y[m][m] + raw_y[n][n] - pair_y[m][n] / ns) / two,
                        )
                    };
                    raw_x[m][n] = cx;
                    raw_x[n][m] = cx;
                    raw_y[m][n] = cy;
                    raw_y[n][m] = cy;
                }
            }
            Ok(CovarianceReport {
                labels,
                x: block_from_raw(raw_x, samples),
                y: block_from_raw(raw_y, samples),
                sample_count: samples as u64,
            })
        }
    }
}

/// Two-mode inseparability sum for mode k (1-based):
/// I_k = ⟨Δ²(X_s−X_i)⟩/2 + ⟨Δ²(Y_s+Y_i)⟩/2, each term normalized by its
/// vacuum value. Returns (I_k, 10·log₁₀(I_k/2)); values below 2 (0 dB)
/// certify entanglement, and a lossless amplifier reaches 2e^(−2G_k).
pub fn duan_criterion<T: Real>(model: &QuadratureModel<T>, k: usize) -> Result<(T, T)> {
    let pm = analytic_moments(model, ModeLabel::signal(k), ModeLabel::idler(k))?;
    let two = rc::<T>(2.0);
    let x_diff = pm.var_m + pm.var_n - two * pm.covar_x;
    let y_sum = pm.var_m + pm.var_n + two * pm.covar_y;
    let i_k = x_diff / two + y_sum / two;
    let db = rc::<T>(10.0) * (i_k / two).log10();
    Ok((i_k, db))
}

/// Inverse of the dB bookkeeping: I = 2·10^(dB/10).
pub fn duan_from_db<T: Real>(db: T) -> T {
    rc::<T>(2.0) * rc::<T>(10.0).powf(db / rc::<T>(10.0))
}

/// Undo detection loss on a normalized joint variance quoted in dB.
///
/// Observed and source variances are related by V_obs = η·V_src + (1 − η)
/// (beam-splitter vacuum admixture), so V_src = (V_obs − 1 + η)/η. Returns
/// the corrected dB value; fails when the arithmetic lands at or below zero,
/// which means η is too small to explain the observation.
pub fn efficiency_correct<T: Real>(measured_db: T, eta: T) -> Result<T> {
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: "must lie in (0, 1]".into(),
        });
    }
    let v_obs = rc::<T>(10.0).powf(measured_db / rc::<T>(10.0));
    let v_src = (v_obs - T::one() + eta) / eta;
    if !(v_src > T::zero()) {
        return Err(Error::UnphysicalCorrection {
            measured_db: measured_db.to_f64().unwrap_or(f64::NAN),
            eta: eta.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(rc::<T>(10.0) * v_src.log10())
}

/// Efficiency implied by a (measured, corrected) dB pair:
/// η = (1 − V_obs)/(1 − V_src). Fails outside (0, 1] — such a pair cannot
/// come from a passive loss channel.
pub fn infer_efficiency<T: Real>(measured_db: T, corrected_db: T) -> Result<T> {
    let v_obs = rc::<T>(10.0).powf(measured_db / rc::<T>(10.0));
    let v_src = rc::<T>(10.0).powf(corrected_db / rc::<T>(10.0));
    let denom = T::one() - v_src;
    if denom.abs() < rc::<T>(1e-12) {
        return Err(Error::InvalidParameter {
            name: "corrected_db",
            reason: "0 dB carries no loss information".into(),
        });
    }
    let eta = (T::one() - v_obs) / denom;
    if !(eta > T::zero() && eta <= T::one() + rc::<T>(1e-12)) {
        return Err(Error::UnphysicalCorrection {
            measured_db: measured_db.to_f64().unwrap_or(f64::NAN),
            eta: eta.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(eta.min(T::one()))
}
