//! Classical seeded propagation through the amplifier: per-mode gain on the
//! modal content of a seed, idler generation in the conjugate channel, and
//! the intensity-only spectrum measurement modelling an optical spectrum
//! analyzer.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{inner_product, SpectralField};
use crate::schmidt::SchmidtDecomposition;
use crate::Real;

/// Output of one seeded pass through the amplifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededOutput<T> {
    /// Amplified signal field.
    pub signal_out: SpectralField<T>,
    /// Idler field generated in the conjugate channel.
    pub idler_out: SpectralField<T>,
    /// Output signal energy divided by input signal energy.
    pub power_gain_total: T,
}

/// Deterministic seeded amplification.
///
/// Each retained mode component ξ_k = ⟨ψ_k, seed⟩ is amplified by cosh(G_k)
/// in the signal and radiates conj(ξ_k)·sinh(G_k)·φ_k into the idler. Seed
/// content outside the retained span passes through with unit gain and
/// generates no idler: a physical amplifier leaves unmatched spectral content
/// unamplified. Spontaneous emission is neglected (strong-seed regime), so
/// the map is purely deterministic.
pub fn amplify_seed<T: Real>(
    dec: &SchmidtDecomposition<T>,
    seed: &SpectralField<T>,
) -> Result<SeededOutput<T>> {
    dec.signal_grid().check_compatible(seed.grid(), "amplify_seed")?;
    let input_energy = seed.norm_sq();
    if !(input_energy > T::zero()) {
        return Err(Error::ZeroNorm { context: "amplify_seed" });
    }
    let mut signal_out = seed.clone();
    let mut idler_out = SpectralField::zero(*dec.idler_grid());
    for k in 0..dec.retained_len() {
        let xi = inner_product(&dec.psi()[k], seed)?;
        let g_k = dec.gain_of_mode(k)?;
        signal_out.axpy(xi * Complex::new(g_k.cosh() - T::one(), T::zero()), &dec.psi()[k])?;
        idler_out.axpy(xi.conj() * Complex::new(g_k.sinh(), T::zero()), &dec.phi()[k])?;
    }
    let power_gain_total = signal_out.norm_sq() / input_energy;
    Ok(SeededOutput { signal_out, idler_out, power_gain_total })
}

/// Intensity spectrum |a_j|² per bin with phases discarded — the information
/// actually available from an optical spectrum analyzer. `noise_floor` adds a
/// flat additive background (0 = off).
pub fn measure_spectrum<T: Real>(field: &SpectralField<T>, noise_floor: T) -> Result<Vec<T>> {
    measure_spectrum_with(field, noise_floor, None, 1)
}

/// [`measure_spectrum`] with a per-bin detector response curve (multiplies
/// the intensity; `None` = flat) and a boxcar moving average of the given
/// width emulating finite analyzer resolution (1 = native grid).
pub fn measure_spectrum_with<T: Real>(
    field: &SpectralField<T>,
    noise_floor: T,
    response: Option<&[T]>,
    boxcar_width: usize,
) -> Result<Vec<T>> {
    if noise_floor < T::zero() {
        return Err(Error::InvalidParameter {
            name: "noise_floor",
            reason: "must be non-negative".into(),
        });
    }
    if boxcar_width == 0 {
        return Err(Error::InvalidParameter {
            name: "boxcar_width",
            reason: "must be at least 1 bin".into(),
        });
    }
    let n = field.grid().len();
    if let Some(r) = response {
        if r.len() != n {
            return Err(Error::InvalidParameter {
                name: "response",
                reason: format!("curve has {} bins, field has {n}", r.len()),
            });
        }
        if r.iter().any(|&v| v < T::zero()) {
            return Err(Error::InvalidParameter {
                name: "response",
                reason: "curve entries must be non-negative".into(),
            });
        }
    }

    let mut spectrum: Vec<T> = field
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let gain = response.map_or(T::one(), |r| r[j]);
            a.norm_sqr() * gain
        })
        .collect();

    if boxcar_width > 1 {
        let raw = spectrum.clone();
        for (j, s) in spectrum.iter_mut().enumerate() {
            let lo = j.saturating_sub((boxcar_width - 1) / 2);
            let hi = (j + boxcar_width / 2).min(n - 1);
            let mut acc = T::zero();
            for value in &raw[lo..=hi] {
                acc += *value;
            }
            *s = acc / crate::rc::<T>((hi - lo + 1) as f64);
        }
    }

    for s in &mut spectrum {
        *s += noise_floor;
    }
    Ok(spectrum)
}
