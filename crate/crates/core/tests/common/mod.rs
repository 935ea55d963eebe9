#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strainforge::spectra::{self, Line, Spectrum, SpectrumMetadata, SyntheticSpec};

pub struct Case {
    pub spectrum: Spectrum,
    pub lines: Vec<Line>,
}

impl Case {
    pub fn true_gss(&self) -> Option<f64> {
        (self.lines.len() >= 2 && self.lines.len() <= 4).then(|| self.lines[1].center_ghz - self.lines[0].center_ghz)
    }
}

/// Spectra with 1 to 8 Lorentzian lines near 406.7 THz, amplitudes 0.6 to 1,
/// and noise set by an SNR drawn from [10, 30] relative to the brightest line.
pub fn corpus(count: usize, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            // Every fifth spectrum is a multi-emitter case.
            let k = if i % 5 == 4 { rng.random_range(5..=8) } else { rng.random_range(1..=4) };
            let lines = spectra::random_lines(&mut rng, k, 405_900.0, 407_900.0, 120.0, (8.0, 24.0), (0.6, 1.0));
            let peak = lines.iter().map(|l| l.amplitude).fold(0.0, f64::max);
            let snr = rng.random_range(10.0..=30.0);
            let spec = SyntheticSpec {
                start_ghz: 405_700.0,
                step_ghz: 2.0,
                points: 1200,
                lines: lines.clone(),
                noise_sigma: peak / snr,
                background: 0.5,
            };
            let meta = SpectrumMetadata { label: format!("synthetic_{i:03}"), ..Default::default() };
            Case { spectrum: spec.render(seed, i as u64, meta).unwrap(), lines }
        })
        .collect()
}
