#![no_main]

use libfuzzer_sys::fuzz_target;
use strainforge::spectra::{self, PeakParams, Spectrum};

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let window = 2 * (data[0] as usize % 8) + 1;
    let min_prominence = data[1] as f64 / 255.0;
    let intensity: Vec<f64> =
        data[2..].chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    let freq: Vec<f64> = (0..intensity.len()).map(|i| 406_000.0 + 0.5 * i as f64).collect();
    let Ok(s) = Spectrum::new(freq, intensity, Default::default()) else {
        return;
    };
    let params = PeakParams { smoothing_window: window, min_prominence };
    if let Ok(peaks) = spectra::detect_peaks(&s, &params) {
        let (lo, hi) = (s.frequency_ghz()[0], s.frequency_ghz()[s.len() - 1]);
        for p in &peaks {
            assert!(p.prominence > 0.0);
            assert!(p.center_ghz >= lo && p.center_ghz <= hi);
        }
        assert!(peaks.windows(2).all(|w| w[0].center_ghz <= w[1].center_ghz));
    }
});
