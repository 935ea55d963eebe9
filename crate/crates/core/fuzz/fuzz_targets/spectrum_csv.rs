#![no_main]

use libfuzzer_sys::fuzz_target;
use strainforge::spectra::{self, PeakParams};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = spectra::parse_spectrum(data, Default::default()) else {
        return;
    };
    assert!(s.frequency_ghz().windows(2).all(|w| w[0] < w[1]));
    let mut out = Vec::new();
    spectra::write_spectrum(&mut out, &s).unwrap();
    let back = spectra::parse_spectrum(out.as_slice(), Default::default()).unwrap();
    assert_eq!(back.frequency_ghz(), s.frequency_ghz());
    assert_eq!(back.intensity(), s.intensity());
    if let Ok(peaks) = spectra::detect_peaks(&s, &PeakParams::default()) {
        let _ = spectra::classify_and_extract(&peaks);
    }
});
