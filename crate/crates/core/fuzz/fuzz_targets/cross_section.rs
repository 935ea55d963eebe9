#![no_main]

use libfuzzer_sys::fuzz_target;
use strainforge::mechanics::{self, CrossSection, Layer, LayerStack, Substrate};

fuzz_target!(|data: &[u8]| {
    let vertices: Vec<[f64; 2]> = data
        .chunks_exact(4)
        .map(|c| [i16::from_le_bytes([c[0], c[1]]) as f64, i16::from_le_bytes([c[2], c[3]]) as f64])
        .collect();
    let Ok(cs) = CrossSection::new(vertices) else {
        return;
    };
    let props = mechanics::section_properties(&cs, 1100.0).unwrap();
    assert!(props.area_nm2 > 0.0);
    let stack = LayerStack {
        substrate: Substrate::diamond(cs),
        film: Layer::silicon_nitride(10.0, 700.0),
        biaxiality_factor: 1.0,
    };
    if let Ok(field) = mechanics::solve_beam_state(&stack) {
        let _ = mechanics::strain_at(&field, 0.5 * field.substrate_depth_nm);
    }
});
