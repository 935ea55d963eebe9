//! Photoluminescence spectra: loading, peak detection, single-emitter
//! classification and batch statistics of the ground-state splitting.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, StreamFactory};
use crate::stats::{self, Binning, Summary};

/// Speed of light in nm·GHz.
const C_NM_GHZ: f64 = 299_792_458.0;
pub const MIN_POINTS: usize = 16;
/// Most lines a single SiV can show.
pub const MAX_SINGLE_EMITTER_LINES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    #[default]
    FrequencyGhz,
    FrequencyThz,
    /// Converted to frequency on load.
    WavelengthNm,
}

impl Abscissa {
    fn from_header(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "frequency_ghz" | "frequency" | "freq_ghz" => Some(Self::FrequencyGhz),
            "frequency_thz" | "freq_thz" => Some(Self::FrequencyThz),
            "wavelength_nm" | "wavelength" => Some(Self::WavelengthNm),
            _ => None,
        }
    }

    fn to_ghz(self, v: f64) -> f64 {
        match self {
            Self::FrequencyGhz => v,
            Self::FrequencyThz => v * 1e3,
            Self::WavelengthNm => C_NM_GHZ / v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub label: String,
    pub batch_tag: Option<String>,
    /// Axis of the source data before conversion to GHz.
    pub source_axis: Abscissa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    frequency_ghz: Vec<f64>,
    intensity: Vec<f64>,
    pub metadata: SpectrumMetadata,
}

impl Spectrum {
    /// Sorts points by frequency and validates them.
    pub fn new(frequency_ghz: Vec<f64>, intensity: Vec<f64>, metadata: SpectrumMetadata) -> Result<Self> {
        if frequency_ghz.len() != intensity.len() {
            return Err(Error::InvalidParameter("frequency and intensity lengths differ".into()));
        }
        if frequency_ghz.len() < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "spectrum has {} points, need at least {MIN_POINTS}",
                frequency_ghz.len()
            )));
        }
        if let Some(f) = frequency_ghz.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::InvalidParameter(format!("frequency must be positive and finite, got {f}")));
        }
        if let Some(v) = intensity.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("intensity must be non-negative and finite, got {v}")));
        }
        let mut pairs: Vec<(f64, f64)> = frequency_ghz.into_iter().zip(intensity).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateAbscissa(w[0].0));
        }
        let (frequency_ghz, intensity) = pairs.into_iter().unzip();
        Ok(Self { frequency_ghz, intensity, metadata })
    }

    pub fn frequency_ghz(&self) -> &[f64] {
        &self.frequency_ghz
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn len(&self) -> usize {
        self.frequency_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequency_ghz.is_empty()
    }
}

fn parse_field(field: &str, line: u64) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, message: format!("not a finite number: {field:?}") }),
    }
}

/// Reads a two-column CSV spectrum. A header row is optional; when present
/// its first column names the axis (`frequency_ghz`, `frequency_thz` or
/// `wavelength_nm`).
pub fn parse_spectrum<R: Read>(reader: R, mut metadata: SpectrumMetadata) -> Result<Spectrum> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut axis = Abscissa::FrequencyGhz;
    let mut freq = Vec::new();
    let mut intensity = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, message: e.to_string() }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse { line, message: format!("expected 2 columns, found {}", record.len()) });
        }
        if first {
            first = false;
            if record[0].trim().parse::<f64>().is_err() {
                axis = Abscissa::from_header(&record[0])
                    .ok_or_else(|| Error::Parse { line, message: format!("unknown axis column {:?}", &record[0]) })?;
                continue;
            }
        }
        let x = parse_field(&record[0], line)?;
        let y = parse_field(&record[1], line)?;
        if axis == Abscissa::WavelengthNm && x <= 0.0 {
            return Err(Error::Parse { line, message: format!("wavelength must be positive, got {x}") });
        }
        freq.push(axis.to_ghz(x));
        intensity.push(y);
    }
    metadata.source_axis = axis;
    Spectrum::new(freq, intensity, metadata)
}

pub fn load_spectrum(path: &Path, batch_tag: Option<&str>) -> Result<Spectrum> {
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let meta = SpectrumMetadata { label, batch_tag: batch_tag.map(str::to_owned), ..Default::default() };
    parse_spectrum(std::fs::File::open(path)?, meta)
}

/// Writes `frequency_ghz,intensity` rows with round-trip float formatting.
pub fn write_spectrum<W: Write>(writer: W, s: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frequency_ghz", "intensity"])?;
    for (f, i) in s.frequency_ghz.iter().zip(&s.intensity) {
        w.write_record([f.to_string(), i.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakParams {
    /// Odd number of points in the centered moving average.
    pub smoothing_window: usize,
    /// Minimum prominence as a fraction of the smoothed trace maximum.
    pub min_prominence: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self { smoothing_window: 5, min_prominence: 0.1 }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "smoothing window must be a positive odd count, got {}",
                self.smoothing_window
            )));
        }
        if !(self.min_prominence.is_finite() && (0.0..=1.0).contains(&self.min_prominence)) {
            return Err(Error::InvalidParameter(format!(
                "min_prominence must lie in [0, 1], got {}",
                self.min_prominence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub center_ghz: f64,
    /// Smoothed intensity at the peak sample.
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence.
    pub width_ghz: f64,
}

/// Centered moving average; the window shrinks symmetrically at the edges.
pub fn smooth(y: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = y.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            // Summing symmetric pairs keeps the result exact under reversal.
            let mut acc = y[i];
            for k in 1..=h {
                acc += y[i - k] + y[i + k];
            }
            acc / (2 * h + 1) as f64
        })
        .collect()
}

/// Local maxima as `(left, right)` index ranges of their plateaus.
fn local_maxima(y: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i - 1] < y[i] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push((i, j));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence with the bases of the peak at `(l, r)`.
fn prominence(y: &[f64], l: usize, r: usize) -> (f64, usize, usize) {
    let h = y[l];
    let mut left_min = h;
    let mut left_base = l;
    let mut i = l;
    while i > 0 {
        i -= 1;
        if y[i] > h {
            break;
        }
        if y[i] < left_min {
            left_min = y[i];
            left_base = i;
        }
    }
    let mut right_min = h;
    let mut right_base = r;
    for (k, &v) in y.iter().enumerate().skip(r + 1) {
        if v > h {
            break;
        }
        if v < right_min {
            right_min = v;
            right_base = k;
        }
    }
    (h - left_min.max(right_min), left_base, right_base)
}

/// Vertex abscissa of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a < 0.0) {
        return None;
    }
    // y = y1 + b(x − x1) + a(x − x1)²  with b the slope at x1.
    let b = d1 + a * (x[1] - x[0]);
    let v = x[1] - b / (2.0 * a);
    (v >= x[0] && v <= x[2]).then_some(v)
}

fn crossing(x: &[f64], y: &[f64], i: usize, j: usize, level: f64) -> f64 {
    let t = (level - y[i]) / (y[j] - y[i]);
    x[i] + t * (x[j] - x[i])
}

/// Peaks of the smoothed trace whose prominence is at least
/// `min_prominence × max(smoothed)`, sorted by center frequency.
pub fn detect_peaks(s: &Spectrum, params: &PeakParams) -> Result<Vec<Peak>> {
    params.validate()?;
    if params.smoothing_window >= s.len() {
        return Err(Error::InvalidParameter(format!(
            "smoothing window {} must be smaller than the {} spectrum points",
            params.smoothing_window,
            s.len()
        )));
    }
    let x = &s.frequency_ghz;
    let y = smooth(&s.intensity, params.smoothing_window);
    let max = y.iter().copied().fold(0.0, f64::max);
    let threshold = params.min_prominence * max;
    let mut peaks = Vec::new();
    for (l, r) in local_maxima(&y) {
        let (prom, lb, rb) = prominence(&y, l, r);
        if !(prom > 0.0 && prom >= threshold) {
            continue;
        }
        let center = if l == r {
            parabola_vertex([x[l - 1], x[l], x[l + 1]], [y[l - 1], y[l], y[l + 1]]).unwrap_or(x[l])
        } else {
            0.5 * (x[l] + x[r])
        };
        let level = y[l] - 0.5 * prom;
        let mut i = l;
        while i > lb && y[i] > level {
            i -= 1;
        }
        let left = if y[i] <= level { crossing(x, &y, i, i + 1, level) } else { x[i] };
        let mut j = r;
        while j < rb && y[j] > level {
            j += 1;
        }
        let right = if y[j] <= level { crossing(x, &y, j, j - 1, level) } else { x[j] };
        peaks.push(Peak { center_ghz: center, height: y[l], prominence: prom, width_ghz: right - left });
    }
    Ok(peaks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmitterAssignment {
    pub peaks: Vec<Peak>,
    pub is_single_emitter: bool,
    pub gss_ghz: Option<f64>,
}

/// One to four lines are taken as one emitter; the two lowest frequencies are
/// its C and D transitions, whose spacing is the ground-state splitting.
pub fn classify_and_extract(peaks: &[Peak]) -> EmitterAssignment {
    let mut peaks = peaks.to_vec();
    peaks.sort_by(|a, b| a.center_ghz.total_cmp(&b.center_ghz));
    let is_single_emitter = (1..=MAX_SINGLE_EMITTER_LINES).contains(&peaks.len());
    let gss_ghz = (is_single_emitter && peaks.len() >= 2).then(|| peaks[1].center_ghz - peaks[0].center_ghz);
    EmitterAssignment { peaks, is_single_emitter, gss_ghz }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub label: String,
    pub batch_tag: Option<String>,
    #[serde(flatten)]
    pub assignment: EmitterAssignment,
}

/// Detection and classification of every spectrum, in input order.
pub fn analyze_batch(batch: &[Spectrum], params: &PeakParams) -> Result<Vec<SpectrumRecord>> {
    batch
        .par_iter()
        .map(|s| {
            let peaks = detect_peaks(s, params)?;
            Ok(SpectrumRecord {
                label: s.metadata.label.clone(),
                batch_tag: s.metadata.batch_tag.clone(),
                assignment: classify_and_extract(&peaks),
            })
        })
        .collect()
}

/// All detected line centers of a batch, pooled without line assignment.
pub fn pool_transitions(batch: &[Spectrum], params: &PeakParams, binning: Binning) -> Result<Summary> {
    if batch.is_empty() {
        return Err(Error::EmptyRequest("no spectra to pool"));
    }
    let centers: Vec<f64> =
        analyze_batch(batch, params)?.iter().flat_map(|r| r.assignment.peaks.iter().map(|p| p.center_ghz)).collect();
    stats::summarize_with(&centers, binning)
}

/// Pooled line centers per batch tag; untagged spectra share the empty tag.
pub fn pool_transitions_by_tag(
    batch: &[Spectrum],
    params: &PeakParams,
    binning: Binning,
) -> Result<BTreeMap<String, Summary>> {
    if batch.is_empty() {
        return Err(Error::EmptyRequest("no spectra to pool"));
    }
    let mut groups: BTreeMap<String, Vec<Spectrum>> = BTreeMap::new();
    for s in batch {
        groups.entry(s.metadata.batch_tag.clone().unwrap_or_default()).or_default().push(s.clone());
    }
    groups.into_iter().map(|(tag, g)| Ok((tag, pool_transitions(&g, params, binning)?))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchStats {
    pub n_spectra: usize,
    pub n_single_emitter: usize,
    /// Splitting summary over single emitters with at least two lines.
    pub gss: Summary,
}

pub fn batch_gss_stats(batch: &[Spectrum], params: &PeakParams) -> Result<BatchStats> {
    if batch.is_empty() {
        return Err(Error::EmptyRequest("no spectra in batch"));
    }
    let records = analyze_batch(batch, params)?;
    gss_stats_of(&records)
}

pub fn gss_stats_of(records: &[SpectrumRecord]) -> Result<BatchStats> {
    let n_single_emitter = records.iter().filter(|r| r.assignment.is_single_emitter).count();
    let gss: Vec<f64> = records.iter().filter_map(|r| r.assignment.gss_ghz).collect();
    if gss.is_empty() {
        return Err(Error::NoSingleEmitters);
    }
    Ok(BatchStats { n_spectra: records.len(), n_single_emitter, gss: stats::summarize(&gss)? })
}

/// A Lorentzian line for synthetic spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub center_ghz: f64,
    pub fwhm_ghz: f64,
    pub amplitude: f64,
}

/// Noisy sum of Lorentzian lines on a uniform grid, with a constant
/// background large enough that clipping at zero is rare.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub start_ghz: f64,
    pub step_ghz: f64,
    pub points: usize,
    pub lines: Vec<Line>,
    pub noise_sigma: f64,
    pub background: f64,
}

impl SyntheticSpec {
    pub fn render(&self, seed: u64, index: u64, metadata: SpectrumMetadata) -> Result<Spectrum> {
        let normal =
            Normal::new(0.0, self.noise_sigma).map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
        let mut rng = StreamFactory::new(seed, Domain::Synthetic).stream(index);
        let x: Vec<f64> = (0..self.points).map(|i| self.start_ghz + self.step_ghz * i as f64).collect();
        let y = x
            .iter()
            .map(|&f| {
                let signal: f64 = self
                    .lines
                    .iter()
                    .map(|l| {
                        let hw = 0.5 * l.fwhm_ghz;
                        l.amplitude * hw * hw / ((f - l.center_ghz).powi(2) + hw * hw)
                    })
                    .sum();
                (self.background + signal + normal.sample(&mut rng)).max(0.0)
            })
            .collect();
        Spectrum::new(x, y, metadata)
    }
}

/// Draws `count` lines with centers in `[lo, hi]` separated by at least `min_gap_ghz`.
pub fn random_lines<R: Rng>(
    rng: &mut R,
    count: usize,
    lo: f64,
    hi: f64,
    min_gap_ghz: f64,
    fwhm_ghz: (f64, f64),
    amplitude: (f64, f64),
) -> Vec<Line> {
    let mut lines: Vec<Line> = Vec::with_capacity(count);
    while lines.len() < count {
        let c = rng.random_range(lo..hi);
        if lines.iter().all(|l| (l.center_ghz - c).abs() >= min_gap_ghz) {
            lines.push(Line {
                center_ghz: c,
                fwhm_ghz: rng.random_range(fwhm_ghz.0..=fwhm_ghz.1),
                amplitude: rng.random_range(amplitude.0..=amplitude.1),
            });
        }
    }
    lines.sort_by(|a, b| a.center_ghz.total_cmp(&b.center_ghz));
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 406_000.0 + 2.0 * i as f64).collect()
    }

    fn spectrum(x: Vec<f64>, y: Vec<f64>) -> Spectrum {
        Spectrum::new(x, y, SpectrumMetadata::default()).unwrap()
    }

    fn gaussian(x: &[f64], c: f64, s: f64, a: f64) -> Vec<f64> {
        x.iter().map(|f| a * (-(f - c).powi(2) / (2.0 * s * s)).exp()).collect()
    }

    #[test]
    fn parses_headerless_and_headed_csv() {
        let body: String = (0..20).map(|i| format!("{},{}\n", 400_000 + i, i % 3)).collect();
        let s = parse_spectrum(body.as_bytes(), SpectrumMetadata::default()).unwrap();
        assert_eq!(s.len(), 20);
        let headed = format!("frequency_ghz,intensity\n{body}");
        assert_eq!(parse_spectrum(headed.as_bytes(), SpectrumMetadata::default()).unwrap(), s);
        let thz: String = (0..20).map(|i| format!("{},{}\n", 400.0 + i as f64 * 1e-3, i % 3)).collect();
        let t =
            parse_spectrum(format!("frequency_thz,intensity\n{thz}").as_bytes(), SpectrumMetadata::default()).unwrap();
        assert!((t.frequency_ghz()[1] - 400_001.0).abs() < 1e-6);
        assert_eq!(t.metadata.source_axis, Abscissa::FrequencyThz);
    }

    #[test]
    fn wavelength_axis_is_converted_and_sorted() {
        let body: String = (0..20).map(|i| format!("{},{}\n", 737.0 + 0.01 * i as f64, i)).collect();
        let s =
            parse_spectrum(format!("wavelength_nm,intensity\n{body}").as_bytes(), SpectrumMetadata::default()).unwrap();
        assert_eq!(s.metadata.source_axis, Abscissa::WavelengthNm);
        assert!(s.frequency_ghz().windows(2).all(|w| w[0] < w[1]));
        // Longest wavelength is the lowest frequency.
        assert!((s.frequency_ghz()[0] - C_NM_GHZ / 737.19).abs() < 1e-6);
        assert_eq!(s.intensity()[0], 19.0);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let mut body: String = (0..20).map(|i| format!("{},{}\n", 400_000 + i, 1)).collect();
        body.insert_str(0, "frequency_ghz,intensity\n");
        let bad = body.replacen("400005,1", "400005,abc", 1);
        match parse_spectrum(bad.as_bytes(), SpectrumMetadata::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        let extra = body.replacen("400005,1", "400005,1,2", 1);
        assert!(matches!(
            parse_spectrum(extra.as_bytes(), SpectrumMetadata::default()),
            Err(Error::Parse { line: 7, .. })
        ));
    }

    #[test]
    fn descending_equals_ascending_and_duplicates_rejected() {
        let x = grid(20);
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let a = spectrum(x.clone(), y.clone());
        let b = spectrum(x.iter().rev().copied().collect(), y.iter().rev().copied().collect());
        assert_eq!(a, b);
        let mut dup = x.clone();
        dup[5] = dup[4];
        assert!(matches!(Spectrum::new(dup, y.clone(), Default::default()), Err(Error::DuplicateAbscissa(_))));
        assert!(Spectrum::new(grid(10), vec![1.0; 10], Default::default()).is_err());
        let mut neg = y;
        neg[3] = -1.0;
        assert!(Spectrum::new(x, neg, Default::default()).is_err());
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let x: Vec<f64> = (0..40).map(|i| 406_000.0 + 0.1 * i as f64 + 1e-7).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin().abs() * 1234.5678).collect();
        let s = spectrum(x, y);
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &s).unwrap();
        let back = parse_spectrum(buf.as_slice(), SpectrumMetadata::default()).unwrap();
        assert_eq!(back.frequency_ghz(), s.frequency_ghz());
        assert_eq!(back.intensity(), s.intensity());
    }

    #[test]
    fn single_gaussian_line() {
        let x = grid(200);
        let s = spectrum(x.clone(), gaussian(&x, 406_201.3, 6.0, 100.0));
        let p = detect_peaks(&s, &PeakParams::default()).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].center_ghz - 406_201.3).abs() < 2.0);
        // FWHM of a Gaussian is 2.355 σ; smoothing broadens slightly.
        assert!((p[0].width_ghz - 14.1).abs() < 2.0, "{}", p[0].width_ghz);
    }

    #[test]
    fn flat_trace_has_no_peaks() {
        let s = spectrum(grid(50), vec![7.0; 50]);
        assert!(detect_peaks(&s, &PeakParams::default()).unwrap().is_empty());
        let z = spectrum(grid(50), vec![0.0; 50]);
        assert!(detect_peaks(&z, &PeakParams::default()).unwrap().is_empty());
    }

    #[test]
    fn window_checks() {
        let s = spectrum(grid(20), vec![1.0; 20]);
        let too_big = PeakParams { smoothing_window: 21, ..Default::default() };
        assert!(matches!(detect_peaks(&s, &too_big), Err(Error::InvalidParameter(_))));
        let even = PeakParams { smoothing_window: 4, ..Default::default() };
        assert!(matches!(detect_peaks(&s, &even), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn plateau_peak_is_centered() {
        let mut y = vec![0.0; 30];
        for v in &mut y[10..14] {
            *v = 5.0;
        }
        let x = grid(30);
        let s = spectrum(x.clone(), y);
        let p = detect_peaks(&s, &PeakParams { smoothing_window: 1, min_prominence: 0.1 }).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].center_ghz, 0.5 * (x[10] + x[13]));
    }

    #[test]
    fn four_lorentzians_resolved() {
        let centers = [406_100.0, 406_150.0, 406_200.0, 406_250.0];
        let spec = SyntheticSpec {
            start_ghz: 406_000.0,
            step_ghz: 1.0,
            points: 400,
            lines: centers.iter().map(|&c| Line { center_ghz: c, fwhm_ghz: 8.0, amplitude: 20.0 }).collect(),
            noise_sigma: 1.0,
            background: 5.0,
        };
        let s = spec.render(4, 0, Default::default()).unwrap();
        let p = detect_peaks(&s, &PeakParams { smoothing_window: 5, min_prominence: 0.25 }).unwrap();
        assert_eq!(p.len(), 4);
        for (peak, c) in p.iter().zip(centers) {
            assert!((peak.center_ghz - c).abs() < 4.0);
        }
    }

    #[test]
    fn classification_rules() {
        let pk = |c| Peak { center_ghz: c, height: 1.0, prominence: 1.0, width_ghz: 1.0 };
        let a = classify_and_extract(&[pk(406_650.0), pk(406_600.0)]);
        assert!(a.is_single_emitter);
        assert_eq!(a.gss_ghz, Some(50.0));
        let six: Vec<Peak> = (0..6).map(|i| pk(406_000.0 + 30.0 * i as f64)).collect();
        let b = classify_and_extract(&six);
        assert!(!b.is_single_emitter && b.gss_ghz.is_none());
        let c = classify_and_extract(&[pk(406_000.0)]);
        assert!(c.is_single_emitter && c.gss_ghz.is_none());
        assert!(!classify_and_extract(&[]).is_single_emitter);
        let d = classify_and_extract(&[pk(406_600.0), pk(406_650.0), pk(406_900.0), pk(407_000.0)]);
        assert_eq!(d.gss_ghz, Some(50.0));
    }

    fn two_line(gss: f64, index: u64) -> Spectrum {
        SyntheticSpec {
            start_ghz: 405_800.0,
            step_ghz: 2.0,
            points: 1000,
            lines: vec![
                Line { center_ghz: 406_000.0, fwhm_ghz: 10.0, amplitude: 30.0 },
                Line { center_ghz: 406_000.0 + gss, fwhm_ghz: 10.0, amplitude: 30.0 },
            ],
            noise_sigma: 0.5,
            background: 3.0,
        }
        .render(1, index, Default::default())
        .unwrap()
    }

    #[test]
    fn batch_stats_match_direct_arithmetic() {
        let batch: Vec<Spectrum> = (0..11).map(|i| two_line(300.0 + 40.0 * i as f64, i)).collect();
        let st = batch_gss_stats(&batch, &PeakParams::default()).unwrap();
        let records = analyze_batch(&batch, &PeakParams::default()).unwrap();
        let direct: Vec<f64> = records.iter().map(|r| r.assignment.gss_ghz.unwrap()).collect();
        let (m, sd) = stats::mean_std(&direct);
        assert_eq!(st.gss.n, 11);
        assert_eq!(st.gss.mean, m);
        assert_eq!(st.gss.std, sd);
        assert_eq!(st.gss.sem, sd / 11f64.sqrt());
    }

    #[test]
    fn no_single_emitters() {
        let many = SyntheticSpec {
            start_ghz: 405_800.0,
            step_ghz: 2.0,
            points: 600,
            lines: (0..6)
                .map(|i| Line { center_ghz: 405_900.0 + 150.0 * i as f64, fwhm_ghz: 10.0, amplitude: 30.0 })
                .collect(),
            noise_sigma: 0.3,
            background: 3.0,
        };
        let batch: Vec<Spectrum> = (0..3).map(|i| many.render(2, i, Default::default()).unwrap()).collect();
        assert!(matches!(batch_gss_stats(&batch, &PeakParams::default()), Err(Error::NoSingleEmitters)));
        assert!(matches!(batch_gss_stats(&[], &PeakParams::default()), Err(Error::EmptyRequest(_))));
    }

    #[test]
    fn pooled_histograms() {
        let one = two_line(100.0, 0);
        let same = vec![one.clone(), one.clone(), one];
        let h = pool_transitions(&same, &PeakParams::default(), Binning::Fixed(2)).unwrap();
        assert_eq!(h.n, 6);
        assert!(matches!(
            pool_transitions(&[], &PeakParams::default(), Binning::default()),
            Err(Error::EmptyRequest(_))
        ));

        let batch = |spread: f64, tag: &str| -> Vec<Spectrum> {
            (0..40)
                .map(|i| {
                    let c = 406_500.0 + spread * ((i as f64 * 0.618_034).fract() - 0.5);
                    SyntheticSpec {
                        start_ghz: 405_000.0,
                        step_ghz: 2.0,
                        points: 1500,
                        lines: vec![Line { center_ghz: c, fwhm_ghz: 10.0, amplitude: 30.0 }],
                        noise_sigma: 0.3,
                        background: 3.0,
                    }
                    .render(3, i, SpectrumMetadata { batch_tag: Some(tag.into()), ..Default::default() })
                    .unwrap()
                })
                .collect()
        };
        let mut all = batch(100.0, "narrow");
        all.extend(batch(500.0, "wide"));
        let by_tag = pool_transitions_by_tag(&all, &PeakParams::default(), Binning::default()).unwrap();
        assert!(by_tag["wide"].std >= 4.0 * by_tag["narrow"].std);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn lines_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
            proptest::collection::vec((20.0f64..380.0, 5.0f64..40.0), 1..6)
        }

        fn render(lines: &[(f64, f64)], seed: u64) -> Spectrum {
            SyntheticSpec {
                start_ghz: 406_000.0,
                step_ghz: 1.0,
                points: 400,
                lines: lines
                    .iter()
                    .map(|&(c, a)| Line { center_ghz: 406_000.0 + c, fwhm_ghz: 6.0, amplitude: a })
                    .collect(),
                noise_sigma: 1.0,
                background: 4.0,
            }
            .render(seed, 0, Default::default())
            .unwrap()
        }

        proptest! {
            #[test]
            fn count_invariant_under_rescaling(lines in lines_strategy(), seed in 0u64..1000, k in 0.01f64..100.0) {
                let s = render(&lines, seed);
                let scaled = spectrum(s.frequency_ghz().to_vec(), s.intensity().iter().map(|v| v * k).collect());
                let p = PeakParams::default();
                prop_assert_eq!(detect_peaks(&s, &p).unwrap().len(), detect_peaks(&scaled, &p).unwrap().len());
            }

            #[test]
            fn mirror_symmetry(lines in lines_strategy(), seed in 0u64..1000) {
                let s = render(&lines, seed);
                let x = s.frequency_ghz();
                let (lo, hi) = (x[0], x[x.len() - 1]);
                let mx: Vec<f64> = x.iter().rev().map(|f| lo + (hi - f)).collect();
                let my: Vec<f64> = s.intensity().iter().rev().copied().collect();
                let m = spectrum(mx, my);
                let p = PeakParams::default();
                let a = detect_peaks(&s, &p).unwrap();
                let b = detect_peaks(&m, &p).unwrap();
                prop_assert_eq!(a.len(), b.len());
                for (pa, pb) in a.iter().zip(b.iter().rev()) {
                    prop_assert!((pa.center_ghz - (lo + hi - pb.center_ghz)).abs() < 1e-6);
                    prop_assert!((pa.prominence - pb.prominence).abs() <= 1e-9 * pa.prominence.max(1.0));
                }
            }

            #[test]
            fn gss_ignores_extra_high_lines(base in 406_000.0f64..407_000.0, gss in 1.0f64..500.0,
                                            extra in proptest::collection::vec(0.0f64..1000.0, 0..3)) {
                let pk = |c| Peak { center_ghz: c, height: 1.0, prominence: 1.0, width_ghz: 1.0 };
                let mut peaks = vec![pk(base), pk(base + gss)];
                let want = classify_and_extract(&peaks).gss_ghz;
                peaks.extend(extra.iter().map(|e| pk(base + gss + 1.0 + e)));
                prop_assert_eq!(classify_and_extract(&peaks).gss_ghz, want);
            }

            #[test]
            fn csv_round_trip(y in proptest::collection::vec(0.0f64..1e9, 16..80), step in 1e-6f64..10.0) {
                let x: Vec<f64> = (0..y.len()).map(|i| 1000.0 + step * i as f64).collect();
                let s = Spectrum::new(x, y, Default::default());
                prop_assume!(s.is_ok());
                let s = s.unwrap();
                let mut buf = Vec::new();
                write_spectrum(&mut buf, &s).unwrap();
                let back = parse_spectrum(buf.as_slice(), Default::default()).unwrap();
                prop_assert_eq!(back.frequency_ghz(), s.frequency_ghz());
                prop_assert_eq!(back.intensity(), s.intensity());
            }
        }
    }
}
