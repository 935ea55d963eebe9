//! End-to-end scenario: calibrate both ensembles, predict operating
//! temperatures and write plot-ready tables.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Config, SCHEMA_VERSION};
use crate::error::Result;
use crate::mechanics;
use crate::population::{
    self, EmitterSample, EnsembleResult, IntrinsicStrainModel, PostDepositionDraws, PreDepositionDraws,
};
use crate::stats::{Binning, Histogram};
use crate::thermal;

pub const GSS_PDF_FILE: &str = "gss_pdf.csv";
pub const TOP_VS_GSS_FILE: &str = "top_vs_gss.csv";
pub const OPERABILITY_FILE: &str = "operability.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub n: usize,
    pub sigma_intrinsic: f64,
    pub film_stress_mpa: f64,
    pub pre_mean_ghz: f64,
    pub pre_std_ghz: f64,
    pub post_mean_ghz: f64,
    pub post_std_ghz: f64,
    pub p_top_ge_1p5k: f64,
    pub p_top_ge_2p0k: f64,
    pub pre_p_top_ge_1p5k: f64,
    pub pre_p_top_ge_2p0k: f64,
    pub pre_median_strain: f64,
    pub post_median_strain: f64,
    /// Axial strain of the calibrated beam at the mean implantation depth.
    pub axial_strain_at_mean_depth: f64,
    pub post_includes_intrinsic: bool,
}

pub struct Report {
    pub summary: ReportSummary,
    pub pre: EnsembleResult,
    pub post: EnsembleResult,
    pub gss_pdf: Vec<(f64, f64, f64, f64)>,
    pub top_vs_gss: Vec<(f64, f64)>,
    /// `(T, pre fraction, post fraction)` with `T_op ≥ T`.
    pub operability: Vec<(f64, f64, f64)>,
}

fn fraction_at_least(t_op: &[f64], t: f64) -> f64 {
    t_op.iter().filter(|&&v| v >= t).count() as f64 / t_op.len() as f64
}

pub fn build_report(cfg: &Config, seed: u64) -> Result<Report> {
    cfg.validate()?;
    let n = cfg.monte_carlo.n;
    let frame = cfg.population.intrinsic_frame;

    let pre_draws = PreDepositionDraws::generate(n, seed)?;
    let sigma = population::calibrate_sigma_on(&pre_draws, cfg.calibration.pre_mean_ghz, &cfg.siv, frame)?;
    log::info!("calibrated sigma = {:e} (mean {:.3} GHz)", sigma.value, sigma.achieved_mean_ghz);
    let intrinsic = IntrinsicStrainModel { sigma: sigma.value, frame };
    let pre = pre_draws.realize(&intrinsic, &cfg.siv, Binning::default())?;
    drop(pre_draws);

    let depth = cfg.mechanics.substrate.cross_section_nm.depth_nm();
    let post_draws = PostDepositionDraws::generate(n, &cfg.population.position, depth, seed)?;
    let post_intrinsic = cfg.population.post_includes_intrinsic.then_some(&intrinsic);
    let stress = population::calibrate_film_stress_on(
        &post_draws,
        cfg.calibration.post_mean_ghz,
        &cfg.mechanics,
        &cfg.siv,
        post_intrinsic,
    )?;
    log::info!("calibrated film stress = {:.3} MPa (mean {:.3} GHz)", stress.value, stress.achieved_mean_ghz);
    let field = mechanics::solve_beam_state(&cfg.mechanics.with_film_stress(stress.value))?;
    let post = post_draws.realize(&field, &cfg.siv, post_intrinsic, Binning::default())?;
    drop(post_draws);

    let pre_top = thermal::operational_temperatures(&pre.gss(), &cfg.thermal)?;
    let post_top = thermal::operational_temperatures(&post.gss(), &cfg.thermal)?;
    let temps = cfg.report.temps()?;
    let pre_curve = thermal::survival_fractions(&pre_top, &temps)?;
    let post_curve = thermal::survival_fractions(&post_top, &temps)?;
    let operability = pre_curve.iter().zip(&post_curve).map(|(a, b)| (a.0, a.1, b.1)).collect();

    let top_vs_gss = cfg
        .report
        .top_gss()?
        .into_iter()
        .map(|g| Ok((g, thermal::operational_temperature(g, &cfg.thermal)?)))
        .collect::<Result<Vec<_>>>()?;

    let edges = cfg.report.gss_edges()?;
    let pre_pdf = Histogram::on_edges(&pre.gss(), edges.clone())?;
    let post_pdf = Histogram::on_edges(&post.gss(), edges)?;
    let gss_pdf = pre_pdf
        .edges
        .windows(2)
        .zip(pre_pdf.densities.iter().zip(&post_pdf.densities))
        .map(|(e, (a, b))| (e[0], e[1], *a, *b))
        .collect();

    let summary = ReportSummary {
        schema_version: SCHEMA_VERSION,
        seed,
        n,
        sigma_intrinsic: sigma.value,
        film_stress_mpa: stress.value,
        pre_mean_ghz: pre.summary.mean,
        pre_std_ghz: pre.summary.std,
        post_mean_ghz: post.summary.mean,
        post_std_ghz: post.summary.std,
        p_top_ge_1p5k: fraction_at_least(&post_top, 1.5),
        p_top_ge_2p0k: fraction_at_least(&post_top, 2.0),
        pre_p_top_ge_1p5k: fraction_at_least(&pre_top, 1.5),
        pre_p_top_ge_2p0k: fraction_at_least(&pre_top, 2.0),
        pre_median_strain: pre.median_strain_magnitude(),
        post_median_strain: post.median_strain_magnitude(),
        axial_strain_at_mean_depth: field.axial_strain(cfg.population.position.depth_mean_nm),
        post_includes_intrinsic: cfg.population.post_includes_intrinsic,
    };
    Ok(Report { summary, pre, post, gss_pdf, top_vs_gss, operability })
}

fn csv_bytes<F>(header: &[&str], rows: usize, mut row: F) -> Result<Vec<u8>>
where
    F: FnMut(usize) -> Vec<String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for i in 0..rows {
        w.write_record(row(i))?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

impl Report {
    /// Writes the four report files into `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
            let path = dir.join(name);
            write_atomic(&path, &bytes)?;
            files.push(path);
            Ok(())
        };
        put(
            GSS_PDF_FILE,
            csv_bytes(
                &["gss_lo_ghz", "gss_hi_ghz", "pre_density_per_ghz", "post_density_per_ghz"],
                self.gss_pdf.len(),
                |i| {
                    let (a, b, c, d) = self.gss_pdf[i];
                    vec![a.to_string(), b.to_string(), c.to_string(), d.to_string()]
                },
            )?,
        )?;
        put(
            TOP_VS_GSS_FILE,
            csv_bytes(&["gss_ghz", "t_op_k"], self.top_vs_gss.len(), |i| {
                let (g, t) = self.top_vs_gss[i];
                vec![g.to_string(), t.to_string()]
            })?,
        )?;
        put(
            OPERABILITY_FILE,
            csv_bytes(&["temp_k", "pre_fraction", "post_fraction"], self.operability.len(), |i| {
                let (t, a, b) = self.operability[i];
                vec![t.to_string(), a.to_string(), b.to_string()]
            })?,
        )?;
        let mut json = serde_json::to_vec_pretty(&self.summary)?;
        json.push(b'\n');
        put(SUMMARY_FILE, json)?;
        Ok(files)
    }
}

/// Per-emitter table; position columns are empty when there is no spatial model.
pub fn samples_csv(samples: &[EmitterSample]) -> Result<Vec<u8>> {
    let header = [
        "index",
        "x_nm",
        "y_nm",
        "depth_nm",
        "orientation",
        "eps_xx",
        "eps_yy",
        "eps_zz",
        "eps_xy",
        "eps_yz",
        "eps_zx",
        "gss_ghz",
    ];
    csv_bytes(&header, samples.len(), |i| {
        let s = &samples[i];
        let mut row = vec![i.to_string()];
        match s.position {
            Some(p) => row.extend([p.x_nm.to_string(), p.y_nm.to_string(), p.depth_nm.to_string()]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        row.push(s.orientation_id.to_string());
        row.extend(s.strain.components().iter().map(|c| c.to_string()));
        row.push(s.gss_ghz.to_string());
        row
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> Config {
        let mut c = Config::default();
        c.monte_carlo.n = 4000;
        c
    }

    #[test]
    fn report_files_and_determinism() {
        let cfg = small_config();
        let a = build_report(&cfg, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = a.write(dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| build_report(&cfg, 5).unwrap());
        let dir2 = tempfile::tempdir().unwrap();
        let second: Vec<Vec<u8>> = b.write(dir2.path()).unwrap().iter().map(|f| std::fs::read(f).unwrap()).collect();
        assert_eq!(first, second);
        assert!((a.summary.pre_mean_ghz - 119.0).abs() <= 0.5);
        assert!((a.summary.post_mean_ghz - 608.0).abs() <= 0.5);
        let json: serde_json::Value = serde_json::from_slice(&first[3]).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["seed"], 5);
    }

    #[test]
    fn pdf_integrates_over_common_grid() {
        let r = build_report(&small_config(), 6).unwrap();
        let integral = |col: fn(&(f64, f64, f64, f64)) -> f64| -> f64 {
            r.gss_pdf.iter().map(|row| col(row) * (row.1 - row.0)).sum()
        };
        assert!((integral(|r| r.2) - 1.0).abs() < 1e-9);
        assert!(integral(|r| r.3) <= 1.0 + 1e-9);
        assert!(r.operability.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].2 <= w[0].2));
        assert!(r.top_vs_gss.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn samples_table_shape() {
        let r = build_report(&small_config(), 7).unwrap();
        let text = String::from_utf8(samples_csv(&r.pre.samples[..3]).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,,,,"));
        let post = String::from_utf8(samples_csv(&r.post.samples[..1]).unwrap()).unwrap();
        assert_eq!(post.lines().nth(1).unwrap().split(',').count(), 12);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
