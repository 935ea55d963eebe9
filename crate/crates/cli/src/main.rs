use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use strainforge::config::Config;
use strainforge::mechanics;
use strainforge::population::{self, IntrinsicStrainModel, PostDepositionDraws, PreDepositionDraws};
use strainforge::report::{self, write_atomic};
use strainforge::spectra;
use strainforge::stats::{Binning, Summary};
use strainforge::thermal;
use strainforge::{Error, Result};

#[derive(Parser)]
#[command(name = "strainforge", version, about = "Strain engineering of SiV centers in coated diamond nanobeams")]
struct Cli {
    /// JSON config file; falls back to $STRAINFORGE_CONFIG, then built-in defaults.
    #[arg(long, global = true, env = "STRAINFORGE_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides monte_carlo.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phase {
    Pre,
    Post,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Sigma,
    Stress,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the coated beam and print its strain state.
    Mechanics {
        /// Film stress in MPa (default: from config).
        #[arg(long, allow_negative_numbers = true)]
        stress_mpa: Option<f64>,
        /// Write eps_xx, eps_yy, eps_zz versus depth to this CSV.
        #[arg(long)]
        depth_profile: Option<PathBuf>,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Draw an emitter ensemble and write one row per emitter.
    Sample {
        #[arg(long, value_enum)]
        phase: Phase,
        #[arg(long)]
        n: Option<usize>,
        /// Intrinsic strain sigma; calibrated to the config target when absent.
        #[arg(long)]
        sigma: Option<f64>,
        /// Film stress in MPa for the post-deposition phase (default: from config).
        #[arg(long, allow_negative_numbers = true)]
        stress_mpa: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit sigma or film stress to a target mean splitting.
    Calibrate {
        #[arg(long, value_enum)]
        what: Target,
        #[arg(long, allow_negative_numbers = true)]
        target_ghz: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Operating temperature for a given splitting.
    Top {
        #[arg(long, allow_negative_numbers = true)]
        gss_ghz: f64,
    },
    /// Full scenario: calibrations, ensembles, operating temperatures.
    Report {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Peak detection and splitting statistics for a directory of CSV spectra.
    Spectra {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        batch_tag: String,
        #[arg(long)]
        out: PathBuf,
        /// Pooled line-center histogram (default: <out stem>_transitions.csv).
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
}

fn summary_json(s: &Summary) -> serde_json::Value {
    json!({ "n": s.n, "mean_ghz": s.mean, "std_ghz": s.std, "sem_ghz": s.sem })
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.monte_carlo.seed = seed;
    }
    let seed = cfg.monte_carlo.seed;
    let frame = cfg.population.intrinsic_frame;
    match cli.command {
        Command::Mechanics { stress_mpa, depth_profile, points } => {
            let stack = match stress_mpa {
                Some(s) => cfg.mechanics.with_film_stress(s),
                None => cfg.mechanics.clone(),
            };
            let field = mechanics::solve_beam_state(&stack)?;
            if let Some(path) = depth_profile {
                if points < 2 {
                    return Err(Error::InvalidParameter("--points must be at least 2".into()));
                }
                let depth = field.substrate_depth_nm;
                let mut text = String::from("depth_nm,eps_xx,eps_yy,eps_zz\n");
                for i in 0..points {
                    let d = depth * i as f64 / (points - 1) as f64;
                    let e = mechanics::strain_at(&field, d)?;
                    text.push_str(&format!("{d},{},{},{}\n", e.xx(), e.yy(), e.zz()));
                }
                write_atomic(&path, text.as_bytes())?;
            }
            print_json(&json!({
                "film_stress_mpa": stack.film.intrinsic_stress_mpa,
                "field": field,
                "axial_strain_at_mean_depth": field.axial_strain(cfg.population.position.depth_mean_nm),
            }))
        }
        Command::Sample { phase, n, sigma, stress_mpa, out } => {
            let n = n.unwrap_or(cfg.monte_carlo.n);
            let fit_sigma = |cfg: &Config| -> Result<f64> {
                match sigma {
                    Some(s) => Ok(s),
                    None => {
                        Ok(population::calibrate_sigma(cfg.calibration.pre_mean_ghz, n, seed, &cfg.siv, frame)?.value)
                    }
                }
            };
            let (ensemble, info) = match phase {
                Phase::Pre => {
                    let s = fit_sigma(&cfg)?;
                    let draws = PreDepositionDraws::generate(n, seed)?;
                    let e = draws.realize(&IntrinsicStrainModel { sigma: s, frame }, &cfg.siv, Binning::default())?;
                    (e, json!({ "phase": "pre", "sigma_intrinsic": s }))
                }
                Phase::Post => {
                    let stack = match stress_mpa {
                        Some(s) => cfg.mechanics.with_film_stress(s),
                        None => cfg.mechanics.clone(),
                    };
                    let intrinsic = if cfg.population.post_includes_intrinsic {
                        Some(IntrinsicStrainModel { sigma: fit_sigma(&cfg)?, frame })
                    } else {
                        None
                    };
                    let field = mechanics::solve_beam_state(&stack)?;
                    let draws =
                        PostDepositionDraws::generate(n, &cfg.population.position, field.substrate_depth_nm, seed)?;
                    let e = draws.realize(&field, &cfg.siv, intrinsic.as_ref(), Binning::default())?;
                    (e, json!({ "phase": "post", "film_stress_mpa": stack.film.intrinsic_stress_mpa }))
                }
            };
            write_atomic(&out, &report::samples_csv(&ensemble.samples)?)?;
            print_json(&json!({ "seed": seed, "run": info, "gss": summary_json(&ensemble.summary) }))
        }
        Command::Calibrate { what, target_ghz, n } => {
            let n = n.unwrap_or(cfg.monte_carlo.n);
            let (name, result) = match what {
                Target::Sigma => {
                    let t = target_ghz.unwrap_or(cfg.calibration.pre_mean_ghz);
                    ("sigma_intrinsic", population::calibrate_sigma(t, n, seed, &cfg.siv, frame)?)
                }
                Target::Stress => {
                    let t = target_ghz.unwrap_or(cfg.calibration.post_mean_ghz);
                    let intrinsic = if cfg.population.post_includes_intrinsic {
                        let s = population::calibrate_sigma(cfg.calibration.pre_mean_ghz, n, seed, &cfg.siv, frame)?;
                        Some(IntrinsicStrainModel { sigma: s.value, frame })
                    } else {
                        None
                    };
                    let r = population::calibrate_film_stress(
                        t,
                        &cfg.mechanics,
                        &cfg.population.position,
                        &cfg.siv,
                        intrinsic.as_ref(),
                        n,
                        seed,
                    )?;
                    ("film_stress_mpa", r)
                }
            };
            print_json(
                &json!({ "seed": seed, "n": n, name: result.value, "achieved_mean_ghz": result.achieved_mean_ghz }),
            )
        }
        Command::Top { gss_ghz } => {
            let t = thermal::operational_temperature(gss_ghz, &cfg.thermal)?;
            println!("{t:.4} K");
            Ok(())
        }
        Command::Report { out_dir, n } => {
            if let Some(n) = n {
                cfg.monte_carlo.n = n;
            }
            let r = report::build_report(&cfg, seed)?;
            for f in r.write(&out_dir)? {
                log::info!("wrote {}", f.display());
            }
            print_json(&serde_json::to_value(&r.summary)?)
        }
        Command::Spectra { dir, batch_tag, out, histogram } => run_spectra(&cfg, &dir, &batch_tag, &out, histogram),
    }
}

fn run_spectra(cfg: &Config, dir: &Path, tag: &str, out: &Path, histogram: Option<PathBuf>) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyRequest("no .csv spectra in directory"));
    }
    let batch = paths
        .iter()
        .map(|p| {
            spectra::load_spectrum(p, Some(tag)).map_err(|e| Error::InvalidParameter(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let records = spectra::analyze_batch(&batch, &cfg.spectra)?;
    let stats = spectra::gss_stats_of(&records)?;
    let pooled = spectra::pool_transitions(&batch, &cfg.spectra, Binning::default())?;

    let hist_path = histogram.unwrap_or_else(|| {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "spectra".into());
        out.with_file_name(format!("{stem}_transitions.csv"))
    });
    let mut text = String::from("center_lo_ghz,center_hi_ghz,density_per_ghz\n");
    let h = &pooled.histogram;
    for (e, d) in h.edges.windows(2).zip(&h.densities) {
        text.push_str(&format!("{},{},{}\n", e[0], e[1], d));
    }
    write_atomic(&hist_path, text.as_bytes())?;

    let doc = json!({
        "batch_tag": tag,
        "n_spectra": stats.n_spectra,
        "n_single_emitter": stats.n_single_emitter,
        "gss": summary_json(&stats.gss),
        "spectra": records,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    write_atomic(out, &bytes)?;
    print_json(&json!({ "batch_tag": tag, "gss": summary_json(&stats.gss), "n_spectra": stats.n_spectra }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
