//! `xmode-qed` command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::circuit::{port_mode_couplings, PortLayout};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fitting::{self, peaks};
use crate::io;
use crate::nv::{Branch, MagneticField};
use crate::qed::{self, CoupledSystem, DispersiveConvention};
use crate::spectroscopy::{self, LineCut, SweepResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "xmode-qed", version, about = "Multimode resonator / NV-ensemble cavity-QED simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenmodes of the resonator network with port couplings.
    Modes(Common),
    /// Transmission map over (field, frequency).
    Sweep(Common),
    /// One spectrum of the sweep at [sweep].linecut_field_mt.
    Linecut(Common),
    /// Dispersive shift of a detuned readout mode.
    Dispersive(Common),
    /// Fit spectra or a sweep grid read from CSV.
    Fit(FitArgs),
    /// Ensemble size and coupling bookkeeping for a sample.
    Estimate(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides [output].directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timestamps so reruns produce identical files.
    #[arg(long)]
    reproducible: bool,
    /// Also write an SVG heatmap (sweep only).
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FitModel::Lorentzian)]
    model: FitModel,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reproducible: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FitModel {
    /// |S|² Lorentzian per spectrum file.
    Lorentzian,
    /// Complex single-pole fit per spectrum file.
    Complex,
    /// Avoided-crossing fit of a sweep grid file.
    Crossing,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Modes(c) => cmd_modes(&c),
        Command::Sweep(c) => cmd_sweep(&c),
        Command::Linecut(c) => cmd_linecut(&c),
        Command::Dispersive(c) => cmd_dispersive(&c),
        Command::Estimate(c) => cmd_estimate(&c),
        Command::Fit(f) => cmd_fit(&f),
    }
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

fn out_dir(flag: &Option<PathBuf>, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    let dir = flag
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.directory.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::invalid(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value).expect("json serializes") + "\n"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))
}

fn cmd_modes(c: &Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let net = cfg
        .network()?
        .ok_or_else(|| Error::invalid("modes needs network values in [resonator]"))?;
    let modes = net.classify_modes()?;
    let couplings = port_mode_couplings(&modes, &PortLayout::default());
    let degenerate: Vec<bool> = (0..4)
        .map(|i| {
            (0..4).any(|j| {
                j != i && (modes[i].frequency_ghz - modes[j].frequency_ghz).abs() <= 1e-9 * modes[i].frequency_ghz
            })
        })
        .collect();

    println!("{:<8} {:>14} {:>5} {:>9} {:>9} {:>9} {:>9}", "mode", "frequency_GHz", "pure", "port1", "port2", "port3", "port4");
    let mut csv = format!(
        "# xmode-qed modes\n# config_hash: {}\nsymmetry,frequency_GHz,pure,degenerate,port1,port2,port3,port4\n",
        config_hash(&cfg)
    );
    for (k, m) in modes.iter().enumerate() {
        let p = couplings[k];
        println!(
            "{:<8} {:>14.9} {:>5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}{}",
            m.symmetry.label(),
            m.frequency_ghz,
            m.pure,
            p[0],
            p[1],
            p[2],
            p[3],
            if degenerate[k] { "  degenerate" } else { "" }
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.symmetry.label(),
            m.frequency_ghz,
            m.pure,
            degenerate[k],
            p[0],
            p[1],
            p[2],
            p[3]
        ));
    }
    if degenerate.iter().any(|&d| d) {
        println!("note: degenerate modes present; their labels follow the eigen solver's basis choice");
    }
    if c.out.is_some() || cfg.output.directory.is_some() {
        let dir = out_dir(&c.out, Some(&cfg))?;
        write(&dir.join("modes.csv"), &csv)?;
    }
    Ok(())
}

fn run_sweep(cfg: &RunConfig, reproducible: bool) -> Result<SweepResult> {
    let mut r = spectroscopy::field_sweep(&cfg.sweep_config()?, &cfg.sweep_template()?)?;
    if !reproducible {
        r.metadata.created_unix = Some(now_unix());
    }
    Ok(r)
}

fn cmd_sweep(c: &Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let r = run_sweep(&cfg, c.reproducible)?;
    let dir = out_dir(&c.out, Some(&cfg))?;
    println!(
        "sweep {}×{} (field × frequency), config hash {}",
        r.n_fields(),
        r.n_frequencies(),
        r.metadata.config_hash
    );
    write(&dir.join("sweep.csv"), &io::grid_csv(&r))?;
    if c.svg || cfg.output.svg {
        write(&dir.join("sweep.svg"), &io::heatmap_svg(&r))?;
    }
    Ok(())
}

fn report_peaks(cut: &LineCut) -> Vec<f64> {
    let power: Vec<f64> = cut.values.iter().map(|z| z.norm_sqr()).collect();
    peaks::find_peaks(&cut.frequencies_ghz, &power, 0.0)
}

fn cmd_linecut(c: &Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let field = cfg
        .sweep
        .as_ref()
        .and_then(|s| s.linecut_field_mt)
        .ok_or_else(|| Error::invalid("missing required key `sweep.linecut_field_mt`"))?;
    let r = run_sweep(&cfg, c.reproducible)?;
    let cut = spectroscopy::linecut(&r, field)?;
    let pk = report_peaks(&cut);
    println!("line cut at {} mT (requested {field} mT): {} peak(s)", cut.field_mt, pk.len());
    for p in &pk {
        println!("  peak at {p:.6} GHz");
    }
    let dir = out_dir(&c.out, Some(&cfg))?;
    write(&dir.join("linecut.csv"), &io::spectrum_csv(&cut, &r.metadata))
}

fn cmd_dispersive(c: &Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let d = cfg
        .dispersive
        .clone()
        .ok_or_else(|| Error::invalid("missing required section [dispersive]"))?;
    let (pi, po) = cfg.dispersive_ports()?;
    let modes = cfg.cavity_modes()?;
    let mode = *modes
        .iter()
        .find(|m| m.symmetry == Some(d.mode))
        .ok_or_else(|| Error::invalid(format!("no resonator mode with symmetry {}", d.mode.label())))?;
    let ensemble = cfg.ensemble()?;
    let nv = cfg.nv_model()?;
    let direction = cfg.direction()?;

    // spin transition and the spin components that produce it
    let (nu_ghz, field_mt, spins, levels) = match (d.detuning_mhz, d.field_mt) {
        (Some(delta), _) => {
            let nu = mode.frequency_ghz - delta * 1e-3;
            let field = nv
                .resonant_field(nu, direction, Branch::Plus)
                .map(|b| b * 1e3)
                .unwrap_or(0.0);
            let spin = qed::SpinEnsembleSpec {
                center_ghz: nu,
                ..ensemble
            };
            (nu, field, vec![spin], None)
        }
        (None, Some(b)) => {
            let field = MagneticField::along(direction, b * 1e-3)?;
            let lv = nv.levels(&field, 0)?;
            let template = cfg.sweep_template()?;
            (lv.transition_plus_ghz, b, template.spins_at(b, direction)?, Some(lv))
        }
        (None, None) => return Err(Error::invalid("[dispersive] needs detuning_mhz or field_mt")),
    };
    let delta_mhz = (mode.frequency_ghz - nu_ghz) * 1e3;
    let sz = match d.sz {
        Some(s) => s,
        None => cfg.polarization(levels.as_ref())?,
    };
    let g = ensemble.collective_coupling_mhz() * mode.coupling_scale;
    let chi = qed::dispersive_shift_with(d.convention, g, sz, delta_mhz)?;
    let g_back = if chi == 0.0 {
        0.0
    } else {
        qed::extract_g_with(d.convention, chi, delta_mhz, sz)?
    };
    let pair_shift = g * g / delta_mhz;

    if d.points < 8 || !(d.span_mhz > 0.0) {
        return Err(Error::invalid("[dispersive] needs points >= 8 and span_mhz > 0"));
    }
    let freqs = spectroscopy::linspace(
        mode.frequency_ghz - 0.5 * d.span_mhz * 1e-3,
        mode.frequency_ghz + 0.5 * d.span_mhz * 1e-3,
        d.points,
    );
    let bare = CoupledSystem {
        modes: vec![mode],
        spins: vec![],
    };
    let coupled = CoupledSystem {
        modes: vec![mode],
        spins,
    };
    let trace = |sys: &CoupledSystem| -> Result<Vec<Complex64>> {
        freqs.iter().map(|&f| qed::transmission(f, sys, pi, po)).collect()
    };
    let reference = trace(&bare)?;
    let shifted = trace(&coupled)?;
    let power = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>();
    let measured = fitting::measure_dispersive_shift((&freqs, &power(&reference)), (&freqs, &power(&shifted)))?;

    let convention = match d.convention {
        DispersiveConvention::Literal => "literal (chi = 2 g^2 Sz / Delta)",
        DispersiveConvention::Polariton => "polariton (chi = -g^2 Sz / Delta)",
    };
    println!("mode {} at {} GHz, spin transition {nu_ghz:.9} GHz", d.mode.label(), mode.frequency_ghz);
    println!("detuning Delta = {delta_mhz:.6} MHz, g_col = {g} MHz, Sz = {sz}");
    println!("convention: {convention}");
    println!("chi = {chi:.6} MHz (|chi| = {:.6} MHz)", chi.abs());
    println!("g extracted from chi = {g_back:.9} MHz");
    println!(
        "transmission model: cavity shift {:.6} ± {:.2e} MHz (g^2/Delta = {pair_shift:.6} MHz)",
        measured.chi_mhz, measured.chi_uncertainty_mhz
    );
    let mut notes = vec![format!(
        "the linear-response transmission shifts the cavity by about g^2/Delta = {pair_shift:.4} MHz, independent of Sz"
    )];
    if !qed::in_dispersive_regime(g, delta_mhz) {
        notes.push(format!(
            "|Delta| < {} g_col: outside the dispersive regime",
            qed::DISPERSIVE_VALIDITY_RATIO
        ));
    }
    if let Some(obs) = d.observed_chi_mhz {
        let implied = qed::extract_g_with(d.convention, obs.copysign(chi), delta_mhz, sz).ok();
        notes.push(format!(
            "observed |chi| = {obs} MHz is not reproduced: predicted {:.4} MHz ({}) and {:.4} MHz (g^2/Delta); under this convention it implies g_col = {}",
            chi.abs(),
            match d.convention {
                DispersiveConvention::Literal => "literal",
                DispersiveConvention::Polariton => "polariton",
            },
            pair_shift.abs(),
            implied.map_or("undefined".to_string(), |v| format!("{v:.4} MHz"))
        ));
    }
    for n in &notes {
        println!("note: {n}");
    }

    let dir = out_dir(&c.out, Some(&cfg))?;
    let hash = config_hash(&cfg);
    let created = (!c.reproducible).then(now_unix);
    let snapshot = serde_json::to_string(&json!({
        "dispersive": d,
        "mode": mode,
        "ensemble": ensemble,
        "spin_ghz": nu_ghz,
    }))
    .expect("json serializes");
    let spectrum = |v: &[Complex64]| io::spectrum_csv_raw(&freqs, field_mt, v, &hash, &snapshot, created);
    write(&dir.join("dispersive_reference.csv"), &spectrum(&reference))?;
    write(&dir.join("dispersive_shifted.csv"), &spectrum(&shifted))?;
    let mut report = json!({
        "config_hash": hash,
        "mode": d.mode,
        "cavity_ghz": mode.frequency_ghz,
        "spin_ghz": nu_ghz,
        "detuning_mhz": delta_mhz,
        "g_col_mhz": g,
        "sz": sz,
        "convention": d.convention,
        "chi_mhz": chi,
        "abs_chi_mhz": chi.abs(),
        "g_extracted_mhz": g_back,
        "pair_shift_mhz": pair_shift,
        "measured": measured,
        "notes": notes,
    });
    if let Some(t) = created {
        report["created_unix"] = json!(t);
    }
    write_json(&dir.join("dispersive.json"), &report)
}

fn cmd_estimate(c: &Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let n_est = cfg
        .estimated_spins()?
        .ok_or_else(|| Error::invalid("missing required section [sample]"))?;
    let sample = cfg.sample.as_ref().expect("checked above");
    let [a, b, h] = sample.dimensions_mm;
    println!(
        "sample: {} ppm over {a} × {b} × {h} mm³ = {:.6} mm³",
        sample.concentration_ppm,
        a * b * h
    );
    println!("estimated N = {n_est:.6e}");
    if n_est == 0.0 {
        eprintln!("warning: zero spins; couplings are undefined");
    }
    let mut report = json!({
        "config_hash": config_hash(&cfg),
        "concentration_ppm": sample.concentration_ppm,
        "volume_mm3": a * b * h,
        "n_estimated": n_est,
    });
    if let Some(e) = &cfg.ensemble {
        let n = e.n_spins.unwrap_or(n_est);
        if e.n_spins.is_some() {
            println!("N override = {n:.6e}");
        }
        report["n_used"] = json!(n);
        if n > 0.0 {
            match (e.collective_coupling_mhz, e.g0_hz) {
                (Some(g), None) => {
                    let g0 = qed::single_spin_coupling(g * 1e6, n)?;
                    println!("g_col = {g} MHz  ->  g0 = {:.6} mHz", g0 * 1e3);
                    report["g_col_mhz"] = json!(g);
                    report["g0_hz"] = json!(g0);
                }
                (None, Some(g0)) => {
                    let g = qed::collective_coupling(g0, n)? * 1e-6;
                    println!("g0 = {:.6} mHz  ->  g_col = {g:.6} MHz", g0 * 1e3);
                    report["g_col_mhz"] = json!(g);
                    report["g0_hz"] = json!(g0);
                }
                _ => return Err(Error::invalid("set exactly one of ensemble.collective_coupling_mhz and ensemble.g0_hz")),
            }
        }
    }
    if !c.reproducible {
        report["created_unix"] = json!(now_unix());
    }
    if c.out.is_some() || cfg.output.directory.is_some() {
        let dir = out_dir(&c.out, Some(&cfg))?;
        write_json(&dir.join("estimate.json"), &report)?;
    }
    Ok(())
}

fn cmd_fit(f: &FitArgs) -> Result<()> {
    let cfg = f.config.as_deref().map(RunConfig::load).transpose()?;
    let dir = out_dir(&f.out, cfg.as_ref())?;
    for input in &f.input {
        let text = read(input)?;
        let stem = input.file_stem().map_or("fit".into(), |s| s.to_string_lossy().into_owned());
        let mut report = match f.model {
            FitModel::Lorentzian => {
                let d = io::read_spectrum(&text)?;
                let power: Vec<f64> = d.values.iter().map(|z| z.norm_sqr()).collect();
                let fit = fitting::fit_lorentzian(&d.frequencies_ghz, &power)?;
                println!(
                    "{}: f0 = {:.9} ± {:.2e} GHz, kappa = {:.6} ± {:.2e} MHz",
                    input.display(),
                    fit.center_ghz,
                    fit.center_uncertainty_ghz,
                    fit.hwhm_mhz,
                    fit.hwhm_uncertainty_mhz
                );
                json!({ "model": "lorentzian", "fit": fit, "source_config_hash": d.metadata.get("config_hash") })
            }
            FitModel::Complex => {
                let d = io::read_spectrum(&text)?;
                let fit = fitting::fit_complex_lorentzian(&d.frequencies_ghz, &d.values)?;
                println!(
                    "{}: f0 = {:.9} ± {:.2e} GHz, kappa = {:.6} ± {:.2e} MHz",
                    input.display(),
                    fit.center_ghz,
                    fit.center_uncertainty_ghz,
                    fit.hwhm_mhz,
                    fit.hwhm_uncertainty_mhz
                );
                json!({ "model": "complex", "fit": fit, "source_config_hash": d.metadata.get("config_hash") })
            }
            FitModel::Crossing => {
                let sweep = io::read_grid(&text)?;
                let fit = fitting::fit_avoided_crossing(&sweep)?;
                println!(
                    "{}: g_col = {:.6} ± {:.2e} MHz, omega_c = {:.9} ± {:.2e} GHz ({} rows)",
                    input.display(),
                    fit.g_col_mhz,
                    fit.g_col_uncertainty_mhz,
                    fit.cavity_ghz,
                    fit.cavity_uncertainty_ghz,
                    fit.rows_used
                );
                json!({
                    "model": "crossing",
                    "fit": fit,
                    "spin_dispersion": fitting::SpinDispersion::NvModel,
                    "source_config_hash": sweep.metadata.config_hash,
                })
            }
        };
        if !f.reproducible {
            report["created_unix"] = json!(now_unix());
        }
        write_json(&dir.join(format!("{stem}.fit.json")), &report)?;
    }
    Ok(())
}
