//! Command-line front end.
//!
//! One command per invocation: `weak-value` and `design` print JSON to
//! standard output; `spectrum`, `sweep`, and `table1` write result files
//! into the output directory (and echo the headline result). All behavior
//! is driven by a TOML config (see [`crate::config`]); without `--config`
//! the reference fiber-coil configuration is used.
//!
//! Exit codes: 0 success, 1 computation error (e.g. orthogonal selection,
//! fit failure), 2 usage error (bad flags or config values).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fit::{fit_gaussian, measured_shift, GaussianFit};
use crate::polarization::{postselection_probability, weak_value};
use crate::sensitivity::{
    record_spectra, recommend_design, reference_field_sweep, sensitivity, shift_curve,
    summary_to_csv, Readout, ShiftCurve, REFERENCE_BETAS,
};
use crate::spectrum::{predicted_shift, SpectrumGrid};

/// Simulator and design tool for weak-value-amplified Faraday magnetometry.
#[derive(Debug, Parser)]
#[command(name = "weakmag", version, about)]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Experiment configuration file (TOML); defaults to the reference
    /// fiber-coil configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run seed, overriding the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Format for tabular output files.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

/// Serialization format for spectra, curves, and summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Comma-separated values with a header row.
    Csv,
    /// JSON arrays of row objects.
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the weak value and postselection probability for one working
    /// point.
    WeakValue {
        /// Analyzer offset β (rad).
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Accumulated phase φ (rad).
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
    /// Synthesize, record, and fit the spectra at one field value.
    Spectrum {
        /// Applied magnetic field (T).
        #[arg(long, allow_hyphen_values = true)]
        b_tesla: f64,
        /// Analyzer offset β (rad); defaults to the first sweep offset.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Sweep the configured field range at each configured analyzer offset.
    Sweep,
    /// Run the reference sensitivity sweep (three tabulated offsets,
    /// analytic readout) with the configured physical setup.
    Table1,
    /// Recommend an analyzer offset under the configured design
    /// constraints.
    Design,
}

/// Parses the process arguments, runs the requested command, and returns
/// the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut config = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.global.out {
        config.output.dir = out.clone();
    }

    match &cli.command {
        Command::WeakValue { beta, phi } => cmd_weak_value(*beta, *phi),
        Command::Spectrum { b_tesla, beta } => {
            cmd_spectrum(&config, cli.global.format, *b_tesla, *beta)
        }
        Command::Sweep => cmd_sweep(&config, cli.global.format, None),
        Command::Table1 => cmd_sweep(&config, cli.global.format, Some(&REFERENCE_BETAS)),
        Command::Design => cmd_design(&config),
    }
}

#[derive(Debug, Serialize)]
struct WeakValueReport {
    beta_rad: f64,
    phi_rad: f64,
    re_a_w: f64,
    im_a_w: f64,
    postselection_probability: f64,
}

fn cmd_weak_value(beta: f64, phi: f64) -> Result<()> {
    let wv = weak_value(beta, phi)?;
    let report = WeakValueReport {
        beta_rad: beta,
        phi_rad: phi,
        re_a_w: wv.real(),
        im_a_w: wv.imaginary(),
        postselection_probability: postselection_probability(beta, phi),
    };
    println!("{}", to_pretty_json(&report));
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitReport {
    beta_rad: f64,
    b_tesla: f64,
    phi_rad: f64,
    re_a_w: f64,
    im_a_w: f64,
    postselection_probability: f64,
    predicted_shift_nm: f64,
    measured_shift_nm: f64,
    initial_fit: GaussianFit,
    final_fit: GaussianFit,
}

fn cmd_spectrum(
    config: &RunConfig,
    format: OutputFormat,
    b_tesla: f64,
    beta: Option<f64>,
) -> Result<()> {
    let setup = config.build()?;
    let beta = beta.unwrap_or(config.sweep.betas_rad[0]);
    let grid = config.grid();
    let phi = setup.phase_at(b_tesla)?;
    let wv = weak_value(beta, phi)?;
    let (initial, final_spectrum) = record_spectra(&setup, beta, b_tesla, &grid)?;
    let initial_fit = fit_gaussian(&initial)?;
    let final_fit = fit_gaussian(&final_spectrum)?;
    let report = FitReport {
        beta_rad: beta,
        b_tesla,
        phi_rad: phi,
        re_a_w: wv.real(),
        im_a_w: wv.imaginary(),
        postselection_probability: postselection_probability(beta, phi),
        predicted_shift_nm: predicted_shift(&setup.probe, &wv),
        measured_shift_nm: measured_shift(&initial_fit, &final_fit)?,
        initial_fit,
        final_fit,
    };

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)?;
    write_spectrum(&initial, format, &dir.join(file_name("initial_spectrum", format)))?;
    write_spectrum(
        &final_spectrum,
        format,
        &dir.join(file_name("final_spectrum", format)),
    )?;
    std::fs::write(dir.join("fit_report.json"), to_pretty_json(&report) + "\n")?;
    println!("{}", to_pretty_json(&report));
    Ok(())
}

fn cmd_sweep(config: &RunConfig, format: OutputFormat, betas: Option<&[f64]>) -> Result<()> {
    let mut setup = config.build()?;
    let (betas, field_values) = match betas {
        // The reference table is defined for analytic readout over the
        // reference sweep, whatever the config's sweep section says.
        Some(reference) => {
            setup.readout = Readout::Analytic;
            (reference.to_vec(), reference_field_sweep())
        }
        None => (config.sweep.betas_rad.clone(), config.field_values()),
    };

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in &betas {
        let curve = shift_curve(&setup, beta, &field_values)?;
        write_curve(&curve, format, dir)?;
        rows.push(sensitivity(&curve)?);
    }
    let summary = match format {
        OutputFormat::Csv => summary_to_csv(&rows),
        OutputFormat::Json => to_pretty_json(&rows) + "\n",
    };
    std::fs::write(dir.join(file_name("sensitivity", format)), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_design(config: &RunConfig) -> Result<()> {
    let setup = config.build()?;
    let Some((constraints, search)) = config.design_inputs() else {
        return Err(Error::Config {
            key: "design".into(),
            reason: "section is required by the design command".into(),
        });
    };
    let recommendation = recommend_design(&constraints, &setup, &search)?;
    println!("{}", to_pretty_json(&recommendation));
    Ok(())
}

fn file_name(stem: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    }
}

fn write_spectrum(
    spectrum: &SpectrumGrid,
    format: OutputFormat,
    path: &std::path::Path,
) -> Result<()> {
    let contents = match format {
        OutputFormat::Csv => spectrum.to_csv_string(),
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                wavelength_nm: f64,
                intensity: f64,
            }
            let rows: Vec<Row> = spectrum
                .wavelengths_nm()
                .iter()
                .zip(spectrum.intensities())
                .map(|(&wavelength_nm, &intensity)| Row {
                    wavelength_nm,
                    intensity,
                })
                .collect();
            to_pretty_json(&rows) + "\n"
        }
    };
    std::fs::write(path, contents)?;
    Ok(())
}

fn write_curve(curve: &ShiftCurve, format: OutputFormat, dir: &std::path::Path) -> Result<()> {
    let stem = format!("curve_beta_{}", curve.beta);
    let contents = match format {
        OutputFormat::Csv => curve.to_csv_string(),
        OutputFormat::Json => to_pretty_json(&curve.points) + "\n",
    };
    std::fs::write(dir.join(file_name(&stem, format)), contents)?;
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize infallibly")
}
