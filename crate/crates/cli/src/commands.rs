//! One function per subcommand. Each validates its config, computes, writes
//! its artifacts under `output_dir` and returns the report it serialized.
//! Files never contain wall-clock data.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use willmore_core::clifford::{kernel_cross_check, KernelCrossCheck, KERNEL_LABELS};
use willmore_core::flow::{
    gap_directions, gap_scan, loglog_slope, perturbation_direction, run_flow_observed, GapRow, GAP_MODES,
};
use willmore_core::graph::{c0_norm, gauged_sample, reconstruction_gap};
use willmore_core::io::{read_obj, write_csv, write_field_csv, write_obj};
use willmore_core::{
    clifford_torus, coercivity_lambda, decompose, exp_normal, mode_table, random_mobius, revolution_torus,
    willmore_energy, Certificate, GraphNorms, Immersion, KernelFrame, MobiusMap, ParamGrid, SpectralModel,
    TWO_PI_SQUARED,
};

use crate::config::{Command, RunConfig, FORMAT_VERSION};
use crate::error::CliError;

/// Grid sizes of the energy convergence table.
pub const ENERGY_TABLE_SIZES: [usize; 4] = [16, 24, 32, 48];
/// Grid size of the reference energy in the convergence table.
pub const ENERGY_REFERENCE_N: usize = 96;
/// Mode cutoffs over which the coercivity constant is reported.
pub const LAMBDA_CUTOFFS: std::ops::RangeInclusive<usize> = 4..=16;

#[derive(Serialize)]
struct Envelope<'a, T> {
    format_version: u32,
    config: &'a RunConfig,
    result: &'a T,
}

fn ensure_dir(config: &RunConfig) -> Result<&Path, CliError> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((BufWriter::new(file), path))
}

fn provenance(config: &RunConfig) -> Vec<String> {
    vec![format!("format_version: {FORMAT_VERSION}"), format!("config: {}", config.to_json())]
}

fn write_json<T: Serialize>(config: &RunConfig, name: &str, result: &T) -> Result<(), CliError> {
    let dir = ensure_dir(config)?;
    let (mut w, path) = create(dir, name)?;
    let envelope = Envelope { format_version: FORMAT_VERSION, config, result };
    serde_json::to_writer_pretty(&mut w, &envelope).map_err(|e| CliError::io(&path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn write_table<R>(config: &RunConfig, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let dir = ensure_dir(config)?;
    let (mut w, path) = create(dir, name)?;
    write_csv(&mut w, &provenance(config), header, rows)?;
    w.flush().map_err(|e| CliError::io(&path, e))
}

fn write_mesh(config: &RunConfig, name: &str, im: &Immersion) -> Result<(), CliError> {
    let dir = ensure_dir(config)?;
    let (mut w, path) = create(dir, name)?;
    write_obj(&mut w, im, &provenance(config))?;
    w.flush().map_err(|e| CliError::io(&path, e))
}

fn read_input(config: &RunConfig) -> Result<Immersion, CliError> {
    let path = config.input.as_ref().ok_or_else(|| CliError::Validation("no input mesh given".into()))?;
    let file = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_obj(BufReader::new(file))?)
}

fn expect_command(config: &RunConfig, command: Command) -> Result<(), CliError> {
    if config.command != command {
        return Err(CliError::Config(format!("config is for {:?}, not {command:?}", config.command)));
    }
    config.validate()
}

fn num(x: f64) -> String {
    x.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub n: usize,
    pub energy: f64,
    /// `|W_n - W_ref|` against the reference grid.
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub n: usize,
    pub energy: f64,
    pub reference_n: Option<usize>,
    pub table: Vec<EnergyRow>,
}

pub fn energy(config: &RunConfig) -> Result<EnergyReport, CliError> {
    expect_command(config, Command::Energy)?;
    let report = if config.input.is_some() {
        let im = read_input(config)?;
        EnergyReport { n: im.grid().n_u(), energy: willmore_energy(&im)?, reference_n: None, table: vec![] }
    } else {
        let at = |n: usize| -> Result<f64, CliError> {
            Ok(willmore_energy(&revolution_torus(config.major, config.minor, ParamGrid::torus(n)?)?)?)
        };
        let reference = at(ENERGY_REFERENCE_N)?;
        let table = ENERGY_TABLE_SIZES
            .iter()
            .map(|&n| at(n).map(|energy| EnergyRow { n, energy, change: (energy - reference).abs() }))
            .collect::<Result<Vec<_>, _>>()?;
        EnergyReport { n: config.n, energy: at(config.n)?, reference_n: Some(ENERGY_REFERENCE_N), table }
    };
    write_table(
        config,
        "energy.csv",
        &["n", "energy", "change"],
        report.table.iter().map(|r| vec![r.n.to_string(), num(r.energy), num(r.change)]),
    )?;
    write_json(config, "energy.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub cutoff: usize,
    pub lambda: f64,
    pub lambda_by_cutoff: Vec<(usize, f64)>,
    /// Number of zero rows in the mode table.
    pub kernel_dimension: usize,
    pub kernel_labels: Vec<String>,
    pub cross_check: KernelCrossCheck,
    pub max_principal_angle: f64,
}

pub fn spectrum(config: &RunConfig) -> Result<SpectrumReport, CliError> {
    expect_command(config, Command::Spectrum)?;
    let modes = mode_table(config.cutoff);
    let lambda_by_cutoff = LAMBDA_CUTOFFS
        .map(|m| coercivity_lambda(m).map(|l| (m, l)))
        .collect::<Result<Vec<_>, _>>()?;
    let cross_check = kernel_cross_check(config.n, config.seed)?;
    let report = SpectrumReport {
        cutoff: config.cutoff,
        lambda: coercivity_lambda(config.cutoff)?,
        lambda_by_cutoff,
        kernel_dimension: modes.iter().filter(|m| m.in_kernel()).count(),
        kernel_labels: KERNEL_LABELS.iter().map(|s| s.to_string()).collect(),
        max_principal_angle: cross_check.max_angle(),
        cross_check,
    };
    write_table(
        config,
        "modes.csv",
        &["m", "n", "mu", "sigma", "sigma_over_h", "in_kernel"],
        modes.iter().map(|m| {
            vec![m.m.to_string(), m.n.to_string(), num(m.mu), num(m.sigma), num(m.ratio()), m.in_kernel().to_string()]
        }),
    )?;
    write_json(config, "spectrum.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub initial_energy: f64,
    /// Every recorded energy is at most its predecessor.
    pub energy_monotone: bool,
    pub certificate: Certificate,
}

/// Flows the input mesh, or the standard perturbed Clifford torus of the
/// configured direction and amplitude.
pub fn flow(config: &RunConfig) -> Result<FlowReport, CliError> {
    expect_command(config, Command::Flow)?;
    let start = match config.input {
        Some(_) => read_input(config)?,
        None => {
            let grid = config.grid()?;
            let v = perturbation_direction(grid, config.direction)?.scale(config.amplitude);
            exp_normal(KernelFrame::for_grid(&grid)?.base(), &v)?
        }
    };
    let mut snapshot_err = None;
    let run = run_flow_observed(&start, &config.flow_config(), |s| {
        if config.snapshot_every > 0 && s.step % config.snapshot_every == 0 {
            if let Err(e) = write_mesh(config, &format!("snapshot_{:06}.obj", s.step), &s.immersion) {
                snapshot_err = Some(e);
                return Err(willmore_core::Error::InvalidParameter("snapshot write failed".into()));
            }
        }
        Ok(())
    });
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    let run = run?;
    let records = &run.trace.records;
    let report = FlowReport {
        initial_energy: records[0].energy,
        energy_monotone: records.windows(2).all(|w| w[1].energy <= w[0].energy),
        certificate: run.certificate,
    };
    write_table(
        config,
        "trace.csv",
        &["step", "time", "energy", "grad_norm", "dt", "residual"],
        records.iter().map(|r| {
            vec![
                r.step.to_string(),
                num(r.time),
                num(r.energy),
                num(r.grad_norm),
                num(r.dt),
                r.residual.map(num).unwrap_or_default(),
            ]
        }),
    )?;
    write_mesh(config, "final.obj", &run.state.immersion)?;
    write_json(config, "certificate.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeReport {
    pub coefficients: [f64; willmore_core::KERNEL_DIM],
    pub map: MobiusMap,
    pub kernel_residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub newton_residual: f64,
    pub reconstruction_gap: f64,
    pub norms: GraphNorms,
    pub initial_c2: f64,
}

pub fn decompose_mesh(config: &RunConfig) -> Result<DecomposeReport, CliError> {
    expect_command(config, Command::Decompose)?;
    let sigma = read_input(config)?;
    let d = decompose(&sigma, &config.decompose_config())?;
    let report = DecomposeReport {
        coefficients: d.coefficients,
        map: d.map.clone(),
        kernel_residual: d.residual,
        iterations: d.iterations,
        residual_history: d.residual_history.clone(),
        newton_residual: d.reconstruction_error,
        reconstruction_gap: reconstruction_gap(&d, &sigma)?,
        norms: d.norms,
        initial_c2: d.initial_c2,
    };
    let dir = ensure_dir(config)?;
    let (mut w, path) = create(dir, "graph.csv")?;
    write_field_csv(&mut w, &d.v, &provenance(config))?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    write_json(config, "decomposition.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportReport {
    pub v_norms: GraphNorms,
    pub map: MobiusMap,
    pub energy: f64,
}

/// Writes `Φ(exp_normal(T_Cl, amplitude · v̂))` with `Φ = random_mobius(seed, epsilon)`.
pub fn export(config: &RunConfig) -> Result<ExportReport, CliError> {
    expect_command(config, Command::Export)?;
    let grid = config.grid()?;
    let v = perturbation_direction(grid, config.direction)?.scale(config.amplitude);
    let map = random_mobius(config.seed, config.epsilon)?;
    let mesh = map.apply_immersion(&exp_normal(KernelFrame::for_grid(&grid)?.base(), &v)?)?;
    let report = ExportReport { v_norms: GraphNorms::of(&v), map, energy: willmore_energy(&mesh)? };
    write_mesh(config, "mesh.obj", &mesh)?;
    write_json(config, "export.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapDirection {
    pub mode: (i64, i64),
    pub w2_form: f64,
    pub h2_norm: f64,
    /// Log-log slope of `|excess - ½t² w2_form|` over the amplitudes.
    pub remainder_slope: f64,
    /// `min excess / ((λ/4) t² ‖v̂‖²)` over the amplitudes.
    pub min_bound_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub lambda: f64,
    pub directions: Vec<GapDirection>,
    pub rows: Vec<GapRow>,
}

pub fn gapscan(config: &RunConfig) -> Result<GapReport, CliError> {
    expect_command(config, Command::Gapscan)?;
    let model = SpectralModel::new(config.n)?;
    let dirs = gap_directions(&model);
    let rows = gap_scan(&model, &dirs, &config.amplitudes)?;
    let directions = dirs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mine: Vec<&GapRow> = rows.iter().filter(|r| r.direction == i).collect();
            let ts: Vec<f64> = mine.iter().map(|r| r.t).collect();
            let rem: Vec<f64> = mine.iter().map(|r| r.remainder).collect();
            Ok(GapDirection {
                mode: GAP_MODES[i],
                w2_form: model.w2_form(v, v)?,
                h2_norm: model.h2_norm(v)?,
                remainder_slope: loglog_slope(&ts, &rem),
                min_bound_ratio: mine.iter().map(|r| r.excess / r.lower_bound).fold(f64::INFINITY, f64::min),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = GapReport { lambda: coercivity_lambda(8)?, directions, rows };
    write_table(
        config,
        "gapscan.csv",
        &["direction", "t", "excess", "quadratic", "remainder", "lower_bound"],
        report.rows.iter().map(|r| {
            vec![r.direction.to_string(), num(r.t), num(r.excess), num(r.quadratic), num(r.remainder), num(r.lower_bound)]
        }),
    )?;
    write_json(config, "gapscan.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub seed: u64,
    pub energy: f64,
    /// `|W(Φ(T_Cl)) - 2π²|`
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub base_energy: f64,
    pub rows: Vec<InvarianceRow>,
    pub max_deviation: f64,
}

/// Energy of `random_mobius(seed + i, epsilon)(T_Cl)` for `i < samples`.
pub fn invariance(config: &RunConfig) -> Result<InvarianceReport, CliError> {
    expect_command(config, Command::Invariance)?;
    let base = clifford_torus(config.grid()?)?;
    let rows = (0..config.samples as u64)
        .map(|i| {
            let seed = config.seed + i;
            let energy = willmore_energy(&random_mobius(seed, config.epsilon)?.apply_immersion(&base)?)?;
            Ok(InvarianceRow { seed, energy, deviation: (energy - TWO_PI_SQUARED).abs() })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = InvarianceReport {
        base_energy: willmore_energy(&base)?,
        max_deviation: rows.iter().map(|r| r.deviation).fold(0.0, f64::max),
        rows,
    };
    write_table(
        config,
        "invariance.csv",
        &["seed", "energy", "deviation"],
        report.rows.iter().map(|r| vec![r.seed.to_string(), num(r.energy), num(r.deviation)]),
    )?;
    write_json(config, "invariance.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripRow {
    pub seed: u64,
    pub kernel_residual: f64,
    pub reconstruction_gap: f64,
    pub newton_residual: f64,
    pub iterations: usize,
    /// Largest ratio of consecutive kernel residuals.
    pub max_contraction: f64,
    pub v_c0: f64,
    pub recovered_c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub rows: Vec<RoundtripRow>,
}

/// Decomposes `samples` seeded surfaces `Φ(exp_normal(T_Cl, v))`.
pub fn roundtrip(config: &RunConfig) -> Result<RoundtripReport, CliError> {
    expect_command(config, Command::Roundtrip)?;
    let grid = config.grid()?;
    let rows = (0..config.samples as u64)
        .map(|i| {
            let seed = config.seed + i;
            let s = gauged_sample(grid, seed, config.epsilon, config.amplitude)?;
            let d = decompose(&s.sigma, &config.decompose_config())?;
            Ok(RoundtripRow {
                seed,
                kernel_residual: d.residual,
                reconstruction_gap: reconstruction_gap(&d, &s.sigma)?,
                newton_residual: d.reconstruction_error,
                iterations: d.iterations,
                max_contraction: d.residual_history.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max),
                v_c0: c0_norm(&s.v),
                recovered_c0: d.norms.c0,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = RoundtripReport { rows };
    write_table(
        config,
        "roundtrip.csv",
        &[
            "seed",
            "kernel_residual",
            "reconstruction_gap",
            "newton_residual",
            "iterations",
            "max_contraction",
            "v_c0",
            "recovered_c0",
        ],
        report.rows.iter().map(|r| {
            vec![
                r.seed.to_string(),
                num(r.kernel_residual),
                num(r.reconstruction_gap),
                num(r.newton_residual),
                r.iterations.to_string(),
                num(r.max_contraction),
                num(r.v_c0),
                num(r.recovered_c0),
            ]
        }),
    )?;
    write_json(config, "roundtrip.json", &report)?;
    Ok(report)
}

/// Runs the configured command and returns a short human-readable summary.
pub fn execute(config: &RunConfig) -> Result<String, CliError> {
    Ok(match config.command {
        Command::Energy => {
            let r = energy(config)?;
            let mut s = format!("energy (n = {}): {}\n", r.n, r.energy);
            if let Some(reference) = r.reference_n {
                s.push_str(&format!("{:>4}  {:>22}  {:>12}\n", "n", "energy", format!("|W - W_{reference}|")));
                for row in &r.table {
                    s.push_str(&format!("{:>4}  {:>22.16}  {:>12.3e}\n", row.n, row.energy, row.change));
                }
            }
            s
        }
        Command::Spectrum => {
            let r = spectrum(config)?;
            format!(
                "lambda (cutoff {}): {}\nkernel dimension: {}\ngenerator rank: {}, largest principal angle: {:.3e}\n",
                r.cutoff, r.lambda, r.kernel_dimension, r.cross_check.generator_rank, r.max_principal_angle
            )
        }
        Command::Flow => {
            let r = flow(config)?;
            let c = &r.certificate;
            format!(
                "{:?} after {} steps ({} rejected): W - 2π² = {:.3e}, |grad| = {:.3e}, |v|_C0 = {:.3e}, monotone: {}\n",
                c.termination, c.steps, c.rejections, c.energy_excess, c.grad_norm, c.v_norms.c0, r.energy_monotone
            )
        }
        Command::Decompose => {
            let r = decompose_mesh(config)?;
            format!(
                "{} iterations, kernel residual {:.3e}, reconstruction gap {:.3e}, |v|_C0 = {:.3e}, |v|_C2 = {:.3e}\n",
                r.iterations, r.kernel_residual, r.reconstruction_gap, r.norms.c0, r.norms.c2
            )
        }
        Command::Export => {
            let r = export(config)?;
            format!("wrote mesh.obj: |v|_C0 = {:.3e}, W = {}\n", r.v_norms.c0, r.energy)
        }
        Command::Gapscan => {
            let r = gapscan(config)?;
            let mut s = format!("lambda = {}\n", r.lambda);
            for d in &r.directions {
                s.push_str(&format!(
                    "mode {:?}: remainder slope {:.3}, min excess / bound {:.3}\n",
                    d.mode, d.remainder_slope, d.min_bound_ratio
                ));
            }
            s
        }
        Command::Invariance => {
            let r = invariance(config)?;
            format!("{} maps, max |W - 2π²| = {:.3e}\n", r.rows.len(), r.max_deviation)
        }
        Command::Roundtrip => {
            let r = roundtrip(config)?;
            let worst = |f: fn(&RoundtripRow) -> f64| r.rows.iter().map(f).fold(0.0, f64::max);
            format!(
                "{} samples: max kernel residual {:.3e}, max reconstruction gap {:.3e}, max contraction {:.3}\n",
                r.rows.len(),
                worst(|x| x.kernel_residual),
                worst(|x| x.reconstruction_gap),
                worst(|x| x.max_contraction)
            )
        }
    })
}
