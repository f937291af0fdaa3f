//! `thermhom` command line: generate packs, voxelize, solve, sweep, check.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use thermhom::homogenize::{homogenized_tensor, TensorRecord};
use thermhom::microstructure::{rsa_generate, SpherePack, DEFAULT_MAX_ATTEMPTS};
use thermhom::oracles::{hs_bounds, laminate_effective, wiener_bounds};
use thermhom::solver::{PhaseConductivities, Scheme, SolverOptions, DEFAULT_ACC, DEFAULT_MAX_ITER};
use thermhom::sweep::{emit_csv, run_sweep_with, SweepPlan};
use thermhom::voxelgrid::{
    coating_fraction, phase_volume_fractions, voxelize, write_slice_pgm, write_slice_png, Phase, PhaseGrid, Sampling,
    SliceAxis,
};
use thermhom::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_PARTIAL_SWEEP: u8 = 3;

#[derive(Parser)]
#[command(name = "thermhom", version, about = "FFT homogenization of coated-sphere composites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random sequential adsorption of equal spheres into the unit cube.
    Generate {
        #[arg(long)]
        n_sp: usize,
        #[arg(long, default_value_t = 0.3)]
        f_sp: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
        max_attempts: u64,
        /// Sphere list file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Label a pack on an N³ grid and write `<prefix>.phases.{raw,json}`.
    Voxelize {
        #[arg(long)]
        pack: PathBuf,
        #[arg(long)]
        layer: f64,
        #[arg(short = 'n', long)]
        resolution: usize,
        /// 0 samples voxel centers; s > 0 takes the dominant phase over s³ points.
        #[arg(long, default_value_t = 0)]
        subsamples: u8,
        #[arg(short, long)]
        output: PathBuf,
        /// Slice images to export, e.g. `z:32`. Repeatable.
        #[arg(long = "slice")]
        slices: Vec<String>,
        /// Write slices as PNG instead of PGM.
        #[arg(long)]
        png: bool,
    },
    /// Homogenized tensor of a phase grid, written as JSON.
    Solve {
        /// Grid prefix or either of its two files.
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        phases: PhaseArgs,
        #[arg(long, default_value = "accelerated")]
        scheme: Scheme,
        #[arg(long, default_value_t = DEFAULT_ACC)]
        acc: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a parameter sweep and write the CSV table.
    Sweep(SweepArgs),
    /// Run the oracle suite on small grids.
    Check,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, default_value_t = 1.0)]
    k_matrix: f64,
    #[arg(long, default_value_t = 0.2)]
    k_inclusion: f64,
    #[arg(long, default_value_t = 400.0)]
    k_coating: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat key-value config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting plan: `full` or `desk`.
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sphere_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    acc: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    subsamples: Option<u8>,
    /// Concurrent sweep jobs.
    #[arg(short, long, default_value_t = 1)]
    jobs: usize,
    /// CSV path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(short, long)]
    quiet: bool,
}

fn sampling(subsamples: u8) -> Sampling {
    if subsamples == 0 {
        Sampling::CellCenter
    } else {
        Sampling::Dominant { sub: subsamples }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Generate {
            n_sp,
            f_sp,
            seed,
            max_attempts,
            output,
        } => {
            let pack = rsa_generate(n_sp, f_sp, seed, max_attempts)?;
            pack.write(&output)?;
            eprintln!("placed {} spheres of radius {:.6} -> {}", n_sp, pack.radius, output.display());
        }
        Command::Voxelize {
            pack,
            layer,
            resolution,
            subsamples,
            output,
            slices,
            png,
        } => {
            let pack = SpherePack::read(&pack).with_context(|| format!("reading {}", pack.display()))?;
            let axes = slices.iter().map(|s| parse_slice(s)).collect::<anyhow::Result<Vec<_>>>()?;
            let grid = voxelize(&pack, layer, resolution, sampling(subsamples))?;
            grid.write(&output)?;
            for (axis, idx) in axes {
                let ext = if png { "png" } else { "pgm" };
                let path = PathBuf::from(format!("{}.slice_{}{}.{}", output.display(), axis_name(axis), idx, ext));
                if png {
                    write_slice_png(&grid, axis, idx, &path)?;
                } else {
                    write_slice_pgm(&grid, axis, idx, &path)?;
                }
            }
            let [m, i, c] = phase_volume_fractions(&grid);
            eprintln!(
                "fractions matrix {m:.5} inclusion {i:.5} coating {c:.5} (analytic coating {:.5})",
                coating_fraction(layer, pack.f_sp)
            );
        }
        Command::Solve {
            grid,
            phases,
            scheme,
            acc,
            max_iter,
            output,
        } => {
            let g = PhaseGrid::read(&grid).with_context(|| format!("reading {}", grid.display()))?;
            let phases = PhaseConductivities::new(phases.k_matrix, phases.k_inclusion, phases.k_coating)?;
            match homogenized_tensor(&g, &phases, SolverOptions { acc, max_iter }, scheme) {
                Ok(t) => {
                    fs::write(&output, TensorRecord::new(&t, &g, &phases).to_json()?)?;
                    eprintln!(
                        "k_iso {:.8} anisotropy {:.3e} iterations {}",
                        t.isotropic_estimate,
                        t.anisotropy_index,
                        t.max_iterations()
                    );
                }
                Err(Error::NotConverged { reports }) => {
                    for (j, r) in reports.iter().enumerate() {
                        eprintln!(
                            "loading e{}: iterations {} eps_comp {:.3e} eps_eq {:.3e} converged {}",
                            j + 1,
                            r.iterations,
                            r.eps_comp,
                            r.eps_eq,
                            r.converged
                        );
                    }
                    eprintln!("error: no convergence within {max_iter} iterations");
                    return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Sweep(args) => return sweep(args),
        Command::Check => return Ok(check()),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_slice(s: &str) -> anyhow::Result<(SliceAxis, usize)> {
    let Some((axis, idx)) = s.split_once(':') else {
        bail!("slice must look like z:32, got {s:?}");
    };
    Ok((axis.parse()?, idx.parse().with_context(|| format!("slice index {idx:?}"))?))
}

fn axis_name(axis: SliceAxis) -> &'static str {
    match axis {
        SliceAxis::X => "x",
        SliceAxis::Y => "y",
        SliceAxis::Z => "z",
    }
}

fn sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let mut plan = match args.preset.as_str() {
        "full" => SweepPlan::full(),
        "desk" => SweepPlan::desk(),
        p => bail!("unknown preset {p:?}"),
    };
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        plan.apply_config(&text)?;
    }
    if let Some(v) = args.resolutions {
        plan.resolutions = v;
    }
    if let Some(v) = args.sphere_counts {
        plan.sphere_counts = v;
    }
    if let Some(v) = args.layers {
        plan.layers = v;
    }
    if let Some(v) = args.samples {
        plan.samples_per_cell = v;
    }
    if let Some(v) = args.base_seed {
        plan.base_seed = v;
    }
    if let Some(v) = args.acc {
        plan.acc = v;
    }
    if let Some(v) = args.max_iter {
        plan.max_iter = v;
    }
    if let Some(v) = args.subsamples {
        plan.sampling = sampling(v);
    }
    let quiet = args.quiet;
    let results = run_sweep_with(&plan, args.jobs, &|key, s| {
        if !quiet {
            eprintln!(
                "N={} n_sp={} l={} sample {}: {} {}",
                key.resolution,
                key.n_sp,
                key.layer,
                s.sample,
                s.status.as_str(),
                s.k_iso.map(|k| format!("{k:.6}")).unwrap_or_default()
            );
        }
    })?;
    let mut buf = Vec::new();
    emit_csv(&mut buf, &results)?;
    match &args.output {
        Some(path) => fs::write(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    let failed: usize = results.iter().map(|c| c.failed()).sum();
    if failed > 0 {
        eprintln!("{failed} sample(s) failed");
        return Ok(ExitCode::from(EXIT_PARTIAL_SWEEP));
    }
    Ok(ExitCode::SUCCESS)
}

/// Small known-answer problems; exits 1 when any fails.
fn check() -> ExitCode {
    let mut all = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    };
    let opts = SolverOptions {
        acc: 1e-8,
        max_iter: 5000,
    };

    let k = 3.5;
    let uniform = PhaseConductivities::uniform(k).unwrap();
    match homogenized_tensor(&PhaseGrid::uniform(16, Phase::Matrix), &uniform, opts, Scheme::Accelerated) {
        Ok(t) => {
            let mut err: f64 = 0.0;
            for (i, row) in t.matrix.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    err = err.max((v - if i == j { k } else { 0.0 }).abs());
                }
            }
            report("homogeneous", err < 1e-8 * k, format!("max error {err:.2e}"));
        }
        Err(e) => report("homogeneous", false, e.to_string()),
    }

    let phases = PhaseConductivities::new(1.0, 0.2, 1.0).unwrap();
    let laminate = PhaseGrid::from_fn(16, |i, _, _| if i < 8 { Phase::Matrix } else { Phase::Inclusion });
    let (across, along) = laminate_effective(1.0, 0.2, 0.5);
    match homogenized_tensor(&laminate, &phases, opts, Scheme::Accelerated) {
        Ok(t) => {
            let m = t.matrix;
            let err = ((m[0][0] - across) / across)
                .abs()
                .max(((m[1][1] - along) / along).abs())
                .max(((m[2][2] - along) / along).abs());
            report("laminate", err < 1e-6, format!("relative error {err:.2e}"));
        }
        Err(e) => report("laminate", false, e.to_string()),
    }

    let contrast = 5.0;
    let two_phase = PhaseConductivities::new(1.0, contrast, 1.0).unwrap();
    let bounds = rsa_generate(10, 0.3, 7, DEFAULT_MAX_ATTEMPTS)
        .and_then(|pack| voxelize(&pack, 0.0, 32, Sampling::CellCenter))
        .and_then(|grid| {
            let f_inc = phase_volume_fractions(&grid)[1];
            let t = homogenized_tensor(&grid, &two_phase, SolverOptions { acc: 1e-6, max_iter: 5000 }, Scheme::Accelerated)?;
            Ok((t.isotropic_estimate, f_inc))
        });
    match bounds {
        Ok((k, f_inc)) => {
            let hs = hs_bounds(1.0, contrast, 1.0 - f_inc);
            let w = wiener_bounds(1.0, contrast, 1.0 - f_inc);
            report(
                "bounds",
                hs.contains(k) && w.contains(k),
                format!("k {k:.6} in HS [{:.6}, {:.6}]", hs.lower, hs.upper),
            );
        }
        Err(e) => report("bounds", false, e.to_string()),
    }

    let cf = coating_fraction(0.02, 0.3);
    report("coating fraction", (cf - 0.0176).abs() < 5e-5, format!("{cf:.4}"));

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_USAGE)
    }
}
