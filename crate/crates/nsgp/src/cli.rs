//! Command-line entry points.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nsgp_core::fit::ModelKind;
use nsgp_core::simulate::KernelMode;
use nsgp_core::{
    fit_anisotropic, fit_nonstationary_with, glm_kernels, mc_n_counts, mean_crps, mspe,
    predict_batched, simulate_field, KernelMatrix, Location, Matrix, SimSpec,
};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{InputDigest, ModelArtifact, Provenance, SCHEMA_VERSION};
use crate::config::{
    build_fit_config, mc_locations, ConfigFile, KernelSource, LocationLayout, SimulateSettings,
};
use crate::dataset::{design_matrix, locations, Dataset, Table};
use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, to_json, write_atomic};
use crate::plot::{
    correlation_map, default_grid, model_ellipses, parameter_surfaces, Ellipse, EllipseKind,
};
use crate::runner::RayonRunner;

/// Stream used for scattered simulation locations.
const LOCATION_STREAM: u64 = u64::MAX;
/// Stream used to choose holdout sites.
const HOLDOUT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Parser)]
#[command(
    name = "nsgp",
    version,
    about = "Nonstationary Gaussian process fitting, prediction and simulation"
)]
pub struct Cli {
    /// Random seed (required by `simulate`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for local fits; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a nonstationary field and write data, kernels and a manifest.
    Simulate {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit the nonstationary model.
    Fit(FitArgs),
    /// Fit the stationary anisotropic model.
    FitAniso(FitArgs),
    /// Kriging predictions at new locations.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with coordinate and covariate columns.
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = nsgp_core::predict::DEFAULT_BATCH)]
        batch: usize,
    },
    /// Score predictions against held-out observations.
    Evaluate {
        #[arg(long)]
        holdout: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Holdout column scored against `pred_mean`.
        #[arg(long)]
        response: Option<String>,
        /// Also write the scores as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write ellipse polygons, a correlation map and parameter surfaces.
    PlotData {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Stationary model whose ellipse is added for comparison.
        #[arg(long)]
        aniso_model: Option<PathBuf>,
        /// `kernels.json` from `simulate`, drawn as the true ellipses.
        #[arg(long)]
        true_kernels: Option<PathBuf>,
        /// Reference location `x,y` for the correlation map.
        #[arg(long, value_parser = parse_point)]
        ref_loc: Option<[f64; 2]>,
        /// Grid points per axis over the data bounding box.
        #[arg(long, default_value_t = 101)]
        grid_n: usize,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, required_unless_present = "mc_n")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub fit_radius: Option<f64>,
    #[arg(long)]
    pub lambda_w: Option<f64>,
    /// Print the number of observations near each mixture component and exit.
    #[arg(long)]
    pub mc_n: bool,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x, y] => Ok([
            x.trim()
                .parse()
                .map_err(|_| format!("bad x coordinate '{x}'"))?,
            y.trim()
                .parse()
                .map_err(|_| format!("bad y coordinate '{y}'"))?,
        ]),
        _ => Err(format!("expected 'x,y', got '{s}'")),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let config = ConfigFile::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate { out_dir } => {
            let seed = cli
                .seed
                .ok_or_else(|| CliError::Config("simulate needs --seed".into()))?;
            simulate(&config.simulate, seed, out_dir)
        }
        Command::Fit(args) => fit(&cli, &config, args, ModelKind::Nonstationary),
        Command::FitAniso(args) => fit(&cli, &config, args, ModelKind::Anisotropic),
        Command::Predict {
            model,
            locations,
            out,
            batch,
        } => predict(model, locations, out, *batch),
        Command::Evaluate {
            holdout,
            predictions,
            response,
            out,
        } => evaluate(holdout, predictions, response.as_deref(), out.as_deref()),
        Command::PlotData {
            model,
            out_dir,
            aniso_model,
            true_kernels,
            ref_loc,
            grid_n,
        } => plot_data(
            model,
            out_dir,
            aniso_model.as_deref(),
            true_kernels.as_deref(),
            *ref_loc,
            *grid_n,
        ),
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Component locations and kernels written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub mc_locations: Vec<[f64; 2]>,
    pub mc_kernels: Vec<[[f64; 2]; 2]>,
    pub lambda_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimManifest {
    pub provenance: Provenance,
    pub seed: u64,
    pub settings: SimulateSettings,
    /// Zero-based rows of `data.csv` held out into `holdout.csv`.
    pub holdout_index: Vec<usize>,
    pub outputs: Vec<InputDigest>,
}

fn simulate(settings: &SimulateSettings, seed: u64, out_dir: &Path) -> CliResult<()> {
    settings.validate()?;
    let domain = settings.domain;
    let sim_locations = match settings.locations {
        LocationLayout::Grid { nx, ny } => {
            nsgp_core::geometry::regular_grid(domain.lower(), domain.upper(), nx, ny)
        }
        LocationLayout::Random { n } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(LOCATION_STREAM);
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let v: f64 = rng.random();
                    Location::new(
                        domain.x_min + u * (domain.x_max - domain.x_min),
                        domain.y_min + v * (domain.y_max - domain.y_min),
                    )
                })
                .collect()
        }
    };
    let mc = domain.mc_grid(settings.mc_grid_side);
    let mc_kernels = glm_kernels(&domain, &mc, &settings.kernel_coefs)?;
    let spec = SimSpec {
        design: settings.design(&sim_locations)?,
        locations: sim_locations,
        mc_locations: mc,
        mc_kernels,
        tau2: settings.tau2,
        sigma2: settings.sigma2,
        beta: settings.beta.clone(),
        kappa: settings.kappa,
        family: settings.family,
        replicates: settings.replicates,
        seed,
        lambda_w: settings.lambda_w,
        kernel_mode: match settings.location_kernels {
            KernelSource::Mixture => KernelMode::Mixture,
            KernelSource::Glm => KernelMode::Glm {
                coefs: settings.kernel_coefs,
            },
        },
    };
    let out = simulate_field(&spec)?;
    let n = out.sim_locations.len();

    let mut headers = vec!["x".to_string(), "y".to_string()];
    headers.extend((1..=settings.replicates).map(|j| format!("z{j}")));
    let mut table = Table::new(headers);
    for (i, s) in out.sim_locations.iter().enumerate() {
        let mut row = vec![s.x, s.y];
        row.extend_from_slice(out.data.row(i));
        table.rows.push(row);
    }

    let mut holdout_index = Vec::new();
    if settings.holdouts > 0 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(HOLDOUT_STREAM);
        holdout_index = index::sample(&mut rng, n, settings.holdouts).into_vec();
        holdout_index.sort_unstable();
    }

    let kernels = KernelFile {
        mc_locations: out.mc_locations.iter().map(|s| [s.x, s.y]).collect(),
        mc_kernels: out.mc_kernels.iter().map(|k| k.to_array()).collect(),
        lambda_w: out.lambda_w,
    };
    let mut files: Vec<(&str, Vec<u8>)> = vec![
        ("data.csv", table.to_bytes()?),
        ("kernels.json", to_json(&kernels)?),
    ];
    if !holdout_index.is_empty() {
        let train: Vec<usize> = (0..n)
            .filter(|i| holdout_index.binary_search(i).is_err())
            .collect();
        files.push(("train.csv", table.select_rows(&train).to_bytes()?));
        files.push(("holdout.csv", table.select_rows(&holdout_index).to_bytes()?));
    }
    let outputs = files
        .iter()
        .map(|(name, bytes)| InputDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        })
        .collect();
    let manifest = SimManifest {
        provenance: Provenance::new(Vec::new())?,
        seed,
        settings: settings.clone(),
        holdout_index,
        outputs,
    };
    files.push(("manifest.json", to_json(&manifest)?));

    create_dir(out_dir)?;
    for (name, bytes) in &files {
        write_atomic(&out_dir.join(name), bytes)?;
    }
    Ok(())
}

fn fit(cli: &Cli, config: &ConfigFile, args: &FitArgs, kind: ModelKind) -> CliResult<()> {
    let mut settings = config.fit.clone();
    if args.fit_radius.is_some() {
        settings.fit_radius = args.fit_radius;
    }
    if args.lambda_w.is_some() {
        settings.lambda_w = args.lambda_w;
    }
    let bytes = std::fs::read(&args.data).map_err(|e| CliError::io(&args.data, e))?;
    let table = Table::read(bytes.as_slice()).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", args.data.display())),
        other => other,
    })?;
    let columns = settings.columns.resolve(&table)?;
    let ds = Dataset::from_table(&table, &columns)?;

    let (mc, defaulted) = mc_locations(&settings, &ds.coords)?;
    if args.mc_n {
        let radius = settings
            .fit_radius
            .ok_or_else(|| CliError::Config("--mc-n needs a fit radius".into()))?;
        for (k, (s, count)) in mc
            .iter()
            .zip(mc_n_counts(&ds.coords, &mc, radius))
            .enumerate()
        {
            println!("component {} at ({}, {}): {count}", k + 1, s.x, s.y);
        }
        return Ok(());
    }
    let out = args
        .out
        .as_ref()
        .expect("clap requires --out without --mc-n");

    if kind == ModelKind::Anisotropic && settings.fit_radius.is_none() {
        // the radius only bounds local neighborhoods, which this model does not use
        settings.fit_radius = Some(1.0);
    }
    if defaulted && kind == ModelKind::Nonstationary && !cli.quiet {
        eprintln!(
            "warning: no mixture component locations given; using a {0}x{0} grid over the data bounding box \
             (supply fit.mc_locations for non-rectangular domains)",
            settings.mc_grid_side
        );
    }
    let fit_config = build_fit_config(&settings, &ds.coords, &ds.design, &ds.data, &mc)?;
    let model = match kind {
        ModelKind::Nonstationary => {
            let runner = RayonRunner::new(cli.threads, cli.quiet)?;
            fit_nonstationary_with(&runner, &ds.coords, &ds.design, &ds.data, &fit_config)?
        }
        ModelKind::Anisotropic => fit_anisotropic(&ds.coords, &ds.design, &ds.data, &fit_config)?,
    };
    if !cli.quiet {
        for w in &model.warnings {
            eprintln!("warning: {w}");
        }
    }
    let artifact = ModelArtifact {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance::new(vec![InputDigest {
            name: file_name(&args.data),
            sha256: sha256_hex(&bytes),
        }])?,
        settings,
        columns,
        model: model.into_state(),
    };
    artifact.save(out)
}

fn predict(model_path: &Path, locs: &Path, out: &Path, batch: usize) -> CliResult<()> {
    let artifact = ModelArtifact::load(model_path)?;
    let model = artifact.fitted()?;
    let table = Table::read_path(locs)?;
    let coords = locations(&table, &artifact.columns)?;
    let design = design_matrix(&table, &artifact.columns)?;
    let pred = predict_batched(&model, &coords, &design, batch)?;
    let responses = &artifact.columns.responses;
    let mut headers = vec!["x".to_string(), "y".to_string()];
    if responses.len() == 1 {
        headers.push("pred_mean".into());
    } else {
        headers.extend(responses.iter().map(|r| format!("pred_mean_{r}")));
    }
    headers.push("pred_sd".into());
    let mut t = Table::new(headers);
    for (i, s) in coords.iter().enumerate() {
        let mut row = vec![s.x, s.y];
        row.extend_from_slice(pred.means.row(i));
        row.push(pred.sds[i]);
        t.rows.push(row);
    }
    write_atomic(out, &t.to_bytes()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub mspe: f64,
    pub crps: f64,
    pub n: usize,
    pub responses: Vec<String>,
}

fn evaluate(
    holdout: &Path,
    predictions: &Path,
    response: Option<&str>,
    out: Option<&Path>,
) -> CliResult<()> {
    let h = Table::read_path(holdout)?;
    let p = Table::read_path(predictions)?;
    if h.len() != p.len() {
        return Err(CliError::Data(format!(
            "{} holdout rows but {} predictions",
            h.len(),
            p.len()
        )));
    }
    for (a, b) in ["x", "y"].iter().map(|c| (h.column(c), p.column(c))) {
        if let (Ok(a), Ok(b)) = (a, b) {
            if a.iter()
                .zip(&b)
                .any(|(u, v)| (u - v).abs() > 1e-9 * u.abs().max(1.0))
            {
                return Err(CliError::Data(
                    "holdout and prediction rows are at different locations".into(),
                ));
            }
        }
    }
    // (holdout column, prediction column)
    let pairs: Vec<(String, String)> = if p.column_index("pred_mean").is_ok() {
        let name = match response {
            Some(r) => r.to_string(),
            None => {
                let candidates: Vec<&String> = h
                    .headers
                    .iter()
                    .filter(|c| *c != "x" && *c != "y")
                    .collect();
                match candidates.as_slice() {
                    [one] => one.to_string(),
                    _ => return Err(CliError::Config(
                        "the holdout file has several value columns; choose one with --response"
                            .into(),
                    )),
                }
            }
        };
        vec![(name, "pred_mean".to_string())]
    } else {
        p.headers
            .iter()
            .filter_map(|c| {
                c.strip_prefix("pred_mean_")
                    .map(|r| (r.to_string(), c.clone()))
            })
            .collect()
    };
    if pairs.is_empty() {
        return Err(CliError::Data(
            "the predictions file has no pred_mean columns".into(),
        ));
    }
    let m = h.len();
    let q = pairs.len();
    let mut z = Matrix::zeros(m, q);
    let mut mu = Matrix::zeros(m, q);
    for (j, (hc, pc)) in pairs.iter().enumerate() {
        for (i, (a, b)) in h.column(hc)?.into_iter().zip(p.column(pc)?).enumerate() {
            z[(i, j)] = a;
            mu[(i, j)] = b;
        }
    }
    let sds = p.column("pred_sd")?;
    let scores = Scores {
        mspe: mspe(&z, &mu)?,
        crps: mean_crps(&z, &mu, &sds)?,
        n: m,
        responses: pairs.into_iter().map(|(r, _)| r).collect(),
    };
    println!("MSPE: {}", scores.mspe);
    println!("CRPS: {}", scores.crps);
    if let Some(path) = out {
        write_atomic(path, &to_json(&scores)?)?;
    }
    Ok(())
}

fn plot_data(
    model_path: &Path,
    out_dir: &Path,
    aniso: Option<&Path>,
    true_kernels: Option<&Path>,
    ref_loc: Option<[f64; 2]>,
    grid_n: usize,
) -> CliResult<()> {
    if grid_n == 0 {
        return Err(CliError::Config("--grid-n must be positive".into()));
    }
    let model = ModelArtifact::load(model_path)?.fitted()?;
    let mut ellipses = model_ellipses(&model);
    if let Some(path) = aniso {
        let a = ModelArtifact::load(path)?.fitted()?;
        for mut e in model_ellipses(&a) {
            e.kind = EllipseKind::Stationary;
            ellipses.push(e);
        }
    }
    if let Some(path) = true_kernels {
        let text = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let kf: KernelFile = serde_json::from_slice(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for (k, (s, m)) in kf.mc_locations.iter().zip(&kf.mc_kernels).enumerate() {
            let kernel = KernelMatrix::try_from(*m)?;
            ellipses.push(Ellipse::new(
                EllipseKind::True,
                k,
                Location::new(s[0], s[1]),
                kernel,
            ));
        }
    }
    let grid = default_grid(&model, grid_n);
    create_dir(out_dir)?;
    write_atomic(&out_dir.join("ellipses.json"), &to_json(&ellipses)?)?;
    write_atomic(
        &out_dir.join("surfaces.csv"),
        &parameter_surfaces(&model, &grid).to_bytes()?,
    )?;
    if let Some([x, y]) = ref_loc {
        let map = correlation_map(&model, &Location::new(x, y), &grid);
        write_atomic(&out_dir.join("correlation.csv"), &map.to_bytes()?)?;
    }
    Ok(())
}
