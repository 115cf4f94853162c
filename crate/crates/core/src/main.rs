// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aggdetect::aggregate::{sum_layers, threshold, window_layers, AggregatedNetwork, WindowSpec};
use aggdetect::harness::{self, kstar_curve, ExperimentSpec, Manifest, MANIFEST_FILE};
use aggdetect::netgen::{generate, CommunitySpec, EnsembleParams, LayerProbs};
use aggdetect::spectral::{detect, EigOptions, ModularityOperator, NullSource};
use aggdetect::theory::{self, DetectabilityPrediction, SummationTheoryInput};
use aggdetect::{io, par, Error, Result};

#[derive(Parser)]
#[command(name = "aggdetect", version, about = "Small-community detectability in aggregated multilayer networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a multilayer network from an ensemble config (TOML or JSON).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Aggregate layers of a multilayer network by summation or threshold.
    Aggregate {
        #[arg(long)]
        net: PathBuf,
        /// Comma-separated 0-based layer indices. Default: all layers.
        #[arg(long, value_delimiter = ',', conflicts_with = "window")]
        layers: Vec<usize>,
        /// Window as `width,center` with a 1-based centre label.
        #[arg(long, value_parser = parse_window)]
        window: Option<WindowSpec>,
        #[arg(long)]
        threshold: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral detection against known communities; prints JSON.
    Detect(DetectArgs),
    /// Closed-form predictions.
    Theory {
        #[command(subcommand)]
        which: TheoryCommand,
    },
    /// Run an experiment and write CSV tables plus a manifest.
    Experiment {
        #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
        spec: Option<PathBuf>,
        /// Rerun the spec recorded in a previous manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Use N = 10000 and rescale the K grid accordingly.
        #[arg(long)]
        full: bool,
        /// Temporal binning: also eigensolve generated instances.
        #[arg(long)]
        empirical: bool,
    },
}

#[derive(Args)]
struct DetectArgs {
    /// Multilayer edge list (all layers summed) or aggregated network file.
    #[arg(long)]
    net: PathBuf,
    /// Sidecar JSON or a bare list of node lists.
    #[arg(long)]
    communities: PathBuf,
    /// Number of eigenpairs.
    #[arg(long)]
    k: usize,
    /// Threshold applied to the summed multilayer network.
    #[arg(long)]
    threshold: Option<u32>,
    #[arg(long, value_enum, default_value = "empirical")]
    null: NullArg,
    /// Sidecar with layer probabilities for the theoretical null.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write eigenvectors as little-endian f64 files into this directory.
    #[arg(long)]
    dump_eigenvectors: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NullArg {
    Empirical,
    Theoretical,
}

#[derive(Args)]
struct Ensemble {
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "L")]
    layers: usize,
    #[arg(long = "T")]
    persistence: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Homogeneous layer probability.
    #[arg(long)]
    p: f64,
}

impl Ensemble {
    fn input(&self, size: f64) -> SummationTheoryInput {
        SummationTheoryInput {
            n: self.n,
            layer_probs: vec![self.p; self.layers],
            size,
            persistence: self.persistence,
            rho: self.rho,
        }
    }
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Critical community size under summation.
    Kstar(Ensemble),
    /// Signal strength and predicted overlap for a community of size K.
    Overlap {
        #[command(flatten)]
        ens: Ensemble,
        #[arg(long = "K")]
        size: f64,
        /// Evaluate the thresholded network at this threshold instead.
        #[arg(long)]
        threshold: Option<usize>,
    },
    /// Effective probabilities and critical sizes for every threshold (CSV).
    Threshold(Ensemble),
}

fn parse_window(s: &str) -> std::result::Result<WindowSpec, String> {
    let (w, t) = s.split_once(',').ok_or("expected width,center")?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    Ok(WindowSpec::new(parse(w)?, parse(t)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    par::init_from_env();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Aggregate {
            net,
            layers,
            window,
            threshold,
            out,
        } => cmd_aggregate(&net, &layers, window, threshold, &out),
        Command::Detect(args) => cmd_detect(&args),
        Command::Theory { which } => cmd_theory(which),
        Command::Experiment {
            spec,
            manifest,
            out,
            seed,
            full,
            empirical,
        } => cmd_experiment(spec.as_deref(), manifest.as_deref(), &out, seed, full, empirical),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = read_text(config)?;
    let mut params: EnsembleParams = match config.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text)?,
        _ => toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
    };
    if let Some(s) = seed {
        params.seed = s;
    }
    for w in params.validate()?.warnings {
        eprintln!("warning: {w}");
    }
    let net = generate(&params)?;
    io::write_multilayer(&net, out)?;
    let side = io::sidecar_path(out);
    io::write_sidecar(&io::Sidecar::of(&net), &side)?;
    let edges: usize = net.layers.iter().map(|l| l.len()).sum();
    println!("wrote {} ({} edges) and {}", out.display(), edges, side.display());
    Ok(())
}

fn cmd_aggregate(net: &Path, layers: &[usize], window: Option<WindowSpec>, lt: Option<u32>, out: &Path) -> Result<()> {
    let net = io::read_multilayer(net)?;
    let selection: Vec<usize> = if let Some(w) = window {
        window_layers(net.num_layers(), w)?
            .into_iter()
            .map(|l| l - 1)
            .collect()
    } else if !layers.is_empty() {
        layers.to_vec()
    } else {
        (0..net.num_layers()).collect()
    };
    let mut agg = sum_layers(&net, &selection)?;
    if let Some(t) = lt {
        agg = threshold(&agg, t)?;
    }
    io::write_aggregated(&agg, out)?;
    println!("wrote {} ({} entries)", out.display(), agg.nnz_upper());
    Ok(())
}

fn is_aggregated_file(path: &Path) -> Result<bool> {
    use std::io::{BufRead, BufReader};
    let f = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    for line in BufReader::new(f).lines().take(8) {
        let line = line.map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if line.starts_with("#kind") {
            return Ok(true);
        }
        if line.starts_with("#L ") {
            return Ok(false);
        }
    }
    Ok(false)
}

fn cmd_detect(a: &DetectArgs) -> Result<()> {
    let (agg, probs): (AggregatedNetwork, Option<Vec<f64>>) = if is_aggregated_file(&a.net)? {
        let probs = a.sidecar.as_deref().map(io::read_sidecar).transpose()?.map(|s| s.layer_probs);
        let agg = io::read_aggregated(&a.net)?;
        let agg = match a.threshold {
            Some(t) => threshold(&agg, t)?,
            None => agg,
        };
        (agg, probs)
    } else {
        let net = io::read_multilayer(&a.net)?;
        let all: Vec<usize> = (0..net.num_layers()).collect();
        let mut agg = sum_layers(&net, &all)?;
        if let Some(t) = a.threshold {
            agg = threshold(&agg, t)?;
        }
        let probs = match &a.sidecar {
            Some(p) => Some(io::read_sidecar(p)?.layer_probs),
            None if !net.layer_probs.is_empty() => Some(net.layer_probs.clone()),
            None => None,
        };
        (agg, probs)
    };
    let op = match a.null {
        NullArg::Empirical => ModularityOperator::empirical(&agg),
        NullArg::Theoretical => {
            let probs = probs.ok_or_else(|| Error::Config("theoretical null needs layer probabilities".into()))?;
            ModularityOperator::theoretical(&agg, &probs)?
        }
    };
    let communities = io::read_communities(&a.communities)?;
    let opts = EigOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        seed: a.seed,
        ..EigOptions::default()
    };
    let res = detect(&op, &communities, a.k, &opts)?;
    if let Some(dir) = &a.dump_eigenvectors {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        io::write_eigenvectors(dir, "eigvec", &res.eigenvectors)?;
    }
    println!("{}", serde_json::to_string_pretty(&res)?);
    Ok(())
}

fn cmd_theory(which: TheoryCommand) -> Result<()> {
    match which {
        TheoryCommand::Kstar(ens) => {
            println!("{:.4}", theory::kstar_summation(&ens.input(1.0))?);
        }
        TheoryCommand::Overlap { ens, size, threshold } => {
            let inp = ens.input(size);
            let pred = match threshold {
                None => DetectabilityPrediction::summation(&inp)?,
                Some(lt) => {
                    let layers: Vec<usize> = (0..ens.persistence.round() as usize).collect();
                    DetectabilityPrediction::thresholded(&inp, &layers, lt)?
                }
            };
            println!("{}", serde_json::to_string_pretty(&pred)?);
        }
        TheoryCommand::Threshold(ens) => {
            let t = ens.persistence.round() as usize;
            let spec = ExperimentSpec {
                kind: harness::ExperimentKind::ThresholdKstarSweep,
                trials: 1,
                seed: 0,
                k_eigs: None,
                null: NullSource::Empirical,
                tol: 1e-8,
                max_iter: 1,
                empirical: false,
                detect: false,
                ensemble: EnsembleParams {
                    n: ens.n,
                    layers: ens.layers,
                    layer_probs: LayerProbs::constant(ens.p, ens.layers),
                    communities: vec![CommunitySpec {
                        nodes: aggdetect::netgen::Selection::Random { random: 2 },
                        layers: aggdetect::netgen::Selection::Explicit((0..t).collect()),
                        rho: ens.rho,
                    }],
                    seed: 0,
                },
                grid: Default::default(),
            };
            let (points, kstar, _) = kstar_curve(&spec, ens.p, 0)?;
            println!("L_tilde,p_hat,rho_hat,kstar_hat,kstar,ratio");
            for pt in points {
                println!(
                    "{},{},{},{},{},{}",
                    pt.threshold,
                    pt.p_hat,
                    pt.rho_hat,
                    pt.kstar_hat,
                    kstar,
                    pt.kstar_hat / kstar
                );
            }
        }
    }
    Ok(())
}

fn cmd_experiment(
    spec: Option<&Path>,
    manifest: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    full: bool,
    empirical: bool,
) -> Result<()> {
    let mut spec = match (spec, manifest) {
        (Some(p), _) => ExperimentSpec::from_path(p)?,
        (None, Some(m)) => {
            let path = if m.is_dir() { m.join(MANIFEST_FILE) } else { m.to_path_buf() };
            Manifest::read(&path)?.spec
        }
        (None, None) => return Err(Error::Config("either --spec or --manifest is required".into())),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if full {
        spec = spec.at_full_scale();
    }
    if empirical {
        spec.empirical = true;
    }
    let m = harness::run_to_dir(&spec, out)?;
    for f in &m.outputs {
        println!("{} ({} rows)", out.join(&f.file).display(), f.rows);
    }
    println!("{} ({:.2}s)", out.join(MANIFEST_FILE).display(), m.wall_time_s);
    Ok(())
}
