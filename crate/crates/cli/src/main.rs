use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use chd_core::chd::{format_labels, read_truth, write_truth};
use chd_core::classify::Diagnosis;
use chd_core::config::CONFIG_ENV;
use chd_core::emd::{build_library, ShapeCategory, TemplateLibrary};
use chd_core::eval::ConfusionMatrix;
use chd_core::phantom::{generate, preset, PhantomSpec};
use chd_core::pipeline::{analyze_case, diagnose_case};
use chd_core::skeleton::record::{read_record, write_record};
use chd_core::skeleton::sample_and_normalize;
use chd_core::volume::io::write_atomic;
use chd_core::{CaseInput, PipelineConfig};

const SKELETON_EXT: &str = "skel";
const DIAGNOSIS_EXT: &str = "json";

#[derive(Parser)]
#[command(name = "chd", version, about = "Rule-based CHD classification from heart segmentations")]
struct Cli {
    /// key=value pipeline config; unset keys keep their defaults
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the effective config and exit
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Diagnose case directories against a template library
    Classify {
        #[arg(required = true)]
        cases: Vec<PathBuf>,
        #[arg(long)]
        library: PathBuf,
        /// Directory receiving one diagnosis JSON per case
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample vessel skeletons of labelled cases into skeleton records
    Extract {
        #[arg(required = true)]
        cases: Vec<PathBuf>,
        /// Template category; by default derived from each case's truth sidecar
        #[arg(long)]
        category: Option<ShapeCategory>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble a template library from a directory of labelled skeleton records
    BuildTemplates {
        skeletons: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Confusion matrix and selective-prediction metrics
    Evaluate(EvaluateArgs),
    /// Render a synthetic heart case with its ground-truth labels
    GenPhantom {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Phantom spec JSON instead of a preset
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of diagnosis JSON files
    #[arg(required_unless_present = "matrix", conflicts_with = "matrix")]
    diagnoses: Option<PathBuf>,
    /// Root holding `<case_id>/truth.json` sidecars
    #[arg(long, requires = "diagnoses")]
    truth: Option<PathBuf>,
    /// Evaluate an existing matrix TSV instead of diagnoses
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if cli.print_config {
        print!("{}", cfg.render());
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!("no command given; see --help");
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("worker pool")?;
    pool.install(|| match command {
        Command::Classify { cases, library, out } => classify(&cases, &library, &out, &cfg),
        Command::Extract { cases, category, out } => extract(&cases, category, &out, &cfg),
        Command::BuildTemplates { skeletons, out } => build_templates(&skeletons, &out, &cfg),
        Command::Evaluate(args) => evaluate(&args),
        Command::GenPhantom { preset: name, seed, spec, out } => gen_phantom(name, seed, spec, &out),
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Runs `f` on every case in parallel; reports all failures, not just the first.
fn for_each_case<T: Send>(
    cases: &[PathBuf],
    f: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = cases
        .par_iter()
        .map(|c| f(c).with_context(|| format!("case {}", c.display())))
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                eprintln!("error: {e:#}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} cases failed", cases.len());
    }
    Ok(ok)
}

fn classify(cases: &[PathBuf], library: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let lib = TemplateLibrary::load(library)
        .with_context(|| format!("template library {}", library.display()))?;
    if lib.fingerprint() != cfg.shape_fingerprint() {
        bail!(
            "template library {} was built with a different shape config (fingerprint {}, current {})",
            library.display(),
            lib.fingerprint(),
            cfg.shape_fingerprint()
        );
    }
    for w in lib.coverage_warnings() {
        log::warn!("{w}");
    }
    create_dir(out)?;
    let lines = for_each_case(cases, |dir| {
        let case = CaseInput::load(dir)?;
        let d = diagnose_case(&case, &lib, cfg)?;
        let path = out.join(format!("{}.{DIAGNOSIS_EXT}", d.case_id));
        write_atomic(&path, d.to_json().as_bytes())?;
        let reason = d.gates.first().map(|g| format!(" ({g})")).unwrap_or_default();
        Ok(format!("{}\t{}{reason}", d.case_id, d.summary()))
    })?;
    for l in lines {
        println!("{l}");
    }
    Ok(())
}

fn extract(
    cases: &[PathBuf],
    category: Option<ShapeCategory>,
    out: &Path,
    cfg: &PipelineConfig,
) -> Result<()> {
    create_dir(out)?;
    let lines = for_each_case(cases, |dir| {
        let cat = match category {
            Some(c) => c,
            None => {
                let truth = read_truth(dir)?;
                ShapeCategory::from_truth(&truth).with_context(|| {
                    format!("truth {} implies no template category; pass --category", format_labels(&truth))
                })?
            }
        };
        let case = CaseInput::load(dir)?;
        let a = analyze_case(&case, cfg)?;
        if a.vessel_graph.is_empty() {
            bail!("no vessel skeleton");
        }
        let s = sample_and_normalize(&a.vessel_graph, &case.id, cfg)?;
        write_record(&out.join(format!("{}.{SKELETON_EXT}", case.id)), &s, Some(cat.name()))?;
        Ok(format!("{}\t{cat}", case.id))
    })?;
    for l in lines {
        println!("{l}");
    }
    Ok(())
}

fn build_templates(dir: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let files = files_with_ext(dir, SKELETON_EXT)?;
    if files.is_empty() {
        bail!("no .{SKELETON_EXT} records in {}", dir.display());
    }
    let mut cases = Vec::with_capacity(files.len());
    for f in files {
        let (s, cat) = read_record(&f)?;
        let cat: ShapeCategory = cat
            .with_context(|| format!("{} has no category", f.display()))?
            .parse()?;
        if s.fingerprint != cfg.shape_fingerprint() {
            bail!(
                "{} was sampled with a different shape config (fingerprint {}, current {})",
                f.display(),
                s.fingerprint,
                cfg.shape_fingerprint()
            );
        }
        cases.push((s, cat));
    }
    let lib = build_library(cases)?;
    lib.save(out)?;
    for (c, n) in lib.category_counts() {
        println!("{c}\t{n}");
    }
    for w in lib.coverage_warnings() {
        log::warn!("{w}");
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cm = match (&args.matrix, &args.diagnoses) {
        (Some(m), _) => {
            let text = std::fs::read_to_string(m).with_context(|| format!("reading {}", m.display()))?;
            ConfusionMatrix::from_tsv(&text).with_context(|| format!("matrix {}", m.display()))?
        }
        (None, Some(dir)) => {
            let truth_root = args.truth.as_deref().unwrap_or(dir);
            let mut cm = ConfusionMatrix::new();
            let files = files_with_ext(dir, DIAGNOSIS_EXT)?;
            if files.is_empty() {
                bail!("no diagnosis files in {}", dir.display());
            }
            for f in files {
                let text = std::fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
                let d: Diagnosis =
                    serde_json::from_str(&text).with_context(|| format!("diagnosis {}", f.display()))?;
                let truth = read_truth(&truth_root.join(&d.case_id))?;
                cm.add_diagnosis(&truth, &d);
            }
            cm
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    create_dir(&args.out)?;
    write_atomic(&args.out.join("matrix.tsv"), cm.to_tsv().as_bytes())?;
    let table = cm.render_table();
    write_atomic(&args.out.join("table.txt"), table.as_bytes())?;
    print!("{table}");
    let m = cm.metrics()?;
    write_atomic(&args.out.join("metrics.json"), m.to_json().as_bytes())?;
    println!("{}", m.summary());
    Ok(())
}

fn gen_phantom(name: Option<String>, seed: u64, spec: Option<PathBuf>, out: &Path) -> Result<()> {
    let spec = match (name, spec) {
        (Some(n), _) => preset(&n, seed)?,
        (None, Some(p)) => PhantomSpec::load(&p).with_context(|| format!("spec {}", p.display()))?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let (case, truth) = generate(&spec)?;
    case.save(out)?;
    write_truth(out, &truth)?;
    write_atomic(&out.join("spec.json"), spec.to_json().as_bytes())?;
    println!("{}\t{}", out.display(), format_labels(&truth));
    Ok(())
}
