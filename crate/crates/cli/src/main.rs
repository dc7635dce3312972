use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fractal_gap::constants::{self, ConstantsConfig, Scaled};
use fractal_gap::fup::{self, FupOptions, KernelField, KERNEL_GRID_C};
use fractal_gap::report::{self, parse_lengths, ReportOptions, ScaleRange, SetSource};
use fractal_gap::sets::{gen_cantor, CantorSpec, LimitSetOptions};
use fractal_gap::tree::{discretize, prune_triples, DEFAULT_TRIPLE_BUDGET};
use fractal_gap::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "fgap", version, about = "Regular fractal sets, additive energy and uncertainty-exponent experiments")]
struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory for artifacts.
    #[arg(long, global = true, env = "FGAP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// File name prefix for artifacts.
    #[arg(long, global = true, default_value = "fgap")]
    prefix: String,
    /// Print astronomically scaled constants as (sign, ln|value|).
    #[arg(long, global = true)]
    log_form: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Cantor digit set, e.g. 3:02, 12:0,5,11 or 4:alt.
    #[arg(long, group = "src")]
    cantor: Option<String>,
    /// Generation depth for commands that use a single cover (sweeps pick the depth per scale).
    #[arg(long)]
    depth: Option<u32>,
    /// Three-funnel lengths l1,l2,l3.
    #[arg(long, group = "src")]
    schottky: Option<String>,
    /// Cover CSV written by `generate`.
    #[arg(long, group = "src")]
    file: Option<PathBuf>,
    /// Node budget for limit-set generation.
    #[arg(long, default_value_t = 20_000_000)]
    node_budget: usize,
}

impl SourceArgs {
    fn source(&self) -> Result<SetSource> {
        match (&self.cantor, &self.schottky, &self.file) {
            (Some(c), None, None) => {
                let spec: CantorSpec = c.parse()?;
                Ok(SetSource::Cantor(spec.with_depth(self.depth.unwrap_or(spec.depth))))
            }
            (None, Some(s), None) => Ok(SetSource::Schottky(parse_lengths(s)?)),
            (None, None, Some(p)) => Ok(SetSource::File(p.clone())),
            _ => Err(Error::Input("give exactly one of --cantor, --schottky or --file".into())),
        }
    }

    fn limits(&self) -> LimitSetOptions {
        LimitSetOptions { node_budget: self.node_budget, ..LimitSetOptions::default() }
    }
}

#[derive(Args, Debug, Clone)]
struct ConstantArgs {
    #[arg(long, default_value_t = 1.0)]
    k_thm4: f64,
    #[arg(long, default_value_t = 1.0)]
    k_thm61: f64,
    #[arg(long, default_value_t = 1.0)]
    k5: f64,
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    #[arg(long, default_value_t = 1.0)]
    k3: f64,
}

impl ConstantArgs {
    fn config(&self) -> Result<ConstantsConfig> {
        let c = ConstantsConfig { k_thm4: self.k_thm4, k_thm61: self.k_thm61, k5: self.k5, k1: self.k1, k3: self.k3 };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a cover of the set as CSV.
    Generate {
        #[command(flatten)]
        src: SourceArgs,
        /// Resolution (Schottky) or scale used to pick the Cantor depth when --depth is absent.
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
    },
    /// Box-counting dimension over a scale range.
    Dimension {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        scales: ScaleRange,
    },
    /// Empirical regularity constants at one resolution.
    Regularity {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        /// Dimension to test against (defaults to the exact value for Cantor sets).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Multiscale tree of the set and, optionally, its pruned triple tree.
    Tree {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, default_value_t = 3)]
        m: u32,
        #[arg(long, default_value_t = 4)]
        n: u32,
        #[arg(long)]
        prune: bool,
    },
    /// Additive energy sweep and fitted slope.
    Energy {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        scales: ScaleRange,
    },
    /// Norm sweep of the uncertainty operator and fitted exponent.
    Fup {
        #[command(flatten)]
        src: SourceArgs,
        /// Range of h, e.g. 2e-3:5e-2[:ratio].
        #[arg(long)]
        h: ScaleRange,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        /// Also scan the correlation kernel at this h.
        #[arg(long)]
        kernel_h: Option<f64>,
        #[arg(long, default_value_t = 200)]
        kernel_stride: usize,
    },
    /// Gap exponents and closed-form constants.
    Gap {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        beta_e: Option<f64>,
        /// Regularity constant; enables β_E(C) and the constant suite.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 4.0)]
        m: f64,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[command(flatten)]
        k: ConstantArgs,
    },
    /// Combined JSON document of measured exponents and formula constants.
    FullReport {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        scales: ScaleRange,
        #[arg(long, default_value_t = 4.0)]
        tree_base: f64,
        #[command(flatten)]
        k: ConstantArgs,
    },
}

fn artifact(cli: &Cli, name: &str) -> PathBuf {
    cli.out_dir.join(format!("{}_{name}", cli.prefix))
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn show(s: &Scaled, log_form: bool) -> String {
    if log_form || s.out_of_range() {
        format!("(+, ln={:.12e})", s.ln)
    } else {
        format!("{:.12e}", s.value)
    }
}

fn cover_for(src: &SourceArgs, alpha: f64) -> Result<fractal_gap::sets::IntervalCover> {
    let source = src.source()?;
    match (&source, src.depth) {
        (SetSource::Cantor(spec), Some(_)) => gen_cantor(spec),
        _ => source.cover_at(alpha, &src.limits()),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { src, alpha } => {
            let cover = cover_for(src, *alpha)?;
            println!("intervals: {}  resolution: {:e}  measure: {:e}", cover.len(), cover.resolution, cover.measure());
            write(&artifact(cli, "cover.csv"), &cover.to_csv_string())
        }
        Command::Dimension { src, scales } => {
            let r = report::dimension_sweep(&src.source()?, &scales.values()?, &src.limits())?;
            println!("dimension: {:.6}  max residual: {:.3e}", r.delta(), r.fit.max_residual);
            write(&artifact(cli, "dimension.csv"), &r.to_csv_string())
        }
        Command::Regularity { src, alpha, delta } => {
            let source = src.source()?;
            let delta = match (*delta, source.exact_delta()) {
                (Some(d), _) | (None, Some(d)) => d,
                (None, None) => return Err(Error::Input("--delta is required for this source".into())),
            };
            let r = report::regularity_check(&cover_for(src, *alpha)?, delta, cli.seed)?;
            println!("c_lower: {:.6}  c_upper: {:.6}  C: {:.6}  samples: {}", r.c_lower, r.c_upper, r.constant(), r.samples);
            write(&artifact(cli, "regularity.json"), &to_json(&r)?)
        }
        Command::Tree { src, m, n, prune } => {
            let cover = cover_for(src, (*m as f64).powi(-(*n as i32)))?;
            let t = discretize(&cover, *m, *n, None)?;
            println!("levels: {}  leaves: {}  merge warnings: {}", t.n, t.leaf_count(), t.warnings.len());
            write(&artifact(cli, "tree.txt"), &t.to_text())?;
            if *prune {
                let tt = prune_triples(&t, &cover, DEFAULT_TRIPLE_BUDGET)?;
                println!("triple leaves: {}  hitting: {}", tt.leaf_count(), tt.hitting());
                write(&artifact(cli, "triples.txt"), &tt.to_text())?;
            }
            Ok(())
        }
        Command::Energy { src, scales } => {
            let r = report::energy_sweep(&src.source()?, &scales.values()?, &src.limits())?;
            println!("energy slope: {:.6}  bound violations: {}", r.fit.slope, r.bound_violations.len());
            write(&artifact(cli, "energy.csv"), &r.to_csv_string())
        }
        Command::Fup { src, h, rho, c1, kernel_h, kernel_stride } => {
            let source = src.source()?;
            let mut opts = FupOptions::default();
            opts.norm.seed = cli.seed;
            let sweep = report::fup_sweep(&source, &h.values()?, *rho, *c1, &opts, &src.limits())?;
            for w in &sweep.warnings {
                eprintln!("warning: {w}");
            }
            println!("empirical beta (fixed chi, C1): {:.6}", sweep.beta());
            write(&artifact(cli, "norms.csv"), &sweep.to_csv_string())?;
            if let Some(kh) = kernel_h {
                let cover = source.circle_cover_at(0.05 * kh, &src.limits())?;
                let field = KernelField::new(&cover, *kh, *rho, KERNEL_GRID_C, opts.chi)?;
                let (ys, ypps) = fup::kernel_scan_points(&cover, &field, *kernel_stride);
                let scan = fup::kernel_scan(&field, &ys, &ypps)?;
                println!("kernel far/near ratio: {:.6e}", scan.decay_ratio);
                write(&artifact(cli, "kernel.csv"), &scan.to_csv_string())?;
            }
            Ok(())
        }
        Command::Gap { n, delta, beta_e, c, m, eps, k } => {
            let cfg = k.config()?;
            if let Some(be) = beta_e {
                let g = constants::gap_report(*n, *delta, *be, *c)?;
                println!("beta={}  beta_std={}  beta_jn={}", g.beta_formula, g.beta_std, g.beta_jn);
                println!("improvement range: ({}, {})  improves: {}", g.improvement_range.0, g.improvement_range.1, g.improves);
                write(&artifact(cli, "gap.json"), &to_json(&g)?)?;
            }
            if let Some(c) = c {
                let be = constants::beta_e_of_c(*delta, *c, &cfg)?;
                let s = constants::constants_suite(*delta, *c, *m, *eps, &cfg)?;
                println!("beta_E(C) = {}  (absolute constants are placeholders, not derived values)", show(&be, cli.log_form));
                for (name, v) in [("C1", &s.c1), ("C2", &s.c2), ("S(eps)", &s.s_eps), ("M0", &s.m0), ("rho_tree", &s.rho_tree), ("beta_X", &s.beta_x)] {
                    println!("{name} = {}", show(v, cli.log_form));
                }
                write(&artifact(cli, "constants.json"), &to_json(&s)?)?;
            }
            if beta_e.is_none() && c.is_none() {
                println!("beta_std={}  beta_jn={}", constants::beta_std(*n, *delta), constants::beta_jn(*n, *delta));
            }
            Ok(())
        }
        Command::FullReport { src, scales, tree_base, k } => {
            let opts = ReportOptions { seed: cli.seed, constants: k.config()?, tree_base: *tree_base, limits: src.limits() };
            let r = report::full_report(&src.source()?, scales, &opts)?;
            println!("measured delta: {:.6}  energy slope: {:.6}", r.delta.value, r.energy_slope.value);
            write(&artifact(cli, "report.json"), &r.to_json()?)
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Input(format!("serialization failed: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
