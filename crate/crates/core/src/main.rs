use std::io::{Read, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use onebit::designers;
use onebit::harness::{
    self, parse_config_toml, report_anneal_distribution, report_timing, serve_local, BridgeEndpoint,
    BridgeSampler, ConfigFile, LocalBackend, Method,
};
use onebit::model::{self, generate_channel, ChannelMatrix, SpinVector, SystemParams};
use onebit::qa::{self, QaControl};
use onebit::qubo::{self, ExactSampler, SaSampler, Sampler, SamplerConfig};

#[derive(Parser)]
#[command(name = "onebit", version, about = "1-bit analogue MIMO pre/post-coding design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo comparison of design methods over random channels.
    Campaign(CampaignArgs),
    /// Run every method on one channel and print per-iteration traces.
    SolveOne(SolveOneArgs),
    /// Sample the transmit-side QUBO of one channel and rank the solutions.
    AnnealReport(AnnealArgs),
    /// Write a random channel as JSON.
    GenChannel(GenChannelArgs),
    /// Answer one sampler request on stdin with a local solver (offline bridge).
    ServeLocal(ServeArgs),
}

#[derive(Args)]
struct CampaignArgs {
    /// TOML config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    power_db: Option<f64>,
    #[arg(long)]
    noise_var: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    first_trial: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: es,svd,rq,rqm,qa,qa-exact,qa-sa,qa-bridge
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    reads: Option<u64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    /// Sampler behind `qa`: exact, sa or bridge.
    #[arg(long)]
    sampler: Option<String>,
    /// Bridge program and arguments, whitespace separated.
    #[arg(long)]
    bridge_cmd: Option<String>,
    #[arg(long)]
    annealing_time_us: Option<f64>,
    #[arg(long)]
    ferromagnetic_coupling: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    randomize_init: bool,
    /// Fill the wall_us CSV column (output is then not byte-reproducible).
    #[arg(long)]
    wall_clock: bool,
}

impl CampaignArgs {
    fn to_config(&self) -> ConfigFile {
        ConfigFile {
            nt: self.nt,
            nr: self.nr,
            power_db: self.power_db,
            noise_var: self.noise_var,
            trials: self.trials,
            first_trial: self.first_trial,
            seed: self.seed,
            methods: self.methods.clone(),
            delta: self.delta,
            max_iters: self.max_iters,
            restarts: self.restarts,
            reads: self.reads,
            sweeps: self.sweeps,
            beta_min: self.beta_min,
            beta_max: self.beta_max,
            sampler: self.sampler.clone(),
            bridge_cmd: self.bridge_cmd.clone(),
            annealing_time_us: self.annealing_time_us,
            ferromagnetic_coupling: self.ferromagnetic_coupling,
            randomize_init: self.randomize_init.then_some(true),
            wall_clock: self.wall_clock.then_some(true),
            out: self.out.clone(),
        }
    }
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long, default_value_t = 8)]
    nt: usize,
    #[arg(long, default_value_t = 8)]
    nr: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    power_db: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_var: f64,
    /// Channel seed (ignored with --channel).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Channel JSON file; its shape overrides --nt/--nr.
    #[arg(long)]
    channel: Option<PathBuf>,
}

impl ChannelArgs {
    fn load(&self) -> Result<(SystemParams, ChannelMatrix)> {
        match &self.channel {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let h = ChannelMatrix::from_json(&text)?;
                let params = SystemParams::with_power_db(h.n_t(), h.n_r(), self.power_db, self.noise_var)?;
                Ok((params, h))
            }
            None => {
                let params = SystemParams::with_power_db(self.nt, self.nr, self.power_db, self.noise_var)?;
                let h = generate_channel(&params, self.seed);
                Ok((params, h))
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerChoice {
    Exact,
    Sa,
    Bridge,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, value_enum, default_value = "sa")]
    sampler: SamplerChoice,
    #[arg(long, default_value_t = 1000)]
    reads: u64,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    beta_max: f64,
    #[arg(long, default_value_t = 0)]
    sampler_seed: u64,
    #[arg(long)]
    bridge_cmd: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    annealing_time_us: f64,
    #[arg(long, default_value_t = 3.0)]
    ferromagnetic_coupling: f64,
}

impl SamplerArgs {
    fn config(&self) -> Result<SamplerConfig> {
        Ok(SamplerConfig::new(
            self.reads,
            self.sampler_seed,
            self.sweeps,
            (self.beta_min, self.beta_max),
        )?)
    }

    fn sampler(&self) -> Result<Box<dyn Sampler>> {
        Ok(match self.sampler {
            SamplerChoice::Exact => Box::new(ExactSampler::default()),
            SamplerChoice::Sa => Box::new(SaSampler),
            SamplerChoice::Bridge => {
                let cmd: Vec<String> = self
                    .bridge_cmd
                    .as_deref()
                    .unwrap_or_default()
                    .split_whitespace()
                    .map(str::to_string)
                    .collect();
                let ep = BridgeEndpoint::from_command(&cmd, self.annealing_time_us, self.ferromagnetic_coupling)
                    .context("--sampler bridge needs --bridge-cmd")?;
                Box::new(BridgeSampler::new(ep))
            }
        })
    }
}

#[derive(Args)]
struct SolveOneArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Comma-separated method list (es is skipped if too large).
    #[arg(long, default_value = "es,svd,rq,rqm,qa")]
    methods: String,
}

#[derive(Args)]
struct AnnealArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Receive vector fixing the QUBO, e.g. "+-+-"; defaults to the ES optimum.
    #[arg(long)]
    g: Option<String>,
    /// Number of ranked rows to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Write the full ranked table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenChannelArgs {
    #[arg(long, default_value_t = 8)]
    nt: usize,
    #[arg(long, default_value_t = 8)]
    nr: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LocalChoice {
    Exact,
    Sa,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, value_enum, default_value = "sa")]
    sampler: LocalChoice,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    beta_max: f64,
    /// Seed used when the request carries none.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Campaign(a) => campaign(a),
        Command::SolveOne(a) => solve_one(a),
        Command::AnnealReport(a) => anneal_report(a),
        Command::GenChannel(a) => gen_channel(a),
        Command::ServeLocal(a) => serve(a),
    }
}

fn campaign(a: CampaignArgs) -> Result<()> {
    let flags = a.to_config();
    let file = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config_toml(&text)?
        }
        None => ConfigFile::default(),
    };
    let cfg = file.overlay(flags).resolve()?;
    let report = harness::run_campaign(&cfg);

    println!(
        "{} trials, {}x{} (n_t x n_r), P = {} dB, seed {}",
        cfg.n_trials,
        cfg.params.n_t(),
        cfg.params.n_r(),
        cfg.power_db,
        cfg.master_seed
    );
    println!("{:<10} {:>12} {:>10} {:>10} {:>6} {:>12}", "method", "mean snr", "dB", "std", "fail", "mean us");
    for s in &report.summaries {
        println!(
            "{:<10} {:>12.4} {:>10.3} {:>10.4} {:>6} {:>12.1}",
            s.method.as_str(),
            s.mean_snr,
            s.mean_snr_db,
            s.std_snr,
            s.failures,
            s.mean_wall_us
        );
    }
    println!(
        "{:<10} {:>12.4} {:>10.3}",
        "eigen",
        report.eigen_bound_mean,
        model::linear_to_db(report.eigen_bound_mean)
    );
    for v in report.bound_violations() {
        eprintln!("bound violation: {v}");
    }
    match &cfg.output_path {
        Some(path) => {
            let summary = report.write_files(path)?;
            println!("wrote {} and {}", path.display(), summary.display());
        }
        None => {
            std::io::stdout().write_all(report.to_csv().as_bytes())?;
        }
    }
    Ok(())
}

fn print_trace(name: &str, d: &onebit::DesignResult) {
    println!(
        "{name:<8} snr {:.6}  g {}  f {}  iterations {}  converged {}",
        d.snr(),
        d.pair.g,
        d.pair.f,
        d.iterations_used,
        d.converged_by_tolerance
    );
    if let Some(trace) = &d.trace {
        for (k, rho) in trace.iter().enumerate() {
            println!("    k={:<3} {rho:.6}", k + 1);
        }
    }
}

fn solve_one(a: SolveOneArgs) -> Result<()> {
    let (params, h) = a.channel.load()?;
    let ctrl = onebit::IterControl::new(a.delta, a.max_iters)?;
    let seed = h.seed().unwrap_or(0);
    let sampler_kind = match a.sampler.sampler {
        SamplerChoice::Exact => harness::SamplerKind::Exact,
        SamplerChoice::Sa => harness::SamplerKind::Sa,
        SamplerChoice::Bridge => harness::SamplerKind::Bridge,
    };
    let methods = harness::config::parse_methods(&a.methods, sampler_kind)?;
    if let Ok(t) = onebit::linalg::leading_triplet_default(&h) {
        println!("eigen bound {:.6}", params.power() * t.sigma1_sq / params.noise_var());
    }
    for m in methods {
        let result = match m {
            Method::Es if params.n_t() + params.n_r() > designers::ES_MAX_ANTENNAS => {
                println!("es       skipped (too large)");
                continue;
            }
            Method::Es => designers::exhaustive_search(&params, &h)?,
            Method::Svd => designers::svd_sign_design(&params, &h)?,
            Method::Rq => designers::rq_design(&params, &h, &ctrl, &SpinVector::ones(params.n_r()))?,
            Method::Rqm => {
                let g0 = designers::seeded_unit_vector(params.n_r(), seed);
                designers::rqm_design(&params, &h, &ctrl, &g0)?
            }
            Method::QaExact | Method::QaSa | Method::QaBridge => {
                let qc = QaControl {
                    ctrl,
                    restarts: a.restarts,
                    sampler_cfg: a.sampler.config()?,
                    restart_seed: seed,
                };
                let sampler = a.sampler.sampler()?;
                let r = qa::qa_design(&params, &h, &qc, sampler.as_ref())?;
                if r.failed_restarts() > 0 {
                    println!("qa: {} restart(s) failed", r.failed_restarts());
                }
                r.design
            }
        };
        print_trace(m.as_str(), &result);
    }
    Ok(())
}

fn anneal_report(a: AnnealArgs) -> Result<()> {
    let (params, h) = a.channel.load()?;
    let g = match &a.g {
        Some(text) => parse_spins(text)?,
        None => designers::exhaustive_search(&params, &h)?.pair.g,
    };
    if g.len() != params.n_r() {
        bail!("--g has {} entries, channel has {} receive antennas", g.len(), params.n_r());
    }
    let inst = qubo::build_qubo_from_gram(&model::objective_gram_f(&h, &g)?)?;
    let reference = qubo::solve_exact(&inst, Some(1))?;
    let es_energy = reference.best().context("empty reference")?.energy;
    let sampler = a.sampler.sampler()?;
    let ss = sampler.sample(&inst, &a.sampler.config()?)?;
    let report = report_anneal_distribution(&inst, &ss, es_energy);

    println!("sampler {}, {} reads, {} distinct", sampler.name(), report.total_reads, report.rows.len());
    println!(
        "{:>4} {:<width$} {:>14} {:>12} {:>10} {:>6} {:>10} opt",
        "rank",
        "bits",
        "energy",
        "snr",
        "p",
        "class",
        "p(class)",
        width = inst.n().max(4)
    );
    let factor = params.snr_scale();
    for r in report.rows.iter().take(a.top) {
        println!(
            "{:>4} {:<width$} {:>14.6} {:>12.6} {:>10.4} {:>6} {:>10.4} {}",
            r.rank,
            r.bits,
            r.energy,
            r.objective * factor,
            r.probability,
            r.class,
            r.class_probability,
            if r.attains_reference { "*" } else { "" },
            width = inst.n().max(4)
        );
    }
    println!();
    print!("{}", report_timing(ss.timing()));
    if let Some(path) = &a.csv {
        std::fs::write(path, report.to_csv(factor)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn parse_spins(text: &str) -> Result<SpinVector> {
    let spins = text
        .chars()
        .map(|c| match c {
            '+' | '1' => Ok(1),
            '-' | '0' => Ok(-1),
            other => bail!("invalid spin character `{other}` (use + and -)"),
        })
        .collect::<Result<Vec<i8>>>()?;
    Ok(SpinVector::new(spins)?)
}

fn gen_channel(a: GenChannelArgs) -> Result<()> {
    let params = SystemParams::new(a.nt, a.nr, 1.0, 1.0)?;
    let h = generate_channel(&params, a.seed);
    let json = serde_json::to_string_pretty(&h.to_document())?;
    match &a.out {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let backend = match a.sampler {
        LocalChoice::Exact => LocalBackend::Exact,
        LocalChoice::Sa => LocalBackend::Sa {
            sweeps: a.sweeps,
            beta_range: (a.beta_min, a.beta_max),
        },
    };
    let mut request = String::new();
    std::io::stdin().read_to_string(&mut request)?;
    match serve_local(&request, backend, a.seed) {
        Ok(doc) => {
            println!("{doc}");
            Ok(())
        }
        Err(doc) => {
            println!("{doc}");
            std::process::exit(2);
        }
    }
}
