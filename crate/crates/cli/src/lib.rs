//! The `tremble` command line: compile goals, solve and simulate planning
//! problems, run the co-assembly sweep, and host the playground API.

pub mod serve;

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tremble_core::abstraction::{mdp_from_det, mdpst_from_nondet, Mdpst};
use tremble_core::coassembly::{run_scaling, BenchConfig};
use tremble_core::dfa::{compile, materialize, minimize, Dfa};
use tremble_core::domain::{load_domain, load_errors, Domain, ErrorModel};
use tremble_core::ltlf::{parse, Formula, LtlfError, PropSet};
use tremble_core::product::{synthesize, Region, Strategy, Sweep, ViOptions};
use tremble_core::sim::{monte_carlo, run, NaturePolicy, Prompt, SimError};

#[derive(Debug, Parser)]
#[command(name = "tremble", version, about = "Strategy synthesis for LTLf goals under action slips")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a formula to its automaton and report its size.
    Compile {
        #[command(flatten)]
        goal: GoalArgs,
        /// Domain whose propositions the formula ranges over.
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Write the minimal automaton in Graphviz format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Synthesize an optimal strategy and write it as JSON.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "strategy.json")]
        out: PathBuf,
        /// Fail with exit code 2 when the optimal value is below this.
        #[arg(long)]
        beta: Option<f64>,
        /// Run Jacobi sweeps on this many threads instead of Gauss-Seidel.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Execute a strategy against a nature.
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Strategy file written by `solve`.
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, value_enum, default_value_t = NatureKind::Adversarial)]
        nature: NatureKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
        /// Where to write the run log (single runs only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep co-assembly instances and report sizes, times and values.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 2, 3])]
        budgets: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.05])]
        probs: Vec<f64>,
        #[arg(long, default_value_t = tremble_core::product::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the product partition and model sizes.
    Inspect {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Serve the playground HTTP/JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
pub struct GoalArgs {
    #[arg(long, conflicts_with = "formula_file", required_unless_present = "formula_file")]
    pub formula: Option<String>,
    #[arg(long)]
    pub formula_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub errors: PathBuf,
    #[command(flatten)]
    pub goal: GoalArgs,
    #[arg(long, default_value_t = tremble_core::product::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NatureKind {
    Adversarial,
    Random,
    Interactive,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const USAGE: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const INTERNAL: u8 = 3;

    fn input(e: impl Display) -> Self {
        Failure { code: Self::INPUT, message: e.to_string() }
    }

    fn internal(e: impl Display) -> Self {
        Failure { code: Self::INTERNAL, message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` and runs the command, writing results to `out`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Failure::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Compile { goal, domain, dot } => cmd_compile(&goal, domain.as_deref(), dot.as_deref(), out),
        Command::Solve { problem, out: path, beta, workers } => cmd_solve(&problem, &path, beta, workers, out),
        Command::Simulate { problem, strategy, nature, seed, runs, max_steps, out: path } => {
            cmd_simulate(&problem, &strategy, nature, seed, runs as usize, max_steps, path.as_deref(), out)
        }
        Command::Bench { sizes, budgets, probs, epsilon, csv } => {
            cmd_bench(&sizes, &budgets, &probs, epsilon, csv.as_deref(), out)
        }
        Command::Inspect { problem } => cmd_inspect(&problem, out),
        Command::Serve { port } => serve::run_server(port).map_err(Failure::internal),
    }
}

fn emit(out: &mut dyn Write, text: impl Display) -> Outcome {
    writeln!(out, "{text}").map_err(Failure::internal)
}

fn goal_text(g: &GoalArgs) -> Result<String, Failure> {
    match (&g.formula, &g.formula_file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map(|t| t.trim().to_string())
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        (None, None) => Err(Failure { code: Failure::USAGE, message: "a formula is required".into() }),
    }
}

/// Parses with the atoms the formula mentions, learning them one error at a
/// time.
fn parse_free(text: &str) -> Result<(Formula, PropSet), LtlfError> {
    let mut names: Vec<String> = Vec::new();
    loop {
        let props = PropSet::new(&names)?;
        match parse(text, &props) {
            Ok(f) => return Ok((f, props)),
            Err(LtlfError::UnknownAtom(a)) if !names.contains(&a) => names.push(a),
            Err(e) => return Err(e),
        }
    }
}

/// Everything the pipeline needs, loaded and validated.
struct Problem {
    domain: Domain,
    errors: ErrorModel,
    dfa: Dfa,
    mdpst: Mdpst,
}

fn load_problem(p: &ProblemArgs) -> Result<Problem, Failure> {
    if !(p.epsilon > 0.0) {
        return Err(Failure::input("epsilon must be positive"));
    }
    let domain = load_domain(&p.domain).map_err(Failure::input)?;
    let errors = load_errors(&p.errors).map_err(Failure::input)?;
    let props = domain.as_nondet().props();
    let formula = parse(&goal_text(&p.goal)?, props).map_err(Failure::input)?;
    let dfa = compile(&formula, props);
    let mdpst = match &domain {
        Domain::Det(d) => mdp_from_det(d, &errors),
        Domain::Nondet(n) => mdpst_from_nondet(n, &errors),
    }
    .map_err(Failure::input)?;
    Ok(Problem { domain, errors, dfa, mdpst })
}

fn cmd_compile(goal: &GoalArgs, domain: Option<&Path>, dot: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let text = goal_text(goal)?;
    let (formula, props) = match domain {
        Some(path) => {
            let d = load_domain(path).map_err(Failure::input)?;
            let props = d.as_nondet().props().clone();
            (parse(&text, &props).map_err(Failure::input)?, props)
        }
        None => parse_free(&text).map_err(Failure::input)?,
    };
    let dfa = compile(&formula, &props);
    let explicit = materialize(&dfa).map_err(Failure::input)?;
    let min = minimize(&explicit);
    emit(out, format_args!("formula={}", dfa.formula(dfa.initial())))?;
    emit(out, format_args!("props={}", props.len()))?;
    emit(out, format_args!("states={}", explicit.num_states()))?;
    emit(out, format_args!("accepting={}", explicit.num_accepting()))?;
    emit(out, format_args!("minimal_states={}", min.num_states()))?;
    if let Some(path) = dot {
        std::fs::write(path, min.to_dot()).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_solve(p: &ProblemArgs, path: &Path, beta: Option<f64>, workers: Option<usize>, out: &mut dyn Write) -> Outcome {
    if beta.is_some_and(|b| !(0.0..=1.0).contains(&b)) {
        return Err(Failure::input("beta must lie in [0, 1]"));
    }
    let prob = load_problem(p)?;
    let sweep = match workers {
        Some(w) if w > 0 => Sweep::Jacobi { workers: w },
        Some(_) => return Err(Failure::input("workers must be positive")),
        None => Sweep::GaussSeidel,
    };
    let syn = synthesize(&prob.mdpst, &prob.dfa, ViOptions { epsilon: p.epsilon, sweep });
    let mut strategy = syn.strategy;
    strategy.beta = beta;
    strategy
        .save(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    emit(out, format_args!("value={}", syn.value))?;
    emit(out, format_args!("iterations={}", strategy.iterations))?;
    emit(out, format_args!("strategy={}", path.display()))?;
    if !strategy.meets_threshold() {
        return Err(Failure::input(format!(
            "threshold not met: value {} < beta {}",
            syn.value,
            beta.unwrap_or_default()
        )));
    }
    Ok(())
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::StrategyGap { .. } => Failure::input(format!("{e} (is the strategy for this problem?)")),
        _ => Failure::internal(e),
    }
}

/// Asks on standard error, reads a successor index from standard input.
fn ask(p: &Prompt) -> tremble_core::domain::StateId {
    let stdin = std::io::stdin();
    loop {
        eprintln!(
            "step {}: state {} intended {} instructed {}",
            p.step, p.s, p.intended, p.instructed
        );
        for (i, (t, v)) in p.theta.iter().zip(&p.values).enumerate() {
            eprintln!("  [{i}] state {t} (value {v:.4})");
        }
        eprint!("choice> ");
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).unwrap_or(0) == 0 {
            // end of input: behave like the adversary
            return p.greedy();
        }
        if let Some(t) = line.trim().parse::<usize>().ok().and_then(|i| p.theta.get(i)) {
            return *t;
        }
        eprintln!("enter an index between 0 and {}", p.theta.len() - 1);
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    p: &ProblemArgs,
    strategy_path: &Path,
    nature: NatureKind,
    seed: u64,
    runs: usize,
    max_steps: usize,
    log_path: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let prob = load_problem(p)?;
    let text = std::fs::read_to_string(strategy_path)
        .map_err(|e| Failure::input(format!("{}: {e}", strategy_path.display())))?;
    let strategy = Strategy::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", strategy_path.display())))?;
    let dom = prob.domain.as_nondet();
    let mut policy = match nature {
        NatureKind::Adversarial => NaturePolicy::AdversarialGreedy,
        NatureKind::Random => NaturePolicy::UniformRandom,
        NatureKind::Interactive => NaturePolicy::Interactive(Box::new(ask)),
    };
    if runs > 1 {
        if nature == NatureKind::Interactive {
            return Err(Failure::input("interactive natures play a single run"));
        }
        let est = monte_carlo(dom, &prob.errors, &strategy, &prob.dfa, &policy, runs, seed, max_steps)
            .map_err(sim_failure)?;
        emit(out, format_args!("runs={} successes={}", est.runs, est.successes))?;
        emit(out, format_args!("estimate={} stderr={}", est.estimate, est.stderr))?;
        return emit(out, format_args!("value={}", strategy.value));
    }
    let r = run(dom, &prob.errors, &strategy, &prob.dfa, &mut policy, seed, max_steps).map_err(sim_failure)?;
    let log = r.to_jsonl();
    match log_path {
        Some(path) => std::fs::write(path, &log).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => write!(out, "{log}").map_err(Failure::internal)?,
    }
    let stop = serde_json::to_string(&r.stop).map_err(Failure::internal)?;
    emit(out, format_args!("success={} steps={} stop={}", r.success, r.steps(), stop.trim_matches('"')))
}

fn cmd_bench(sizes: &[usize], budgets: &[u32], probs: &[f64], epsilon: f64, csv: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let mut configs = Vec::new();
    for &n in sizes {
        for &k in budgets {
            for &p in probs {
                let cfg = BenchConfig { epsilon, ..BenchConfig::new(n, k, p) };
                cfg.validate().map_err(Failure::input)?;
                configs.push(cfg);
            }
        }
    }
    let records = run_scaling(&configs, csv).map_err(Failure::input)?;
    if csv.is_none() {
        let mut buf = Vec::new();
        tremble_core::coassembly::write_csv(&records, &mut buf).map_err(Failure::internal)?;
        out.write_all(&buf).map_err(Failure::internal)?;
    } else {
        emit(out, format_args!("wrote {} rows", records.len()))?;
    }
    Ok(())
}

fn cmd_inspect(p: &ProblemArgs, out: &mut dyn Write) -> Outcome {
    let prob = load_problem(p)?;
    let dom = prob.domain.as_nondet();
    let syn = synthesize(&prob.mdpst, &prob.dfa, ViOptions { epsilon: p.epsilon, ..ViOptions::default() });
    let part = &syn.partition;
    let (sn, sd, sp) = (
        part.count(Region::Unreachable),
        part.count(Region::Dead),
        part.count(Region::Relevant),
    );
    if sn + sd + sp != syn.product.num_states() {
        return Err(Failure::internal("partition does not cover the product"));
    }
    emit(out, format_args!("domain_states={} actions={} transitions={}", dom.num_states(), dom.num_actions(), dom.num_transitions()))?;
    emit(out, format_args!("mdpst_states={} transitions={} max_family={}", prob.mdpst.num_states(), prob.mdpst.num_transitions(), prob.mdpst.max_family_size()))?;
    emit(out, format_args!("dfa_states={}", prob.dfa.num_states()))?;
    emit(out, format_args!("product_states={} transitions={}", syn.product.num_states(), syn.product.num_transitions()))?;
    emit(out, format_args!("S_n={sn} S_d={sd} S_p={sp}"))?;
    if let Some(z) = &syn.sub {
        emit(out, format_args!("sub_states={} sub_choices={} max_family={}", z.num_states(), z.num_choices(), z.max_family_size()))?;
    }
    emit(out, format_args!("value={}", syn.value))
}
