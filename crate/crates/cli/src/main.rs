mod config;

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bss_core::engine::{self, compare, EngineError, PageData, RunOptions, RunOutput, TowerLength};
use bss_core::formulas;
use bss_core::io::{self, svg};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Case, ConfigError, RunConfig, VariantArg};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "bss", version, about = "Bockstein spectral sequences of THH over F_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a differential schedule and print the E_∞ tower profile.
    Run(CaseArgs),
    /// Run the engine and compare with the closed-form answer.
    Verify(CaseArgs),
    /// Print values of the integer formulas.
    Formulas(FormulaArgs),
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long, value_enum)]
    case: Case,
    #[arg(long)]
    p: u32,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long = "max-degree")]
    max_degree: i64,
    /// Only record pages E_r with r at most this value.
    #[arg(long = "page-cap")]
    page_cap: Option<u32>,
    #[arg(long)]
    localized: bool,
    /// Differential pattern for the v1 case at p = 2.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Final page goes here; each recorded page E_r goes to `<stem>-E<r>.svg`.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// ASCII generator names (lambda1, mu3) instead of UTF-8.
    #[arg(long)]
    ascii: bool,
}

impl From<CaseArgs> for RunConfig {
    fn from(a: CaseArgs) -> Self {
        RunConfig {
            case: a.case,
            p: a.p,
            n: a.n,
            m: a.m,
            max_degree: a.max_degree,
            page_cap: a.page_cap,
            localized: a.localized,
            variant: a.variant.map(Into::into),
            json: a.json,
            svg: a.svg,
            ascii: a.ascii,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Series {
    /// p-adic valuation of n
    Nu,
    /// |λ_n|
    Dlambda,
    /// |μ_{n+1}|
    Dmu,
    /// |v_n|
    Dv,
    /// degree of λ_n in the v1 family
    D1,
    /// degree of λ_n in the v2 family
    D2,
    /// r(n,1)
    R1,
    /// r(n,2)
    R2,
    /// r_n(s,m) for s in the range, with --n-fixed and --m
    Rconj,
}

#[derive(Args)]
struct FormulaArgs {
    #[arg(long)]
    p: u32,
    #[arg(long, value_enum)]
    series: Series,
    /// A single index or an inclusive range `a..b`.
    #[arg(long, value_parser = parse_range)]
    n: (u32, u32),
    #[arg(long = "n-fixed")]
    n_fixed: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            Ok((a, b))
        }
        None => {
            let a = parse(s)?;
            Ok((a, a))
        }
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        let color = match std::env::var("BSS_COLOR").ok().as_deref() {
            Some("always") => true,
            Some("never") => false,
            _ => std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal(),
        };
        Style { color }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::detect();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a.into(), &style),
        Command::Verify(a) => cmd_verify(&a.into(), &style),
        Command::Formulas(a) => cmd_formulas(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{} {e}", style.paint("31", "error:"));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &ConfigError) -> u8 {
    match e {
        ConfigError::Engine(EngineError::Internal(_)) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    }
}

fn execute(cfg: &RunConfig) -> Result<(engine::DifferentialSchedule, RunOutput), ConfigError> {
    let sched = cfg.schedule()?;
    let artifacts = cfg.json.is_some() || cfg.svg.is_some();
    let opts = RunOptions { keep_pages: artifacts, page_cap: cfg.page_cap, record_final: artifacts || cfg.localized };
    let out = engine::run(&sched, cfg.window(), cfg.localized, opts)?;
    Ok((sched, out))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ConfigError> {
    std::fs::write(path, contents).map_err(|e| ConfigError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn page_svg_path(base: &Path, r: u32) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("page");
    base.with_file_name(format!("{stem}-E{r}.svg"))
}

fn write_artifacts(cfg: &RunConfig, sched: &engine::DifferentialSchedule, out: &RunOutput) -> Result<(), ConfigError> {
    let mut pages: Vec<PageData> = out.pages.clone();
    if let Some(f) = &out.final_page {
        pages.push(f.clone());
    }
    if let Some(path) = &cfg.json {
        let doc = io::document(cfg.meta(sched.conjectural), &pages, &out.profile, &sched.e1, cfg.ascii);
        write_file(path, &io::emit_json(&doc))?;
    }
    if let Some(path) = &cfg.svg {
        let mut chart = svg::ChartStyle::new(sched.v.degree);
        for page in &out.pages {
            chart.title = format!("{} p={}: E_{}", sched.label, cfg.p, page.r);
            write_file(&page_svg_path(path, page.r), &svg::emit_svg(page, &chart))?;
        }
        if let Some(f) = &out.final_page {
            chart.title = format!("{} p={}: E_∞", sched.label, cfg.p);
            write_file(path, &svg::emit_svg(f, &chart))?;
        }
    }
    Ok(())
}

fn print_profile(out: &RunOutput) {
    println!("{:>6}  towers", "t");
    print!("{}", out.profile);
}

/// Filtration-zero representatives of the localized E_∞ page, e.g. `{1, λ1}`.
fn laurent_span(cfg: &RunConfig, sched: &engine::DifferentialSchedule, page: &PageData) -> String {
    let names: Vec<String> = page
        .cells
        .values()
        .filter(|c| c.s == 0)
        .flat_map(|c| c.reps.iter().map(|x| sched.e1.format_element(x, cfg.ascii)))
        .collect();
    format!("{{{}}}", names.join(", "))
}

fn cmd_run(cfg: &RunConfig, style: &Style) -> Result<u8, ConfigError> {
    let (sched, out) = execute(cfg)?;
    for w in &out.warnings {
        eprintln!("{} {w}", style.paint("33", "warning:"));
    }
    if sched.conjectural {
        println!("{}", style.paint("33", "conjectural schedule"));
    }
    write_artifacts(cfg, &sched, &out)?;
    if cfg.localized {
        let page = out.final_page.as_ref().expect("localized runs record the final page");
        if out.profile.count(TowerLength::Unknown) > 0 {
            println!("E_∞ (partially undetermined) ⊇ Laurent span {}", laurent_span(cfg, &sched, page));
        } else {
            println!("E_∞ = Laurent span {}", laurent_span(cfg, &sched, page));
        }
    } else {
        print_profile(&out);
    }
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig, style: &Style) -> Result<u8, ConfigError> {
    let oracle = cfg.oracle()?;
    let (sched, out) = execute(cfg)?;
    write_artifacts(cfg, &sched, &out)?;
    let report = compare(&out.profile, &oracle, cfg.max_degree);
    if sched.conjectural {
        println!("{}", style.paint("33", "conjectural: checks internal consistency only"));
    }
    println!("{report}");
    if report.is_match() {
        println!("{}", style.paint("32", "verified"));
        Ok(0)
    } else {
        println!("{}", style.paint("31", "mismatch"));
        Ok(EXIT_MISMATCH)
    }
}

fn cmd_formulas(a: &FormulaArgs) -> Result<u8, ConfigError> {
    let p = a.p;
    let fe = |e: formulas::FormulaError| ConfigError::Usage(e.to_string());
    for i in a.n.0..=a.n.1 {
        let value = match a.series {
            Series::Nu => formulas::nu_p(p, &i.into()).map(|x| x.into()),
            Series::Dlambda => formulas::deg_lambda(p, i),
            Series::Dmu => formulas::deg_mu(p, i),
            Series::Dv => formulas::deg_v(p, i),
            Series::D1 => formulas::d_deg(p, i, 1),
            Series::D2 => formulas::d_deg(p, i, 2),
            Series::R1 => formulas::r_len(p, i, 1),
            Series::R2 => formulas::r_len(p, i, 2),
            Series::Rconj => {
                let n = a.n_fixed.ok_or_else(|| ConfigError::Usage("--n-fixed is required for rconj".into()))?;
                let m = a.m.ok_or_else(|| ConfigError::Usage("--m is required for rconj".into()))?;
                formulas::r_conj(p, n, m, i)
            }
        }
        .map_err(fe)?;
        println!("{i}\t{value}");
    }
    Ok(0)
}
