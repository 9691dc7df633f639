use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use dstau_cli::{merge, run, RunConfig};

#[derive(Parser)]
#[command(name = "dstau", version, about = "Drinfeld-Sokolov hierarchies, tau-structures and Miura-type maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the flows D_{a,k}(u) for the requested labels.
    Derive(Options),
    /// Print the tau-structure Ω for k up to the largest requested k.
    Omega(Options),
    /// Run every identity check; exit status 0 iff all residuals vanish.
    Verify(Options),
    /// Formal solution in the times and its two-point functions.
    Solve(Options),
    /// Basic resolvents of the canonical Lax operator.
    Resolvent(Options),
    /// Canonical form of the generic Lax operator in the chosen gauge.
    GaugeFix(Options),
    /// Difference-ring embedding and discrete Miura round trips.
    Discrete(Options),
}

impl Command {
    fn split(&self) -> (&'static str, &Options) {
        match self {
            Command::Derive(o) => ("derive", o),
            Command::Omega(o) => ("omega", o),
            Command::Verify(o) => ("verify", o),
            Command::Solve(o) => ("solve", o),
            Command::Resolvent(o) => ("resolvent", o),
            Command::GaugeFix(o) => ("gauge-fix", o),
            Command::Discrete(o) => ("discrete", o),
        }
    }
}

#[derive(Args, Clone, Debug)]
struct Options {
    /// TOML file with the same keys as the flags (underscored).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Affine type: A1^(1), A2^(1), A2^(2).
    #[arg(long = "type")]
    kind: Option<String>,
    #[arg(long)]
    vertex: Option<usize>,
    /// Flow labels, e.g. 1:0,1:1.
    #[arg(long)]
    flows: Option<String>,
    #[arg(long)]
    eps_order: Option<usize>,
    #[arg(long)]
    jet_depth: Option<u32>,
    /// λ-power window, e.g. -20,20.
    #[arg(long, allow_hyphen_values = true)]
    lambda_window: Option<String>,
    /// Principal depth of the resolvents.
    #[arg(long)]
    depth: Option<i64>,
    #[arg(long)]
    t_degree: Option<usize>,
    #[arg(long)]
    gauge: Option<String>,
    /// gBGW constants C_1,C_2,...
    #[arg(long, allow_hyphen_values = true)]
    bgw: Option<String>,
    /// Initial data separated by ';', e.g. 3/(1-x)^2.
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<String>,
    /// json or text.
    #[arg(long)]
    format: Option<String>,
    /// Skip the generic-q gauge-invariance check in verify.
    #[arg(long)]
    no_gauge_check: bool,
    /// Discrete Miura component, ε-powers separated by '|'; repeat per component.
    #[arg(long, allow_hyphen_values = true)]
    miura: Vec<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    shift_window: Option<i64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn split_list(s: &str, sep: char) -> Vec<String> {
    s.split(sep).map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

fn overrides(o: &Options) -> Result<BTreeMap<&'static str, Value>, String> {
    let mut m = BTreeMap::new();
    if let Some(v) = &o.kind {
        m.insert("type", json!(v));
    }
    if let Some(v) = o.vertex {
        m.insert("vertex", json!(v));
    }
    if let Some(v) = &o.flows {
        m.insert("flows", json!(v));
    }
    if let Some(v) = o.eps_order {
        m.insert("eps_order", json!(v));
    }
    if let Some(v) = o.jet_depth {
        m.insert("jet_depth", json!(v));
    }
    if let Some(v) = &o.lambda_window {
        let parts: Vec<i64> = split_list(v, ',')
            .iter()
            .map(|t| t.parse::<i64>().map_err(|_| format!("bad lambda window {v}")))
            .collect::<Result<_, _>>()?;
        if parts.len() != 2 {
            return Err(format!("lambda window {v} is not min,max"));
        }
        m.insert("lambda_window", json!([parts[0], parts[1]]));
    }
    if let Some(v) = o.depth {
        m.insert("depth", json!(v));
    }
    if let Some(v) = o.t_degree {
        m.insert("t_degree", json!(v));
    }
    if let Some(v) = &o.gauge {
        m.insert("gauge", json!(v));
    }
    if let Some(v) = &o.bgw {
        m.insert("bgw", json!(split_list(v, ',')));
    }
    if let Some(v) = &o.initial {
        m.insert("initial", json!(split_list(v, ';')));
    }
    if let Some(v) = &o.format {
        m.insert("format", json!(v));
    }
    if o.no_gauge_check {
        m.insert("gauge_check", json!(false));
    }
    if !o.miura.is_empty() {
        let comps: Vec<Vec<String>> = o.miura.iter().map(|c| c.split('|').map(|t| t.trim().to_string()).collect()).collect();
        m.insert("miura", json!(comps));
    }
    if let Some(v) = o.samples {
        m.insert("samples", json!(v));
    }
    if let Some(v) = o.shift_window {
        m.insert("shift_window", json!(v));
    }
    if let Some(v) = o.seed {
        m.insert("seed", json!(v));
    }
    Ok(m)
}

fn config(o: &Options) -> Result<RunConfig, String> {
    let base = match &o.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    merge(base, overrides(o)?).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts) = cli.command.split();
    let cfg = match config(opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(name, &cfg) {
        Ok(out) => {
            print!("{}", out.render(cfg.format));
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
