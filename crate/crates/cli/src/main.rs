use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acrwl::corpus::{
    gadget_corpus, gadgetise, make_linear_order, make_perturbed_gadget, make_perturbed_order,
};
use acrwl::experiment::{
    run_directed_counterexample, run_gnn_soundness, run_theorem1_check,
    run_undirected_counterexample, Report,
};
use acrwl::gnn::{gadlin_classifier, lin_classifier, trace, GnnClassifier};
use acrwl::logic::{classify, evaluate, metrics, normalize_c2, parse_formula, Assignment, Formula};
use acrwl::wl::{build_distinguishing_formula, run_wl};
use acrwl::Graph;
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "acrwl", version, about = "Weisfeiler-Leman, counting logic and exact GNN experiments")]
struct Cli {
    /// Write JSON output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    LinearOrder,
    PerturbedOrder,
    Gadget,
    PerturbedGadget,
    Corpus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    First,
    Second,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Lin,
    Gadlin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Directed,
    Undirected,
}

#[derive(clap::Args)]
struct FormulaArg {
    /// Formula text.
    #[arg(long, conflicts_with = "formula_file")]
    formula: Option<String>,
    /// File holding the formula text.
    #[arg(long)]
    formula_file: Option<PathBuf>,
}

impl FormulaArg {
    fn load(&self) -> Result<Formula> {
        let text = match (&self.formula, &self.formula_file) {
            (Some(t), _) => t.clone(),
            (None, Some(p)) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            (None, None) => bail!("one of --formula or --formula-file is required"),
        };
        parse_formula(text.trim()).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph (or the gadget corpus) as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        /// Number of nodes for orders and gadgetised orders.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 1)]
        c: usize,
        /// Which member of a perturbed pair.
        #[arg(long, value_enum, default_value = "first")]
        which: Which,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bounded colour refinement on one or more graphs sharing a table.
    Wl {
        #[arg(long = "graph", required = true)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        rounds: usize,
    },
    /// Run a built-in GNN classifier.
    Gnn {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        graph: PathBuf,
        /// Include per-layer node states.
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate a formula with at most one free variable.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Rewrite a C² formula into its normal form.
    Normalize {
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Build a formula separating two nodes with different colours.
    Distinguish {
        #[arg(long)]
        graph_a: PathBuf,
        #[arg(long)]
        node_a: usize,
        #[arg(long)]
        graph_b: PathBuf,
        #[arg(long)]
        node_b: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        c: usize,
    },
    /// Exhaustive check of the Lin model against the order test.
    Soundness {
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
    },
    /// Counterexample pipeline for the directed or undirected setting.
    Experiment {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        c: usize,
    },
    /// Randomised check of colour equivalence against sampled formulas.
    Theorem1 {
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        c: usize,
        #[arg(long, default_value_t = 50)]
        graph_trials: usize,
        #[arg(long, default_value_t = 200)]
        formula_samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Graph::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn graph_value(g: &Graph) -> Value {
    serde_json::to_value(g.to_json_value()).expect("graph serialises")
}

fn pick((a, b): (Graph, Graph), which: Which) -> Graph {
    match which {
        Which::First => a,
        Which::Second => b,
    }
}

/// Output plus whether every scientific assertion held.
fn run(command: Command) -> Result<(Value, bool)> {
    let report = |r: Report| {
        let ok = r.separated;
        (serde_json::to_value(r).expect("report serialises"), ok)
    };
    Ok(match command {
        Command::Gen { kind, n, ell, c, which, seed } => {
            let v = match kind {
                GenKind::LinearOrder => graph_value(&make_linear_order(n)?),
                GenKind::Gadget => graph_value(&gadgetise(&make_linear_order(n)?)),
                GenKind::PerturbedOrder => graph_value(&pick(make_perturbed_order(ell, c)?, which)),
                GenKind::PerturbedGadget => graph_value(&pick(make_perturbed_gadget(ell, c)?, which)),
                GenKind::Corpus => Value::Array(
                    gadget_corpus(n, 20, seed)
                        .iter()
                        .map(|e| json!({ "name": e.name, "graph": graph_value(&e.graph) }))
                        .collect(),
                ),
            };
            (v, true)
        }
        Command::Wl { graphs, c, rounds } => {
            let gs = graphs.iter().map(|p| read_graph(p)).collect::<Result<Vec<_>>>()?;
            let run = run_wl(&gs, c, rounds);
            let per_graph: Vec<Value> = run
                .graphs
                .iter()
                .map(|a| {
                    let sizes: Vec<_> = (0..=rounds).map(|r| a.partition_sizes(r)).collect();
                    json!({ "colors": a.rounds, "partition_sizes": sizes })
                })
                .collect();
            (json!({ "c": c, "rounds": rounds, "graphs": per_graph }), true)
        }
        Command::Gnn { model, graph, trace: with_trace } => {
            let g = read_graph(&graph)?;
            let model: GnnClassifier = match model {
                Model::Lin => lin_classifier(),
                Model::Gadlin => gadlin_classifier(),
            };
            let states = trace(&g, &model)?;
            let last = states.last().expect("initial states");
            let out: Vec<bool> = last.iter().map(|s| model.cls.apply(s)).collect();
            let mut v = json!({ "model": model.name, "output": out });
            if with_trace {
                let layers: Vec<Value> = states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let name = if i == 0 { "input" } else { model.layers[i - 1].name.as_str() };
                        json!({ "layer": name, "states": s })
                    })
                    .collect();
                v["trace"] = Value::Array(layers);
            }
            (v, true)
        }
        Command::Eval { graph, formula } => {
            let g = read_graph(&graph)?;
            let f = formula.load()?;
            let free = f.free_vars();
            let value = match free.len() {
                0 => json!(evaluate(&g, &f, &Assignment::new())?),
                1 => json!(classify(&g, &f)?),
                n => bail!("eval supports at most one free variable, found {n}"),
            };
            (json!({ "formula": f.to_string(), "free": free, "value": value }), true)
        }
        Command::Normalize { formula } => {
            let f = formula.load()?;
            let nf = normalize_c2(&f)?;
            let disjuncts: Vec<Value> = nf
                .disjuncts
                .iter()
                .map(|d| json!({ "alpha": d.alpha.to_string(), "beta": d.beta.to_string(), "gamma": d.gamma }))
                .collect();
            let m = metrics(&nf.to_formula());
            (
                json!({ "input": f.to_string(), "normal_form": nf.to_string(),
                        "disjuncts": disjuncts, "metrics": m, "input_metrics": metrics(&f) }),
                true,
            )
        }
        Command::Distinguish { graph_a, node_a, graph_b, node_b, ell, c } => {
            let (ga, gb) = (read_graph(&graph_a)?, read_graph(&graph_b)?);
            for (g, v) in [(&ga, node_a), (&gb, node_b)] {
                if v >= g.num_nodes() {
                    bail!("node {v} out of range for a graph with {} nodes", g.num_nodes());
                }
            }
            let f = build_distinguishing_formula(&ga, node_a, &gb, node_b, ell, c)?;
            let v = match f {
                Some(f) => json!({ "formula": f.to_string(), "metrics": metrics(&f) }),
                None => json!({ "formula": null }),
            };
            (v, true)
        }
        Command::Soundness { max_nodes } => report(run_gnn_soundness(max_nodes)?),
        Command::Experiment { mode, ell, c } => report(match mode {
            Mode::Directed => run_directed_counterexample(ell, c)?,
            Mode::Undirected => run_undirected_counterexample(ell, c)?,
        }),
        Command::Theorem1 { ell, c, graph_trials, formula_samples, seed } => {
            report(run_theorem1_check(ell, c, graph_trials, formula_samples, seed)?)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|(value, ok)| {
        let text = serde_json::to_string_pretty(&value)?;
        match &cli.out {
            Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
            None => {
                let mut out = std::io::stdout().lock();
                match writeln!(out, "{text}") {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    r => r.context("writing stdout")?,
                }
            }
        }
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
