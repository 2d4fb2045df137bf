//! End-to-end experiment pipelines producing JSON reports.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{
    formula_phi_gadlin_fo, formula_phi_lin, half_width, is_labelled_cycle, make_perturbed_gadget,
    make_perturbed_order, nine_cycle_witness, order_node, CorpusError,
};
use crate::gnn::{gadlin_classifier, lin_classifier, run_classifier, GnnClassifier, GnnError};
use crate::graph::{Graph, Node};
use crate::logic::random::FormulaSampler;
use crate::logic::{classify, metrics, EvalError, Formula};
use crate::wl::{run_wl, ColorId, Distinguisher, WlError, WlRun};

pub const SCHEMA: u32 = 1;
/// Largest order accepted by [`run_gnn_soundness`].
pub const MAX_SOUNDNESS_NODES: usize = 5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Wl(#[from] WlError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub version: String,
    pub params: Value,
    /// Conjunction of every check.
    pub separated: bool,
    pub checks: Vec<Check>,
    /// Supplementary output such as partitions and witnesses.
    pub data: Value,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    fn new(command: &str, params: Value) -> Self {
        Report {
            schema: SCHEMA,
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            params,
            separated: true,
            checks: Vec::new(),
            data: json!({}),
            timings_ms: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: Value) {
        self.separated &= pass;
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Stopwatch(Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(Instant::now())
    }

    fn lap(&mut self, report: &mut Report, stage: &str) {
        let ms = self.0.elapsed().as_secs_f64() * 1e3;
        report.timings_ms.insert(stage.into(), ms);
        self.0 = Instant::now();
    }
}

fn positive(name: &str, v: usize) -> Result<(), ExperimentError> {
    if v == 0 {
        return Err(ExperimentError::InvalidParameter(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn all_equal(v: &[bool], want: bool) -> bool {
    v.iter().all(|&b| b == want)
}

/// The split checks shared by both counterexample pipelines.
fn separation_checks(
    report: &mut Report,
    watch: &mut Stopwatch,
    pair: [&Graph; 2],
    model: &GnnClassifier,
    formula: &Formula,
    ell: usize,
    c: usize,
) -> Result<WlRun, ExperimentError> {
    let [g, h] = pair;
    let (ng, nh) = (run_classifier(g, model)?, run_classifier(h, model)?);
    report.check(
        "gnn_separates",
        all_equal(&ng, true) && all_equal(&nh, false),
        json!({ "model": model.name, "accepted_g": ng.iter().filter(|&&b| b).count(),
                "accepted_h": nh.iter().filter(|&&b| b).count(), "nodes": g.num_nodes() }),
    );
    watch.lap(report, "gnn");

    let (fg, fh) = (classify(g, formula)?, classify(h, formula)?);
    report.check(
        "formula_separates",
        all_equal(&fg, true) && all_equal(&fh, false),
        json!({ "accepted_g": fg.iter().filter(|&&b| b).count(),
                "accepted_h": fh.iter().filter(|&&b| b).count() }),
    );
    watch.lap(report, "formula");

    let run = run_wl(&[g.clone(), h.clone()], c, ell);
    let mismatched: Vec<Node> = g
        .nodes()
        .filter(|&v| run.graphs[0].rounds[ell][v] != run.graphs[1].rounds[ell][v])
        .collect();
    report.check(
        "wl_colors_agree",
        mismatched.is_empty(),
        json!({ "pairs": g.num_nodes(), "mismatched": mismatched }),
    );
    watch.lap(report, "wl");

    let mut d = Distinguisher::new(&run);
    let mut found = Vec::new();
    for v in g.nodes() {
        if let Some(f) = d.distinguish(0, v, 1, v, ell)? {
            found.push(json!({ "node": v, "formula": f.to_string() }));
        }
    }
    report.check("no_distinguisher", found.is_empty(), json!({ "found": found }));
    watch.lap(report, "distinguish");
    Ok(run)
}

/// Nodes sharing the colour of `v_0`, as order indices `i` of `v_i`.
fn middle_class(run: &WlRun, n: usize, round: usize) -> Vec<i64> {
    let colors = &run.graphs[0].rounds[round];
    let mid = colors[order_node(n, 0)];
    (-(n as i64)..=n as i64)
        .filter(|&i| colors[order_node(n, i)] == mid)
        .collect()
}

/// Lin versus its one-edge reversal at half-width `n = ℓ·c + 1`.
pub fn run_directed_counterexample(ell: usize, c: usize) -> Result<Report, ExperimentError> {
    positive("ell", ell)?;
    positive("c", c)?;
    let mut report = Report::new("experiment", json!({ "mode": "directed", "ell": ell, "c": c }));
    let mut watch = Stopwatch::start();
    let (g, h) = make_perturbed_order(ell, c)?;
    watch.lap(&mut report, "build");
    let run = separation_checks(&mut report, &mut watch, [&g, &h], &lin_classifier(), &formula_phi_lin(), ell, c)?;

    let n = half_width(ell, c);
    let mut bands = Vec::new();
    let mut bands_ok = true;
    for k in 0..=ell {
        let got = middle_class(&run, n, k);
        let w = n as i64 - (c * k) as i64;
        let want: Vec<i64> = (-w..=w).collect();
        bands_ok &= got == want;
        bands.push(json!({ "round": k, "middle": [-w, w], "observed": [got[0], got[got.len() - 1]] }));
    }
    report.check("middle_bands", bands_ok, json!(bands));
    let partitions: Vec<Value> = (0..=ell)
        .map(|k| {
            json!({ "round": k, "g": run.graphs[0].partition_sizes(k),
                    "h": run.graphs[1].partition_sizes(k) })
        })
        .collect();
    report.data = json!({ "nodes": g.num_nodes(), "partition_sizes": partitions });
    watch.lap(&mut report, "bands");
    Ok(report)
}

/// GadLin versus the re-attached gadget at half-width `n = ℓ·c + 1`.
pub fn run_undirected_counterexample(ell: usize, c: usize) -> Result<Report, ExperimentError> {
    positive("ell", ell)?;
    positive("c", c)?;
    let mut report = Report::new("experiment", json!({ "mode": "undirected", "ell": ell, "c": c }));
    let mut watch = Stopwatch::start();
    let (h, h2) = make_perturbed_gadget(ell, c)?;
    watch.lap(&mut report, "build");
    let run = separation_checks(
        &mut report,
        &mut watch,
        [&h, &h2],
        &gadlin_classifier(),
        &formula_phi_gadlin_fo(),
        ell,
        c,
    )?;

    let order = 2 * half_width(ell, c) + 1;
    let mut per_kind = Vec::new();
    let mut kinds_ok = true;
    for (kind, range) in [("v1", 0..order), ("v2", order..h.num_nodes()), ("v3", order..h.num_nodes())] {
        let parity = if kind == "v3" { 1 } else { 0 };
        let nodes: Vec<Node> = range
            .filter(|&v| kind == "v1" || (v - order) % 2 == parity)
            .collect();
        let agree = nodes
            .iter()
            .all(|&v| run.graphs[0].rounds[ell][v] == run.graphs[1].rounds[ell][v]);
        kinds_ok &= agree;
        per_kind.push(json!({ "kind": kind, "nodes": nodes.len(), "agree": agree }));
    }
    report.check("gadget_colors_agree", kinds_ok, json!(per_kind));

    let witness = nine_cycle_witness(ell, c)?;
    let in_h2 = is_labelled_cycle(&h2, &witness);
    let in_h = is_labelled_cycle(&h, &witness);
    report.check(
        "nine_cycle_witness",
        in_h2 && !in_h,
        json!({ "cycle": witness, "in_h_prime": in_h2, "in_h": in_h }),
    );
    report.data = json!({ "nodes": h.num_nodes(), "nine_cycle": witness });
    watch.lap(&mut report, "witness");
    Ok(report)
}

/// The loop-free digraph on `n` nodes whose edges are the set bits of
/// `mask` over the ordered pairs `(u, v)`, `u ≠ v`, in lexicographic order.
pub fn digraph_from_mask(n: usize, mask: u64) -> Graph {
    let pairs = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)));
    let edges = pairs.enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p);
    Graph::from_edges(n, 0, edges).expect("loop-free pairs")
}

#[derive(Default)]
struct SoundnessTally {
    graphs: u64,
    orders: u64,
    mismatches: Vec<u64>,
    non_constant: u64,
}

fn soundness_range(n: usize, masks: std::ops::Range<u64>, model: &GnnClassifier) -> SoundnessTally {
    let mut t = SoundnessTally::default();
    for mask in masks {
        let g = digraph_from_mask(n, mask);
        let out = run_classifier(&g, model).expect("dimension 0");
        let want = g.is_strict_linear_order();
        t.graphs += 1;
        t.orders += want as u64;
        if !all_equal(&out, out[0]) {
            t.non_constant += 1;
        }
        if !all_equal(&out, want) && t.mismatches.len() < 10 {
            t.mismatches.push(mask);
        }
    }
    t
}

/// Exhaustive comparison of the Lin model against the order check on
/// every loop-free digraph with `1..=max_nodes` nodes.
pub fn run_gnn_soundness(max_nodes: usize) -> Result<Report, ExperimentError> {
    positive("max_nodes", max_nodes)?;
    if max_nodes > MAX_SOUNDNESS_NODES {
        return Err(ExperimentError::InvalidParameter(format!(
            "max_nodes must be at most {MAX_SOUNDNESS_NODES}"
        )));
    }
    let mut report = Report::new("soundness", json!({ "max_nodes": max_nodes }));
    let mut watch = Stopwatch::start();
    let model = lin_classifier();
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()) as u64;
    let mut sizes = Vec::new();
    for n in 1..=max_nodes {
        let total = 1u64 << (n * (n - 1));
        let chunk = total.div_ceil(workers);
        let tallies: Vec<SoundnessTally> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let model = &model;
                    let range = (w * chunk).min(total)..((w + 1) * chunk).min(total);
                    s.spawn(move || soundness_range(n, range, model))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker")).collect()
        });
        let mut t = SoundnessTally::default();
        for part in tallies {
            t.graphs += part.graphs;
            t.orders += part.orders;
            t.non_constant += part.non_constant;
            t.mismatches.extend(part.mismatches);
        }
        t.mismatches.truncate(10);
        report.check(
            &format!("n={n}"),
            t.mismatches.is_empty() && t.non_constant == 0,
            json!({ "graphs": t.graphs, "orders": t.orders,
                    "mismatched_masks": t.mismatches, "non_constant": t.non_constant }),
        );
        sizes.push(json!({ "n": n, "graphs": t.graphs, "orders": t.orders }));
        watch.lap(&mut report, &format!("n={n}"));
    }
    report.data = json!({ "sizes": sizes });
    Ok(report)
}

/// Random digraph with `n` nodes, labels in `{0,1}^d` and edge
/// probability `p`.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, p: f64) -> Graph {
    let mut g = Graph::new(n, d);
    for v in 0..n {
        let label = (0..d).map(|_| rng.gen_bool(0.5)).collect();
        g.set_label(v, label).expect("width d");
        for w in (0..n).filter(|&w| w != v) {
            if rng.gen_bool(p) {
                g.add_edge(v, w).expect("loop-free");
            }
        }
    }
    g
}

/// Seeded check that equal round-`ℓ` colours agree on sampled formulas
/// of depth `ℓ` and rank `c`, and that unequal colours get a verified
/// distinguisher within those bounds.
pub fn run_theorem1_check(
    ell: usize,
    c: usize,
    graph_trials: usize,
    formula_samples: usize,
    seed: u64,
) -> Result<Report, ExperimentError> {
    positive("ell", ell)?;
    positive("c", c)?;
    positive("graph_trials", graph_trials)?;
    positive("formula_samples", formula_samples)?;
    let mut report = Report::new(
        "theorem1",
        json!({ "ell": ell, "c": c, "graph_trials": graph_trials,
                "formula_samples": formula_samples, "seed": seed }),
    );
    let mut watch = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = (0u64, 0u64, 0u64); // distinguished pairs, equal pairs, formulas evaluated
    let mut dist_failures = Vec::new();
    let mut agree_failures = Vec::new();

    for trial in 0..graph_trials {
        let d = rng.gen_range(0..=2);
        let (na, nb) = if trial == 0 {
            (1, 1)
        } else {
            (rng.gen_range(1..=6), rng.gen_range(1..=6))
        };
        let p = rng.gen_range(0.2..0.6);
        let graphs = [random_graph(&mut rng, na, d, p), random_graph(&mut rng, nb, d, p)];
        let run = run_wl(&graphs, c, ell);
        let mut dist = Distinguisher::new(&run);

        let sampler = FormulaSampler::classifier(ell, c as u32, d);
        let formulas: Vec<Formula> = (0..formula_samples).map(|_| sampler.sample(&mut rng)).collect();
        let mut truth: [Vec<Vec<bool>>; 2] = [Vec::new(), Vec::new()];
        for (gi, g) in graphs.iter().enumerate() {
            for f in &formulas {
                truth[gi].push(classify_x(g, f)?);
            }
        }
        stats.2 += formulas.len() as u64;

        let nodes: Vec<(usize, Node)> = (0..2).flat_map(|gi| graphs[gi].nodes().map(move |v| (gi, v))).collect();
        let mut verdicts: HashMap<(ColorId, ColorId), Result<(), String>> = HashMap::new();
        for &(ga, u) in &nodes {
            for &(gb, v) in &nodes {
                let (ca, cb) = (run.color(ga, ell, u)?, run.color(gb, ell, v)?);
                if ca == cb {
                    stats.1 += 1;
                    if let Some(k) = (0..formulas.len()).find(|&k| truth[ga][k][u] != truth[gb][k][v]) {
                        if agree_failures.len() < 10 {
                            agree_failures.push(json!({ "trial": trial, "a": [ga, u], "b": [gb, v],
                                                        "formula": formulas[k].to_string() }));
                        }
                    }
                    continue;
                }
                stats.0 += 1;
                let verdict = match verdicts.get(&(ca, cb)) {
                    Some(r) => r.clone(),
                    None => {
                        let f = dist.distinguish(ga, u, gb, v, ell)?.expect("colours differ");
                        let r = verify_distinguisher(&graphs, &run, &f, ell, c, (ca, cb))?;
                        verdicts.insert((ca, cb), r.clone());
                        r
                    }
                };
                if let Err(why) = verdict {
                    if dist_failures.len() < 10 {
                        dist_failures.push(json!({ "trial": trial, "a": [ga, u], "b": [gb, v], "reason": why }));
                    }
                }
            }
        }
    }
    watch.lap(&mut report, "trials");
    report.check(
        "distinguishers_valid",
        dist_failures.is_empty(),
        json!({ "pairs": stats.0, "failures": dist_failures }),
    );
    report.check(
        "equal_colors_agree",
        agree_failures.is_empty(),
        json!({ "pairs": stats.1, "formulas": stats.2, "failures": agree_failures }),
    );
    Ok(report)
}

/// `f` must be a one-variable C² formula within the bounds that holds on
/// every node coloured `a` and fails on every node coloured `b`.
fn verify_distinguisher(
    graphs: &[Graph; 2],
    run: &WlRun,
    f: &Formula,
    ell: usize,
    c: usize,
    (a, b): (ColorId, ColorId),
) -> Result<Result<(), String>, ExperimentError> {
    let m = metrics(f);
    if !m.is_c2 || m.depth > ell || m.counting_rank as usize > c {
        return Ok(Err(format!("metrics out of bounds: {m:?}")));
    }
    if f.free_vars().iter().any(|v| v != "x") {
        return Ok(Err("free variable other than x".into()));
    }
    for (gi, g) in graphs.iter().enumerate() {
        let truth = classify_x(g, f)?;
        for v in g.nodes() {
            let col = run.color(gi, ell, v)?;
            if (col == a && !truth[v]) || (col == b && truth[v]) {
                return Ok(Err(format!("wrong value at graph {gi} node {v}")));
            }
        }
    }
    Ok(Ok(()))
}

/// Like [`classify`] but tolerates a closed formula.
fn classify_x(g: &Graph, f: &Formula) -> Result<Vec<bool>, ExperimentError> {
    if f.free_vars().is_empty() {
        let closed = f.clone().and(crate::logic::eq("x", "x"));
        return Ok(classify(g, &closed)?);
    }
    Ok(classify(g, f)?)
}
