//! One function per command. Each returns its tables plus a JSON summary; the
//! caller writes them and the manifest.

use crate::config::{Command, ExperimentConfig};
use qelab::anis::{self, TransitionWeights};
use qelab::graph::{build_named, geometry_profile, random_labelled_regular, random_regular};
use qelab::io::{fmt_f64, Table};
use qelab::kernel::flow::{flow_average_krylov, flow_bound};
use qelab::kernel::selftest::{operators_selftest, SELFTEST_K};
use qelab::kernel::PathCalculus;
use qelab::nb::nb_spectrum_correspondence;
use qelab::tree::{green_ratio, km_density, spherical_phi};
use qelab::variance::{self, Centering};
use qelab::{BondTable, EigenSystem, Error, GradedKernel, NamedGraph, RegularGraph, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub name: String,
    pub elapsed_s: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub validation: bool,
}

#[derive(Default)]
pub struct Outputs {
    pub tables: Vec<(String, Table)>,
    pub json: Vec<(String, String)>,
    pub summary: Value,
    pub tasks: Vec<TaskReport>,
}

impl Outputs {
    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    /// Runs one task, recording its time and error.
    fn task<T>(&mut self, name: impl Into<String>, f: impl FnOnce() -> Result<T, Error>) -> Option<T> {
        let t = Instant::now();
        let r = f();
        let elapsed_s = t.elapsed().as_secs_f64();
        let (out, error, validation) = match r {
            Ok(v) => (Some(v), None, false),
            Err(e) => (None, Some(e.to_string()), e.is_validation()),
        };
        self.tasks.push(TaskReport { name: name.into(), elapsed_s, error, validation });
        out
    }

    pub fn failed(&self) -> bool {
        self.tasks.iter().any(|t| t.error.is_some())
    }
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

/// Fail-fast checks run before every command.
pub fn preflight(cfg: &ExperimentConfig, cmd: Command) -> Result<Value, Error> {
    let tol = &cfg.tolerances;
    let petersen = || build_named(NamedGraph::Petersen);
    let numeric = |what: &str, v: f64, t: f64| {
        if v <= t {
            Ok(())
        } else {
            Err(Error::Numeric(format!("preflight {what}: {v:e} exceeds {t:e}")))
        }
    };
    Ok(match cmd {
        Command::Generate | Command::Geometry | Command::Spectrum => {
            let g = petersen()?;
            let girth = geometry_profile(&g).girth.unwrap_or(0);
            if girth != 5 || !g.is_connected() {
                return Err(Error::Numeric(format!("preflight graph layer: petersen girth {girth}")));
            }
            json!({ "check": "graph layer", "petersen_girth": girth })
        }
        Command::KmCompare => {
            let mut worst: f64 = 0.0;
            for d in 0..=4 {
                worst = worst.max((green_ratio(cfg.q.max(2), 0.0, d)? - spherical_phi(cfg.q.max(2), 0.0, d)).abs());
            }
            numeric("tree harmonics", worst, 1e-6)?;
            json!({ "check": "tree harmonics", "residual": worst })
        }
        Command::NbSpectrum | Command::NbVariance => {
            let g = petersen()?;
            let r = nb_spectrum_correspondence(&g, &EigenSystem::adjacency(&g)?, 1e-6)?;
            numeric("nb correspondence", r.max_error, tol.nb_pairing)?;
            json!({ "check": "nb correspondence", "residual": r.max_error })
        }
        Command::OperatorsSelftest | Command::Variance | Command::FlowAverage => {
            let pc = PathCalculus::new(&petersen()?, SELFTEST_K + 2)?;
            let r = operators_selftest(&pc, 1)?.max();
            numeric("operator algebra", r, tol.selftest)?;
            json!({ "check": "operator algebra", "residual": r })
        }
        Command::AnisGreen | Command::AnisDensity | Command::AnisCylinders | Command::AnisVariance | Command::TransferDecay => {
            let w = cfg.weights();
            let mut worst: f64 = 0.0;
            for re in [-0.5, 0.0, 0.5] {
                let s = anis::solve_green(&w, C64::new(re, 0.1))?;
                if !s.branch_ok {
                    return Err(Error::Numeric("preflight Green system: branch certificate failed".into()));
                }
                worst = worst.max(s.max_residual());
            }
            numeric("Green system", worst, tol.green_residual)?;
            json!({ "check": "Green system", "residual": worst })
        }
    })
}

struct GraphItem {
    name: String,
    n: usize,
    seed: Option<u64>,
    graph: RegularGraph,
    bonds: BondTable,
}

/// The named graph, or one random graph per `(size, seed)`, in config order.
fn graphs(cfg: &ExperimentConfig, out: &mut Outputs, labelled: bool) -> Vec<GraphItem> {
    if let Some(name) = cfg.named_graph() {
        let g = out.task(format!("build {}", cfg.graph.as_deref().unwrap_or("")), || {
            let g = build_named(name)?;
            if labelled {
                return Err(Error::Unlabelled);
            }
            Ok(g)
        });
        return g
            .map(|g| GraphItem {
                name: cfg.graph.clone().unwrap_or_default(),
                n: g.n(),
                seed: None,
                bonds: g.bonds(),
                graph: g,
            })
            .into_iter()
            .collect();
    }
    let jobs: Vec<(usize, u64)> = cfg.sizes.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
    let built: Vec<_> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let t = Instant::now();
            let r = if labelled {
                random_labelled_regular(n, cfg.q, seed)
            } else {
                random_regular(n, cfg.q + 1, seed).map(|g| {
                    let b = g.bonds();
                    (g, b)
                })
            };
            (n, seed, r, t.elapsed().as_secs_f64())
        })
        .collect();
    let mut items = Vec::new();
    for (n, seed, r, el) in built {
        let name = format!("n{n}_s{seed}");
        let (error, validation) = match &r {
            Ok(_) => (None, false),
            Err(e) => (Some(e.to_string()), e.is_validation()),
        };
        out.tasks.push(TaskReport { name: format!("build {name}"), elapsed_s: el, error, validation });
        if let Ok((graph, bonds)) = r {
            items.push(GraphItem { name, n, seed: Some(seed), graph, bonds });
        }
    }
    items
}

fn seed_str(s: Option<u64>) -> String {
    s.map_or(String::new(), |s| s.to_string())
}

pub fn run(cfg: &ExperimentConfig) -> Outputs {
    let cmd = cfg.command.expect("validated");
    let mut out = Outputs::default();
    let pre = out.task(format!("preflight {}", cmd.name()), || preflight(cfg, cmd));
    let Some(pre) = pre else {
        return out;
    };
    out.summary = json!({ "preflight": pre });
    match cmd {
        Command::Generate => generate(cfg, &mut out),
        Command::Geometry => geometry(cfg, &mut out),
        Command::Spectrum => spectrum(cfg, &mut out),
        Command::KmCompare => km_compare(cfg, &mut out),
        Command::NbSpectrum => nb_spectrum(cfg, &mut out),
        Command::OperatorsSelftest => selftest(cfg, &mut out),
        Command::Variance => variance_cmd(cfg, &mut out),
        Command::NbVariance => nb_variance(cfg, &mut out),
        Command::FlowAverage => flow_average(cfg, &mut out),
        Command::AnisGreen => anis_green(cfg, &mut out),
        Command::AnisDensity => anis_density(cfg, &mut out),
        Command::AnisCylinders => anis_cylinders(cfg, &mut out),
        Command::AnisVariance => anis_variance(cfg, &mut out),
        Command::TransferDecay => transfer_decay(cfg, &mut out),
    }
    out
}

fn set(out: &mut Outputs, key: &str, v: Value) {
    out.summary[key] = v;
}

fn generate(cfg: &ExperimentConfig, out: &mut Outputs) {
    let labelled = cfg.p.is_some();
    let mut t = Table::new(&["name", "n", "seed", "degree", "labelled", "connected", "bipartite"]);
    for g in graphs(cfg, out, labelled) {
        let file = qelab::graph::GraphFile::from_graph(&g.graph, labelled.then_some(&g.bonds));
        match serde_json::to_string(&file) {
            Ok(s) => out.json.push((format!("graph_{}.json", g.name), s)),
            Err(e) => out.tasks.push(TaskReport {
                name: format!("serialise {}", g.name),
                elapsed_s: 0.0,
                error: Some(e.to_string()),
                validation: false,
            }),
        }
        t.push(vec![
            g.name.clone(),
            g.n.to_string(),
            seed_str(g.seed),
            g.graph.degree().to_string(),
            labelled.to_string(),
            g.graph.is_connected().to_string(),
            g.graph.is_bipartite().to_string(),
        ]);
    }
    out.table("graphs.csv", t);
}

fn geometry(cfg: &ExperimentConfig, out: &mut Outputs) {
    let mut t = Table::new(&["name", "n", "seed", "girth", "min_rho", "bad_1", "bad_2", "bad_3", "bad_4"]);
    for g in graphs(cfg, out, false) {
        let p = geometry_profile(&g.graph);
        let mut row = vec![
            g.name.clone(),
            g.n.to_string(),
            seed_str(g.seed),
            p.girth.map_or(String::new(), |x| x.to_string()),
            p.min_rho().to_string(),
        ];
        row.extend((1..=4).map(|r| p.bad_count(r).to_string()));
        t.push(row);
    }
    out.table("geometry.csv", t);
}

fn eig_of(out: &mut Outputs, g: &GraphItem) -> Option<EigenSystem> {
    out.task(format!("eigensolve {}", g.name), || {
        let e = EigenSystem::adjacency(&g.graph)?;
        e.validate(|x| g.graph.apply_adjacency(x), 1e-8)?;
        Ok(e)
    })
}

fn spectrum(cfg: &ExperimentConfig, out: &mut Outputs) {
    let mut t = Table::new(&["name", "index", "lambda"]);
    let mut s = Table::new(&["name", "n", "seed", "beta", "tempered_fraction"]);
    for g in graphs(cfg, out, false) {
        let Some(e) = eig_of(out, &g) else { continue };
        for (j, l) in e.lambdas.iter().enumerate() {
            t.push(vec![g.name.clone(), j.to_string(), f(*l)]);
        }
        let edge = 2.0 * (g.graph.q() as f64).sqrt();
        let temp = e.lambdas.iter().filter(|l| l.abs() <= edge).count() as f64 / e.len() as f64;
        s.push(vec![g.name.clone(), g.n.to_string(), seed_str(g.seed), f(e.beta), f(temp)]);
    }
    out.table("spectrum.csv", t);
    out.table("spectrum_summary.csv", s);
}

fn km_compare(cfg: &ExperimentConfig, out: &mut Outputs) {
    let q = cfg.q;
    let km = km_density(q);
    let edge = km.edge();
    let mut hist = Table::new(&["name", "lo", "hi", "empirical", "kesten_mckay"]);
    let mut s = Table::new(&["name", "n", "seed", "sup_cdf_distance"]);
    let mut worst: f64 = 0.0;
    for g in graphs(cfg, out, false) {
        let Some(l) = out.task(format!("spectrum {}", g.name), || qelab::eigen::adjacency_spectrum(&g.graph)) else {
            continue;
        };
        let nontrivial = &l[..l.len() - 1];
        let h = 2.0 * edge / cfg.bins as f64;
        for b in 0..cfg.bins {
            let lo = -edge + h * b as f64;
            let hi = lo + h;
            let c = nontrivial.iter().filter(|&&x| x >= lo && (x < hi || (b + 1 == cfg.bins && x <= hi))).count();
            hist.push(vec![
                g.name.clone(),
                f(lo),
                f(hi),
                f(c as f64 / l.len() as f64),
                f(km.cdf(hi) - km.cdf(lo)),
            ]);
        }
        let d = variance::km_cdf_distance(&l, q);
        worst = worst.max(d);
        s.push(vec![g.name.clone(), g.n.to_string(), seed_str(g.seed), f(d)]);
    }
    out.table("km_histogram.csv", hist);
    out.table("km_summary.csv", s);
    set(out, "max_sup_cdf_distance", json!(worst));
}

fn nb_spectrum(cfg: &ExperimentConfig, out: &mut Outputs) {
    let mut t = Table::new(&["name", "predicted_re", "predicted_im", "matched_re", "matched_im", "abs_error", "family"]);
    let mut s = Table::new(&["name", "max_error", "q_multiplicity", "minus_q_present", "bipartite"]);
    let tol = cfg.tolerances.nb_pairing;
    for g in graphs(cfg, out, false) {
        let Some(e) = eig_of(out, &g) else { continue };
        let r = out.task(format!("nb correspondence {}", g.name), || {
            let r = nb_spectrum_correspondence(&g.graph, &e, 1e-6)?;
            if r.max_error > tol {
                return Err(Error::Numeric(format!("pairing error {:e} exceeds {tol:e}", r.max_error)));
            }
            Ok(r)
        });
        let Some(r) = r else { continue };
        for row in &r.rows {
            t.push(vec![
                g.name.clone(),
                f(row.predicted_re),
                f(row.predicted_im),
                f(row.matched_re),
                f(row.matched_im),
                f(row.abs_error),
                row.family.as_str().into(),
            ]);
        }
        s.push(vec![
            g.name.clone(),
            f(r.max_error),
            r.q_multiplicity.to_string(),
            r.minus_q_present.to_string(),
            r.bipartite.to_string(),
        ]);
    }
    out.table("nb_pairing.csv", t);
    out.table("nb_summary.csv", s);
}

fn selftest(cfg: &ExperimentConfig, out: &mut Outputs) {
    let mut t = Table::new(&["name", "mm_star", "mm_star_h0", "nabla_star", "l_factored", "fold_commutator", "adjoints"]);
    let tol = cfg.tolerances.selftest;
    for g in graphs(cfg, out, false) {
        let r = out.task(format!("selftest {}", g.name), || {
            let pc = PathCalculus::new(&g.graph, SELFTEST_K + 2)?;
            let r = operators_selftest(&pc, cfg.observable.seed)?;
            if r.max() > tol {
                return Err(Error::Numeric(format!("identity residual {:e} exceeds {tol:e}", r.max())));
            }
            Ok(r)
        });
        if let Some(r) = r {
            t.push(vec![
                g.name.clone(),
                f(r.mm_star),
                f(r.mm_star_h0),
                f(r.nabla_star),
                f(r.l_factored),
                f(r.fold_commutator),
                f(r.adjoints),
            ]);
        }
    }
    out.table("selftest.csv", t);
}

fn decay_tables(out: &mut Outputs, t: &variance::DecayTable) {
    let mut rows = Table::new(&["n", "seed", "girth", "beta", "var", "hsn_sq", "bad_term"]);
    for r in &t.rows {
        rows.push(vec![
            r.n.to_string(),
            r.seed.to_string(),
            r.girth.map_or(String::new(), |g| g.to_string()),
            f(r.beta),
            f(r.var),
            f(r.hsn_sq),
            f(r.bad_term),
        ]);
    }
    let mut med = Table::new(&["n", "median_var"]);
    for (n, v) in &t.medians {
        med.push(vec![n.to_string(), f(*v)]);
    }
    out.table("decay.csv", rows);
    out.table("decay_medians.csv", med);
    set(out, "loglog_slope", json!(t.slope));
    set(out, "strictly_decreasing", json!(t.strictly_decreasing));
}

fn variance_cmd(cfg: &ExperimentConfig, out: &mut Outputs) {
    let centering = if cfg.centering == "spherical" { Centering::Spherical } else { Centering::None };
    let obs = cfg.observable();
    let family = out.task("build family", || variance::build_family(&cfg.sizes, &cfg.seeds, cfg.q));
    let Some(family) = family else { return };
    if let Some(t) = out.task("decay experiment", || variance::decay_experiment(&family, obs, centering, cfg.observable.seed)) {
        decay_tables(out, &t);
    }
}

fn nb_variance(cfg: &ExperimentConfig, out: &mut Outputs) {
    let mut t = Table::new(&["name", "n", "seed", "var", "hsn_sq", "eigenvalues"]);
    let interval = cfg.interval.map(|[a, b]| (a, b));
    for g in graphs(cfg, out, false) {
        let Some(e) = eig_of(out, &g) else { continue };
        let r = out.task(format!("nb variance {}", g.name), || {
            let pc = PathCalculus::new(&g.graph, 1)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.observable.seed ^ g.seed.unwrap_or(0));
            let k = GradedKernel::single(pc.random_real(1, &mut rng).centered());
            variance::nb_variance(&pc, &e, &k, interval)
        });
        if let Some(r) = r {
            t.push(vec![g.name.clone(), g.n.to_string(), seed_str(g.seed), f(r.var), f(r.hsn_sq), r.rows.len().to_string()]);
        }
    }
    out.table("nb_variance.csv", t);
}

fn flow_average(cfg: &ExperimentConfig, out: &mut Outputs) {
    let mut t = Table::new(&["name", "t", "norm_in", "norm_out", "bound", "holds"]);
    for g in graphs(cfg, out, false) {
        let Some(e) = eig_of(out, &g) else { continue };
        let r = out.task(format!("flow average {}", g.name), || {
            let pc = PathCalculus::new(&g.graph, cfg.shell_cap + 1)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.observable.seed);
            let k = GradedKernel::single(pc.random(1, &mut rng).centered());
            let rs = flow_average_krylov(&pc, &k, &cfg.times, cfg.shell_cap, 1e-13)?;
            Ok(cfg
                .times
                .iter()
                .zip(rs)
                .map(|(&time, r)| (time, r.norm_in, r.norm_out, flow_bound(1, e.beta, g.graph.q(), time, r.norm_in)))
                .collect::<Vec<_>>())
        });
        for (time, a, b, c) in r.unwrap_or_default() {
            t.push(vec![g.name.clone(), f(time), f(a), f(b), f(c), (b <= c).to_string()]);
        }
    }
    out.table("flow_average.csv", t);
}

fn anis_green(cfg: &ExperimentConfig, out: &mut Outputs) {
    let w = cfg.weights();
    let labels = w.p().len();
    let mut header = vec!["lambda".to_string(), "eta".to_string()];
    for j in 0..labels {
        header.push(format!("zeta{j}_re"));
        header.push(format!("zeta{j}_im"));
    }
    header.extend(["w_re", "w_im", "residual", "density", "branch_ok", "status"].map(String::from));
    let mut t = Table { header, rows: Vec::new() };
    let grid = cfg.lambda_grid.points();
    let states: Vec<_> = grid
        .par_iter()
        .map(|&l| {
            if cfg.eta > 0.0 {
                anis::solve_green(&w, C64::new(l, cfg.eta))
            } else {
                anis::solve_green_boundary(&w, l).map(|b| b.state)
            }
        })
        .collect();
    let mut json_states = Vec::new();
    for (l, s) in grid.iter().zip(states) {
        if s.is_err() && cfg.eta == 0.0 && boundary_is_singular(&w, *l) {
            let mut row = vec![f(*l), f(cfg.eta)];
            row.extend(std::iter::repeat_n(f(f64::NAN), 2 * labels + 3));
            row.extend([f(0.0), "false".into(), "singular".into()]);
            t.push(row);
            continue;
        }
        let Some(s) = out.task(format!("green lambda={}", f(*l)), || {
            let s = s?;
            if s.max_residual() > cfg.tolerances.green_residual {
                return Err(Error::Numeric(format!("residual {:e}", s.max_residual())));
            }
            Ok(s)
        }) else {
            continue;
        };
        let mut row = vec![f(*l), f(cfg.eta)];
        for z in &s.zeta {
            row.push(f(z.re));
            row.push(f(z.im));
        }
        row.extend([f(s.w.re), f(s.w.im), f(s.max_residual()), f(s.density()), s.branch_ok.to_string(), "ok".into()]);
        t.push(row);
        if let Ok(j) = s.to_json() {
            json_states.push(j);
        }
    }
    out.table("green.csv", t);
    out.json.push(("green_states.json".into(), format!("[{}]", json_states.join(","))));
}

/// `w` blowing up as `eta -> 0`: the diagonal Green function tends to 0 and no
/// finite boundary state exists.
fn boundary_is_singular(w: &TransitionWeights, lambda: f64) -> bool {
    anis::solve_green(w, C64::new(lambda, 1e-5)).is_ok_and(|s| s.w.norm() > 1e3)
}

fn anis_density(cfg: &ExperimentConfig, out: &mut Outputs) {
    let w = cfg.weights();
    let mut t = Table::new(&["lambda", "density", "in_support", "flagged"]);
    for p in anis::anis_density(&w, &cfg.lambda_grid.points()) {
        t.push(vec![f(p.lambda), f(p.density), p.in_support.to_string(), p.flagged.to_string()]);
    }
    out.table("density.csv", t);
    if let Some((mass, conv)) = out.task("density mass", || Ok(anis::density_mass(&w, 1e-8))) {
        set(out, "mass", json!(mass));
        set(out, "mass_converged", json!(conv));
    }
}

fn word(w: &[usize]) -> String {
    w.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(" ")
}

fn anis_cylinders(cfg: &ExperimentConfig, out: &mut Outputs) {
    let w = cfg.weights();
    let mut t = Table::new(&["lambda", "word", "weight"]);
    let mut s = Table::new(&["lambda", "kolmogorov_sum", "normalisation_error", "consistency_error"]);
    for l in cfg.lambda_grid.points() {
        let Ok(b) = anis::solve_green_boundary(&w, l) else { continue };
        if !b.density_positive() {
            continue;
        }
        if let Some(c) = out.task(format!("cylinders lambda={}", f(l)), || anis::harmonic_cylinders(&b.state, cfg.depth)) {
            for (wd, v) in &c.weights {
                t.push(vec![f(l), word(wd), f(*v)]);
            }
            s.push(vec![f(l), f(b.state.kolmogorov_sum()), f(c.normalisation_error), f(c.consistency_error)]);
        }
    }
    out.table("cylinders.csv", t);
    out.table("cylinders_summary.csv", s);
}

fn anis_variance(cfg: &ExperimentConfig, out: &mut Outputs) {
    let w = cfg.weights();
    let obs = match cfg.observable() {
        variance::Observable::Diagonal => anis::AnisObservable::Diagonal,
        variance::Observable::Identity => anis::AnisObservable::Identity,
        _ => anis::AnisObservable::H1,
    };
    let family = out.task("build labelled family", || anis::build_anis_family(&cfg.sizes, &cfg.seeds, &w));
    let Some(family) = family else { return };
    if let Some(t) = out.task("anisotropic variance", || anis::anis_variance_experiment(&family, &w, obs, cfg.observable.seed)) {
        decay_tables(out, &t);
    }
}

fn transfer_decay(cfg: &ExperimentConfig, out: &mut Outputs) {
    let w: TransitionWeights = cfg.weights();
    let mut t = Table::new(&[
        "name",
        "e0",
        "m",
        "norm_s",
        "norm_su_power",
        "norm_su_power_iterative",
        "delta",
        "row_sum_error",
        "adjoint_defect",
        "mean_zero_norm",
        "u_spread",
    ]);
    for g in graphs(cfg, out, true) {
        for e0 in cfg.lambda_grid.points() {
            for &m in &cfg.shells {
                let r = out.task(format!("transfer {} e0={} m={m}", g.name, f(e0)), || {
                    anis::transfer_decay(&g.graph, &g.bonds, &w, e0, m)
                });
                if let Some(r) = r {
                    t.push(vec![
                        g.name.clone(),
                        f(r.e0),
                        r.m.to_string(),
                        f(r.norm_s),
                        f(r.norm_su_power),
                        f(r.norm_su_power_iterative),
                        f(r.delta),
                        f(r.row_sum_error),
                        f(r.adjoint_defect),
                        f(r.mean_zero_norm),
                        f(r.u_spread),
                    ]);
                }
            }
        }
    }
    out.table("transfer_decay.csv", t);
}
