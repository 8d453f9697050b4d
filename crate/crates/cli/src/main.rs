use clap::Parser;
use qelab_cli::commands::{self, Outputs};
use qelab_cli::config::{Command, ExperimentConfig, Invalid};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Numerical experiments on regular graphs and their anisotropic walks.
///
/// Options take the form `--key=value`; list values are comma separated.
#[derive(Parser, Debug)]
#[command(name = "qelab", version)]
struct Cli {
    command: Command,
    /// JSON experiment config; flags below override its fields.
    #[arg(long, require_equals = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, require_equals = true)]
    jobs: Option<usize>,
    #[arg(long, require_equals = true)]
    q: Option<usize>,
    #[arg(long, require_equals = true, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, require_equals = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, require_equals = true)]
    graph: Option<String>,
    #[arg(long, require_equals = true, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, require_equals = true)]
    observable: Option<String>,
    #[arg(long, require_equals = true)]
    observable_seed: Option<u64>,
    #[arg(long, require_equals = true)]
    centering: Option<String>,
    /// `start,stop,count`.
    #[arg(long, require_equals = true, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long, require_equals = true)]
    eta: Option<f64>,
    #[arg(long, require_equals = true)]
    depth: Option<usize>,
    #[arg(long, require_equals = true, value_delimiter = ',')]
    shells: Option<Vec<usize>>,
    #[arg(long, require_equals = true, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long, require_equals = true)]
    shell_cap: Option<usize>,
    /// `lo,hi`.
    #[arg(long, require_equals = true, value_delimiter = ',')]
    interval: Option<Vec<f64>>,
    #[arg(long, require_equals = true)]
    bins: Option<usize>,
    #[arg(long, require_equals = true)]
    output_dir: Option<PathBuf>,
}

impl Cli {
    fn merge(self) -> Result<ExperimentConfig, Invalid> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        c.command = Some(self.command);
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        over!(q, sizes, seeds, eta, depth, shells, times, shell_cap, bins, output_dir, centering);
        if self.graph.is_some() {
            c.graph = self.graph;
        }
        if self.p.is_some() {
            c.p = self.p;
        }
        if let Some(o) = self.observable {
            c.observable.kind = o;
        }
        if let Some(s) = self.observable_seed {
            c.observable.seed = s;
        }
        if let Some(g) = self.lambda_grid {
            if g.len() != 3 || g[2] < 1.0 || g[2].fract() != 0.0 {
                return Err(Invalid { field: "lambda_grid".into(), reason: "count must be a positive integer".into() });
            }
            c.lambda_grid = qelab_cli::config::GridSpec { start: g[0], stop: g[1], count: g[2] as usize };
        }
        if let Some(i) = self.interval {
            if i.len() != 2 {
                return Err(Invalid { field: "interval".into(), reason: "expected lo,hi".into() });
            }
            c.interval = Some([i[0], i[1]]);
        }
        c.validate()?;
        Ok(c)
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &Outputs, elapsed_s: f64) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for (name, t) in &out.tables {
        t.write(&dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
    }
    for (name, s) in &out.json {
        std::fs::write(dir.join(name), s).map_err(|e| format!("{name}: {e}"))?;
    }
    let canonical = serde_json::to_string(cfg).map_err(|e| e.to_string())?;
    let hash = Sha256::digest(canonical.as_bytes());
    let manifest = json!({
        "command": cfg.command.map(|c| c.name()),
        "config": cfg,
        "config_hash": hash.iter().map(|b| format!("{b:02x}")).collect::<String>(),
        "seeds": { "graph": cfg.seeds, "observable": cfg.observable.seed },
        "git_describe": git_describe(),
        "versions": { "qelab": env!("CARGO_PKG_VERSION"), "threads": rayon::current_num_threads() },
        "elapsed_s": elapsed_s,
        "summary": out.summary,
        "tasks": out.tasks,
        "files": out.tables.iter().map(|t| &t.0).chain(out.json.iter().map(|j| &j.0)).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("manifest.json"), text).map_err(|e| format!("manifest.json: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: invalid `jobs`: must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    let cfg = match cli.merge() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let t = Instant::now();
    let out = commands::run(&cfg);
    let elapsed = t.elapsed().as_secs_f64();
    if let Err(e) = write_outputs(&cfg.output_dir, &cfg, &out, elapsed) {
        eprintln!("error: writing outputs: {e}");
        return ExitCode::from(3);
    }
    let failed: Vec<_> = out.tasks.iter().filter(|t| t.error.is_some()).collect();
    if failed.is_empty() {
        eprintln!("{}: {} tasks ok in {elapsed:.2}s -> {}", cfg.command.unwrap().name(), out.tasks.len(), cfg.output_dir.display());
        return ExitCode::SUCCESS;
    }
    for t in &failed {
        eprintln!("task failed: {}: {}", t.name, t.error.as_deref().unwrap_or(""));
    }
    if failed.iter().all(|t| t.validation) {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}
