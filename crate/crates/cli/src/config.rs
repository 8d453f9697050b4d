use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Generate,
    Geometry,
    Spectrum,
    KmCompare,
    NbSpectrum,
    OperatorsSelftest,
    Variance,
    NbVariance,
    FlowAverage,
    AnisGreen,
    AnisDensity,
    AnisCylinders,
    AnisVariance,
    TransferDecay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Geometry => "geometry",
            Command::Spectrum => "spectrum",
            Command::KmCompare => "km-compare",
            Command::NbSpectrum => "nb-spectrum",
            Command::OperatorsSelftest => "operators-selftest",
            Command::Variance => "variance",
            Command::NbVariance => "nb-variance",
            Command::FlowAverage => "flow-average",
            Command::AnisGreen => "anis-green",
            Command::AnisDensity => "anis-density",
            Command::AnisCylinders => "anis-cylinders",
            Command::AnisVariance => "anis-variance",
            Command::TransferDecay => "transfer-decay",
        }
    }

    pub fn is_anisotropic(self) -> bool {
        matches!(
            self,
            Command::AnisGreen | Command::AnisDensity | Command::AnisCylinders | Command::AnisVariance | Command::TransferDecay
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSpec {
    /// `diagonal`, `identity`, `psi-squared`, `random-h1`, `random-h2`, `adjacency`.
    pub kind: String,
    pub seed: u64,
}

impl Default for ObservableSpec {
    fn default() -> Self {
        ObservableSpec { kind: "diagonal".into(), seed: 42 }
    }
}

/// `count` equispaced points on `[start, stop]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { start: -0.95, stop: 0.95, count: 39 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / m;
                self.start * (1.0 - s) + self.stop * s
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub selftest: f64,
    pub nb_pairing: f64,
    pub green_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { selftest: 1e-12, nb_pairing: 1e-8, green_residual: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub q: usize,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Named graph (`petersen`, `heawood`, `complete(k)`, `cycle(n)`) used instead of random ones.
    pub graph: Option<String>,
    pub p: Option<Vec<f64>>,
    pub observable: ObservableSpec,
    /// `none` or `spherical`.
    pub centering: String,
    pub lambda_grid: GridSpec,
    /// Imaginary part for `anis-green`; 0 means boundary values.
    pub eta: f64,
    pub depth: usize,
    pub shells: Vec<usize>,
    pub times: Vec<f64>,
    pub shell_cap: usize,
    pub interval: Option<[f64; 2]>,
    pub bins: usize,
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            q: 2,
            sizes: vec![100, 200, 400],
            seeds: vec![1],
            graph: None,
            p: None,
            observable: ObservableSpec::default(),
            centering: "none".into(),
            lambda_grid: GridSpec::default(),
            eta: 0.0,
            depth: 3,
            shells: vec![1, 2],
            times: vec![10.0, 20.0, 40.0],
            shell_cap: 3,
            interval: None,
            bins: 40,
            output_dir: PathBuf::from("out"),
            tolerances: Tolerances::default(),
        }
    }
}

/// A configuration error naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub field: String,
    pub reason: String,
}

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.reason)
    }
}

fn bad(field: &str, reason: impl Into<String>) -> Invalid {
    Invalid { field: field.into(), reason: reason.into() }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Invalid> {
        let s = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&s).map_err(|e| bad("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), Invalid> {
        if self.command.is_none() {
            return Err(bad("command", "missing"));
        }
        if self.q < 1 {
            return Err(bad("q", "must be >= 1"));
        }
        if self.sizes.is_empty() {
            return Err(bad("sizes", "must be nonempty"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("sizes", "must be strictly ascending"));
        }
        if self.sizes.iter().any(|&n| n <= self.q + 1) {
            return Err(bad("sizes", format!("every size must exceed the degree {}", self.q + 1)));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "must be nonempty"));
        }
        if let Some(p) = &self.p {
            qelab::anis::TransitionWeights::new(p.clone()).map_err(|e| bad("p", e.to_string()))?;
            if p.len() != self.q + 1 {
                return Err(bad("p", format!("needs q + 1 = {} weights, got {}", self.q + 1, p.len())));
            }
        }
        if let Some(g) = &self.graph {
            g.parse::<qelab::NamedGraph>().map_err(|e| bad("graph", e.to_string()))?;
        }
        self.observable
            .kind
            .parse::<qelab::variance::Observable>()
            .map_err(|e| bad("observable.kind", e.to_string()))?;
        if !matches!(self.centering.as_str(), "none" | "spherical") {
            return Err(bad("centering", "must be `none` or `spherical`"));
        }
        let g = &self.lambda_grid;
        if g.count == 0 || !(g.start <= g.stop) || !g.start.is_finite() || !g.stop.is_finite() {
            return Err(bad("lambda_grid", "needs count >= 1 and finite start <= stop"));
        }
        if !(self.eta >= 0.0) {
            return Err(bad("eta", "must be >= 0"));
        }
        if self.depth == 0 {
            return Err(bad("depth", "must be >= 1"));
        }
        if self.shells.is_empty() || self.shells.contains(&0) {
            return Err(bad("shells", "must be nonempty and >= 1"));
        }
        if self.times.is_empty() || self.times.iter().any(|&t| !(t > 0.0)) {
            return Err(bad("times", "must be nonempty and positive"));
        }
        if let Some([a, b]) = self.interval {
            if !(a < b) {
                return Err(bad("interval", "needs lo < hi"));
            }
        }
        if self.bins == 0 {
            return Err(bad("bins", "must be >= 1"));
        }
        let t = &self.tolerances;
        if [t.selftest, t.nb_pairing, t.green_residual].iter().any(|&x| !(x > 0.0)) {
            return Err(bad("tolerances", "must be positive"));
        }
        Ok(())
    }

    pub fn weights(&self) -> qelab::anis::TransitionWeights {
        match &self.p {
            Some(p) => qelab::anis::TransitionWeights::new(p.clone()).expect("validated"),
            None => qelab::anis::TransitionWeights::isotropic(self.q),
        }
    }

    pub fn observable(&self) -> qelab::variance::Observable {
        self.observable.kind.parse().expect("validated")
    }

    pub fn named_graph(&self) -> Option<qelab::NamedGraph> {
        self.graph.as_ref().map(|g| g.parse().expect("validated"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig { command: Some(Command::Variance), ..Default::default() }
    }

    #[test]
    fn defaults_validate() {
        assert_eq!(base().validate(), Ok(()));
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = base();
        c.p = Some(vec![0.5, 0.3, 0.3]);
        assert_eq!(c.validate().unwrap_err().field, "p");
        let mut c = base();
        c.sizes = vec![200, 100];
        assert_eq!(c.validate().unwrap_err().field, "sizes");
        let mut c = base();
        c.seeds.clear();
        assert_eq!(c.validate().unwrap_err().field, "seeds");
        let mut c = base();
        c.observable.kind = "nope".into();
        assert_eq!(c.validate().unwrap_err().field, "observable.kind");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"q": 2, "colour": 1}"#).is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"q": 3, "sizes": [10, 20]}"#).unwrap();
        assert_eq!((c.q, c.seeds.clone()), (3, vec![1]));
    }

    #[test]
    fn grid_points() {
        let g = GridSpec { start: -1.0, stop: 1.0, count: 5 };
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
