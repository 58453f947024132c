//! Experiment configuration: a TOML file with top-level run parameters and
//! one table per scenario family. Keys left out take the defaults of the
//! chosen scenario.

use std::fmt;
use std::path::PathBuf;

use aclab::ansatz::validate_sigma;
use aclab::pde::{Scheme, MAX_REACTION_STEP};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Constants,
    Eta,
    Toda,
    Picard,
    Pde,
    End2end,
    Rescale,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Constants,
        Scenario::Eta,
        Scenario::Toda,
        Scenario::Picard,
        Scenario::Pde,
        Scenario::End2end,
        Scenario::Rescale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Constants => "constants",
            Scenario::Eta => "eta",
            Scenario::Toda => "toda",
            Scenario::Picard => "picard",
            Scenario::Pde => "pde",
            Scenario::End2end => "end2end",
            Scenario::Rescale => "rescale",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Scenarios that need the separation `η` on `[t_start, -1]`.
    fn needs_eta(self) -> bool {
        !matches!(self, Scenario::Constants | Scenario::Rescale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Adaptive quadrature tolerance for β.
    pub beta_quadrature: f64,
    /// Relative tolerance of the separation solve.
    pub eta: f64,
    /// Relative tolerance of the layer-system integrator.
    pub toda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSettings {
    pub h: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Time between recorded snapshots.
    pub snapshot_interval: f64,
    /// Grid extent beyond the outermost initial layer.
    pub margin: f64,
    /// Half-width of the uniform random shift applied to each initial layer.
    pub perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    /// Start times `T0`, tried in increasing order.
    pub candidates: Vec<f64>,
    pub nodes_per_decade: usize,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleSettings {
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Run directory; relative paths resolve against the config file.
    pub output: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    /// Earliest time, the far end of every backward horizon.
    pub t_start: f64,
    /// Latest time.
    pub t_stop: f64,
    pub sigma: f64,
    pub tolerances: Tolerances,
    pub pde: PdeSettings,
    pub picard: PicardSettings,
    pub rescale: RescaleSettings,
}

/// Every problem found in a configuration, one `field: message` per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn single(msg: impl Into<String>) -> ConfigError {
    ConfigError(vec![msg.into()])
}

impl ExperimentConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            output: PathBuf::from(format!("runs/{}", scenario.name())),
            seed: 0,
            k: 2,
            n: 2,
            t_start: -1e5,
            t_stop: -1e2,
            sigma: 1.0,
            tolerances: Tolerances {
                beta_quadrature: 1e-13,
                eta: 1e-12,
                toda: 1e-10,
            },
            pde: PdeSettings {
                h: 0.05,
                dt: 1e-3,
                scheme: Scheme::ImexEuler,
                snapshot_interval: 0.1,
                margin: 20.0,
                perturbation: 0.0,
            },
            picard: PicardSettings {
                candidates: vec![3.0, 10.0, 30.0, 100.0, 300.0, 1000.0],
                nodes_per_decade: 64,
                max_iters: 50,
                tol: 1e-10,
            },
            rescale: RescaleSettings { epsilon: 0.5 },
        };
        match scenario {
            Scenario::Constants | Scenario::Toda => {}
            Scenario::Eta => (c.t_start, c.t_stop) = (-1e6, -1e3),
            Scenario::Picard => (c.t_start, c.t_stop) = (-1e6, -1e3),
            Scenario::Pde => {
                c.k = 1;
                (c.t_start, c.t_stop) = (-50.0, -5.0);
            }
            Scenario::End2end => {
                (c.t_start, c.t_stop) = (-1e4, -1e2);
                c.pde.h = 0.1;
                c.pde.dt = 0.05;
                c.pde.snapshot_interval = 2.0;
            }
            Scenario::Rescale => {
                c.k = 1;
                c.n = 3;
                (c.t_start, c.t_stop) = (-20.0, -10.0);
                c.pde.h = 0.1;
                c.pde.dt = 1e-2;
            }
        }
        c
    }

    /// Parses and validates; nothing runs until this succeeds.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Table =
            toml::from_str(text).map_err(|e| single(e.to_string().trim_end().to_string()))?;
        let scenario = match user.get("scenario") {
            Some(toml::Value::String(s)) => Scenario::parse(s).ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                single(format!(
                    "scenario: unknown scenario `{s}`, expected one of {}",
                    names.join(", ")
                ))
            })?,
            Some(_) => return Err(single("scenario: must be a string")),
            None => return Err(single("scenario: missing")),
        };
        let mut merged =
            toml::Table::try_from(Self::defaults(scenario)).expect("defaults serialize");
        merge(&mut merged, user, "").map_err(single)?;
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| single(e.to_string().trim_end().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks the fields the chosen scenario reads; other sections keep
    /// whatever values they hold.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                errs.push(format!("{field}: {msg}"));
            }
        };
        let s = self.scenario;
        check(
            !self.output.as_os_str().is_empty(),
            "output",
            "must not be empty".into(),
        );
        check(
            self.n >= 2,
            "n",
            format!("dimension must be at least 2, got {}", self.n),
        );
        check(
            (1..=10).contains(&self.k),
            "k",
            format!("layer count must lie in 1..=10, got {}", self.k),
        );
        if s == Scenario::Picard {
            check(
                self.k >= 2,
                "k",
                format!(
                    "the picard scenario needs at least 2 layers, got {}",
                    self.k
                ),
            );
        }
        if s == Scenario::Rescale {
            check(
                self.k == 1,
                "k",
                format!("the rescale scenario runs a single layer, got {}", self.k),
            );
        }
        check(
            self.t_start.is_finite() && self.t_start < self.t_stop,
            "t_start",
            format!(
                "must be finite and earlier than t_stop = {}, got {}",
                self.t_stop, self.t_start
            ),
        );
        check(
            self.t_stop <= -1.0,
            "t_stop",
            format!("must be at most -1, got {}", self.t_stop),
        );
        if s.needs_eta() {
            check(
                self.t_start <= -10.0,
                "t_start",
                format!(
                    "the separation solve needs t_start <= -10, got {}",
                    self.t_start
                ),
            );
        }
        if let Err(e) = validate_sigma(self.sigma) {
            let msg = e.to_string();
            check(
                false,
                "sigma",
                msg.strip_prefix("invalid argument: ")
                    .unwrap_or(&msg)
                    .to_string(),
            );
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("beta_quadrature", tol.beta_quadrature),
            ("eta", tol.eta),
            ("toda", tol.toda),
        ] {
            check(
                v > 0.0 && v < 1e-2,
                &format!("tolerances.{name}"),
                format!("must lie in (0, 1e-2), got {v}"),
            );
        }
        let uses_grid = matches!(s, Scenario::Pde | Scenario::End2end | Scenario::Rescale);
        let pde = &self.pde;
        let dt_ok = pde.dt > 0.0 && pde.dt <= MAX_REACTION_STEP;
        check(
            !uses_grid || pde.h > 0.0 && pde.h <= 1.0,
            "pde.h",
            format!("must lie in (0, 1], got {}", pde.h),
        );
        check(
            !uses_grid || dt_ok,
            "pde.dt",
            format!("must lie in (0, {MAX_REACTION_STEP}], got {}", pde.dt),
        );
        check(
            !uses_grid
                || !dt_ok
                || (pde.snapshot_interval >= pde.dt && pde.snapshot_interval.is_finite()),
            "pde.snapshot_interval",
            format!(
                "must be finite and at least pde.dt = {}, got {}",
                pde.dt, pde.snapshot_interval
            ),
        );
        check(
            !uses_grid || pde.margin >= 5.0 && pde.margin.is_finite(),
            "pde.margin",
            format!("must be at least 5, got {}", pde.margin),
        );
        check(
            !uses_grid || (pde.perturbation >= 0.0 && pde.perturbation <= 1.0),
            "pde.perturbation",
            format!("must lie in [0, 1], got {}", pde.perturbation),
        );
        let p = &self.picard;
        let picard = s == Scenario::Picard;
        check(
            !picard || !p.candidates.is_empty(),
            "picard.candidates",
            "must not be empty".into(),
        );
        check(
            !picard || p.candidates.iter().all(|&c| c >= 1.0 && c < -self.t_start),
            "picard.candidates",
            format!(
                "each must lie in [1, |t_start|) = [1, {}), got {:?}",
                -self.t_start, p.candidates
            ),
        );
        check(
            !picard || p.nodes_per_decade >= 32,
            "picard.nodes_per_decade",
            format!("must be at least 32, got {}", p.nodes_per_decade),
        );
        check(
            !picard || p.max_iters >= 2,
            "picard.max_iters",
            format!("must be at least 2, got {}", p.max_iters),
        );
        check(
            !picard || p.tol > 0.0,
            "picard.tol",
            format!("must be positive, got {}", p.tol),
        );
        let eps = self.rescale.epsilon;
        check(
            s != Scenario::Rescale || (eps > 0.0 && eps <= 1.0),
            "rescale.epsilon",
            format!("must lie in (0, 1], got {eps}"),
        );
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Overlays `user` onto `base`, descending into tables; unknown keys are
/// left for deserialization to reject.
fn merge(base: &mut toml::Table, user: toml::Table, prefix: &str) -> Result<(), String> {
    for (key, value) in user {
        let path = format!("{prefix}{key}");
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => {
                merge(b, u, &format!("{path}."))?
            }
            (Some(toml::Value::Table(_)), _) => return Err(format!("{path}: must be a table")),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    Ok(())
}

/// Commented defaults of every scenario; each block is a valid config file.
pub fn print_defaults() -> String {
    let mut out = String::from(
        "# Defaults per scenario. Copy one block into a file and edit; omitted keys\n\
         # keep these values. Relative `output` paths resolve against the config file.\n",
    );
    for s in Scenario::ALL {
        out.push_str(&format!("\n# ---- scenario: {} ----\n", s.name()));
        out.push_str(&ExperimentConfig::defaults(s).to_toml());
    }
    out
}
