//! Registry of parameterized reproductions. Every experiment returns an
//! [`ExperimentReport`] whose `pass` is the conjunction of its checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::linalg::{self, Rng};
use crate::sets::Window;

mod geometric;
mod linear;
mod pairs;
mod strict;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub description: String,
    pub expected: Value,
    pub observed: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentContext {
    pub seed: u64,
    /// CSV artifacts are written here when set.
    pub output_dir: Option<PathBuf>,
    /// Record `runtime_ms`; off for byte-reproducible output.
    pub timestamp: bool,
}

/// Raw `key=value` parameters. Numbers are parsed on use; lists are
/// comma-separated.
pub type ParamMap = BTreeMap<String, String>;

pub struct Entry {
    pub name: &'static str,
    pub summary: &'static str,
    run: fn(&mut Run) -> Result<()>,
}

pub fn registry() -> Vec<Entry> {
    vec![
        Entry {
            name: "rotation_counterexample",
            summary: "skew rotations: the displacement range collapses to the origin",
            run: pairs::rotation_counterexample,
        },
        Entry {
            name: "rotation_line",
            summary: "rotation with a line: the displacement range is a line",
            run: pairs::rotation_line,
        },
        Entry {
            name: "two_balls",
            summary: "two disjoint balls: density, boundary verdicts, displacement vector",
            run: pairs::two_balls,
        },
        Entry {
            name: "angle_v",
            summary: "parallel planes in R^4: cosine of twice the angle",
            run: linear::angle_v,
        },
        Entry {
            name: "two_subspaces",
            summary: "random subspace pairs: displacement range equals (U+V)∩(U⊥+V⊥)",
            run: linear::two_subspaces,
        },
        Entry {
            name: "self_duality",
            summary: "DR operator of the primal and Attouch–Théra dual pairs agree",
            run: geometric::self_duality,
        },
        Entry {
            name: "main_theorem",
            summary: "displacement range is nearly equal to D∩R for 3* pairs",
            run: geometric::main_theorem,
        },
        Entry {
            name: "range_of_T",
            summary: "range of T is nearly equal to (dom A − ran B)∩(ran A + dom B)",
            run: geometric::range_of_t,
        },
        Entry {
            name: "linear_transport",
            summary: "linear pairs: displacement range transported from ran(A+B)",
            run: linear::linear_transport,
        },
        Entry {
            name: "l2_truncation",
            summary: "truncated sequence-space subspaces: minimal preimage norm grows like N",
            run: linear::l2_truncation,
        },
        Entry {
            name: "brezis_haraux_gap",
            summary: "ran(A+A) is strictly smaller than ran A + ran A",
            run: strict::brezis_haraux_gap,
        },
        Entry {
            name: "norm_symmetry",
            summary: "swapping the pair preserves the norm of the displacement vector",
            run: pairs::norm_symmetry,
        },
        Entry {
            name: "subdifferential_ranges",
            summary: "ball indicator with half squared norm: displacement is x/2",
            run: geometric::subdifferential_ranges,
        },
    ]
}

pub fn experiment_names() -> Vec<&'static str> {
    registry().iter().map(|e| e.name).collect()
}

pub fn run_experiment(name: &str, params: &ParamMap, ctx: &ExperimentContext) -> Result<ExperimentReport> {
    let entry = registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownExperiment(name.to_string()))?;
    let start = Instant::now();
    let mut run = Run {
        name,
        ctx,
        params: Params::new(params.clone()),
        checks: Vec::new(),
        artifacts: Vec::new(),
        notes: Vec::new(),
    };
    (entry.run)(&mut run)?;
    run.params.finish()?;
    let pass = run.checks.iter().all(|c| c.pass);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION.into(),
        name: name.into(),
        params: run.params.resolved,
        checks: run.checks,
        artifacts: run.artifacts,
        notes: run.notes,
        runtime_ms: ctx.timestamp.then(|| start.elapsed().as_millis() as u64),
        pass,
    })
}

pub struct Params {
    raw: ParamMap,
    resolved: BTreeMap<String, Value>,
}

impl Params {
    fn new(raw: ParamMap) -> Self {
        Params {
            raw,
            resolved: BTreeMap::new(),
        }
    }

    fn bad(key: &str, reason: impl Into<String>) -> Error {
        Error::BadParam {
            key: key.into(),
            reason: reason.into(),
        }
    }

    fn parse_f64(key: &str, s: &str) -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| Self::bad(key, format!("`{s}` is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Self::bad(key, "must be finite"))
        }
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.raw.get(key) {
            Some(s) => Self::parse_f64(key, s)?,
            None => default,
        };
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| Self::bad(key, format!("`{s}` is not a nonnegative integer")))?,
            None => default,
        };
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .split(',')
                .map(|t| Self::parse_f64(key, t))
                .collect::<Result<Vec<_>>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(Self::bad(key, "empty list"));
        }
        self.resolved.insert(key.into(), v.clone().into());
        Ok(v)
    }

    pub fn usize_list(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let v = match self.raw.get(key) {
            Some(s) => s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Self::bad(key, format!("`{t}` is not a nonnegative integer")))
                })
                .collect::<Result<Vec<usize>>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(Self::bad(key, "empty list"));
        }
        self.resolved.insert(key.into(), v.clone().into());
        Ok(v)
    }

    /// A fixed-length vector parameter.
    pub fn vector(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = self.f64_list(key, default)?;
        if v.len() != default.len() {
            return Err(Self::bad(key, format!("expected {} entries, got {}", default.len(), v.len())));
        }
        Ok(v)
    }

    pub fn require(&self, key: &str, ok: bool, reason: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Self::bad(key, reason))
        }
    }

    fn finish(&self) -> Result<()> {
        match self.raw.keys().find(|k| !self.resolved.contains_key(*k)) {
            Some(k) => Err(Self::bad(k, "unknown parameter for this experiment")),
            None => Ok(()),
        }
    }
}

/// State of a running experiment.
pub struct Run<'a> {
    name: &'a str,
    ctx: &'a ExperimentContext,
    pub params: Params,
    checks: Vec<Check>,
    artifacts: Vec<String>,
    notes: Vec<String>,
}

impl Run<'_> {
    /// Rejects unknown parameter keys; called once all parameters are read so
    /// that typos fail before any work is done.
    pub fn params_done(&self) -> Result<()> {
        self.params.finish()
    }

    pub fn check(
        &mut self,
        description: impl Into<String>,
        expected: impl Serialize,
        observed: impl Serialize,
        tolerance: Option<f64>,
        pass: bool,
    ) {
        self.checks.push(Check {
            description: description.into(),
            expected: serde_json::to_value(expected).unwrap_or(Value::Null),
            observed: serde_json::to_value(observed).unwrap_or(Value::Null),
            tolerance,
            pass,
        });
    }

    /// `observed ≤ tol`.
    pub fn check_small(&mut self, description: impl Into<String>, observed: f64, tol: f64) {
        self.check(description, format!("≤ {tol:e}"), observed, Some(tol), observed <= tol);
    }

    pub fn check_eq<T: Serialize + PartialEq>(&mut self, description: impl Into<String>, expected: T, observed: T) {
        let pass = expected == observed;
        self.check(description, expected, observed, None, pass);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Independent stream per `salt`, all derived from the context seed.
    pub fn rng(&self, salt: u64) -> Rng {
        linalg::seeded_rng(self.ctx.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }

    pub fn seed(&self) -> u64 {
        self.ctx.seed
    }

    /// Calls `write` with `output_dir/name/file` when an output directory is set.
    pub fn artifact(&mut self, file: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if let Some(dir) = &self.ctx.output_dir {
            let path = dir.join(self.name).join(file);
            write(&path)?;
            self.artifacts.push(path.display().to_string());
        }
        Ok(())
    }
}

/// `count` uniform inputs from the cube `[−half, half]^dim`.
pub(crate) fn uniform_inputs(dim: usize, count: usize, half: f64, rng: &mut Rng) -> PointCloud {
    let w = Window::cube(dim, half);
    PointCloud::from_points(dim, (0..count).map(|_| w.sample(rng)).collect())
}

pub(crate) fn to_vec(v: &crate::linalg::Vector) -> Vec<f64> {
    v.iter().copied().collect()
}
