use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    generate_faulty_kb, run_simulated, GeneratorParams, SessionConfig, SessionError, TargetSpec,
};
use crate::logic::KnowledgeBase;
use crate::selection::{FaultModel, Strategy};

/// Fault probability given to the axioms a regime singles out.
pub const ELEVATED_FAULT_PROBABILITY: f64 = 0.25;
/// Fault probability of every axiom under [`Regime::Uniform`].
pub const UNIFORM_FAULT_PROBABILITY: f64 = 0.01;

/// How well the priors match the seeded fault.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Target axioms are believed likely to be faulty.
    Favoring,
    /// Every axiom is equally suspect.
    Uniform,
    /// Non-target axioms are believed likely to be faulty.
    Misleading,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Favoring, Regime::Uniform, Regime::Misleading];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Favoring => "favoring",
            Regime::Uniform => "uniform",
            Regime::Misleading => "misleading",
        }
    }

    /// Per-axiom fault probabilities for `kb` with the given target.
    pub fn overrides(self, kb: &KnowledgeBase, target: &TargetSpec) -> BTreeMap<String, f64> {
        let in_target = |id: &str| target.target_diagnosis.contains(id);
        kb.ontology_ids()
            .filter_map(|id| {
                let p = match self {
                    Regime::Favoring => in_target(id).then_some(ELEVATED_FAULT_PROBABILITY),
                    Regime::Misleading => (!in_target(id)).then_some(ELEVATED_FAULT_PROBABILITY),
                    Regime::Uniform => Some(UNIFORM_FAULT_PROBABILITY),
                };
                p.map(|p| (id.to_string(), p))
            })
            .collect()
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub runs: usize,
    pub generator: GeneratorParams,
    pub strategies: Vec<Strategy>,
    pub regime: Regime,
    pub seed: u64,
    pub sigma: f64,
    pub max_leading: usize,
    pub fault_model: FaultModel,
    /// When false, `wall_ms` is written as 0 so output depends on the seed only.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let session = SessionConfig::default();
        Self {
            runs: 30,
            generator: GeneratorParams::default(),
            strategies: vec![
                Strategy::Entropy,
                Strategy::Split,
                Strategy::Random { seed: 0 },
            ],
            regime: Regime::Uniform,
            seed: 0,
            sigma: session.sigma,
            max_leading: session.max_leading,
            fault_model: session.fault_model,
            timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub run: usize,
    pub strategy: String,
    pub regime: Regime,
    pub queries_asked: usize,
    pub correct: bool,
    pub wall_ms: u64,
}

/// Mean or median of one strategy's rows; `correct` is the success rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub run: String,
    pub strategy: String,
    pub regime: Regime,
    pub queries_asked: f64,
    pub correct: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl BenchReport {
    fn aggregate(rows: &[BenchRow], strategies: &[String], regime: Regime) -> Vec<AggregateRow> {
        let mut out = Vec::new();
        for (label, f) in [("mean", mean as fn(&[f64]) -> f64), ("median", median)] {
            for s in strategies {
                let mine: Vec<&BenchRow> = rows.iter().filter(|r| &r.strategy == s).collect();
                if mine.is_empty() {
                    continue;
                }
                let col =
                    |g: fn(&BenchRow) -> f64| f(&mine.iter().map(|r| g(r)).collect::<Vec<_>>());
                out.push(AggregateRow {
                    run: label.to_string(),
                    strategy: s.clone(),
                    regime,
                    queries_asked: col(|r| r.queries_asked as f64),
                    correct: col(|r| f64::from(u8::from(r.correct))),
                    wall_ms: col(|r| r.wall_ms as f64),
                });
            }
        }
        out
    }

    pub fn mean_queries(&self, strategy: &str) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.run == "mean" && a.strategy == strategy)
            .map(|a| a.queries_asked)
    }

    /// Ratio of mean queries asked by strategy `a` to those asked by `b`.
    pub fn query_ratio(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.mean_queries(a)? / self.mean_queries(b)?)
    }

    pub fn all_correct(&self, strategy: &str) -> bool {
        self.rows
            .iter()
            .filter(|r| r.strategy == strategy)
            .all(|r| r.correct)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = "writing to memory cannot fail";
        w.write_record([
            "run",
            "strategy",
            "regime",
            "queries_asked",
            "correct",
            "wall_ms",
        ])
        .expect(io);
        for r in &self.rows {
            w.write_record([
                r.run.to_string(),
                r.strategy.clone(),
                r.regime.to_string(),
                r.queries_asked.to_string(),
                r.correct.to_string(),
                r.wall_ms.to_string(),
            ])
            .expect(io);
        }
        for a in &self.aggregates {
            w.write_record([
                a.run.clone(),
                a.strategy.clone(),
                a.regime.to_string(),
                format!("{:.3}", a.queries_asked),
                format!("{:.3}", a.correct),
                format!("{:.3}", a.wall_ms),
            ])
            .expect(io);
        }
        String::from_utf8(w.into_inner().expect(io)).expect("csv output is utf-8")
    }
}

/// Runs every strategy on the same generated knowledge base and target for
/// each of `config.runs` seeded runs.
pub fn benchmark(config: &BenchConfig) -> Result<BenchReport, SessionError> {
    if config.runs == 0 {
        return Err(SessionError::InvalidParameter(
            "runs must be at least 1".into(),
        ));
    }
    if config.strategies.is_empty() {
        return Err(SessionError::InvalidParameter("no strategies given".into()));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for run in 1..=config.runs {
        let run_seed: u64 = seeds.random();
        let (kb, target) = generate_faulty_kb(config.generator, run_seed)?;
        let overrides = config.regime.overrides(&kb, &target);
        for &strategy in &config.strategies {
            let strategy = match strategy {
                Strategy::Random { seed } => Strategy::Random {
                    seed: seed.wrapping_add(run_seed),
                },
                other => other,
            };
            let session = SessionConfig {
                strategy,
                fault_model: config.fault_model,
                sigma: config.sigma,
                max_leading: config.max_leading,
                prior_overrides: overrides.clone(),
            };
            let start = Instant::now();
            let result = run_simulated(kb.clone(), &target, session)?;
            let wall_ms = if config.timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            rows.push(BenchRow {
                run,
                strategy: strategy.name().to_string(),
                regime: config.regime,
                queries_asked: result.queries_asked,
                correct: result.correct == Some(true),
                wall_ms,
            });
        }
    }
    let mut names: Vec<String> = Vec::new();
    for s in &config.strategies {
        if !names.iter().any(|n| n == s.name()) {
            names.push(s.name().to_string());
        }
    }
    let aggregates = BenchReport::aggregate(&rows, &names, config.regime);
    Ok(BenchReport { rows, aggregates })
}
