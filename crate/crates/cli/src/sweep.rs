//! Seeded relation sweeps with a deterministic merge.

use std::collections::BTreeMap;

use nlab_core::dilation::gram_root_family;
use nlab_core::matkernel::ComplexMatrix;
use nlab_core::qobjects::random_povm;
use nlab_core::relations::{
    check_correction_condition, format_real, run_trial, saturation_witnesses, RelationFamily, RelationReport,
    TrialDescriptor, RELATION_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_ALPHAS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Deliberately broken inputs mixed into a sweep as negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    /// A correction family whose first slot is shifted by `1e-3 · I`.
    BrokenKraus,
}

impl Injection {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "broken-kraus" => Some(Injection::BrokenKraus),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub relations: Vec<RelationFamily>,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    /// Slack applied to every margin.
    pub tolerance: f64,
    /// Append the saturation cases (relation ids prefixed `witness:`).
    pub witnesses: bool,
    pub inject: Vec<Injection>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            relations: RelationFamily::ALL.to_vec(),
            dims: vec![2, 3],
            trials: 1000,
            seed: 0,
            alphas: DEFAULT_ALPHAS.to_vec(),
            tolerance: RELATION_TOL,
            witnesses: false,
            inject: Vec::new(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.5..1.0).contains(*a)) {
            return bad(format!("alpha {a} outside [0.5, 1)"));
        }
        if self.dims.is_empty() {
            return bad("no dimensions given".into());
        }
        if let Some(d) = self.dims.iter().find(|d| !(2..=6).contains(*d)) {
            return bad(format!("dimension {d} outside 2..=6"));
        }
        if self.relations.is_empty() && self.inject.is_empty() && !self.witnesses {
            return bad("no relations selected".into());
        }
        Ok(())
    }
}

/// Seed of trial `t`.
pub fn trial_seed(base: u64, t: usize) -> u64 {
    base.wrapping_add(t as u64)
}

fn broken_kraus(seed: u64, dim: usize) -> RelationReport {
    let povm = random_povm(dim, 3, seed);
    let family = gram_root_family(&povm).expect("gram-root family of a valid POVM");
    let mut corrections = family.all_corrections().to_vec();
    corrections[0][0] = &corrections[0][0] + &ComplexMatrix::identity(dim).scale(1e-3);
    check_correction_condition(&povm, &corrections).with_seed(seed)
}

/// Runs the sweep. Rows are ordered by relation id, then seed, then
/// dimension, independently of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<RelationReport>, CliError> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> = cfg
        .dims
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, trial_seed(cfg.seed, t))))
        .collect();
    let work = || -> Vec<RelationReport> {
        let per_trial: Vec<Vec<RelationReport>> = jobs
            .par_iter()
            .map(|&(dim, seed)| run_trial(seed, dim, &cfg.alphas, &cfg.relations))
            .collect();
        per_trial.into_iter().flatten().collect()
    };
    let mut rows = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    for inj in &cfg.inject {
        match inj {
            Injection::BrokenKraus => rows.extend(cfg.dims.iter().map(|&d| broken_kraus(cfg.seed, d))),
        }
    }
    if cfg.witnesses {
        let w = saturation_witnesses(cfg.seed)?;
        rows.extend(w.into_iter().map(|mut r| {
            r.relation = format!("witness:{}", r.relation);
            r
        }));
    }
    for r in &mut rows {
        r.judge(cfg.tolerance);
    }
    rows.sort_by(|a, b| {
        a.relation
            .cmp(&b.relation)
            .then(a.trial.seed.cmp(&b.trial.seed))
            .then(a.trial.dim_s.cmp(&b.trial.dim_s))
    });
    Ok(rows)
}

/// Worker count from `NLAB_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("NLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Parse(format!("NLAB_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

pub const CSV_HEADER: [&str; 9] = ["relation", "seed", "dim_s", "dim_a", "alpha", "lhs", "rhs", "margin", "pass"];

fn csv_row(r: &RelationReport) -> [String; 9] {
    let t: &TrialDescriptor = &r.trial;
    [
        r.relation.clone(),
        t.seed.map(|s| s.to_string()).unwrap_or_default(),
        t.dim_s.to_string(),
        t.dim_a.to_string(),
        t.alpha.map(format_real).unwrap_or_default(),
        format_real(r.lhs),
        format_real(r.rhs),
        format_real(r.margin),
        r.pass.to_string(),
    ]
}

pub fn to_csv(rows: &[RelationReport]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(csv_row(r)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelationSummary {
    pub rows: usize,
    pub failures: usize,
    pub min_margin: f64,
    pub failing_seeds: Vec<(u64, usize)>,
}

pub fn summarize(rows: &[RelationReport]) -> BTreeMap<String, RelationSummary> {
    let mut out: BTreeMap<String, RelationSummary> = BTreeMap::new();
    for r in rows {
        let s = out.entry(r.relation.clone()).or_insert(RelationSummary {
            min_margin: f64::INFINITY,
            ..Default::default()
        });
        s.rows += 1;
        s.min_margin = s.min_margin.min(r.margin);
        if !r.pass {
            s.failures += 1;
            let key = (r.trial.seed.unwrap_or(0), r.trial.dim_s);
            if !s.failing_seeds.contains(&key) {
                s.failing_seeds.push(key);
            }
        }
    }
    out
}

/// One summary line plus one line per relation with failures.
pub fn summary_text(rows: &[RelationReport]) -> String {
    let sums = summarize(rows);
    let failures: usize = sums.values().map(|s| s.failures).sum();
    let mins: Vec<String> = sums
        .iter()
        .map(|(k, s)| format!("{k}={}", format_real(s.min_margin)))
        .collect();
    let mut text = format!(
        "summary: {} rows, {} failures; min margin: {}\n",
        rows.len(),
        failures,
        mins.join(" ")
    );
    for (k, s) in &sums {
        if s.failures > 0 {
            let seeds: Vec<String> = s.failing_seeds.iter().map(|(seed, d)| format!("{seed}@dim{d}")).collect();
            text.push_str(&format!("failing {k}: seeds {}\n", seeds.join(", ")));
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            trials: 4,
            ..Default::default()
        }
    }

    #[test]
    fn config_bounds() {
        assert!(small().validate().is_ok());
        for bad in [
            SweepConfig { trials: 0, ..small() },
            SweepConfig { tolerance: 0.0, ..small() },
            SweepConfig { alphas: vec![1.0], ..small() },
            SweepConfig { alphas: vec![0.4], ..small() },
            SweepConfig { dims: vec![1], ..small() },
        ] {
            assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SweepConfig = serde_json::from_str(r#"{"trials": 3, "relations": ["gentle", "maassen-uffink"]}"#).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.dims, vec![2, 3]);
        assert_eq!(cfg.relations, vec![RelationFamily::Gentle, RelationFamily::MaassenUffink]);
        assert!(serde_json::from_str::<SweepConfig>(r#"{"trails": 3}"#).is_err());
    }

    #[test]
    fn sweep_rows_are_sorted_and_pass() {
        let rows = run_sweep(&small()).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{}", summary_text(&rows));
        assert!(rows.windows(2).all(|w| w[0].relation <= w[1].relation));
        let csv = to_csv(&rows).unwrap();
        assert!(csv.starts_with("relation,seed,dim_s,dim_a,alpha,lhs,rhs,margin,pass\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn injection_fails_with_named_relation() {
        let cfg = SweepConfig {
            relations: vec![],
            inject: vec![Injection::BrokenKraus],
            ..small()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| !r.pass && r.relation == "correction-condition"));
        let text = summary_text(&rows);
        assert!(text.contains("failing correction-condition: seeds 0@dim2, 0@dim3"), "{text}");
    }

    #[test]
    fn witnesses_saturate() {
        let cfg = SweepConfig {
            relations: vec![],
            witnesses: true,
            ..small()
        };
        for r in run_sweep(&cfg).unwrap() {
            assert!(r.relation.starts_with("witness:"));
            assert!(r.margin.abs() <= 1e-9, "{r:?}");
        }
    }
}
