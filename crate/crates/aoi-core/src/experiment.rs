//! Declarative experiment runner: parse a TOML config, run seeded scheduler
//! comparisons, and write deterministic CSV results.
//!
//! Schedulers are compared under common random numbers: replication r of
//! every scheduler uses seed `seed_base + r`, so all of them face identical
//! arrival sequences. Re-running a config overwrites the output files with
//! identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::arrival::ArrivalProcess;
use crate::error::Error;
use crate::mdp::{solve_joint, JointPolicy};
use crate::sim::{run, Scheduler, SimReport};
use crate::Result;

/// Experiment description, usually read from a TOML file.
///
/// ```toml
/// [users]
/// p = [0.5, 0.5]
///
/// [run]
/// schedulers = ["whittle", "optimal"]
/// horizon = 100000
/// replications = 20
/// seed_base = 1
///
/// [sweep]          # optional: override every user's p per sweep point
/// p = [0.2, 0.4, 0.6, 0.8]
///
/// [mdp]            # optional: joint-solver settings for "optimal"
/// x_max = 40
/// tolerance = 1e-8
///
/// [output]         # optional: where `aoi run` writes the CSV files
/// dir = "results"
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub users: UsersSection,
    pub run: RunSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub mdp: MdpSection,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersSection {
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub schedulers: Vec<String>,
    pub horizon: u64,
    pub replications: u32,
    pub seed_base: u64,
    #[serde(default)]
    pub initial_ages: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSection {
    #[serde(default = "default_joint_x_max")]
    pub x_max: u64,
    #[serde(default = "default_joint_tolerance")]
    pub tolerance: f64,
}

fn default_joint_x_max() -> u64 {
    40
}

fn default_joint_tolerance() -> f64 {
    1e-8
}

impl Default for MdpSection {
    fn default() -> Self {
        MdpSection {
            x_max: default_joint_x_max(),
            tolerance: default_joint_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.users.p.is_empty() {
            return Err(Error::Config("at least one user is required".into()));
        }
        for &p in &self.users.p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidProbability { value: p });
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.p.is_empty() {
                return Err(Error::Config("sweep.p must not be empty".into()));
            }
            for &p in &sweep.p {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidProbability { value: p });
                }
            }
        }
        if self.run.replications < 1 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.run.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.run.schedulers.is_empty() {
            return Err(Error::Config("at least one scheduler is required".into()));
        }
        let kinds = self.scheduler_kinds()?;
        // a joint solve for too many users must be refused before any run
        if kinds.contains(&SchedulerKind::Optimal) && self.users.p.len() > 3 {
            return Err(Error::Config(format!(
                "the optimal scheduler needs a joint solve, which supports at most 3 users (got {})",
                self.users.p.len()
            )));
        }
        Ok(())
    }

    fn scheduler_kinds(&self) -> Result<Vec<SchedulerKind>> {
        self.run
            .schedulers
            .iter()
            .map(|name| SchedulerKind::parse(name))
            .collect()
    }

    /// The parameter points to run: one per sweep value (all users set to
    /// it), or the configured user vector if no sweep is given.
    fn points(&self) -> Vec<Vec<f64>> {
        match &self.sweep {
            Some(sweep) => sweep
                .p
                .iter()
                .map(|&v| vec![v; self.users.p.len()])
                .collect(),
            None => vec![self.users.p.clone()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SchedulerKind {
    Whittle,
    MaxAge,
    RoundRobin,
    Random,
    Optimal,
}

impl SchedulerKind {
    fn parse(name: &str) -> Result<Self> {
        match name {
            "whittle" => Ok(SchedulerKind::Whittle),
            "max_age" => Ok(SchedulerKind::MaxAge),
            "round_robin" => Ok(SchedulerKind::RoundRobin),
            "random" => Ok(SchedulerKind::Random),
            "optimal" | "optimal_lookup" => Ok(SchedulerKind::Optimal),
            other => Err(Error::Config(format!("unknown scheduler \"{other}\""))),
        }
    }

    fn label(self) -> &'static str {
        match self {
            SchedulerKind::Whittle => "whittle",
            SchedulerKind::MaxAge => "max_age",
            SchedulerKind::RoundRobin => "round_robin",
            SchedulerKind::Random => "random",
            SchedulerKind::Optimal => "optimal",
        }
    }

    fn as_scheduler<'a>(self, joint: Option<&'a JointPolicy>) -> Scheduler<'a> {
        match self {
            SchedulerKind::Whittle => Scheduler::Whittle,
            SchedulerKind::MaxAge => Scheduler::MaxAge,
            SchedulerKind::RoundRobin => Scheduler::RoundRobin,
            SchedulerKind::Random => Scheduler::Random,
            SchedulerKind::Optimal => {
                Scheduler::OptimalLookup(joint.expect("joint policy solved for optimal runs"))
            }
        }
    }
}

/// One row of the results table: one (point, scheduler, replication) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub arrival_p: Vec<f64>,
    pub scheduler: &'static str,
    pub replication: u32,
    pub seed: u64,
    pub time_avg_total_age: f64,
    pub per_user_avg_age: Vec<f64>,
    pub per_user_update_count: Vec<u64>,
}

/// Per-(point, scheduler) aggregate over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub arrival_p: Vec<f64>,
    pub scheduler: &'static str,
    pub replications: u32,
    pub mean_age: f64,
    pub std_error: f64,
}

/// Everything an experiment produces, with the CSV renderings attached.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<SummaryRow>,
    num_users: usize,
}

fn p_label(ps: &[f64]) -> String {
    let parts: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
    parts.join(";")
}

/// Runs every (point, scheduler, replication) combination of the config.
///
/// When the optimal scheduler is requested the joint model is solved once
/// per parameter point and its table shared by all replications.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let kinds = config.scheduler_kinds()?;
    let n = config.users.p.len();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();

    for point in config.points() {
        let joint = if kinds.contains(&SchedulerKind::Optimal) {
            Some(solve_joint(
                point.clone(),
                config.mdp.x_max,
                config.mdp.tolerance,
            )?)
        } else {
            None
        };

        for &kind in &kinds {
            let mut ages = Vec::with_capacity(config.run.replications as usize);
            for rep in 0..config.run.replications {
                let seed = config.run.seed_base + u64::from(rep);
                let process = ArrivalProcess::new(point.clone(), seed)?;
                let report: SimReport = run(
                    &process,
                    kind.as_scheduler(joint.as_ref()),
                    config.run.horizon,
                    config.run.initial_ages.as_deref(),
                )?;
                ages.push(report.time_avg_total_age);
                rows.push(ResultRow {
                    arrival_p: point.clone(),
                    scheduler: kind.label(),
                    replication: rep,
                    seed,
                    time_avg_total_age: report.time_avg_total_age,
                    per_user_avg_age: report.per_user_avg_age,
                    per_user_update_count: report.per_user_update_count,
                });
            }
            let reps = ages.len() as f64;
            let mean = ages.iter().sum::<f64>() / reps;
            let std_error = if ages.len() > 1 {
                let var = ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (reps - 1.0);
                (var / reps).sqrt()
            } else {
                0.0
            };
            summaries.push(SummaryRow {
                arrival_p: point.clone(),
                scheduler: kind.label(),
                replications: config.run.replications,
                mean_age: mean,
                std_error,
            });
        }
    }

    Ok(ExperimentOutput {
        rows,
        summaries,
        num_users: n,
    })
}

impl ExperimentOutput {
    /// The results table: one row per (point, scheduler, replication).
    pub fn results_csv(&self) -> String {
        let mut out = String::from("arrival_p,scheduler,replication,seed,time_avg_total_age");
        for i in 1..=self.num_users {
            let _ = write!(out, ",avg_age_u{i}");
        }
        for i in 1..=self.num_users {
            let _ = write!(out, ",updates_u{i}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                p_label(&row.arrival_p),
                row.scheduler,
                row.replication,
                row.seed,
                row.time_avg_total_age
            );
            for v in &row.per_user_avg_age {
                let _ = write!(out, ",{v}");
            }
            for v in &row.per_user_update_count {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("arrival_p,scheduler,replications,mean_age,std_error\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p_label(&s.arrival_p),
                s.scheduler,
                s.replications,
                s.mean_age,
                s.std_error
            );
        }
        out
    }

    /// Plot-friendly table: one row per symmetric parameter point, one mean
    /// column per scheduler. Points with heterogeneous arrival rates have no
    /// single x value and are skipped.
    pub fn plot_csv(&self) -> String {
        let mut schedulers: Vec<&'static str> = Vec::new();
        for s in &self.summaries {
            if !schedulers.contains(&s.scheduler) {
                schedulers.push(s.scheduler);
            }
        }
        let mut out = String::from("p");
        for s in &schedulers {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');

        let mut points: Vec<&[f64]> = Vec::new();
        for s in &self.summaries {
            if !points.contains(&s.arrival_p.as_slice()) {
                points.push(&s.arrival_p);
            }
        }
        for point in points {
            if point.windows(2).any(|w| w[0] != w[1]) {
                continue;
            }
            let _ = write!(out, "{}", point[0]);
            for sched in &schedulers {
                let mean = self
                    .summaries
                    .iter()
                    .find(|s| s.scheduler == *sched && s.arrival_p == point)
                    .map(|s| s.mean_age)
                    .expect("every (point, scheduler) pair was run");
                let _ = write!(out, ",{mean}");
            }
            out.push('\n');
        }
        out
    }

    /// Writes `results.csv`, `summary.csv`, and `plot_data.csv` into `dir`,
    /// truncating any previous contents.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.csv"), self.results_csv())?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        fs::write(dir.join("plot_data.csv"), self.plot_csv())?;
        Ok(())
    }
}
