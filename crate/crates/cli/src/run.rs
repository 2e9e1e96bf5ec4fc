//! Dispatch of a resolved config to the core routines.
//!
//! Replications are spread over a rayon pool and collected in replication
//! order, so every table is independent of the worker count.

use anyhow::{Context, Result};
use forkfluid_core::bounds::{gumbel_report, gumbel_sample, solve_theta_a, solve_theta_s, theta_a_taylor, theta_s_first_order};
use forkfluid_core::dist::Law;
use forkfluid_core::extremal::{report, ExtremalProblem};
use forkfluid_core::fluid::{q_empty_start, q_n3_clock, steady_state, FluidCurve, Regime};
use forkfluid_core::model::simulate_scaled;
use forkfluid_core::rng::StreamKey;
use forkfluid_core::stats::{ci_halfwidth, mean, std_dev};
use forkfluid_core::validate::{
    berry_esseen_distance, max_normal_ratio_sample, moment_estimate, pickands_sample, variance_identity, CountMethod,
    Orientation,
};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{Command, ExperimentConfig};
use crate::output::{Cell, Counters, Table};

pub struct RunOutput {
    pub table: Table,
    pub counters: Counters,
}

pub struct Runner {
    pool: ThreadPool,
    progress: bool,
}

impl Runner {
    pub fn new(workers: usize, progress: bool) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .context("building worker pool")?;
        Ok(Self { pool, progress })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.progress {
            eprintln!("[forkfluid] {}", msg.as_ref());
        }
    }

    fn per_rep<T: Send>(&self, reps: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
        self.pool.install(|| (0..reps as u64).into_par_iter().map(f).collect())
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> Result<RunOutput> {
        let out = match cfg.command() {
            Command::Simulate => self.simulate(cfg, false)?,
            Command::Compare => self.simulate(cfg, true)?,
            Command::Fluid => fluid(cfg)?,
            Command::Extremal => self.extremal(cfg)?,
            Command::Bounds => self.bounds(cfg)?,
            Command::Validate => self.validate(cfg)?,
        };
        Ok(out)
    }

    fn simulate(&self, cfg: &ExperimentConfig, aggregate: bool) -> Result<RunOutput> {
        let ts = cfg.time_points();
        let spec = cfg.init_spec();
        let mut counters = Counters::default();
        let mut table = if aggregate {
            Table::new(vec![
                "t",
                "n_servers",
                "reps",
                "mean_scaled_max",
                "std_scaled_max",
                "ci_halfwidth",
                "fluid_q",
                "n3_clock_q",
                "steady_q",
            ])
        } else {
            Table::new(vec!["n_servers", "replication", "t", "slot", "raw_max_queue", "scaled_max_queue"])
        };
        let (alpha, beta) = (cfg.params.alpha, cfg.params.beta);
        let fluid_q = if aggregate {
            FluidCurve::evaluate(Regime::Full, alpha, beta, spec.fluid_q0(), spec.h_function(), &ts)?.values
        } else {
            Vec::new()
        };
        for &n in &cfg.params.n_servers {
            let params = cfg.system(n);
            self.log(format!("{}: N = {n}, {} replications", cfg.command(), cfg.reps));
            let runs = self.per_rep(cfg.reps, |r| {
                simulate_scaled(&params, &ts, &spec, &StreamKey::new(cfg.seed, r), false)
            });
            let runs = runs.into_iter().collect::<Result<Vec<_>, _>>().with_context(|| format!("N = {n}"))?;
            counters.replications += runs.len() as u64;
            counters.events += runs.iter().map(|r| r.event_count).sum::<u64>();
            if aggregate {
                for (k, &t) in ts.iter().enumerate() {
                    let xs: Vec<f64> = runs.iter().map(|r| r.frames[k].scaled_max_queue).collect();
                    let std = std_dev(&xs);
                    table.push(vec![
                        t.into(),
                        n.into(),
                        xs.len().into(),
                        mean(&xs).into(),
                        std.into(),
                        ci_halfwidth(std, xs.len()).into(),
                        fluid_q[k].1.into(),
                        cfg.overlay.n3_clock.then(|| q_n3_clock(alpha, t)).into(),
                        steady_state(alpha, beta).into(),
                    ]);
                }
            } else {
                for (r, run) in runs.iter().enumerate() {
                    for f in &run.frames {
                        table.push(vec![
                            n.into(),
                            r.into(),
                            f.scaled_time.into(),
                            f.slot.into(),
                            f.raw_max_queue.into(),
                            f.scaled_max_queue.into(),
                        ]);
                    }
                }
            }
        }
        counters.rows = table.rows.len() as u64;
        Ok(RunOutput { table, counters })
    }

    fn extremal(&self, cfg: &ExperimentConfig) -> Result<RunOutput> {
        let laws: Vec<Law> = cfg
            .extremal
            .as_ref()
            .expect("validated extremal section")
            .components
            .iter()
            .map(|&l| Law::from(l))
            .collect();
        let mut table = Table::new(vec![
            "n_points", "reps", "c_star", "mean", "std", "ci_halfwidth", "median", "q05", "q95",
        ]);
        let mut counters = Counters::default();
        for &n in &cfg.params.n_servers {
            self.log(format!("extremal: N = {n}, {} replications", cfg.reps));
            let problem = ExtremalProblem::new(laws.clone(), n)?;
            let samples = self.per_rep(cfg.reps, |r| problem.sample_max(&StreamKey::new(cfg.seed, r)));
            counters.replications += samples.len() as u64;
            let rep = report(&problem, samples);
            let s = rep.summary;
            table.push(vec![
                n.into(),
                s.count.into(),
                rep.c_star.into(),
                s.mean.into(),
                s.std.into(),
                s.ci_halfwidth.into(),
                s.median.into(),
                s.q05.into(),
                s.q95.into(),
            ]);
        }
        counters.rows = table.rows.len() as u64;
        Ok(RunOutput { table, counters })
    }

    fn bounds(&self, cfg: &ExperimentConfig) -> Result<RunOutput> {
        let m = cfg.bounds_m();
        let mut table = Table::new(vec![
            "n_servers",
            "m",
            "theta_a",
            "theta_a_first",
            "theta_a_second",
            "theta_a_rel_err",
            "theta_s",
            "theta_s_first",
            "theta_s_rel_err",
            "exp_mean",
            "gumbel_reps",
            "ks_gumbel",
            "ks_exact",
        ]);
        let mut counters = Counters::default();
        for &n in &cfg.params.n_servers {
            self.log(format!("bounds: N = {n}"));
            let p = cfg.system(n);
            let theta_a: f64 = solve_theta_a(&p, m, 1e-15)?;
            let theta_s: f64 = solve_theta_s(&p, m, 1e-15)?;
            let (a1, a2) = theta_a_taylor(p.alpha, p.beta, m, p.scale_n);
            let s1 = theta_s_first_order(p.alpha, p.beta, m, p.scale_n);
            let samples = self.per_rep(cfg.reps, |r| gumbel_sample(&p, m, &StreamKey::new(cfg.seed, r)));
            counters.replications += samples.len() as u64;
            let g = gumbel_report(&p, m, &samples);
            table.push(vec![
                n.into(),
                m.into(),
                theta_a.into(),
                a1.into(),
                a2.into(),
                ((theta_a - (a1 + a2)).abs() / theta_a).into(),
                theta_s.into(),
                s1.into(),
                ((theta_s - s1).abs() / theta_s).into(),
                g.exp_mean.into(),
                g.reps.into(),
                g.ks_gumbel.into(),
                g.ks_exact.into(),
            ]);
        }
        counters.rows = table.rows.len() as u64;
        Ok(RunOutput { table, counters })
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<RunOutput> {
        let t = cfg.validate_t();
        let mut table = Table::new(vec![
            "n_servers",
            "t",
            "n_slots",
            "mean_term",
            "variance_term",
            "arrival_std",
            "berry_esseen_distance",
            "berry_esseen_scaled",
            "reps",
            "pickands_estimate",
            "pickands_ci_halfwidth",
            "pickands_limit",
            "max_normal_ratio_mean",
        ]);
        let mut counters = Counters::default();
        for &n in &cfg.params.n_servers {
            self.log(format!("validate: N = {n}, {} replications", cfg.reps));
            let p = cfg.system(n);
            let v = variance_identity(&p, t)?;
            let be = berry_esseen_distance(&p, t, Orientation::Plus)?;
            let pick = self.per_rep(cfg.reps, |r| {
                pickands_sample(&p, t, Orientation::Plus, CountMethod::Binomial, &StreamKey::new(cfg.seed, r))
            });
            let pick = pick.into_iter().collect::<Result<Vec<_>, _>>()?;
            let est = moment_estimate(&p, t, &pick);
            let normals = self.per_rep(cfg.reps, |r| max_normal_ratio_sample(n, &StreamKey::new(cfg.seed, r)));
            counters.replications += cfg.reps as u64;
            table.push(vec![
                n.into(),
                t.into(),
                v.n_slots.into(),
                v.mean_term.into(),
                v.variance_term.into(),
                v.arrival_std.into(),
                be.distance.into(),
                be.scaled.into(),
                cfg.reps.into(),
                est.estimate.into(),
                est.ci_halfwidth.into(),
                est.limit.into(),
                mean(&normals).into(),
            ]);
        }
        counters.rows = table.rows.len() as u64;
        Ok(RunOutput { table, counters })
    }
}

/// Analytic curves only; the system-size ladder is not used.
fn fluid(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let ts = cfg.time_points();
    let spec = cfg.init_spec();
    let (alpha, beta) = (cfg.params.alpha, cfg.params.beta);
    let curve = FluidCurve::evaluate(Regime::Full, alpha, beta, spec.fluid_q0(), spec.h_function(), &ts)?;
    let mut table = Table::new(vec!["t", "q0", "fluid_q", "empty_start_q", "n3_clock_q", "steady_q"]);
    for &(t, q) in &curve.values {
        table.push(vec![
            Cell::Real(t),
            spec.fluid_q0().into(),
            q.into(),
            q_empty_start(alpha, beta, t).into(),
            q_n3_clock(alpha, t).into(),
            steady_state(alpha, beta).into(),
        ]);
    }
    let counters = Counters {
        rows: table.rows.len() as u64,
        ..Counters::default()
    };
    Ok(RunOutput { table, counters })
}
