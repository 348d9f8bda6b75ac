//! Batch experiments over a parameter grid, with per-trial statistics
//! suitable for CSV/JSON emission.

use serde::{Deserialize, Serialize};

use super::{
    exact_expansion, sampled_expansion, spectral_expansion_lower_bound, AnalysisError,
    ExpansionMethod,
};
use crate::graph::{
    gen_circulant, gen_complete, gen_complete_bipartite, gen_random_regular, Graph,
};
use crate::protocol::{fresh_tape, run_raes, RaesOutcome, RaesParams};

/// Graph family of a parameter grid. `n` is always the total node count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Complete,
    /// K_{m,m} with m = n/2.
    Bipartite,
    Circulant { offsets: Vec<usize> },
    Regular { delta: u32 },
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::Bipartite => "bipartite",
            Family::Circulant { .. } => "circulant",
            Family::Regular { .. } => "regular",
        }
    }

    pub fn instantiate(&self, n: usize, seed: u64) -> Result<Graph, AnalysisError> {
        let g = match self {
            Family::Complete => gen_complete(n)?,
            Family::Bipartite => {
                if n % 2 != 0 {
                    return Err(AnalysisError::InvalidSet(format!(
                        "bipartite family needs even n, got {n}"
                    )));
                }
                gen_complete_bipartite(n / 2)?
            }
            Family::Circulant { offsets } => gen_circulant(n, offsets)?,
            Family::Regular { delta } => gen_random_regular(n, *delta, seed)?,
        };
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum AnalysisMode {
    None,
    Exact,
    Sampled { trials: u32 },
    Spectral,
}

/// One reproducible batch: a family, a grid of n values, protocol
/// parameters, a trial count, and the base seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub family: Family,
    pub ns: Vec<usize>,
    pub d: u32,
    pub cd: u32,
    /// Round budget; when absent a budget comfortably above the
    /// logarithmic termination bound is used.
    pub max_rounds: Option<u32>,
    pub trials: u32,
    pub seed_base: u64,
    #[serde(flatten)]
    pub analysis: AnalysisMode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.ns.is_empty() || self.trials == 0 {
            return Err(AnalysisError::InvalidSet(
                "experiment needs at least one n and one trial".into(),
            ));
        }
        RaesParams::new(self.d, self.cd, self.max_rounds.unwrap_or(1))
            .map_err(AnalysisError::Protocol)?;
        Ok(())
    }

    fn round_budget(&self, n: usize, delta: u32) -> u32 {
        if let Some(t) = self.max_rounds {
            return t;
        }
        let alpha = delta as f64 / n as f64;
        let c = self.cd as f64 / self.d as f64;
        let bound = termination_round_bound(n, alpha, c, 3.0);
        if bound.is_finite() && bound >= 1.0 {
            (2.0 * bound).ceil() as u32 + 4
        } else {
            64
        }
    }
}

/// β·log(n)/log(αc), the logarithmic termination bound; infinite when
/// αc <= 1.
pub fn termination_round_bound(n: usize, alpha: f64, c: f64, beta: f64) -> f64 {
    let ac = alpha * c;
    if ac <= 1.0 {
        return f64::INFINITY;
    }
    beta * (n as f64).ln() / ac.ln()
}

/// αc/(αc−1), the constant relating expected total requests to n·d.
pub fn work_bound_factor(alpha: f64, c: f64) -> f64 {
    let ac = alpha * c;
    ac / (ac - 1.0)
}

/// One trial's outcome. Optional fields are empty when the trial did not
/// terminate within its round budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsRow {
    pub family: String,
    pub n: usize,
    pub delta: u32,
    pub d: u32,
    /// c as a reduced fraction string, e.g. "4" or "7/2".
    pub c: String,
    pub seed: u64,
    pub rounds: Option<u32>,
    pub total_requests: Option<u64>,
    pub min_deg: Option<u64>,
    pub max_deg: Option<u64>,
    pub expansion: Option<f64>,
    pub expansion_method: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
}

impl StatsTable {
    pub const CSV_HEADER: &'static str =
        "family,n,delta,d,c,seed,rounds,total_requests,min_deg,max_deg,expansion,expansion_method";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let opt_u32 = |x: Option<u32>| x.map(|v| v.to_string()).unwrap_or_default();
            let opt_u64 = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
            let expansion = r
                .expansion
                .map(|v| format!("{v:.9}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.family,
                r.n,
                r.delta,
                r.d,
                r.c,
                r.seed,
                opt_u32(r.rounds),
                opt_u64(r.total_requests),
                opt_u64(r.min_deg),
                opt_u64(r.max_deg),
                expansion,
                r.expansion_method,
            ));
        }
        out
    }
}

/// Runs the full grid. Trials are independent; with the `parallel` feature
/// they run concurrently and are sorted by (n, seed) before emission.
pub fn run_experiment(config: &ExperimentConfig) -> Result<StatsTable, AnalysisError> {
    config.validate()?;
    let jobs = job_list(config);

    #[cfg(feature = "parallel")]
    let rows: Vec<StatsRow> = {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(n, seed)| run_trial(config, n, seed))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<StatsRow> = jobs.iter().map(|&(n, seed)| run_trial(config, n, seed)).collect();

    let mut rows = rows;
    rows.sort_by_key(|r| (r.n, r.seed));
    Ok(StatsTable { rows })
}

/// Sequential fallback of [`run_experiment`].
pub fn run_experiment_serial(config: &ExperimentConfig) -> Result<StatsTable, AnalysisError> {
    config.validate()?;
    let mut rows: Vec<StatsRow> = job_list(config)
        .iter()
        .map(|&(n, seed)| run_trial(config, n, seed))
        .collect();
    rows.sort_by_key(|r| (r.n, r.seed));
    Ok(StatsTable { rows })
}

fn job_list(config: &ExperimentConfig) -> Vec<(usize, u64)> {
    let mut jobs = Vec::with_capacity(config.ns.len() * config.trials as usize);
    for &n in &config.ns {
        for trial in 0..config.trials {
            jobs.push((n, config.seed_base + trial as u64));
        }
    }
    jobs
}

fn run_trial(config: &ExperimentConfig, n: usize, seed: u64) -> StatsRow {
    let c_string = {
        let params = RaesParams::new(config.d, config.cd, 1).unwrap();
        let (num, den) = params.c_fraction();
        if den == 1 {
            num.to_string()
        } else {
            format!("{num}/{den}")
        }
    };
    let mut row = StatsRow {
        family: config.family.label().to_string(),
        n,
        delta: 0,
        d: config.d,
        c: c_string,
        seed,
        rounds: None,
        total_requests: None,
        min_deg: None,
        max_deg: None,
        expansion: None,
        expansion_method: "none".into(),
    };

    let g = match config.family.instantiate(n, seed) {
        Ok(g) => g,
        Err(_) => return row,
    };
    row.delta = g.delta();
    let params = match RaesParams::new(config.d, config.cd, config.round_budget(n, g.delta())) {
        Ok(p) => p,
        Err(_) => return row,
    };
    let tape = fresh_tape(&g, &params, seed);
    let outcome = match run_raes(&g, &params, &tape) {
        Ok(o) => o,
        Err(_) => return row,
    };
    let (h, stats) = match outcome {
        RaesOutcome::Terminated {
            subgraph, stats, ..
        } => (subgraph, stats),
        RaesOutcome::NotTerminated { .. } => return row,
    };

    row.rounds = Some(stats.rounds_used);
    row.total_requests = Some(stats.total_requests);
    let degs = h.degrees();
    row.min_deg = degs.iter().copied().min();
    row.max_deg = degs.iter().copied().max();

    let report = match config.analysis {
        AnalysisMode::None => None,
        AnalysisMode::Exact => exact_expansion(&h).ok(),
        AnalysisMode::Sampled { trials } => sampled_expansion(&h, trials, seed).ok(),
        AnalysisMode::Spectral => spectral_expansion_lower_bound(&h).ok(),
    };
    if let Some(rep) = report {
        row.expansion = Some(rep.epsilon_star);
        row.expansion_method = match rep.method {
            ExpansionMethod::Exact => "exact".into(),
            ExpansionMethod::Sampled => "sampled".into(),
            ExpansionMethod::SpectralLowerBound => "spectral-lower-bound".into(),
        };
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_capacity_one_round() {
        // cd >= (n-1)d: no rejection possible, every trial takes 1 round.
        let config = ExperimentConfig {
            family: Family::Complete,
            ns: vec![6],
            d: 1,
            cd: 5,
            max_rounds: Some(4),
            trials: 10,
            seed_base: 0,
            analysis: AnalysisMode::None,
        };
        let table = run_experiment(&config).unwrap();
        assert_eq!(table.rows.len(), 10);
        assert!(table.rows.iter().all(|r| r.rounds == Some(1)));
    }

    #[test]
    fn termination_within_logarithmic_bound() {
        let config = ExperimentConfig {
            family: Family::Complete,
            ns: vec![64],
            d: 4,
            cd: 16,
            max_rounds: None,
            trials: 25,
            seed_base: 100,
            analysis: AnalysisMode::None,
        };
        let table = run_experiment(&config).unwrap();
        let alpha = 63.0 / 64.0;
        let bound = termination_round_bound(64, alpha, 4.0, 3.0);
        for row in &table.rows {
            let rounds = row.rounds.expect("terminates");
            assert!((rounds as f64) <= bound, "rounds={rounds} bound={bound}");
        }
    }

    #[test]
    fn work_bound_on_mean_requests() {
        let config = ExperimentConfig {
            family: Family::Complete,
            ns: vec![256],
            d: 4,
            cd: 16,
            max_rounds: None,
            trials: 25,
            seed_base: 7,
            analysis: AnalysisMode::None,
        };
        let table = run_experiment(&config).unwrap();
        let alpha = 255.0 / 256.0;
        let factor = work_bound_factor(alpha, 4.0);
        let nd = 256.0 * 4.0;
        let mean = table
            .rows
            .iter()
            .map(|r| r.total_requests.unwrap() as f64)
            .sum::<f64>()
            / table.rows.len() as f64;
        assert!(mean >= nd);
        assert!(mean <= factor * nd, "mean={mean} bound={}", factor * nd);
    }

    #[test]
    fn serial_matches_parallel() {
        let config = ExperimentConfig {
            family: Family::Regular { delta: 6 },
            ns: vec![16],
            d: 2,
            cd: 6,
            max_rounds: Some(32),
            trials: 5,
            seed_base: 3,
            analysis: AnalysisMode::Exact,
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment_serial(&config).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn csv_shape() {
        let config = ExperimentConfig {
            family: Family::Complete,
            ns: vec![8],
            d: 1,
            cd: 2,
            max_rounds: Some(16),
            trials: 2,
            seed_base: 0,
            analysis: AnalysisMode::Exact,
        };
        let table = run_experiment(&config).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), StatsTable::CSV_HEADER);
        let first = lines.next().unwrap();
        assert!(first.starts_with("complete,8,7,1,2,0,"));
        assert!(first.ends_with(",exact"));
    }
}
