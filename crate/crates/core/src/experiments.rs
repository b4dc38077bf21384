//! Monte Carlo experiment suites over seeded replicas.
//!
//! Every replica derives its own seed from the master seed and its index, and
//! splits it into independent streams for the instruction stacks and the
//! initial configuration. Results are collected in replica order, so the
//! output never depends on how many threads ran the replicas.
//!
//! Because stacks and configurations are counter-based, two experiments that
//! share a master seed are coupled: replica `r` sees the same stacks and the
//! same site uniforms regardless of the window size or density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::{
    sample_bernoulli_config, sample_uniform_k_particle_config, ConfigError, Interval,
};
use crate::extended::{ExtendedError, Problem};
use crate::instructions::HashedStacks;
use crate::rng::{derive_seed, mix64, stream, unit_f64};
use crate::stabilize::{
    stabilize_with, Policy, StabilizeError, StabilizeOptions, Stabilizer, DEFAULT_TOPPLE_CAP,
};
use crate::stats::{linear_fit, median, MeanEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Extended(#[from] ExtendedError),
    #[error("only {usable} usable survival points (need at least {needed})")]
    InsufficientPoints { usable: usize, needed: usize },
    #[error("stabilization aborted after {injections} injections: {source}")]
    Aborted {
        injections: u64,
        #[source]
        source: StabilizeError,
    },
}

fn check_lambda(lambda: f64) -> Result<(), ExperimentError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(ExperimentError::InvalidParameter(format!(
            "sleep rate must be positive, got {lambda}"
        )))
    }
}

fn check_density(name: &str, rho: f64) -> Result<(), ExperimentError> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(ExperimentError::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {rho}"
        )))
    }
}

/// Outcome of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub replica: u64,
    pub seed: u64,
    /// Odometer at the observed site (0 unless stated otherwise).
    pub m0: u64,
    pub topples: u64,
    pub overflow: bool,
}

/// Runs `f` for every replica index and returns results in index order.
pub fn run_replicas<T, F>(replicas: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..replicas).into_par_iter().map(f).collect()
}

/// Stacks and configuration seeds of replica `r`.
pub(crate) fn replica_streams(master: u64, r: u64) -> (u64, u64, u64) {
    let rs = derive_seed(master, r);
    (
        rs,
        derive_seed(rs, stream::STACKS),
        derive_seed(rs, stream::CONFIG),
    )
}

/// `m^(N)(0)`: Bernoulli(`rho`) on `[-N, N]` stabilized on `[-N+1, N-1]`.
pub fn window_odometer_replica(
    lambda: f64,
    rho: f64,
    half_window: i64,
    master: u64,
    replica: u64,
    opts: &StabilizeOptions,
) -> Result<ReplicaRecord, ConfigError> {
    let (seed, stack_seed, config_seed) = replica_streams(master, replica);
    let stacks = HashedStacks::new(stack_seed, lambda);
    let config =
        sample_bernoulli_config(rho, Interval::new(-half_window, half_window), config_seed)?;
    let set = Interval::centered(half_window);
    Ok(match stabilize_with(&config, set, &stacks, opts) {
        Ok(r) => ReplicaRecord {
            replica,
            seed,
            m0: r.odometer.get(0),
            topples: r.topple_count,
            overflow: false,
        },
        Err(e) => {
            let p = e.partial().expect("options never have a zero cap");
            ReplicaRecord {
                replica,
                seed,
                m0: p.odometer.get(0),
                topples: p.topple_count,
                overflow: true,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub lambda: f64,
    pub rho: f64,
    pub half_window: i64,
    pub n_grid: Vec<u64>,
    pub replicas: u64,
    pub seed: u64,
    pub cap: u64,
}

impl TailParams {
    pub fn new(
        lambda: f64,
        rho: f64,
        half_window: i64,
        n_grid: Vec<u64>,
        replicas: u64,
        seed: u64,
    ) -> Self {
        Self {
            lambda,
            rho,
            half_window,
            n_grid,
            replicas,
            seed,
            cap: DEFAULT_TOPPLE_CAP,
        }
    }
}

/// Empirical survival function of `m^(N)(0)` on a grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub lambda: f64,
    pub rho: f64,
    pub half_window: i64,
    pub n_grid: Vec<u64>,
    /// `P(m(0) >= n)` over the replicas that stabilized.
    pub survival: Vec<f64>,
    pub replicas: u64,
    /// Replicas excluded because they hit the toppling cap.
    pub overflowed: u64,
    pub seed: u64,
}

impl TailEstimate {
    /// Binomial standard error of each survival point.
    pub fn std_errors(&self) -> Vec<f64> {
        let used = (self.replicas - self.overflowed).max(1) as f64;
        self.survival
            .iter()
            .map(|p| (p * (1.0 - p) / used).sqrt())
            .collect()
    }
}

/// Survival `P(x >= n)` at each grid point, from an unsorted sample.
pub fn empirical_survival(sample: &[u64], grid: &[u64]) -> Vec<f64> {
    let mut sorted = sample.to_vec();
    sorted.sort_unstable();
    let total = sorted.len().max(1) as f64;
    grid.iter()
        .map(|&n| {
            let below = sorted.partition_point(|&x| x < n);
            (sorted.len() - below) as f64 / total
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRun {
    pub estimate: TailEstimate,
    pub records: Vec<ReplicaRecord>,
}

pub fn tail_experiment(params: &TailParams) -> Result<TailRun, ExperimentError> {
    check_lambda(params.lambda)?;
    check_density("rho", params.rho)?;
    if params.half_window < 1 {
        return Err(ExperimentError::InvalidParameter(
            "half-window must be >= 1".into(),
        ));
    }
    let opts = StabilizeOptions {
        policy: Policy::default(),
        cap: params.cap,
        watch: None,
    };
    let records = run_replicas(params.replicas, |r| {
        window_odometer_replica(
            params.lambda,
            params.rho,
            params.half_window,
            params.seed,
            r,
            &opts,
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let good: Vec<u64> = records
        .iter()
        .filter(|r| !r.overflow)
        .map(|r| r.m0)
        .collect();
    let survival = empirical_survival(&good, &params.n_grid);
    Ok(TailRun {
        estimate: TailEstimate {
            lambda: params.lambda,
            rho: params.rho,
            half_window: params.half_window,
            n_grid: params.n_grid.clone(),
            survival,
            replicas: params.replicas,
            overflowed: records.len() as u64 - good.len() as u64,
            seed: params.seed,
        },
        records,
    })
}

/// Log-spaced integer grid from `lo` to `hi` with `points` distinct values at most.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let (a, b) = ((lo.max(1) as f64).ln(), (hi.max(1) as f64).ln());
    let mut g: Vec<u64> = (0..points)
        .map(|i| {
            let t = if points > 1 {
                i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            (a + t * (b - a)).exp().round() as u64
        })
        .collect();
    g.dedup();
    g
}

/// Regression of `ln(-ln S(n))` on `ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Stretch exponent of `n`.
    pub slope: f64,
    /// `c` in `S(n) ~ exp(-c n^slope)`.
    pub c_hat: f64,
    pub r2: f64,
    pub points: usize,
}

/// Survival values strictly inside this range enter the fit.
pub const FIT_SURVIVAL_RANGE: (f64, f64) = (1e-4, 0.5);
pub const FIT_MIN_POINTS: usize = 5;

pub fn fit_stretched_exponential(
    tail: &TailEstimate,
    n_range: Option<(u64, u64)>,
) -> Result<FitResult, ExperimentError> {
    let (lo, hi) = n_range.unwrap_or((0, u64::MAX));
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail
        .n_grid
        .iter()
        .zip(&tail.survival)
        .filter(|&(&n, &s)| {
            n >= lo.max(1) && n <= hi && s > FIT_SURVIVAL_RANGE.0 && s < FIT_SURVIVAL_RANGE.1
        })
        .map(|(&n, &s)| ((n as f64).ln(), (-s.ln()).ln()))
        .unzip();
    if xs.len() < FIT_MIN_POINTS {
        return Err(ExperimentError::InsufficientPoints {
            usable: xs.len(),
            needed: FIT_MIN_POINTS,
        });
    }
    let fit = linear_fit(&xs, &ys).ok_or(ExperimentError::InsufficientPoints {
        usable: xs.len(),
        needed: FIT_MIN_POINTS,
    })?;
    Ok(FitResult {
        slope: fit.slope,
        c_hat: fit.intercept.exp(),
        r2: fit.r2,
        points: xs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanOdometer {
    pub estimate: MeanEstimate,
    /// `sum_{n >= 1} P(m(0) >= n)` from the empirical survival function.
    pub tail_sum: f64,
    pub overflowed: u64,
    pub records: Vec<ReplicaRecord>,
}

pub fn mean_odometer(
    lambda: f64,
    rho: f64,
    half_window: i64,
    replicas: u64,
    seed: u64,
) -> Result<MeanOdometer, ExperimentError> {
    let run = tail_experiment(&TailParams::new(
        lambda,
        rho,
        half_window,
        Vec::new(),
        replicas,
        seed,
    ))?;
    let good: Vec<u64> = run
        .records
        .iter()
        .filter(|r| !r.overflow)
        .map(|r| r.m0)
        .collect();
    let xs: Vec<f64> = good.iter().map(|&m| m as f64).collect();
    let max = good.iter().copied().max().unwrap_or(0);
    let grid: Vec<u64> = (1..=max).collect();
    let tail_sum = empirical_survival(&good, &grid).iter().sum();
    Ok(MeanOdometer {
        estimate: MeanEstimate::from_samples(&xs),
        tail_sum,
        overflowed: run.estimate.overflowed,
        records: run.records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationParams {
    pub lambda: f64,
    pub rho: f64,
    /// Scale `n`; the lower bound near the origin is checked on `[0, n]`.
    pub n: u64,
    /// Right counts are followed out to `horizon * n`.
    pub horizon: u64,
    pub u0: i64,
    pub f0: i64,
    /// Slack added to `rho` in the far-field bound.
    pub epsilon: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl ConcentrationParams {
    /// `u0 = 3 (1 + lambda) n^2`, `f0 = 0`, horizon `4n`, slack 0.1.
    pub fn new(lambda: f64, rho: f64, n: u64, replicas: u64, seed: u64) -> Self {
        Self {
            lambda,
            rho,
            n,
            horizon: 4,
            u0: (3.0 * (1.0 + lambda) * (n * n) as f64).round() as i64,
            f0: 0,
            epsilon: 0.1,
            replicas,
            seed,
        }
    }
}

/// Right counts of the minimal odometer in one replica, with the checks
/// against the near and far lower bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRecord {
    pub replica: u64,
    pub seed: u64,
    /// `NR(n)` of the minimal odometer.
    pub right_at_n: i64,
    /// `u0 / (2 (1 + lambda)) - sum_{i=1..n} (f0 + Z_i)`.
    pub center_at_n: f64,
    /// `NR(j) >= n^2 - rho j^2 / 2` for every `j <= n`.
    pub near_bound: bool,
    /// `NR(j) >= -(rho + epsilon) j^2 / 2` for every `n <= j <= horizon * n`.
    pub far_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub near_fraction: f64,
    pub far_fraction: f64,
    /// Fraction with `|NR(n) - center| <= n^2 / 10`.
    pub central_fraction: f64,
    pub records: Vec<ConcentrationRecord>,
}

/// Minimal odometer on `[0, horizon * n]` from Bernoulli(`rho`) particles on
/// `[1, horizon * n - 1]`, started from a large `u0`.
pub fn concentration_experiment(
    params: &ConcentrationParams,
) -> Result<ConcentrationSummary, ExperimentError> {
    check_lambda(params.lambda)?;
    check_density("rho", params.rho)?;
    if params.n == 0 || params.horizon == 0 {
        return Err(ExperimentError::InvalidParameter(
            "need n >= 1 and horizon >= 1".into(),
        ));
    }
    let len = params.n * params.horizon;
    let records = run_replicas(params.replicas, |r| -> Result<_, ExperimentError> {
        let (seed, stack_seed, config_seed) = replica_streams(params.seed, r);
        let stacks = HashedStacks::new(stack_seed, params.lambda);
        let sigma =
            sample_bernoulli_config(params.rho, Interval::new(1, len as i64 - 1), config_seed)?;
        let (_, right) = Problem::new(&sigma, params.u0, params.f0, len as usize, &stacks)
            .minimal_with_right_counts()?;
        let n = params.n as usize;
        let n2 = (params.n * params.n) as f64;
        let near_bound = (0..=n).all(|j| right[j] as f64 >= n2 - params.rho * (j * j) as f64 / 2.0);
        let far_bound = (n..=len as usize)
            .all(|j| right[j] as f64 >= -(params.rho + params.epsilon) * (j * j) as f64 / 2.0);
        let mut z = 0i64;
        let mut drift = 0i64;
        for i in 1..=n as i64 {
            z += sigma.count(i) as i64;
            drift += params.f0 + z;
        }
        let center_at_n = params.u0 as f64 / (2.0 * (1.0 + params.lambda)) - drift as f64;
        Ok(ConcentrationRecord {
            replica: r,
            seed,
            right_at_n: right[n],
            center_at_n,
            near_bound,
            far_bound,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let frac = |f: &dyn Fn(&ConcentrationRecord) -> bool| {
        records.iter().filter(|r| f(r)).count() as f64 / records.len().max(1) as f64
    };
    let tol = (params.n * params.n) as f64 / 10.0;
    Ok(ConcentrationSummary {
        near_fraction: frac(&|r| r.near_bound),
        far_fraction: frac(&|r| r.far_bound),
        central_fraction: frac(&|r| (r.right_at_n as f64 - r.center_at_n).abs() <= tol),
        records,
    })
}

/// `[-ceil(n/2) + 1, floor(n/2)]`, an interval of `n` sites around 0.
pub fn centered_block(n: u64) -> Interval {
    let n = n as i64;
    Interval::new(-((n + 1) / 2) + 1, n / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub n: u64,
    pub replicas: u64,
    pub seed: u64,
    pub chat: f64,
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalSummary {
    pub particles: u64,
    /// `(1 + lambda) epsilon n^2 / 32`.
    pub bound: f64,
    pub fraction_above: f64,
    pub median_g0: f64,
    pub overflowed: u64,
    pub records: Vec<ReplicaRecord>,
}

/// Stabilizes `floor((chat + epsilon) n)` uniformly placed particles on a
/// block of `n` sites and records the odometer at 0.
pub fn supercritical_experiment(
    params: &SupercriticalParams,
) -> Result<SupercriticalSummary, ExperimentError> {
    check_lambda(params.lambda)?;
    if !(params.epsilon >= 0.0 && params.chat >= 0.0) {
        return Err(ExperimentError::InvalidParameter(
            "density parameters must be nonnegative".into(),
        ));
    }
    let block = centered_block(params.n);
    let particles = ((params.chat + params.epsilon) * params.n as f64).floor() as u64;
    let opts = StabilizeOptions {
        policy: Policy::default(),
        cap: params.cap,
        watch: None,
    };
    let records = run_replicas(params.replicas, |r| {
        let (seed, stack_seed, config_seed) = replica_streams(params.seed, r);
        let stacks = HashedStacks::new(stack_seed, params.lambda);
        let config = sample_uniform_k_particle_config(particles, block, config_seed);
        match stabilize_with(&config, block, &stacks, &opts) {
            Ok(res) => ReplicaRecord {
                replica: r,
                seed,
                m0: res.odometer.get(0),
                topples: res.topple_count,
                overflow: false,
            },
            Err(e) => {
                let p = e.partial().expect("nonzero cap");
                ReplicaRecord {
                    replica: r,
                    seed,
                    m0: p.odometer.get(0),
                    topples: p.topple_count,
                    overflow: true,
                }
            }
        }
    });
    let bound = (1.0 + params.lambda) * params.epsilon * (params.n as f64).powi(2) / 32.0;
    let g0: Vec<u64> = records
        .iter()
        .filter(|r| !r.overflow)
        .map(|r| r.m0)
        .collect();
    let above = g0.iter().filter(|&&g| g as f64 > bound).count();
    Ok(SupercriticalSummary {
        particles,
        bound,
        fraction_above: above as f64 / g0.len().max(1) as f64,
        median_g0: median(&g0),
        overflowed: records.len() as u64 - g0.len() as u64,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoCMethod {
    FixedEnergyScan,
    DrivenDissipative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoCEstimate {
    pub method: RhoCMethod,
    pub lambda: f64,
    pub estimate: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InjectionSite {
    #[default]
    Uniform,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivenParams {
    pub lambda: f64,
    pub n: u64,
    pub injections: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub injection: InjectionSite,
    /// Toppling cap per avalanche.
    pub cap: u64,
}

impl DrivenParams {
    pub fn new(lambda: f64, n: u64, injections: u64, burn_in: u64, seed: u64) -> Self {
        Self {
            lambda,
            n,
            injections,
            burn_in,
            seed,
            injection: InjectionSite::Uniform,
            cap: DEFAULT_TOPPLE_CAP,
        }
    }
}

/// Number of batches used for the batch-means error of time averages.
const BATCHES: u64 = 20;

/// Driven-dissipative dynamics on `[1, n]`: inject one active particle,
/// stabilize with particles leaving the interval deleted, repeat. The
/// post-avalanche density averaged after burn-in estimates the critical
/// density.
pub fn driven_dissipative_rho_c(params: &DrivenParams) -> Result<RhoCEstimate, ExperimentError> {
    check_lambda(params.lambda)?;
    if params.n == 0 || params.injections <= params.burn_in {
        return Err(ExperimentError::InvalidParameter(
            "need n >= 1 and injections > burn-in".into(),
        ));
    }
    let stacks = HashedStacks::new(derive_seed(params.seed, stream::STACKS), params.lambda);
    let set = Interval::new(1, params.n as i64);
    let empty = crate::configuration::Configuration::empty(set);
    let mut engine = Stabilizer::new(&stacks, set, &empty);
    let opts = StabilizeOptions {
        policy: Policy::default(),
        cap: params.cap,
        watch: None,
    };
    let inject_key = derive_seed(params.seed, stream::INJECT);
    let measured = params.injections - params.burn_in;
    let batch_len = (measured / BATCHES).max(1);
    let mut batch_sums = Vec::new();
    let (mut acc, mut in_batch) = (0.0, 0u64);
    for t in 0..params.injections {
        let site = match params.injection {
            InjectionSite::Uniform => {
                let u = unit_f64(mix64(inject_key ^ mix64(t)));
                1 + ((u * params.n as f64) as i64).min(params.n as i64 - 1)
            }
            InjectionSite::Center => (params.n as i64 + 1) / 2,
        };
        engine.inject(site);
        engine
            .run(&opts)
            .map_err(|source| ExperimentError::Aborted {
                injections: t + 1,
                source,
            })?;
        if t >= params.burn_in {
            acc += engine.particles() as f64 / params.n as f64;
            in_batch += 1;
            if in_batch == batch_len {
                batch_sums.push(acc / in_batch as f64);
                acc = 0.0;
                in_batch = 0;
            }
        }
    }
    if in_batch > 0 && batch_sums.is_empty() {
        batch_sums.push(acc / in_batch as f64);
    }
    let est = MeanEstimate::from_samples(&batch_sums);
    Ok(RhoCEstimate {
        method: RhoCMethod::DrivenDissipative,
        lambda: params.lambda,
        estimate: est.mean,
        uncertainty: est.std_err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub lambda: f64,
    pub rho_grid: Vec<f64>,
    pub half_window: i64,
    pub replicas: u64,
    pub cap: u64,
    pub seed: u64,
    /// A replica counts as active when `m(0) >= alpha * N^2`.
    pub alpha: f64,
}

/// Default activity threshold of the phase scan, as a multiple of `N^2`.
///
/// Just above criticality `m(0)` grows like `(1 + lambda)(rho - rho_c) N^2`,
/// so the crossing sits about `alpha / (1 + lambda)` above `rho_c`.
pub const DEFAULT_SCAN_ALPHA: f64 = 0.01;

impl ScanParams {
    pub fn new(
        lambda: f64,
        rho_grid: Vec<f64>,
        half_window: i64,
        replicas: u64,
        seed: u64,
    ) -> Self {
        Self {
            lambda,
            rho_grid,
            half_window,
            replicas,
            cap: DEFAULT_TOPPLE_CAP,
            seed,
            alpha: DEFAULT_SCAN_ALPHA,
        }
    }
}

/// Evenly spaced densities from `lo` to `hi` inclusive.
pub fn density_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=k)
        .map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub rho: f64,
    pub fixed_fraction: f64,
    pub replicas: u64,
    pub capped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub points: Vec<ScanPoint>,
    pub estimate: RhoCEstimate,
    pub records: Vec<Vec<ReplicaRecord>>,
}

/// Fraction of fixating replicas per density, with the crossing taken at the
/// midpoint of the steepest drop between neighbouring grid points.
pub fn fixation_phase_scan(params: &ScanParams) -> Result<PhaseScan, ExperimentError> {
    check_lambda(params.lambda)?;
    if params.rho_grid.len() < 2 {
        return Err(ExperimentError::InvalidParameter(
            "need at least two densities".into(),
        ));
    }
    for &rho in &params.rho_grid {
        check_density("rho", rho)?;
    }
    let n2 = (params.half_window as f64).powi(2);
    let threshold = (params.alpha * n2).ceil().max(1.0) as u64;
    let opts = StabilizeOptions {
        policy: Policy::default(),
        cap: params.cap,
        watch: Some((0, threshold)),
    };
    let mut points = Vec::new();
    let mut all = Vec::new();
    for &rho in &params.rho_grid {
        let records = run_replicas(params.replicas, |r| {
            window_odometer_replica(
                params.lambda,
                rho,
                params.half_window,
                params.seed,
                r,
                &opts,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let fixed = records
            .iter()
            .filter(|r| !r.overflow && r.m0 < threshold)
            .count();
        let capped = records
            .iter()
            .filter(|r| r.overflow && r.m0 < threshold)
            .count() as u64;
        points.push(ScanPoint {
            rho,
            fixed_fraction: fixed as f64 / records.len().max(1) as f64,
            replicas: records.len() as u64,
            capped,
        });
        all.push(records);
    }
    let (k, _) = points
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, w[0].fixed_fraction - w[1].fixed_fraction))
        .fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    let (a, b) = (points[k].rho, points[k + 1].rho);
    Ok(PhaseScan {
        estimate: RhoCEstimate {
            method: RhoCMethod::FixedEnergyScan,
            lambda: params.lambda,
            estimate: (a + b) / 2.0,
            uncertainty: (b - a).abs(),
        },
        points,
        records: all,
    })
}
