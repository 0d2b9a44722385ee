// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Seeded Monte Carlo transport of single photons through the router.
//!
//! A photon on signal channel `i` first crosses the sender's multiplexer and
//! leaves on port `i + o`: `o = 0` with probability `10^(-IL/10)`, a leak to
//! `o != 0` with probability `10^((FC_o - IL)/10)`, or it is lost. The port
//! fixes the fiber and therefore the receiving multiplexer, whose port
//! `i + o` passes channel `i + o`. Every later pass is a filter on that
//! channel: the photon gets through with the same per-pass probability as
//! the first pass picked for `o` and is lost otherwise. After all passes the
//! photon has arrived at offset `o` or been lost somewhere along the way.
//!
//! Each trial draws from its own ChaCha8 stream keyed by `(seed, trial)`, so
//! results do not depend on how trials are split across workers. Every trial
//! transports two photons: one sampled from the physical distribution and one
//! from a flattened proposal that visits rare leak paths often. The second
//! carries an importance weight `p(path) / q(path)`. Tallies are path-resolved
//! integer counts, so merging partial runs is exact.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::photonics::{port_transmission, MuxSpec, PhotonicsError};

/// Identifies the random stream construction recorded in every report.
pub const GENERATOR_ID: &str = "chacha8:seed_from_u64(seed):stream(trial)";

const BLOCK_TRIALS: u64 = 8192;

/// Tolerance on the per-pass probability mass before a spec is unphysical.
const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("unphysical multiplexer: per-pass probabilities sum to {total} > 1")]
    Unphysical { total: f64 },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Result of one multiplexer pass on the signal channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PassOutcome {
    Delivered,
    Leaked(i64),
    Lost,
}

/// Per-pass probabilities for one signal channel of a multiplexer.
#[derive(Clone, Debug)]
pub struct PassModel {
    signal_channel: usize,
    delivered: f64,
    /// In-band interferer offsets with nonzero leak probability.
    leaks: Vec<(i64, f64)>,
    lost: f64,
}

impl PassModel {
    pub fn new(spec: &MuxSpec, signal_channel: usize) -> Result<Self, TransportError> {
        let delivered = port_transmission(spec, signal_channel, signal_channel)?.value();
        let mut leaks = Vec::new();
        for port in (1..=spec.channel_count()).filter(|&p| p != signal_channel) {
            let p = port_transmission(spec, signal_channel, port)?.value();
            if p > 0.0 {
                leaks.push((port as i64 - signal_channel as i64, p));
            }
        }
        let total = delivered + leaks.iter().map(|(_, p)| p).sum::<f64>();
        if !(total <= 1.0 + MASS_TOLERANCE) {
            return Err(TransportError::Unphysical { total });
        }
        Ok(PassModel {
            signal_channel,
            delivered,
            leaks,
            lost: (1.0 - total).max(0.0),
        })
    }

    pub fn signal_channel(&self) -> usize {
        self.signal_channel
    }

    pub fn delivered_probability(&self) -> f64 {
        self.delivered
    }

    pub fn lost_probability(&self) -> f64 {
        self.lost
    }

    pub fn leaks(&self) -> &[(i64, f64)] {
        &self.leaks
    }

    /// Probability of passing one filter when sitting at port offset `offset`.
    pub fn transmission(&self, offset: i64) -> f64 {
        if offset == 0 {
            return self.delivered;
        }
        self.leaks
            .iter()
            .find(|(o, _)| *o == offset)
            .map_or(0.0, |(_, p)| *p)
    }

    fn outcome_probability(&self, outcome: PassOutcome) -> f64 {
        match outcome {
            PassOutcome::Delivered => self.delivered,
            PassOutcome::Leaked(o) => self.transmission(o),
            PassOutcome::Lost => self.lost,
        }
    }

    /// Samples one pass from a uniform draw in `[0, 1)`.
    pub fn sample(&self, u: f64) -> PassOutcome {
        let mut acc = self.delivered;
        if u < acc {
            return PassOutcome::Delivered;
        }
        for &(offset, p) in &self.leaks {
            acc += p;
            if u < acc {
                return PassOutcome::Leaked(offset);
            }
        }
        PassOutcome::Lost
    }

    // Outcomes the importance proposal picks from uniformly.
    fn proposal_support(&self) -> Vec<PassOutcome> {
        let mut support = Vec::with_capacity(self.leaks.len() + 2);
        if self.delivered > 0.0 {
            support.push(PassOutcome::Delivered);
        }
        support.extend(self.leaks.iter().map(|&(o, _)| PassOutcome::Leaked(o)));
        if self.lost > 0.0 {
            support.push(PassOutcome::Lost);
        }
        support
    }

    /// Probability that the importance proposal produces the single path
    /// arriving at `offset` after `passes` passes.
    fn arrival_proposal(&self, offset: i64, passes: u32) -> f64 {
        let support = self.proposal_support();
        if passes == 0 || support.is_empty() {
            return if offset == 0 { 1.0 } else { 0.0 };
        }
        let first = if offset == 0 {
            PassOutcome::Delivered
        } else {
            PassOutcome::Leaked(offset)
        };
        if !support.contains(&first) {
            return 0.0;
        }
        let q_pass: f64 = if self.transmission(offset) >= 1.0 { 1.0 } else { 0.5 };
        q_pass.powi(passes as i32 - 1) / support.len() as f64
    }
}

/// One multiplexer pass of a photon on the spec's mid-band channel.
pub fn simulate_pass<R: Rng + ?Sized>(spec: &MuxSpec, rng: &mut R) -> Result<PassOutcome, TransportError> {
    let model = PassModel::new(spec, spec.mid_band_channel())?;
    Ok(model.sample(rng.random::<f64>()))
}

/// A complete photon history: where it arrived or where it was lost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhotonPath {
    /// Survived every pass on port offset `offset`; 0 is the intended user.
    Arrived { offset: i64 },
    /// Absorbed at pass `pass` (1-based); `offset` is unset for the first pass.
    Lost { pass: u32, offset: Option<i64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathStats {
    pub count: u64,
    /// Exact probability of the path under the physical model.
    pub probability: f64,
    /// Probability of the path under the sampling distribution.
    pub proposal: f64,
}

/// Path-resolved counts. Merging adds counts and is associative and
/// commutative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    pub trials: u64,
    pub paths: BTreeMap<PhotonPath, PathStats>,
}

impl Tally {
    fn record(&mut self, path: PhotonPath, probability: f64, proposal: f64) {
        self.paths
            .entry(path)
            .and_modify(|s| s.count += 1)
            .or_insert(PathStats {
                count: 1,
                probability,
                proposal,
            });
    }

    pub fn merge(&mut self, other: &Tally) {
        self.trials += other.trials;
        for (path, stats) in &other.paths {
            self.paths
                .entry(*path)
                .and_modify(|s| s.count += stats.count)
                .or_insert(*stats);
        }
    }

    pub fn count_where(&self, pred: impl Fn(&PhotonPath) -> bool) -> u64 {
        self.paths
            .iter()
            .filter(|(p, _)| pred(p))
            .map(|(_, s)| s.count)
            .sum()
    }
}

/// Analog and importance-sampled tallies for a range of trials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialTallies {
    pub analog: Tally,
    pub weighted: Tally,
}

impl TrialTallies {
    pub fn merge(&mut self, other: &TrialTallies) {
        self.analog.merge(&other.analog);
        self.weighted.merge(&other.weighted);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub passes: u32,
    /// Defaults to the spec's mid-band channel.
    pub signal_channel: Option<usize>,
    /// Worker threads; `None` uses the global pool. Results never depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
    pub spec: MuxSpec,
}

impl SimConfig {
    pub fn new(spec: MuxSpec, trials: u64, seed: u64) -> Self {
        SimConfig {
            trials,
            seed,
            passes: 2,
            signal_channel: None,
            workers: None,
            spec,
        }
    }

    pub fn resolved_signal_channel(&self) -> usize {
        self.signal_channel
            .unwrap_or_else(|| self.spec.mid_band_channel())
    }
}

struct Transit<'a> {
    model: &'a PassModel,
    passes: u32,
    support: Vec<PassOutcome>,
}

impl Transit<'_> {
    fn analog(&self, rng: &mut ChaCha8Rng) -> (PhotonPath, f64) {
        if self.passes == 0 {
            return (PhotonPath::Arrived { offset: 0 }, 1.0);
        }
        let first = self.model.sample(rng.random::<f64>());
        let mut p = self.model.outcome_probability(first);
        let offset = match first {
            PassOutcome::Delivered => 0,
            PassOutcome::Leaked(o) => o,
            PassOutcome::Lost => return (PhotonPath::Lost { pass: 1, offset: None }, p),
        };
        let a = self.model.transmission(offset);
        for pass in 2..=self.passes {
            if rng.random::<f64>() < a {
                p *= a;
            } else {
                p *= 1.0 - a;
                return (
                    PhotonPath::Lost {
                        pass,
                        offset: Some(offset),
                    },
                    p,
                );
            }
        }
        (PhotonPath::Arrived { offset }, p)
    }

    fn weighted(&self, rng: &mut ChaCha8Rng) -> (PhotonPath, f64, f64) {
        if self.passes == 0 || self.support.is_empty() {
            return (PhotonPath::Arrived { offset: 0 }, 1.0, 1.0);
        }
        let k = self.support.len();
        let pick = ((rng.random::<f64>() * k as f64) as usize).min(k - 1);
        let first = self.support[pick];
        let mut p = self.model.outcome_probability(first);
        let mut q = 1.0 / k as f64;
        let offset = match first {
            PassOutcome::Delivered => 0,
            PassOutcome::Leaked(o) => o,
            PassOutcome::Lost => return (PhotonPath::Lost { pass: 1, offset: None }, p, q),
        };
        let a = self.model.transmission(offset);
        // Even split between passing and absorbing unless one is impossible.
        let q_pass = if a >= 1.0 { 1.0 } else { 0.5 };
        for pass in 2..=self.passes {
            if rng.random::<f64>() < q_pass {
                p *= a;
                q *= q_pass;
            } else {
                p *= 1.0 - a;
                q *= 1.0 - q_pass;
                return (
                    PhotonPath::Lost {
                        pass,
                        offset: Some(offset),
                    },
                    p,
                    q,
                );
            }
        }
        (PhotonPath::Arrived { offset }, p, q)
    }
}

/// Random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs the trials in `range` sequentially.
pub fn run_trials(config: &SimConfig, range: Range<u64>) -> Result<TrialTallies, TransportError> {
    let model = PassModel::new(&config.spec, config.resolved_signal_channel())?;
    Ok(run_with_model(&model, config, range))
}

fn run_with_model(model: &PassModel, config: &SimConfig, range: Range<u64>) -> TrialTallies {
    let transit = Transit {
        model,
        passes: config.passes,
        support: model.proposal_support(),
    };
    let mut out = TrialTallies::default();
    for trial in range {
        let mut rng = trial_rng(config.seed, trial);
        let (path, p) = transit.analog(&mut rng);
        out.analog.trials += 1;
        out.analog.record(path, p, p);
        let (path, p, q) = transit.weighted(&mut rng);
        out.weighted.trials += 1;
        out.weighted.record(path, p, q);
    }
    out
}

/// Runs all trials, fanning blocks of trials out across workers.
pub fn run_all_trials(config: &SimConfig) -> Result<TrialTallies, TransportError> {
    if config.trials == 0 {
        return Err(TransportError::NoTrials);
    }
    let model = PassModel::new(&config.spec, config.resolved_signal_channel())?;
    let blocks: Vec<Range<u64>> = (0..config.trials.div_ceil(BLOCK_TRIALS))
        .map(|b| b * BLOCK_TRIALS..((b + 1) * BLOCK_TRIALS).min(config.trials))
        .collect();
    let work = || {
        blocks
            .par_iter()
            .map(|r| run_with_model(&model, config, r.clone()))
            .reduce(TrialTallies::default, |mut a, b| {
                a.merge(&b);
                a
            })
    };
    match config.workers {
        None => Ok(work()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| TransportError::Pool(e.to_string()))
            .map(|pool| pool.install(work)),
    }
}

/// Exact outcome probabilities of a transit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticExpectation {
    pub delivered: f64,
    pub leaked_by_offset: BTreeMap<i64, f64>,
    pub lost: f64,
    /// Wrong-user over right-user arrivals per offset, `10^(passes * FC / 10)`.
    /// For two passes this is the router's leak-to-signal ratio.
    pub leak_to_signal_ratio_by_offset: BTreeMap<i64, f64>,
    /// Chance that one importance-sampled photon takes the arrival path at
    /// each offset (0 is the correct user).
    pub weighted_arrival_proposal: BTreeMap<i64, f64>,
}

impl AnalyticExpectation {
    pub fn new(config: &SimConfig) -> Result<Self, TransportError> {
        let spec = &config.spec;
        let signal = config.resolved_signal_channel();
        let model = PassModel::new(spec, signal)?;
        let passes = config.passes as i32;
        let mut leaked_by_offset = BTreeMap::new();
        let mut leak_to_signal_ratio_by_offset = BTreeMap::new();
        for port in (1..=spec.channel_count()).filter(|&p| p != signal) {
            let offset = port as i64 - signal as i64;
            let p = if passes == 0 {
                0.0
            } else {
                model.transmission(offset).powi(passes)
            };
            leaked_by_offset.insert(offset, p);
            if passes > 0 {
                let fc = spec.crosstalk_between(signal, port)?;
                leak_to_signal_ratio_by_offset
                    .insert(offset, 10f64.powf(passes as f64 * fc / 10.0));
            }
        }
        let delivered = model.delivered_probability().powi(passes);
        let weighted_arrival_proposal = std::iter::once(0)
            .chain(leaked_by_offset.keys().copied())
            .map(|o| (o, model.arrival_proposal(o, config.passes)))
            .collect();
        let lost = (1.0 - delivered - leaked_by_offset.values().sum::<f64>()).max(0.0);
        Ok(AnalyticExpectation {
            delivered,
            leaked_by_offset,
            lost,
            leak_to_signal_ratio_by_offset,
            weighted_arrival_proposal,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeCounts {
    pub delivered: u64,
    pub leaked_by_offset: BTreeMap<i64, u64>,
    pub lost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardErrors {
    pub delivered: f64,
    pub leaked_by_offset: BTreeMap<i64, f64>,
    pub lost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedEstimate {
    pub hits: u64,
    /// Unbiased importance-sampling estimate of the outcome probability.
    pub estimate: f64,
    pub standard_error: f64,
    /// Exact probability of the single path leading to this outcome, when
    /// the outcome was observed.
    pub path_probability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedTallies {
    pub delivered: WeightedEstimate,
    pub leaked_by_offset: BTreeMap<i64, WeightedEstimate>,
    pub lost: WeightedEstimate,
    /// Ratio of exact path probabilities, wrong user over right user.
    pub leak_to_signal_ratio_by_offset: BTreeMap<i64, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord {
    pub path: PhotonPath,
    #[serde(flatten)]
    pub stats: PathStats,
}

/// Outcome of [`simulate_router_transit`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub generator: String,
    pub seed: u64,
    pub trials: u64,
    pub passes: u32,
    pub signal_channel: usize,
    pub spec: MuxSpec,
    pub counts: OutcomeCounts,
    pub delivered_fraction: f64,
    pub leaked_fraction_by_offset: BTreeMap<i64, f64>,
    pub lost_fraction: f64,
    /// `sqrt(p(1 - p) / trials)` with the empirical fraction.
    pub standard_error: StandardErrors,
    pub analytic_expected: AnalyticExpectation,
    pub weighted: WeightedTallies,
    pub analog_paths: Vec<PathRecord>,
    pub weighted_paths: Vec<PathRecord>,
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

fn weighted_estimate(tally: &Tally, pred: impl Fn(&PhotonPath) -> bool) -> WeightedEstimate {
    let n = tally.trials as f64;
    let mut hits = 0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut single_path = None;
    let mut paths = 0;
    for (path, s) in tally.paths.iter().filter(|(p, _)| pred(p)) {
        let w = s.probability / s.proposal;
        hits += s.count;
        sum += s.count as f64 * w;
        sum_sq += s.count as f64 * w * w;
        single_path = Some((*path, s.probability));
        paths += 1;
    }
    let estimate = sum / n;
    let variance = (sum_sq / n - estimate * estimate).max(0.0);
    WeightedEstimate {
        hits,
        estimate,
        standard_error: (variance / n).sqrt(),
        path_probability: if paths == 1 {
            single_path.map(|(_, p)| p)
        } else {
            None
        },
    }
}

fn path_records(tally: &Tally) -> Vec<PathRecord> {
    tally
        .paths
        .iter()
        .map(|(path, stats)| PathRecord {
            path: *path,
            stats: *stats,
        })
        .collect()
}

impl SimReport {
    /// Builds a report from merged tallies.
    pub fn from_tallies(config: &SimConfig, tallies: &TrialTallies) -> Result<Self, TransportError> {
        let analytic = AnalyticExpectation::new(config)?;
        let analog = &tallies.analog;
        let n = analog.trials;
        let frac = |c: u64| c as f64 / n as f64;

        let delivered = analog.count_where(|p| *p == PhotonPath::Arrived { offset: 0 });
        let lost = analog.count_where(|p| matches!(p, PhotonPath::Lost { .. }));
        let leaked_counts: BTreeMap<i64, u64> = analytic
            .leaked_by_offset
            .keys()
            .map(|&o| (o, analog.count_where(|p| *p == PhotonPath::Arrived { offset: o })))
            .collect();
        let leaked_fraction_by_offset: BTreeMap<i64, f64> =
            leaked_counts.iter().map(|(&o, &c)| (o, frac(c))).collect();

        let weighted = &tallies.weighted;
        let w_delivered = weighted_estimate(weighted, |p| *p == PhotonPath::Arrived { offset: 0 });
        let w_leaked: BTreeMap<i64, WeightedEstimate> = analytic
            .leaked_by_offset
            .keys()
            .map(|&o| (o, weighted_estimate(weighted, |p| *p == PhotonPath::Arrived { offset: o })))
            .collect();
        let w_lost = weighted_estimate(weighted, |p| matches!(p, PhotonPath::Lost { .. }));
        let leak_to_signal_ratio_by_offset = match w_delivered.path_probability {
            Some(signal) if signal > 0.0 => w_leaked
                .iter()
                .filter_map(|(&o, e)| e.path_probability.map(|p| (o, p / signal)))
                .collect(),
            _ => BTreeMap::new(),
        };

        Ok(SimReport {
            generator: GENERATOR_ID.to_string(),
            seed: config.seed,
            trials: n,
            passes: config.passes,
            signal_channel: config.resolved_signal_channel(),
            spec: config.spec.clone(),
            delivered_fraction: frac(delivered),
            lost_fraction: frac(lost),
            standard_error: StandardErrors {
                delivered: binomial_se(frac(delivered), n),
                leaked_by_offset: leaked_fraction_by_offset
                    .iter()
                    .map(|(&o, &p)| (o, binomial_se(p, n)))
                    .collect(),
                lost: binomial_se(frac(lost), n),
            },
            leaked_fraction_by_offset,
            counts: OutcomeCounts {
                delivered,
                leaked_by_offset: leaked_counts,
                lost,
            },
            analytic_expected: analytic,
            weighted: WeightedTallies {
                delivered: w_delivered,
                leaked_by_offset: w_leaked,
                lost: w_lost,
                leak_to_signal_ratio_by_offset,
            },
            analog_paths: path_records(analog),
            weighted_paths: path_records(weighted),
        })
    }

    pub fn leaked_fraction(&self) -> f64 {
        self.leaked_fraction_by_offset.values().sum()
    }

    /// Scales every analytic expectation by `factor`. Used to check that the
    /// comparison actually catches a wrong model.
    pub fn perturb_analytic(&mut self, factor: f64) {
        let a = &mut self.analytic_expected;
        a.delivered *= factor;
        a.lost *= factor;
        a.leaked_by_offset.values_mut().for_each(|v| *v *= factor);
        a.leak_to_signal_ratio_by_offset
            .values_mut()
            .for_each(|v| *v *= factor);
    }
}

/// Runs `config.trials` photons through `config.passes` multiplexer passes.
pub fn simulate_router_transit(config: &SimConfig) -> Result<SimReport, TransportError> {
    let tallies = run_all_trials(config)?;
    SimReport::from_tallies(config, &tallies)
}

pub const DEFAULT_SIGMA_THRESHOLD: f64 = 4.0;
/// Relative tolerance on ratios built from exact path probabilities.
pub const RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZCheck {
    pub tally: String,
    pub empirical: f64,
    pub expected: f64,
    pub sigma: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub offset: i64,
    pub simulated: Option<f64>,
    pub expected: f64,
    pub relative_error: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub sigma_threshold: f64,
    pub z_checks: Vec<ZCheck>,
    pub ratio_checks: Vec<RatioCheck>,
    pub pass: bool,
}

/// A z-score; a zero sigma gives 0 for matching values and infinity otherwise.
pub fn z_score(empirical: f64, expected: f64, sigma: f64) -> f64 {
    let diff = empirical - expected;
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() <= RATIO_TOLERANCE * expected.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

fn z_check(tally: String, empirical: f64, expected: f64, sigma: f64, threshold: f64) -> ZCheck {
    let z = z_score(empirical, expected, sigma);
    ZCheck {
        tally,
        empirical,
        expected,
        sigma,
        z,
        pass: z.abs() < threshold,
    }
}

/// Compares simulated tallies with the analytic expectation.
///
/// Analog tallies use the binomial sigma of the expected probability; leaks
/// are pooled because individual leak paths are too rare for a normal
/// approximation. Weighted arrivals use the exact sigma of their proposal;
/// the weighted loss tally spans many paths and uses its sampling error.
/// A check passes only when `|z|` is strictly below `sigma_threshold`.
pub fn compare_to_analytic(report: &SimReport, sigma_threshold: f64) -> Comparison {
    let n = report.trials;
    let a = &report.analytic_expected;
    let mut z_checks = Vec::new();

    let expected_leaked: f64 = a.leaked_by_offset.values().sum();
    for (name, empirical, expected) in [
        ("analog.delivered", report.delivered_fraction, a.delivered),
        ("analog.leaked_total", report.leaked_fraction(), expected_leaked),
        ("analog.lost", report.lost_fraction, a.lost),
    ] {
        let sigma = binomial_se(expected.clamp(0.0, 1.0), n);
        z_checks.push(z_check(name.into(), empirical, expected, sigma, sigma_threshold));
    }

    let w = &report.weighted;
    // Arrivals are single paths, so their weighted estimate is a scaled
    // binomial count with a known sigma.
    let arrival_sigma = |offset: i64, expected: f64| {
        let q = a.weighted_arrival_proposal.get(&offset).copied().unwrap_or(0.0);
        if q > 0.0 {
            expected.abs() * ((1.0 / q - 1.0).max(0.0) / n as f64).sqrt()
        } else {
            0.0
        }
    };
    z_checks.push(z_check(
        "weighted.delivered".into(),
        w.delivered.estimate,
        a.delivered,
        arrival_sigma(0, a.delivered),
        sigma_threshold,
    ));
    for (offset, expected) in &a.leaked_by_offset {
        z_checks.push(z_check(
            format!("weighted.leaked[{offset:+}]"),
            w.leaked_by_offset[offset].estimate,
            *expected,
            arrival_sigma(*offset, *expected),
            sigma_threshold,
        ));
    }
    z_checks.push(z_check(
        "weighted.lost".into(),
        w.lost.estimate,
        a.lost,
        w.lost.standard_error,
        sigma_threshold,
    ));

    let ratio_checks: Vec<RatioCheck> = a
        .leak_to_signal_ratio_by_offset
        .iter()
        .filter(|(_, &expected)| expected > 0.0)
        .map(|(&offset, &expected)| {
            let simulated = w.leak_to_signal_ratio_by_offset.get(&offset).copied();
            let relative_error = simulated.map(|s| ((s - expected) / expected).abs());
            RatioCheck {
                offset,
                simulated,
                expected,
                relative_error,
                pass: relative_error.is_some_and(|e| e <= RATIO_TOLERANCE),
            }
        })
        .collect();

    let pass = z_checks.iter().all(|c| c.pass) && ratio_checks.iter().all(|c| c.pass);
    Comparison {
        sigma_threshold,
        z_checks,
        ratio_checks,
        pass,
    }
}
