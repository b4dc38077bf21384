//! Extended (signed) odometers on `[0, n]` that are stable on `[1, n - 1]`,
//! and their images as infection paths.
//!
//! Fix an initial configuration `sigma`, a value `u0` at site 0 and a net
//! flow `f0` from site 0 to site 1. Given `u(k-1)` and `u(k)`, stability at
//! `k` pins the signed Left count at `k + 1`:
//!
//! ```text
//! NL(k+1) = 1{Sleep at u(k)} - sigma(k) - NR(k-1) + NL(k) + NR(k)
//! ```
//!
//! The values of `u(k+1)` with that Left count form a finite interval that
//! starts at a Left instruction and runs up to (not including) the next Left.
//! Walking this interval forward is all the propagation below ever does.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::Configuration;
use crate::instructions::{
    HashedStacks, Instruction, SiteStack, StackError, Stacks, DEFAULT_SEARCH_CAP,
};
use crate::rng::{derive_seed, stream};
use crate::stabilize::{sleep_indicator, OdometerValues};
use crate::stats::MeanEstimate;

/// Default number of indices the greedy rule scans for a Sleep.
pub const DEFAULT_LOOKAHEAD: u64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtendedError {
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("odometers live on different windows ([0, {0}] vs [0, {1}])")]
    WindowMismatch(usize, usize),
    #[error(transparent)]
    Stack(#[from] StackError),
}

/// Signed odometer on `[0, n]`; zero outside.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtendedOdometer {
    value: Vec<i64>,
    f0: i64,
}

impl ExtendedOdometer {
    pub fn n(&self) -> usize {
        self.value.len() - 1
    }

    pub fn u0(&self) -> i64 {
        self.value[0]
    }

    pub fn f0(&self) -> i64 {
        self.f0
    }

    #[inline]
    pub fn get(&self, site: i64) -> i64 {
        if site < 0 || site as usize >= self.value.len() {
            0
        } else {
            self.value[site as usize]
        }
    }

    pub fn values(&self) -> &[i64] {
        &self.value
    }

    pub fn is_nonnegative(&self) -> bool {
        self.value.iter().all(|&v| v >= 0)
    }

    /// `NR(0) - NL(1)`.
    pub fn flow<S: Stacks>(&self, stacks: &S) -> i64 {
        stacks.stack(0).jump_counts(self.get(0)).right
            - stacks.stack(1).jump_counts(self.get(1)).left
    }

    /// Right counts `NR(j)` for `j = 0..=n`.
    pub fn right_counts<S: Stacks>(&self, stacks: &S) -> Vec<i64> {
        (0..=self.n() as i64)
            .map(|j| stacks.stack(j).jump_counts(self.get(j)).right)
            .collect()
    }

    pub fn le(&self, other: &ExtendedOdometer) -> bool {
        self.value.len() == other.value.len()
            && self.value.iter().zip(&other.value).all(|(a, b)| a <= b)
    }
}

impl OdometerValues for ExtendedOdometer {
    fn value_at(&self, site: i64) -> i64 {
        self.get(site)
    }
}

/// Image of an extended odometer: `(r_j, s_j)` for `j = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfectionPath {
    pub steps: Vec<(i64, u64)>,
}

impl InfectionPath {
    pub fn last(&self) -> (i64, u64) {
        *self.steps.last().expect("paths have at least one step")
    }

    pub fn sleepers(&self) -> u64 {
        self.last().1
    }
}

/// One admissible value at the next site, with its counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    value: i64,
    right: i64,
    sleep: i64,
}

/// Walks the values of a site whose Left count equals a fixed target.
struct Candidates<'a, S> {
    stack: SiteStack<'a, S>,
    next: Option<Candidate>,
}

impl<'a, S: Stacks> Candidates<'a, S> {
    fn new(stack: SiteStack<'a, S>, left_target: i64, cap: u64) -> Result<Self, StackError> {
        let (value, counts) = stack.min_index_with_left_count(left_target, cap)?;
        // `value` holds a Left (or is 0), so nothing sleeps here
        let first = Candidate {
            value,
            right: counts.right,
            sleep: 0,
        };
        Ok(Self {
            stack,
            next: Some(first),
        })
    }
}

impl<S: Stacks> Iterator for Candidates<'_, S> {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        let cur = self.next?;
        let v = cur.value + 1;
        self.next = match self.stack.at(v) {
            Instruction::Left => None,
            Instruction::Right => Some(Candidate {
                value: v,
                right: cur.right + 1,
                sleep: 0,
            }),
            Instruction::Sleep => Some(Candidate {
                value: v,
                right: cur.right,
                sleep: i64::from(v != 0),
            }),
        };
        Some(cur)
    }
}

/// Per-site state carried by the forward propagation.
#[derive(Debug, Clone, Copy)]
struct SiteState {
    right: i64,
    left: i64,
    sleep: i64,
}

/// Shared inputs of every construction on `[0, n]`.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a, S> {
    pub sigma: &'a Configuration,
    pub u0: i64,
    pub f0: i64,
    pub n: usize,
    pub stacks: &'a S,
    pub search_cap: u64,
}

impl<'a, S: Stacks> Problem<'a, S> {
    pub fn new(sigma: &'a Configuration, u0: i64, f0: i64, n: usize, stacks: &'a S) -> Self {
        Self {
            sigma,
            u0,
            f0,
            n,
            stacks,
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }

    fn check(&self) -> Result<(), ExtendedError> {
        if self.n == 0 {
            Err(ExtendedError::EmptyWindow)
        } else {
            Ok(())
        }
    }

    fn origin(&self) -> SiteState {
        let c = self.stacks.stack(0).jump_counts(self.u0);
        SiteState {
            right: c.right,
            left: c.left,
            sleep: 0,
        }
    }

    /// Left count that site 1 must reach for the prescribed flow.
    fn first_target(&self, origin: &SiteState) -> i64 {
        origin.right - self.f0
    }

    /// Left count at `k + 1` forced by stability at `k`.
    fn target_after(&self, k: usize, prev: &SiteState, here: &SiteState) -> i64 {
        here.sleep - self.sigma.count(k as i64) as i64 - prev.right + here.left + here.right
    }

    fn candidates(&self, site: usize, target: i64) -> Result<Candidates<'a, S>, StackError> {
        Candidates::new(self.stacks.stack(site as i64), target, self.search_cap)
    }

    fn propagate<F>(&self, choose: F) -> Result<ExtendedOdometer, ExtendedError>
    where
        F: FnMut(usize, &mut Candidates<'a, S>) -> Candidate,
    {
        self.propagate_counted(choose).map(|(u, _)| u)
    }

    /// Runs the propagation, picking one candidate per site. Also returns
    /// the Right counts `NR(0..=n)` met along the way.
    fn propagate_counted<F>(
        &self,
        mut choose: F,
    ) -> Result<(ExtendedOdometer, Vec<i64>), ExtendedError>
    where
        F: FnMut(usize, &mut Candidates<'a, S>) -> Candidate,
    {
        self.check()?;
        let mut value = Vec::with_capacity(self.n + 1);
        value.push(self.u0);
        let mut prev = self.origin();
        let mut rights = Vec::with_capacity(self.n + 1);
        rights.push(prev.right);
        let mut target = self.first_target(&prev);
        let mut prev_prev: Option<SiteState> = None;
        for site in 1..=self.n {
            if let Some(pp) = prev_prev {
                target = self.target_after(site - 1, &pp, &prev);
            }
            let mut it = self.candidates(site, target)?;
            let pick = choose(site, &mut it);
            value.push(pick.value);
            rights.push(pick.right);
            let state = SiteState {
                right: pick.right,
                left: target,
                sleep: pick.sleep,
            };
            prev_prev = Some(prev);
            prev = state;
        }
        Ok((ExtendedOdometer { value, f0: self.f0 }, rights))
    }
}

/// Pointwise least member of the class: every site takes the smallest
/// value compatible with the flow at 0 and stability to its left.
pub fn minimal_odometer<S: Stacks>(
    sigma: &Configuration,
    u0: i64,
    f0: i64,
    n: usize,
    stacks: &S,
) -> Result<ExtendedOdometer, ExtendedError> {
    Problem::new(sigma, u0, f0, n, stacks).minimal()
}

impl<S: Stacks> Problem<'_, S> {
    pub fn minimal(&self) -> Result<ExtendedOdometer, ExtendedError> {
        self.minimal_with_right_counts().map(|(u, _)| u)
    }

    /// The minimal odometer together with its Right counts `NR(0..=n)`.
    pub fn minimal_with_right_counts(&self) -> Result<(ExtendedOdometer, Vec<i64>), ExtendedError> {
        self.propagate_counted(|_, it| it.next().expect("candidate walks are never empty"))
    }

    /// Sleep-seeking construction: at each site take the smallest admissible
    /// value whose last instruction is Sleep, scanning at most `lookahead`
    /// values past the smallest one; otherwise take the smallest.
    pub fn greedy(&self, lookahead: u64) -> Result<ExtendedOdometer, ExtendedError> {
        self.propagate(|_, it| {
            let first = it.next().expect("candidate walks are never empty");
            it.take(lookahead as usize)
                .find(|c| c.sleep == 1)
                .unwrap_or(first)
        })
    }

    /// Every member whose values stay within `value_cap` above the minimal
    /// odometer.
    pub fn enumerate(&self, value_cap: u64) -> Result<Enumeration, ExtendedError> {
        let minimal = self.minimal()?;
        let mut out = Enumeration {
            members: Vec::new(),
            truncated: false,
            minimal,
        };
        let origin = self.origin();
        let mut values = vec![self.u0];
        let mut states = vec![origin];
        let first = self.first_target(&origin);
        self.branch(1, first, value_cap, &mut values, &mut states, &mut out)?;
        Ok(out)
    }

    fn branch(
        &self,
        site: usize,
        target: i64,
        value_cap: u64,
        values: &mut Vec<i64>,
        states: &mut Vec<SiteState>,
        out: &mut Enumeration,
    ) -> Result<(), ExtendedError> {
        let ceiling = out.minimal.value[site].saturating_add(value_cap as i64);
        for cand in self.candidates(site, target)? {
            if cand.value > ceiling {
                out.truncated = true;
                break;
            }
            let state = SiteState {
                right: cand.right,
                left: target,
                sleep: cand.sleep,
            };
            values.push(cand.value);
            states.push(state);
            if site == self.n {
                out.members.push(ExtendedOdometer {
                    value: values.clone(),
                    f0: self.f0,
                });
            } else {
                let next = self.target_after(site, &states[site - 1], &state);
                self.branch(site + 1, next, value_cap, values, states, out)?;
            }
            values.pop();
            states.pop();
        }
        Ok(())
    }
}

/// Pruning rule for [`Problem::max_sleep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Beam {
    /// Sleeper levels kept below the current best.
    pub depth: u64,
    /// States kept per sleeper level.
    pub width: usize,
}

impl Default for Beam {
    fn default() -> Self {
        Self {
            depth: 4,
            width: 64,
        }
    }
}

/// A state of the propagation after some site: `(NR(k), s_k)` together with
/// the choice that produced it.
#[derive(Debug, Clone, Copy)]
struct Node {
    right: i64,
    sleepers: i64,
    value: i64,
    parent: u32,
}

impl<S: Stacks> Problem<'_, S> {
    /// Stable extended odometer with (near-)maximal sleeper count `s_n`.
    ///
    /// After site `k` the future only depends on `(NR(k), s_k)`: the Left
    /// count required at `k + 1` is `NR(k) + s_k - f0 - Z_k`, where `Z_k`
    /// counts particles of `sigma` on `[1, k]`. The search keeps every
    /// distinct state within `beam.depth` of the best sleeper level, at most
    /// `beam.width` per level, so with a deep and wide enough beam it returns
    /// an exact maximizer.
    pub fn max_sleep(&self, beam: Beam) -> Result<(ExtendedOdometer, u64), ExtendedError> {
        self.check()?;
        let origin = self.origin();
        let mut layers: Vec<Vec<Node>> = vec![vec![Node {
            right: origin.right,
            sleepers: 0,
            value: self.u0,
            parent: 0,
        }]];
        let mut z = 0i64;
        for site in 1..=self.n {
            let prev = layers.last().expect("origin layer");
            let offset = self.f0 + z;
            let targets: Vec<i64> = prev.iter().map(|s| s.right + s.sleepers - offset).collect();
            let lo = *targets.iter().min().expect("layers are never empty");
            let hi = *targets.iter().max().expect("layers are never empty");
            let blocks = self.blocks(site, lo, hi)?;
            let mut next: Vec<Node> = Vec::new();
            for (i, (state, &t)) in prev.iter().zip(&targets).enumerate() {
                for c in &blocks[(t - lo) as usize] {
                    next.push(Node {
                        right: c.right,
                        sleepers: state.sleepers + c.sleep,
                        value: c.value,
                        parent: i as u32,
                    });
                }
            }
            layers.push(prune(next, beam));
            z += self.sigma.count(site as i64) as i64;
        }
        let last = layers.last().expect("layers");
        let best = last
            .iter()
            .enumerate()
            .max_by_key(|(_, s)| (s.sleepers, std::cmp::Reverse(s.right)))
            .map(|(i, _)| i)
            .expect("nonempty");
        let mut value = vec![0i64; self.n + 1];
        let mut idx = best;
        for site in (0..=self.n).rev() {
            let node = layers[site][idx];
            value[site] = node.value;
            idx = node.parent as usize;
        }
        let sleepers = last[best].sleepers as u64;
        Ok((ExtendedOdometer { value, f0: self.f0 }, sleepers))
    }

    /// Candidate lists for every Left-count target in `[lo, hi]` at `site`.
    fn blocks(&self, site: usize, lo: i64, hi: i64) -> Result<Vec<Vec<Candidate>>, StackError> {
        let stack = self.stacks.stack(site as i64);
        let (start, counts) = stack.min_index_with_left_count(lo, self.search_cap)?;
        let mut blocks = vec![Vec::new(); (hi - lo + 1) as usize];
        let mut block = 0usize;
        let mut right = counts.right;
        blocks[0].push(Candidate {
            value: start,
            right,
            sleep: 0,
        });
        let mut p = start;
        loop {
            p += 1;
            if (p - start) as u64 > self.search_cap {
                return Err(StackError::SearchCapExceeded {
                    site: site as i64,
                    from: start,
                    cap: self.search_cap,
                });
            }
            let sleep = match stack.at(p) {
                Instruction::Left => {
                    block += 1;
                    if block == blocks.len() {
                        return Ok(blocks);
                    }
                    0
                }
                Instruction::Right => {
                    right += 1;
                    0
                }
                Instruction::Sleep => i64::from(p != 0),
            };
            blocks[block].push(Candidate {
                value: p,
                right,
                sleep,
            });
        }
    }
}

fn prune(mut states: Vec<Node>, beam: Beam) -> Vec<Node> {
    // dedupe on (sleepers, right); the first producer of a state wins
    states.sort_by_key(|s| (std::cmp::Reverse(s.sleepers), s.right, s.parent, s.value));
    states.dedup_by_key(|s| (s.sleepers, s.right));
    let best = states.first().map_or(0, |s| s.sleepers);
    let floor = best - beam.depth as i64;
    let mut out = Vec::with_capacity(states.len());
    for level in states
        .chunk_by(|a, b| a.sleepers == b.sleepers)
        .take_while(|lvl| lvl[0].sleepers >= floor)
    {
        if level.len() <= beam.width {
            out.extend_from_slice(level);
        } else {
            // evenly spaced in `right`, always keeping both ends
            let w = beam.width.max(2);
            out.extend((0..w).map(|i| level[i * (level.len() - 1) / (w - 1)]));
        }
    }
    out
}

/// Members of the class found by bounded enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub members: Vec<ExtendedOdometer>,
    /// Set when some admissible value exceeded the cap and was skipped.
    pub truncated: bool,
    pub minimal: ExtendedOdometer,
}

pub fn enumerate_stable_extended<S: Stacks>(
    sigma: &Configuration,
    u0: i64,
    f0: i64,
    n: usize,
    value_cap: u64,
    stacks: &S,
) -> Result<Enumeration, ExtendedError> {
    Problem::new(sigma, u0, f0, n, stacks).enumerate(value_cap)
}

pub fn greedy_stable_odometer<S: Stacks>(
    sigma: &Configuration,
    u0: i64,
    f0: i64,
    n: usize,
    stacks: &S,
) -> Result<ExtendedOdometer, ExtendedError> {
    Problem::new(sigma, u0, f0, n, stacks).greedy(DEFAULT_LOOKAHEAD)
}

/// `r_j = NR_u(j) - NR_m(j)`, `s_j = sum_{i=1}^{j} 1{Sleep at u(i)}`.
pub fn to_infection_path<S: Stacks>(
    u: &ExtendedOdometer,
    m: &ExtendedOdometer,
    stacks: &S,
) -> Result<InfectionPath, ExtendedError> {
    if u.n() != m.n() {
        return Err(ExtendedError::WindowMismatch(u.n(), m.n()));
    }
    let ru = u.right_counts(stacks);
    let rm = m.right_counts(stacks);
    let mut s = 0u64;
    let steps = (0..=u.n())
        .map(|j| {
            if j > 0 {
                s += sleep_indicator(stacks, j as i64, u.get(j as i64)) as u64;
            }
            (ru[j] - rm[j], s)
        })
        .collect();
    Ok(InfectionPath { steps })
}

/// How a replica builds its sleeper-rich stable odometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChatMethod {
    /// One step of lookahead per site.
    Greedy { lookahead: u64 },
    /// Level-set search over `(NR(k), s_k)`.
    Beam(Beam),
}

impl Default for ChatMethod {
    fn default() -> Self {
        ChatMethod::Beam(Beam::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub lambda: f64,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub u0: i64,
    pub f0: i64,
    pub method: ChatMethod,
}

impl ChatParams {
    pub fn new(lambda: f64, n: usize, replicas: usize, seed: u64) -> Self {
        Self {
            lambda,
            n,
            replicas,
            seed,
            u0: 0,
            f0: 0,
            method: ChatMethod::default(),
        }
    }
}

/// Sleeper count `s_n` of one replica, on an empty configuration.
pub fn replica_sleepers(params: &ChatParams, replica: u64) -> Result<u64, ExtendedError> {
    let rs = derive_seed(params.seed, replica);
    let stacks = HashedStacks::new(derive_seed(rs, stream::STACKS), params.lambda);
    let sigma = Configuration::empty(crate::configuration::Interval::new(1, 0));
    let problem = Problem::new(&sigma, params.u0, params.f0, params.n, &stacks);
    match params.method {
        ChatMethod::Greedy { lookahead } => {
            let g = problem.greedy(lookahead)?;
            Ok((1..=params.n as i64)
                .map(|i| sleep_indicator(&stacks, i, g.get(i)) as u64)
                .sum())
        }
        ChatMethod::Beam(beam) => problem.max_sleep(beam).map(|(_, s)| s),
    }
}

/// Mean of `s_n / n` over independent replicas.
pub fn estimate_chat(params: &ChatParams) -> Result<MeanEstimate, ExtendedError> {
    let rates = (0..params.replicas as u64)
        .into_par_iter()
        .map(|r| replica_sleepers(params, r).map(|s| s as f64 / params.n as f64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MeanEstimate::from_samples(&rates))
}
