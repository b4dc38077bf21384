//! Legal topplings, stabilization of finite windows, and mass balance.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::{Configuration, Interval};
use crate::instructions::{Instruction, Stacks};

/// Default bound on the number of topplings in one stabilization.
pub const DEFAULT_TOPPLE_CAP: u64 = 1_000_000_000;

/// Anything that assigns an instruction count to every site.
pub trait OdometerValues {
    fn value_at(&self, site: i64) -> i64;
}

/// Nonnegative instruction counts, zero outside `window`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Odometer {
    window: Interval,
    value: Vec<u64>,
}

impl Odometer {
    pub fn zero(window: Interval) -> Self {
        Self {
            window,
            value: vec![0; window.len()],
        }
    }

    pub fn from_values(lo: i64, value: Vec<u64>) -> Self {
        Self {
            window: Interval::new(lo, lo + value.len() as i64 - 1),
            value,
        }
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    #[inline]
    pub fn get(&self, site: i64) -> u64 {
        if self.window.contains(site) {
            self.value[(site - self.window.lo) as usize]
        } else {
            0
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.value
    }

    pub fn total(&self) -> u64 {
        self.value.iter().sum()
    }

    fn increment(&mut self, site: i64) -> u64 {
        if !self.window.contains(site) {
            let new = if self.window.is_empty() {
                Interval::new(site, site)
            } else {
                self.window.hull(&Interval::new(site, site))
            };
            let shift = (self.window.lo - new.lo).max(0) as usize;
            let mut value = vec![0; new.len()];
            value[shift..shift + self.value.len()].copy_from_slice(&self.value);
            self.window = new;
            self.value = value;
        }
        let v = &mut self.value[(site - self.window.lo) as usize];
        *v += 1;
        *v
    }

    /// Pointwise `self <= other` on the union of both windows.
    pub fn le(&self, other: &Odometer) -> bool {
        let w = self.window.hull(&other.window);
        w.sites().all(|s| self.get(s) <= other.get(s))
    }
}

impl OdometerValues for Odometer {
    fn value_at(&self, site: i64) -> i64 {
        self.get(site) as i64
    }
}

impl<F: Fn(i64) -> i64> OdometerValues for F {
    fn value_at(&self, site: i64) -> i64 {
        self(site)
    }
}

/// Order in which active sites are toppled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Policy {
    /// Repeated left-to-right passes, emptying each active site in turn.
    Sweep,
    /// Always topple the rightmost site holding an active particle.
    #[default]
    RightmostFirst,
    /// Uniformly random active site, driven by a seeded generator.
    RandomActive { seed: u64 },
    /// First-in first-out queue of activated sites.
    Queue,
}

impl Policy {
    pub const ALL_NAMES: [&'static str; 4] = ["sweep", "rightmost", "random", "queue"];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Sweep => "sweep",
            Policy::RightmostFirst => "rightmost",
            Policy::RandomActive { .. } => "random",
            Policy::Queue => "queue",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sweep" => Ok(Policy::Sweep),
            "rightmost" => Ok(Policy::RightmostFirst),
            "queue" => Ok(Policy::Queue),
            "random" => Ok(Policy::RandomActive { seed: 0 }),
            _ => s
                .strip_prefix("random:")
                .and_then(|x| x.parse().ok())
                .map(|seed| Policy::RandomActive { seed })
                .ok_or_else(|| format!("unknown policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizeOptions {
    pub policy: Policy,
    pub cap: u64,
    /// Abort once the odometer at `.0` exceeds `.1`.
    pub watch: Option<(i64, u64)>,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        Self {
            policy: Policy::default(),
            cap: DEFAULT_TOPPLE_CAP,
            watch: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationResult {
    pub odometer: Odometer,
    /// Configuration on the stable set.
    pub final_config: Configuration,
    pub topple_count: u64,
    /// Particles frozen left of the stable set (including any placed there initially).
    pub exited_left: u64,
    pub exited_right: u64,
}

impl StabilizationResult {
    pub fn remaining(&self) -> u64 {
        self.final_config.total()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilizeError {
    #[error("toppling cap of {cap} reached before stabilization; nonfixation suspected")]
    CapExceeded {
        cap: u64,
        partial: Box<StabilizationResult>,
    },
    #[error("odometer at site {site} exceeded {threshold}; nonfixation suspected")]
    WatchExceeded {
        site: i64,
        threshold: u64,
        partial: Box<StabilizationResult>,
    },
    #[error("cap must be positive")]
    ZeroCap,
}

impl StabilizeError {
    pub fn partial(&self) -> Option<&StabilizationResult> {
        match self {
            StabilizeError::CapExceeded { partial, .. }
            | StabilizeError::WatchExceeded { partial, .. } => Some(partial),
            StabilizeError::ZeroCap => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToppleError {
    #[error("site {0} holds no active particle")]
    NoActiveParticle(i64),
}

/// What one toppling did to the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Effect {
    Moved(i64),
    FellAsleep,
    Nothing,
}

#[inline]
fn effect_of(ins: Instruction, count_here: u32) -> Effect {
    match ins {
        Instruction::Left => Effect::Moved(-1),
        Instruction::Right => Effect::Moved(1),
        Instruction::Sleep if count_here == 1 => Effect::FellAsleep,
        Instruction::Sleep => Effect::Nothing,
    }
}

/// Executes the next instruction at `site`, which must hold an active particle.
///
/// Returns the executed instruction. Configuration and odometer windows grow
/// as needed.
pub fn legal_topple<S: Stacks>(
    config: &mut Configuration,
    odometer: &mut Odometer,
    stacks: &S,
    site: i64,
) -> Result<Instruction, ToppleError> {
    if !config.is_active(site) {
        return Err(ToppleError::NoActiveParticle(site));
    }
    let index = odometer.increment(site);
    let ins = stacks.instruction_at(site, index as i64);
    match effect_of(ins, config.count(site)) {
        Effect::Moved(d) => {
            config.take_one(site);
            config.add_active(site + d);
        }
        Effect::FellAsleep => config.set_raw(site, 1, true),
        Effect::Nothing => {}
    }
    Ok(ins)
}

/// Mutable stabilization state on a stable set `V`. Particles leaving `V`
/// are frozen and only counted.
#[derive(Debug, Clone)]
pub struct Stabilizer<'s, S> {
    stacks: &'s S,
    set: Interval,
    keys: Vec<u64>,
    count: Vec<u32>,
    asleep: Vec<bool>,
    odometer: Vec<u64>,
    topples: u64,
    exited_left: u64,
    exited_right: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Halt {
    Cap,
    Watch,
}

impl<'s, S: Stacks> Stabilizer<'s, S> {
    pub fn new(stacks: &'s S, set: Interval, config: &Configuration) -> Self {
        let n = set.len();
        let mut count = vec![0u32; n];
        let mut asleep = vec![false; n];
        let (mut exited_left, mut exited_right) = (0, 0);
        for site in config.window().sites() {
            let c = config.count(site);
            if set.contains(site) {
                let i = (site - set.lo) as usize;
                count[i] = c;
                asleep[i] = config.is_asleep(site);
            } else if site < set.lo {
                exited_left += c as u64;
            } else {
                exited_right += c as u64;
            }
        }
        Self {
            stacks,
            set,
            keys: set.sites().map(|s| stacks.site_key(s)).collect(),
            count,
            asleep,
            odometer: vec![0; n],
            topples: 0,
            exited_left,
            exited_right,
        }
    }

    pub fn set(&self) -> Interval {
        self.set
    }

    pub fn topples(&self) -> u64 {
        self.topples
    }

    pub fn odometer_at(&self, site: i64) -> u64 {
        if self.set.contains(site) {
            self.odometer[(site - self.set.lo) as usize]
        } else {
            0
        }
    }

    pub fn particles(&self) -> u64 {
        self.count.iter().map(|&c| c as u64).sum()
    }

    pub fn exited(&self) -> (u64, u64) {
        (self.exited_left, self.exited_right)
    }

    /// Adds an active particle at a site of the stable set, waking a sleeper.
    pub fn inject(&mut self, site: i64) {
        assert!(self.set.contains(site), "injection outside the stable set");
        let i = (site - self.set.lo) as usize;
        self.count[i] += 1;
        self.asleep[i] = false;
    }

    #[inline]
    fn active(&self, i: usize) -> bool {
        self.count[i] > 0 && !self.asleep[i]
    }

    /// Topples index `i`; returns the index that received a particle, if any.
    #[inline]
    fn topple(&mut self, i: usize) -> Option<usize> {
        self.topples += 1;
        self.odometer[i] += 1;
        let site = self.set.lo + i as i64;
        let ins = self
            .stacks
            .instruction_keyed(self.keys[i], site, self.odometer[i] as i64);
        match effect_of(ins, self.count[i]) {
            Effect::Moved(d) => {
                self.count[i] -= 1;
                if d < 0 {
                    if i == 0 {
                        self.exited_left += 1;
                        return None;
                    }
                    self.count[i - 1] += 1;
                    self.asleep[i - 1] = false;
                    Some(i - 1)
                } else {
                    if i + 1 == self.count.len() {
                        self.exited_right += 1;
                        return None;
                    }
                    self.count[i + 1] += 1;
                    self.asleep[i + 1] = false;
                    Some(i + 1)
                }
            }
            Effect::FellAsleep => {
                self.asleep[i] = true;
                None
            }
            Effect::Nothing => None,
        }
    }

    /// Topples until no site of the stable set holds an active particle.
    pub fn run(&mut self, opts: &StabilizeOptions) -> Result<(), StabilizeError> {
        if opts.cap == 0 {
            return Err(StabilizeError::ZeroCap);
        }
        let budget = self.topples.saturating_add(opts.cap);
        let watch = opts.watch.and_then(|(site, thr)| {
            self.set
                .contains(site)
                .then(|| ((site - self.set.lo) as usize, thr))
        });
        let outcome = match opts.policy {
            Policy::RightmostFirst => self.run_rightmost(budget, watch),
            Policy::Sweep => self.run_sweep(budget, watch),
            Policy::Queue => self.run_queue(budget, watch),
            Policy::RandomActive { seed } => self.run_random(seed, budget, watch),
        };
        match outcome {
            Ok(()) => Ok(()),
            Err(Halt::Cap) => Err(StabilizeError::CapExceeded {
                cap: opts.cap,
                partial: Box::new(self.snapshot()),
            }),
            Err(Halt::Watch) => {
                let (site, threshold) = opts.watch.expect("watch halt without watch");
                Err(StabilizeError::WatchExceeded {
                    site,
                    threshold,
                    partial: Box::new(self.snapshot()),
                })
            }
        }
    }

    #[inline]
    fn guard(&self, i: usize, budget: u64, watch: Option<(usize, u64)>) -> Result<(), Halt> {
        if self.topples >= budget {
            return Err(Halt::Cap);
        }
        if let Some((w, thr)) = watch {
            if w == i && self.odometer[i] >= thr {
                return Err(Halt::Watch);
            }
        }
        Ok(())
    }

    fn run_rightmost(&mut self, budget: u64, watch: Option<(usize, u64)>) -> Result<(), Halt> {
        // no active site lies right of `c`
        let mut c = self.count.len() as isize - 1;
        loop {
            while c >= 0 && !self.active(c as usize) {
                c -= 1;
            }
            if c < 0 {
                return Ok(());
            }
            let i = c as usize;
            self.guard(i, budget, watch)?;
            if let Some(j) = self.topple(i) {
                if j > i {
                    c += 1;
                }
            }
        }
    }

    fn run_sweep(&mut self, budget: u64, watch: Option<(usize, u64)>) -> Result<(), Halt> {
        loop {
            let mut any = false;
            for i in 0..self.count.len() {
                while self.active(i) {
                    self.guard(i, budget, watch)?;
                    self.topple(i);
                    any = true;
                }
            }
            if !any {
                return Ok(());
            }
        }
    }

    fn run_queue(&mut self, budget: u64, watch: Option<(usize, u64)>) -> Result<(), Halt> {
        let mut queued = vec![false; self.count.len()];
        let mut queue: VecDeque<usize> =
            (0..self.count.len()).filter(|&i| self.active(i)).collect();
        for &i in &queue {
            queued[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            if !self.active(i) {
                continue;
            }
            self.guard(i, budget, watch)?;
            if let Some(j) = self.topple(i) {
                if !queued[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
            if self.active(i) && !queued[i] {
                queued[i] = true;
                queue.push_back(i);
            }
        }
        Ok(())
    }

    fn run_random(
        &mut self,
        seed: u64,
        budget: u64,
        watch: Option<(usize, u64)>,
    ) -> Result<(), Halt> {
        const ABSENT: usize = usize::MAX;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut members: Vec<usize> = (0..self.count.len()).filter(|&i| self.active(i)).collect();
        let mut pos = vec![ABSENT; self.count.len()];
        for (p, &i) in members.iter().enumerate() {
            pos[i] = p;
        }
        let sync = |this: &Self, members: &mut Vec<usize>, pos: &mut Vec<usize>, i: usize| {
            let active = this.active(i);
            if active && pos[i] == ABSENT {
                pos[i] = members.len();
                members.push(i);
            } else if !active && pos[i] != ABSENT {
                let p = pos[i];
                let last = *members.last().expect("member set out of sync");
                members.swap_remove(p);
                if last != i {
                    pos[last] = p;
                }
                pos[i] = ABSENT;
            }
        };
        while !members.is_empty() {
            let i = members[rng.gen_range(0..members.len())];
            self.guard(i, budget, watch)?;
            let landed = self.topple(i);
            sync(self, &mut members, &mut pos, i);
            if let Some(j) = landed {
                sync(self, &mut members, &mut pos, j);
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> StabilizationResult {
        let mut final_config = Configuration::from_counts(self.set.lo, self.count.clone());
        for (i, &a) in self.asleep.iter().enumerate() {
            if a {
                final_config
                    .set_asleep(self.set.lo + i as i64, true)
                    .expect("sleeper invariant broken");
            }
        }
        StabilizationResult {
            odometer: Odometer::from_values(self.set.lo, self.odometer.clone()),
            final_config,
            topple_count: self.topples,
            exited_left: self.exited_left,
            exited_right: self.exited_right,
        }
    }
}

/// Stabilizes `config` on `stable_set` under the given policy.
///
/// By the abelian property the odometer and final configuration do not
/// depend on the policy.
pub fn stabilize<S: Stacks>(
    config: &Configuration,
    stable_set: Interval,
    stacks: &S,
    policy: Policy,
    cap: u64,
) -> Result<StabilizationResult, StabilizeError> {
    stabilize_with(
        config,
        stable_set,
        stacks,
        &StabilizeOptions {
            policy,
            cap,
            watch: None,
        },
    )
}

pub fn stabilize_with<S: Stacks>(
    config: &Configuration,
    stable_set: Interval,
    stacks: &S,
    opts: &StabilizeOptions,
) -> Result<StabilizationResult, StabilizeError> {
    let mut engine = Stabilizer::new(stacks, stable_set, config);
    engine.run(opts)?;
    Ok(engine.snapshot())
}

/// Sleep indicator of the last executed instruction; value 0 reads nothing.
#[inline]
pub fn sleep_indicator<S: Stacks>(stacks: &S, site: i64, value: i64) -> i64 {
    i64::from(value != 0 && stacks.instruction_at(site, value).is_sleep())
}

/// `sigma(v) + NR(v-1) + NL(v+1) - NL(v) - NR(v) - 1{Sleep at u(v)}`.
/// Zero means `u` is stable at `site`.
pub fn mass_balance_residual<O, S>(
    odometer: &O,
    sigma: &Configuration,
    stacks: &S,
    site: i64,
) -> i64
where
    O: OdometerValues + ?Sized,
    S: Stacks,
{
    let here = odometer.value_at(site);
    let own = stacks.stack(site).jump_counts(here);
    let from_left = stacks
        .stack(site - 1)
        .jump_counts(odometer.value_at(site - 1));
    let from_right = stacks
        .stack(site + 1)
        .jump_counts(odometer.value_at(site + 1));
    sigma.count(site) as i64 + from_left.right + from_right.left
        - own.left
        - own.right
        - sleep_indicator(stacks, site, here)
}

pub fn is_stable_on<O, S>(odometer: &O, sigma: &Configuration, stacks: &S, set: Interval) -> bool
where
    O: OdometerValues + ?Sized,
    S: Stacks,
{
    set.sites()
        .all(|v| mass_balance_residual(odometer, sigma, stacks, v) == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::sample_bernoulli_config;
    use crate::instructions::{FixtureStacks, HashedStacks};
    use Instruction::*;

    fn policies() -> [Policy; 4] {
        [
            Policy::Sweep,
            Policy::RightmostFirst,
            Policy::RandomActive { seed: 5 },
            Policy::Queue,
        ]
    }

    fn worked_example() -> (Configuration, FixtureStacks<HashedStacks>) {
        let stacks = FixtureStacks::new(HashedStacks::new(1, 1.0))
            .with_forward(0, &[Right])
            .with_forward(1, &[Sleep, Right, Sleep])
            .with_forward(2, &[Sleep]);
        (
            Configuration::from_active_sites(Interval::new(0, 2), &[0, 1]),
            stacks,
        )
    }

    #[test]
    fn empty_configuration_stays_put() {
        let stacks = HashedStacks::new(3, 1.0);
        let r = stabilize(
            &Configuration::empty(Interval::new(-4, 4)),
            Interval::new(-4, 4),
            &stacks,
            Policy::default(),
            10,
        )
        .unwrap();
        assert_eq!(r.odometer.total(), 0);
        assert_eq!(r.topple_count, 0);
    }

    #[test]
    fn lone_particle_sleeps_first() {
        let stacks = FixtureStacks::new(HashedStacks::new(3, 1.0)).with_forward(0, &[Sleep]);
        let config = Configuration::from_active_sites(Interval::new(-2, 2), &[0]);
        for p in policies() {
            let r = stabilize(&config, Interval::new(-2, 2), &stacks, p, 100).unwrap();
            assert_eq!(r.odometer.values(), &[0, 0, 1, 0, 0]);
            assert!(r.final_config.is_asleep(0));
            assert_eq!(r.final_config.total(), 1);
        }
    }

    #[test]
    fn three_site_worked_example() {
        let (config, stacks) = worked_example();
        for p in policies() {
            let r = stabilize(&config, Interval::new(0, 2), &stacks, p, 100).unwrap();
            assert_eq!(r.odometer.values(), &[1, 3, 1], "{p}");
            assert_eq!(
                r.final_config.sleeping_sites().collect::<Vec<_>>(),
                vec![1, 2]
            );
            assert_eq!(r.final_config.count(0), 0);
            assert_eq!(r.topple_count, 5);
            assert!(is_stable_on(
                &r.odometer,
                &config,
                &stacks,
                Interval::new(0, 2)
            ));
            assert_eq!(mass_balance_residual(&r.odometer, &config, &stacks, 1), 0);
        }
    }

    #[test]
    fn topple_rules() {
        let stacks = FixtureStacks::new(HashedStacks::new(3, 1.0)).with_forward(0, &[Sleep, Right]);
        let mut c = Configuration::from_active_sites(Interval::new(0, 1), &[0, 0]);
        let mut o = Odometer::zero(Interval::new(0, 1));
        assert_eq!(legal_topple(&mut c, &mut o, &stacks, 0), Ok(Sleep));
        assert_eq!((c.count(0), c.is_active(0), o.get(0)), (2, true, 1));

        // a sleeper at 1 wakes up when a particle lands on it
        let mut c = Configuration::from_active_sites(Interval::new(0, 1), &[0, 1]);
        c.set_asleep(1, true).unwrap();
        let mut o = Odometer::from_values(0, vec![1, 0]);
        assert_eq!(legal_topple(&mut c, &mut o, &stacks, 0), Ok(Right));
        assert_eq!(c.count(1), 2);
        assert!(c.is_active(1));
        assert_eq!(c.count(0), 0);

        assert_eq!(
            legal_topple(&mut c, &mut o, &stacks, 0),
            Err(ToppleError::NoActiveParticle(0))
        );
        assert_eq!(
            legal_topple(&mut c, &mut o, &stacks, 7),
            Err(ToppleError::NoActiveParticle(7))
        );
    }

    #[test]
    fn legal_topple_replays_stabilize() {
        // rightmost-first by hand through the public toppling primitive
        let stacks = HashedStacks::new(77, 0.8);
        let set = Interval::new(-6, 6);
        let config = sample_bernoulli_config(0.6, set, 9).unwrap();
        let mut c = config.clone();
        let mut o = Odometer::zero(set);
        while let Some(site) = set.sites().rev().find(|&s| c.is_active(s)) {
            legal_topple(&mut c, &mut o, &stacks, site).unwrap();
        }
        let r = stabilize(&config, set, &stacks, Policy::Queue, 1 << 30).unwrap();
        assert!(set.sites().all(|s| r.odometer.get(s) == o.get(s)));
        assert!(set.sites().all(|s| r.final_config.count(s) == c.count(s)
            && r.final_config.is_asleep(s) == c.is_asleep(s)));
    }

    #[test]
    fn cap_overflow_carries_partial() {
        let stacks = HashedStacks::new(1, 0.5);
        let set = Interval::new(0, 49);
        let config = Configuration::from_counts(0, vec![1; 50]);
        let err = stabilize(&config, set, &stacks, Policy::default(), 20).unwrap_err();
        match err {
            StabilizeError::CapExceeded { cap, partial } => {
                assert_eq!(cap, 20);
                assert_eq!(partial.topple_count, 20);
                assert_eq!(partial.odometer.total(), 20);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            stabilize(&config, set, &stacks, Policy::default(), 0).unwrap_err(),
            StabilizeError::ZeroCap
        );
    }

    #[test]
    fn watch_threshold() {
        let stacks = HashedStacks::new(1, 0.5);
        let set = Interval::new(-30, 30);
        let config = Configuration::from_counts(-30, vec![1; 61]);
        let opts = StabilizeOptions {
            watch: Some((0, 5)),
            ..Default::default()
        };
        let err = stabilize_with(&config, set, &stacks, &opts).unwrap_err();
        let partial = err.partial().unwrap();
        assert_eq!(partial.odometer.get(0), 5);
    }

    #[test]
    fn particles_initially_outside_are_frozen() {
        let stacks = HashedStacks::new(4, 1.0);
        let config = Configuration::from_counts(-3, vec![1, 1, 1, 1, 1, 1, 1]);
        let r = stabilize(
            &config,
            Interval::new(-2, 2),
            &stacks,
            Policy::default(),
            1 << 20,
        )
        .unwrap();
        assert_eq!(r.remaining() + r.exited_left + r.exited_right, 7);
        assert!(r.exited_left >= 1 && r.exited_right >= 1);
        assert_eq!(r.odometer.window(), Interval::new(-2, 2));
    }

    #[test]
    fn zero_odometer_residuals() {
        let stacks = HashedStacks::new(2, 1.0);
        let zero = Odometer::zero(Interval::new(-3, 3));
        let empty = Configuration::empty(Interval::new(-3, 3));
        assert!((-3..=3).all(|v| mass_balance_residual(&zero, &empty, &stacks, v) == 0));
        let one = Configuration::from_active_sites(Interval::new(-3, 3), &[1]);
        assert_eq!(mass_balance_residual(&zero, &one, &stacks, 1), 1);
        assert!(!is_stable_on(&zero, &one, &stacks, Interval::new(-3, 3)));
    }

    #[test]
    fn policy_names_round_trip() {
        for p in policies() {
            let parsed: Policy = p.name().parse().unwrap();
            assert_eq!(parsed.name(), p.name());
        }
        assert_eq!(
            "random:9".parse::<Policy>(),
            Ok(Policy::RandomActive { seed: 9 })
        );
        assert!("lifo".parse::<Policy>().is_err());
    }
}
