//! Particle configurations on finite windows of `Z`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instructions::site_uniform;
use crate::rng::{derive_seed, mix64, unit_f64};

/// Integer interval `[lo, hi]`, possibly empty when `hi < lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub const fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    /// `[-half + 1, half - 1]`, the stable set used for windows of half-width `half`.
    pub const fn centered(half: i64) -> Self {
        Self::new(-half + 1, half - 1)
    }

    pub fn len(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    #[inline]
    pub fn contains(&self, site: i64) -> bool {
        self.lo <= site && site <= self.hi
    }

    pub fn sites(&self) -> impl DoubleEndedIterator<Item = i64> + Clone {
        self.lo..=self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("density must lie in [0, 1], got {0}")]
    InvalidDensity(f64),
    #[error("site {0} is outside the window")]
    OutOfWindow(i64),
    #[error("a sleeping particle must be alone (site {0})")]
    CrowdedSleeper(i64),
}

/// Particle counts and sleep flags on a window. Sites outside the window
/// hold no particles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    window: Interval,
    count: Vec<u32>,
    asleep: Vec<bool>,
}

impl Configuration {
    pub fn empty(window: Interval) -> Self {
        Self {
            window,
            count: vec![0; window.len()],
            asleep: vec![false; window.len()],
        }
    }

    /// Active particles at the listed sites (repeats stack up). The window is
    /// the hull of `window` and the listed sites.
    pub fn from_active_sites(window: Interval, sites: &[i64]) -> Self {
        let hull = sites
            .iter()
            .fold(window, |w, &s| w.hull(&Interval::new(s, s)));
        let mut c = Self::empty(hull);
        for &s in sites {
            c.count[(s - hull.lo) as usize] += 1;
        }
        c
    }

    pub fn from_counts(lo: i64, counts: Vec<u32>) -> Self {
        let window = Interval::new(lo, lo + counts.len() as i64 - 1);
        let asleep = vec![false; counts.len()];
        Self {
            window,
            count: counts,
            asleep,
        }
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    #[inline]
    pub fn count(&self, site: i64) -> u32 {
        if self.window.contains(site) {
            self.count[(site - self.window.lo) as usize]
        } else {
            0
        }
    }

    #[inline]
    pub fn is_asleep(&self, site: i64) -> bool {
        self.window.contains(site) && self.asleep[(site - self.window.lo) as usize]
    }

    /// True when the site holds at least one active particle.
    #[inline]
    pub fn is_active(&self, site: i64) -> bool {
        self.count(site) > 0 && !self.is_asleep(site)
    }

    pub fn total(&self) -> u64 {
        self.count.iter().map(|&c| c as u64).sum()
    }

    pub fn total_on(&self, set: Interval) -> u64 {
        set.sites().map(|s| self.count(s) as u64).sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.count
    }

    /// Grows the window so that it contains `site`.
    pub fn ensure_contains(&mut self, site: i64) {
        if self.window.contains(site) {
            return;
        }
        let new = if self.window.is_empty() {
            Interval::new(site, site)
        } else {
            self.window.hull(&Interval::new(site, site))
        };
        let shift = (self.window.lo - new.lo).max(0) as usize;
        let mut count = vec![0; new.len()];
        let mut asleep = vec![false; new.len()];
        count[shift..shift + self.count.len()].copy_from_slice(&self.count);
        asleep[shift..shift + self.asleep.len()].copy_from_slice(&self.asleep);
        self.window = new;
        self.count = count;
        self.asleep = asleep;
    }

    /// Adds one active particle, waking a sleeper already there.
    pub fn add_active(&mut self, site: i64) {
        self.ensure_contains(site);
        let i = (site - self.window.lo) as usize;
        self.count[i] += 1;
        self.asleep[i] = false;
    }

    pub fn set_asleep(&mut self, site: i64, asleep: bool) -> Result<(), ConfigError> {
        if !self.window.contains(site) {
            return Err(ConfigError::OutOfWindow(site));
        }
        let i = (site - self.window.lo) as usize;
        if asleep && self.count[i] != 1 {
            return Err(ConfigError::CrowdedSleeper(site));
        }
        self.asleep[i] = asleep;
        Ok(())
    }

    pub(crate) fn set_raw(&mut self, site: i64, count: u32, asleep: bool) {
        self.ensure_contains(site);
        let i = (site - self.window.lo) as usize;
        self.count[i] = count;
        self.asleep[i] = asleep;
    }

    /// Removes one particle from a site holding an active particle.
    pub(crate) fn take_one(&mut self, site: i64) {
        let i = (site - self.window.lo) as usize;
        self.count[i] -= 1;
        if self.count[i] == 0 {
            self.asleep[i] = false;
        }
    }

    pub fn sleeping_sites(&self) -> impl Iterator<Item = i64> + '_ {
        self.window.sites().filter(|&s| self.is_asleep(s))
    }
}

/// Independent Bernoulli(`rho`) active particles on `window`.
///
/// Site `v` is occupied iff its site uniform is below `rho`, so windows and
/// densities sampled from one seed are coupled: larger windows extend smaller
/// ones, larger densities add particles.
pub fn sample_bernoulli_config(
    rho: f64,
    window: Interval,
    seed: u64,
) -> Result<Configuration, ConfigError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(ConfigError::InvalidDensity(rho));
    }
    let counts = window
        .sites()
        .map(|v| u32::from(site_uniform(seed, v) < rho))
        .collect();
    Ok(Configuration::from_counts(window.lo, counts))
}

/// `k` active particles, each placed uniformly and independently on `window`.
pub fn sample_uniform_k_particle_config(k: u64, window: Interval, seed: u64) -> Configuration {
    let mut c = Configuration::empty(window);
    let len = window.len() as f64;
    if window.is_empty() {
        return c;
    }
    let key = derive_seed(seed, 0x6b70);
    for i in 0..k {
        let u = unit_f64(mix64(key ^ mix64(i)));
        let offset = ((u * len) as usize).min(window.len() - 1);
        c.count[offset] += 1;
    }
    c
}
