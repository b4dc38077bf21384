//! Sitewise instruction stacks.
//!
//! Every site `k` of `Z` carries a bi-infinite stack of instructions indexed
//! by all integers. Indices `1, 2, ...` form the forward stack executed by
//! ordinary topplings; indices `0, -1, -2, ...` form the reverse extension
//! used by extended (signed) odometers.
//!
//! Counts are signed prefix sums: for a per-instruction indicator `c(j)`,
//! `count(u) = sum_{j=1}^{u} c(j)` when `u >= 0` and
//! `count(u) = -sum_{j=u+1}^{0} c(j)` when `u < 0`. With this convention
//! `count(u + 1) - count(u) = c(u + 1)` for every integer `u`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::rng::{mix64, unit_f64, GOLDEN};

/// Default bound on lazy stack scans.
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Sleep,
    Left,
    Right,
}

impl Instruction {
    pub fn is_sleep(self) -> bool {
        self == Instruction::Sleep
    }

    pub fn to_char(self) -> char {
        match self {
            Instruction::Sleep => 'S',
            Instruction::Left => 'L',
            Instruction::Right => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'S' => Some(Instruction::Sleep),
            'L' => Some(Instruction::Left),
            'R' => Some(Instruction::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StackError {
    #[error("instruction {index} at site {site} is {found}, not Sleep")]
    NotSleep {
        site: i64,
        index: i64,
        found: Instruction,
    },
    #[error("stack scan at site {site} exceeded {cap} instructions starting from index {from}")]
    SearchCapExceeded { site: i64, from: i64, cap: u64 },
    #[error("invalid fixture: {0}")]
    Fixture(String),
}

/// Signed jump counts executed by an odometer value at one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JumpCounts {
    pub left: i64,
    pub right: i64,
}

/// A source of instruction stacks for every site.
///
/// Implementations must be pure: the same `(site, index)` always yields the
/// same instruction.
pub trait Stacks: Sync {
    fn instruction_at(&self, site: i64, index: i64) -> Instruction;

    /// Per-site precomputation reused across many queries at one site.
    #[inline]
    fn site_key(&self, site: i64) -> u64 {
        site as u64
    }

    /// Same as `instruction_at`, given `key == self.site_key(site)`.
    #[inline]
    fn instruction_keyed(&self, key: u64, site: i64, index: i64) -> Instruction {
        let _ = key;
        self.instruction_at(site, index)
    }

    /// Left and Right counts among indices `from..=to`, given
    /// `key == self.site_key(site)`.
    fn counts_in(&self, key: u64, site: i64, from: i64, to: i64) -> JumpCounts {
        let mut c = JumpCounts::default();
        for j in from..=to {
            match self.instruction_keyed(key, site, j) {
                Instruction::Left => c.left += 1,
                Instruction::Right => c.right += 1,
                Instruction::Sleep => {}
            }
        }
        c
    }

    fn stack(&self, site: i64) -> SiteStack<'_, Self>
    where
        Self: Sized,
    {
        SiteStack {
            stacks: self,
            site,
            key: self.site_key(site),
        }
    }
}

impl<S: Stacks + ?Sized> Stacks for &S {
    #[inline]
    fn instruction_at(&self, site: i64, index: i64) -> Instruction {
        (**self).instruction_at(site, index)
    }

    #[inline]
    fn site_key(&self, site: i64) -> u64 {
        (**self).site_key(site)
    }

    #[inline]
    fn instruction_keyed(&self, key: u64, site: i64, index: i64) -> Instruction {
        (**self).instruction_keyed(key, site, index)
    }

    #[inline]
    fn counts_in(&self, key: u64, site: i64, from: i64, to: i64) -> JumpCounts {
        (**self).counts_in(key, site, from, to)
    }
}

/// Counter-based stacks: each instruction is a hash of `(seed, site, index)`.
///
/// Forward and reverse indices `j != 0` follow the law
/// `P(Sleep) = lambda / (1 + lambda)`, `P(Left) = P(Right) = 1 / (2 (1 + lambda))`.
/// Index 0 is never Sleep; it is Left or Right with probability 1/2 each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashedStacks {
    seed: u64,
    lambda: f64,
    sleep_below: u64,
    left_below: u64,
}

impl HashedStacks {
    /// Panics unless `lambda` is finite and positive.
    pub fn new(seed: u64, lambda: f64) -> Self {
        assert!(
            lambda.is_finite() && lambda > 0.0,
            "sleep rate must be positive, got {lambda}"
        );
        let p_sleep = lambda / (1.0 + lambda);
        let sleep_below = threshold(p_sleep);
        let left_below = sleep_below + (u64::MAX - sleep_below) / 2;
        Self {
            seed,
            lambda,
            sleep_below,
            left_below,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    fn key_for(&self, site: i64) -> u64 {
        mix64(self.seed ^ mix64((site as u64).wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d))
    }

    #[inline]
    fn decode(&self, key: u64, index: i64) -> Instruction {
        let h = mix64(key.wrapping_add((index as u64).wrapping_mul(GOLDEN)));
        if index == 0 {
            return if h >> 63 == 0 {
                Instruction::Left
            } else {
                Instruction::Right
            };
        }
        if h < self.sleep_below {
            Instruction::Sleep
        } else if h < self.left_below {
            Instruction::Left
        } else {
            Instruction::Right
        }
    }
}

fn threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else {
        // 2^64 * p, exact enough for a probability threshold
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

impl Stacks for HashedStacks {
    #[inline]
    fn instruction_at(&self, site: i64, index: i64) -> Instruction {
        self.decode(self.key_for(site), index)
    }

    #[inline]
    fn site_key(&self, site: i64) -> u64 {
        self.key_for(site)
    }

    #[inline]
    fn instruction_keyed(&self, key: u64, _site: i64, index: i64) -> Instruction {
        self.decode(key, index)
    }

    fn counts_in(&self, key: u64, _site: i64, from: i64, to: i64) -> JumpCounts {
        // branch-free tallies; the three outcomes are unpredictable
        let (mut left, mut right) = (0i64, 0i64);
        for j in from..=to {
            let h = mix64(key.wrapping_add((j as u64).wrapping_mul(GOLDEN)));
            if j == 0 {
                match self.decode(key, 0) {
                    Instruction::Left => left += 1,
                    _ => right += 1,
                }
                continue;
            }
            left += i64::from((h >= self.sleep_below) & (h < self.left_below));
            right += i64::from(h >= self.left_below);
        }
        JumpCounts { left, right }
    }
}

/// Free-function form of [`Stacks::instruction_at`] for hashed stacks.
pub fn instruction_at(seed: u64, lambda: f64, site: i64, index: i64) -> Instruction {
    HashedStacks::new(seed, lambda).instruction_at(site, index)
}

/// Explicit instruction prefixes layered over a fallback source.
///
/// Used to make hand-worked examples executable.
#[derive(Debug, Clone)]
pub struct FixtureStacks<S> {
    fallback: S,
    overrides: BTreeMap<(i64, i64), Instruction>,
}

impl<S: Stacks> FixtureStacks<S> {
    pub fn new(fallback: S) -> Self {
        Self {
            fallback,
            overrides: BTreeMap::new(),
        }
    }

    /// Sets the instructions at indices `1, 2, ...` of `site`.
    pub fn with_forward(mut self, site: i64, prefix: &[Instruction]) -> Self {
        for (i, &ins) in prefix.iter().enumerate() {
            self.overrides.insert((site, i as i64 + 1), ins);
        }
        self
    }

    pub fn with_instruction(mut self, site: i64, index: i64, ins: Instruction) -> Self {
        self.overrides.insert((site, index), ins);
        self
    }

    /// Parses `"0:R;1:SRS;2:S"` style strings: forward prefixes per site.
    /// An entry `site@index:XYZ` places the string starting at `index`.
    pub fn parse(fallback: S, text: &str) -> Result<Self, StackError> {
        let mut out = Self::new(fallback);
        for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            let (head, body) = entry
                .split_once(':')
                .ok_or_else(|| StackError::Fixture(format!("missing ':' in {entry:?}")))?;
            let (site, start) = match head.split_once('@') {
                Some((s, i)) => (parse_int(s)?, parse_int(i)?),
                None => (parse_int(head)?, 1),
            };
            for (offset, c) in body.trim().chars().enumerate() {
                let ins = Instruction::from_char(c).ok_or_else(|| {
                    StackError::Fixture(format!("unknown instruction {c:?} in {entry:?}"))
                })?;
                out.overrides.insert((site, start + offset as i64), ins);
            }
        }
        Ok(out)
    }
}

fn parse_int(s: &str) -> Result<i64, StackError> {
    s.trim()
        .parse()
        .map_err(|_| StackError::Fixture(format!("not an integer: {s:?}")))
}

impl<S: Stacks> Stacks for FixtureStacks<S> {
    fn instruction_at(&self, site: i64, index: i64) -> Instruction {
        match self.overrides.get(&(site, index)) {
            Some(&ins) => ins,
            None => self.fallback.instruction_at(site, index),
        }
    }

    fn site_key(&self, site: i64) -> u64 {
        self.fallback.site_key(site)
    }

    fn instruction_keyed(&self, key: u64, site: i64, index: i64) -> Instruction {
        match self.overrides.get(&(site, index)) {
            Some(&ins) => ins,
            None => self.fallback.instruction_keyed(key, site, index),
        }
    }

    fn counts_in(&self, key: u64, site: i64, from: i64, to: i64) -> JumpCounts {
        if from > to
            || self
                .overrides
                .range((site, from)..=(site, to))
                .next()
                .is_none()
        {
            return self.fallback.counts_in(key, site, from, to);
        }
        let mut c = JumpCounts::default();
        for j in from..=to {
            match self.instruction_keyed(key, site, j) {
                Instruction::Left => c.left += 1,
                Instruction::Right => c.right += 1,
                Instruction::Sleep => {}
            }
        }
        c
    }
}

/// Block length used when skipping ahead in long stack scans.
const SCAN_BLOCK: i64 = 256;

/// View of the stack at a single site.
#[derive(Debug)]
pub struct SiteStack<'a, S: ?Sized> {
    stacks: &'a S,
    site: i64,
    key: u64,
}

impl<S: ?Sized> Clone for SiteStack<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S: ?Sized> Copy for SiteStack<'_, S> {}

impl<'a, S: Stacks> SiteStack<'a, S> {
    pub fn site(&self) -> i64 {
        self.site
    }

    #[inline]
    pub fn at(&self, index: i64) -> Instruction {
        self.stacks.instruction_keyed(self.key, self.site, index)
    }

    /// Signed Left and Right counts within the first `u` instructions.
    pub fn jump_counts(&self, u: i64) -> JumpCounts {
        if u >= 0 {
            self.counts_in(1, u)
        } else {
            let c = self.counts_in(u + 1, 0);
            JumpCounts {
                left: -c.left,
                right: -c.right,
            }
        }
    }

    #[inline]
    fn counts_in(&self, from: i64, to: i64) -> JumpCounts {
        self.stacks.counts_in(self.key, self.site, from, to)
    }

    /// Maximal run of consecutive Sleep instructions containing `index`.
    pub fn sleep_run_bounds(&self, index: i64, cap: u64) -> Result<(i64, i64), StackError> {
        let found = self.at(index);
        if !found.is_sleep() {
            return Err(StackError::NotSleep {
                site: self.site,
                index,
                found,
            });
        }
        let mut lo = index;
        while self.at(lo - 1).is_sleep() {
            lo -= 1;
            if (index - lo) as u64 > cap {
                return Err(self.cap_error(index, cap));
            }
        }
        let mut hi = index;
        while self.at(hi + 1).is_sleep() {
            hi += 1;
            if (hi - index) as u64 > cap {
                return Err(self.cap_error(index, cap));
            }
        }
        Ok((lo, hi))
    }

    /// Largest `j <= index` whose instruction is not Sleep.
    pub fn first_non_sleep_at_or_before(&self, index: i64, cap: u64) -> Result<i64, StackError> {
        let mut j = index;
        while self.at(j).is_sleep() {
            if (index - j) as u64 >= cap {
                return Err(self.cap_error(index, cap));
            }
            j -= 1;
        }
        Ok(j)
    }

    /// Smallest `u` whose signed Left count equals `target`, with the Right
    /// count at that `u`.
    ///
    /// Such a `u` is always the index of a Left instruction: the `target`-th
    /// forward Left when `target >= 1`, otherwise the `(1 - target)`-th Left
    /// counting down from index 0.
    pub fn min_index_with_left_count(
        &self,
        target: i64,
        cap: u64,
    ) -> Result<(i64, JumpCounts), StackError> {
        let mut c = JumpCounts::default();
        if target >= 1 {
            let mut j = 0i64;
            loop {
                // skip whole blocks while they cannot reach the target
                while c.left + SCAN_BLOCK <= target && ((j + SCAN_BLOCK) as u64) <= cap {
                    let b = self.counts_in(j + 1, j + SCAN_BLOCK);
                    if c.left + b.left >= target {
                        break;
                    }
                    c.left += b.left;
                    c.right += b.right;
                    j += SCAN_BLOCK;
                }
                j += 1;
                if j as u64 > cap {
                    return Err(self.cap_error(1, cap));
                }
                match self.at(j) {
                    Instruction::Left => {
                        c.left += 1;
                        if c.left == target {
                            return Ok((j, c));
                        }
                    }
                    Instruction::Right => c.right += 1,
                    Instruction::Sleep => {}
                }
            }
        } else {
            // walking down: count(j - 1) = count(j) - c(j)
            let mut j = 0i64;
            loop {
                while c.left - SCAN_BLOCK >= target && ((SCAN_BLOCK - j) as u64) <= cap {
                    let b = self.counts_in(j - SCAN_BLOCK + 1, j);
                    if c.left - b.left <= target {
                        break;
                    }
                    c.left -= b.left;
                    c.right -= b.right;
                    j -= SCAN_BLOCK;
                }
                if (-j) as u64 > cap {
                    return Err(self.cap_error(0, cap));
                }
                match self.at(j) {
                    Instruction::Left => {
                        if c.left == target {
                            return Ok((j, c));
                        }
                        c.left -= 1;
                    }
                    Instruction::Right => c.right -= 1,
                    Instruction::Sleep => {}
                }
                j -= 1;
            }
        }
    }

    fn cap_error(&self, from: i64, cap: u64) -> StackError {
        StackError::SearchCapExceeded {
            site: self.site,
            from,
            cap,
        }
    }
}

/// Free-function form of [`SiteStack::jump_counts`].
pub fn jump_counts<S: Stacks>(stacks: &S, site: i64, u: i64) -> JumpCounts {
    stacks.stack(site).jump_counts(u)
}

/// Free-function form of [`SiteStack::sleep_run_bounds`].
pub fn sleep_run_bounds<S: Stacks>(
    stacks: &S,
    site: i64,
    index: i64,
) -> Result<(i64, i64), StackError> {
    stacks
        .stack(site)
        .sleep_run_bounds(index, DEFAULT_SEARCH_CAP)
}

/// Free-function form of [`SiteStack::first_non_sleep_at_or_before`].
pub fn first_non_sleep_at_or_before<S: Stacks>(
    stacks: &S,
    site: i64,
    index: i64,
    cap: u64,
) -> Result<i64, StackError> {
    stacks.stack(site).first_non_sleep_at_or_before(index, cap)
}

/// Uniform draw in `[0, 1)` attached to a site, independent of its stack.
pub(crate) fn site_uniform(seed: u64, site: i64) -> f64 {
    unit_f64(mix64(
        mix64(seed ^ 0xa076_1d64_78bd_642f) ^ (site as u64).wrapping_mul(GOLDEN),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Instruction::*;

    /// Everything not overridden is Sleep, with index 0 Right.
    #[derive(Debug, Clone, Copy)]
    struct AllSleep;

    impl Stacks for AllSleep {
        fn instruction_at(&self, _site: i64, index: i64) -> Instruction {
            if index == 0 {
                Right
            } else {
                Sleep
            }
        }
    }

    fn fixture(site: i64, prefix: &[Instruction]) -> FixtureStacks<AllSleep> {
        FixtureStacks::new(AllSleep).with_forward(site, prefix)
    }

    #[test]
    fn pure_queries() {
        let s = HashedStacks::new(99, 1.3);
        for j in -50..50 {
            assert_eq!(s.instruction_at(4, j), s.instruction_at(4, j));
            assert_eq!(s.instruction_at(-7, j), instruction_at(99, 1.3, -7, j));
        }
    }

    #[test]
    fn index_zero_is_never_sleep() {
        let s = HashedStacks::new(5, 50.0);
        assert!((-2000..2000).all(|k| !s.instruction_at(k, 0).is_sleep()));
    }

    #[test]
    fn jump_counts_examples() {
        let f = fixture(0, &[Right, Sleep, Left]);
        assert_eq!(f.stack(0).jump_counts(0), JumpCounts { left: 0, right: 0 });
        assert_eq!(f.stack(0).jump_counts(3), JumpCounts { left: 1, right: 1 });
        let f = FixtureStacks::new(AllSleep).with_instruction(0, 0, Left);
        assert_eq!(
            f.stack(0).jump_counts(-1),
            JumpCounts { left: -1, right: 0 }
        );
    }

    #[test]
    fn jump_count_increments_match_instruction() {
        let s = HashedStacks::new(3, 0.7);
        let st = s.stack(11);
        for u in -40..40 {
            let a = st.jump_counts(u - 1);
            let b = st.jump_counts(u);
            let d = (b.left - a.left, b.right - a.right);
            let expect = match st.at(u) {
                Left => (1, 0),
                Right => (0, 1),
                Sleep => (0, 0),
            };
            assert_eq!(d, expect, "u = {u}");
            let sleeps = if u >= 0 {
                (1..=u).filter(|&j| st.at(j).is_sleep()).count()
            } else {
                (u + 1..=0).filter(|&j| st.at(j).is_sleep()).count()
            } as i64;
            assert_eq!(u.abs() - b.left.abs() - b.right.abs(), sleeps);
        }
    }

    #[test]
    fn sleep_runs() {
        let f = FixtureStacks::new(AllSleep).with_forward(0, &[Right, Sleep, Sleep, Left]);
        assert_eq!(f.stack(0).sleep_run_bounds(2, 100), Ok((2, 3)));
        let f = FixtureStacks::new(AllSleep)
            .with_forward(0, &[Sleep, Right])
            .with_instruction(0, 0, Right);
        assert_eq!(f.stack(0).sleep_run_bounds(1, 100), Ok((1, 1)));
        assert!(matches!(
            f.stack(0).sleep_run_bounds(2, 100),
            Err(StackError::NotSleep { index: 2, .. })
        ));
    }

    #[test]
    fn first_non_sleep() {
        let f = fixture(0, &[Right]);
        assert_eq!(f.stack(0).first_non_sleep_at_or_before(1, 10), Ok(1));
        let f = fixture(0, &[Left, Sleep, Sleep]);
        assert_eq!(f.stack(0).first_non_sleep_at_or_before(3, 10), Ok(1));
        // indices 10..=110 are all Sleep with nothing below index 0 to stop at
        let f = FixtureStacks::new(AllSleep).with_instruction(0, 0, Sleep);
        let err = f
            .stack(0)
            .first_non_sleep_at_or_before(110, 100)
            .unwrap_err();
        assert!(matches!(err, StackError::SearchCapExceeded { .. }));
    }

    #[test]
    fn min_left_index_brute_force() {
        let s = HashedStacks::new(17, 1.0);
        let st = s.stack(2);
        for target in -12..12 {
            let (u, c) = st.min_index_with_left_count(target, 1 << 20).unwrap();
            let brute = (-500..500)
                .find(|&v| st.jump_counts(v).left == target)
                .unwrap();
            assert_eq!(u, brute, "target {target}");
            assert_eq!(c, st.jump_counts(u));
            assert_eq!(st.at(u), Left);
        }
    }

    #[test]
    fn block_skipping_matches_single_steps() {
        // only the required method, so every count goes one index at a time
        struct Plain(HashedStacks);
        impl Stacks for Plain {
            fn instruction_at(&self, site: i64, index: i64) -> Instruction {
                self.0.instruction_at(site, index)
            }
        }
        let s = HashedStacks::new(5, 0.7);
        let plain = Plain(s);
        for site in 0..3 {
            let fast = s.stack(site);
            let slow = plain.stack(site);
            for target in [-1500, -257, -256, -1, 0, 1, 255, 256, 257, 1500] {
                assert_eq!(
                    fast.min_index_with_left_count(target, 1 << 20),
                    slow.min_index_with_left_count(target, 1 << 20),
                );
            }
            for u in [-3000, -256, -1, 0, 1, 256, 3000] {
                assert_eq!(fast.jump_counts(u), slow.jump_counts(u));
            }
        }
    }

    #[test]
    fn fixture_parsing() {
        let f = FixtureStacks::parse(AllSleep, "0:R; 1:SRS;2@-1:LL").unwrap();
        assert_eq!(f.instruction_at(0, 1), Right);
        assert_eq!(f.instruction_at(1, 2), Right);
        assert_eq!(f.instruction_at(1, 3), Sleep);
        assert_eq!(f.instruction_at(2, -1), Left);
        assert_eq!(f.instruction_at(2, 0), Left);
        assert!(FixtureStacks::parse(AllSleep, "0:RX").is_err());
        assert!(FixtureStacks::parse(AllSleep, "zero:R").is_err());
    }
}
