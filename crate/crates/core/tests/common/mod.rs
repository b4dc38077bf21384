//! Brute-force oracles shared by the integration tests. They only use the
//! raw instruction lookup, never the library's counting or search code.

#![allow(dead_code)]

use arw::{Configuration, Instruction, Interval, Stacks};

/// Signed `(NL, NR)` after `u` instructions, counted one index at a time.
pub fn counts<S: Stacks>(stacks: &S, site: i64, u: i64) -> (i64, i64) {
    let (mut l, mut r) = (0, 0);
    let (range, sign) = if u >= 0 { (1..=u, 1) } else { (u + 1..=0, -1) };
    for j in range {
        match stacks.instruction_at(site, j) {
            Instruction::Left => l += sign,
            Instruction::Right => r += sign,
            Instruction::Sleep => {}
        }
    }
    (l, r)
}

pub fn sleeps<S: Stacks>(stacks: &S, site: i64, u: i64) -> i64 {
    i64::from(u != 0 && stacks.instruction_at(site, u) == Instruction::Sleep)
}

/// Mass-balance residual at `v` for an odometer given as a function.
pub fn residual<S: Stacks>(
    stacks: &S,
    sigma: &Configuration,
    u: &dyn Fn(i64) -> i64,
    v: i64,
) -> i64 {
    let (_, r_left) = counts(stacks, v - 1, u(v - 1));
    let (l_right, _) = counts(stacks, v + 1, u(v + 1));
    let (l, r) = counts(stacks, v, u(v));
    sigma.count(v) as i64 + r_left + l_right - l - r - sleeps(stacks, v, u(v))
}

/// Every nonnegative odometer supported on `set`, with values at most `cap`,
/// that is stable on `set`. Depth-first with the residual at `v` checked as
/// soon as `u(v + 1)` is fixed.
pub fn stable_odometers<S: Stacks>(
    stacks: &S,
    sigma: &Configuration,
    set: Interval,
    cap: i64,
) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut vals = Vec::with_capacity(set.len());
    fn go<S: Stacks>(
        stacks: &S,
        sigma: &Configuration,
        set: Interval,
        cap: i64,
        vals: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        let at = |vals: &Vec<i64>| {
            let vals = vals.clone();
            move |x: i64| {
                if x < set.lo || x > set.hi {
                    0
                } else {
                    vals.get((x - set.lo) as usize).copied().unwrap_or(0)
                }
            }
        };
        if vals.len() == set.len() {
            let f = at(vals);
            if residual(stacks, sigma, &f, set.hi) == 0 {
                out.push(vals.clone());
            }
            return;
        }
        for x in 0..=cap {
            vals.push(x);
            let k = vals.len() as i64;
            // the site left of the newest one now has both neighbours fixed
            let ok = k < 2 || residual(stacks, sigma, &at(vals), set.lo + k - 2) == 0;
            if ok {
                go(stacks, sigma, set, cap, vals, out);
            }
            vals.pop();
        }
    }
    go(stacks, sigma, set, cap, &mut vals, &mut out);
    out
}

/// Every signed odometer on `[0, n]` with `u(0) = u0`, flow `f0` and
/// stability on `[1, n - 1]` whose values lie in `[lo(k), hi(k)]`.
pub fn extended_in_box<S: Stacks>(
    stacks: &S,
    sigma: &Configuration,
    u0: i64,
    f0: i64,
    lo: &[i64],
    hi: &[i64],
) -> Vec<Vec<i64>> {
    let n = lo.len() - 1;
    let mut out = Vec::new();
    let mut vals = vec![u0];
    fn go<S: Stacks>(
        stacks: &S,
        sigma: &Configuration,
        f0: i64,
        lo: &[i64],
        hi: &[i64],
        vals: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        let n = lo.len() - 1;
        if vals.len() == n + 1 {
            out.push(vals.clone());
            return;
        }
        let k = vals.len();
        for x in lo[k]..=hi[k] {
            vals.push(x);
            let snapshot = vals.clone();
            let u = move |v: i64| {
                if v < 0 || v as usize >= snapshot.len() {
                    0
                } else {
                    snapshot[v as usize]
                }
            };
            let ok = if k == 1 {
                counts(stacks, 0, u(0)).1 - counts(stacks, 1, u(1)).0 == f0
            } else {
                residual(stacks, sigma, &u, k as i64 - 1) == 0
            };
            if ok {
                go(stacks, sigma, f0, lo, hi, vals, out);
            }
            vals.pop();
        }
    }
    if n >= 1 {
        go(stacks, sigma, f0, lo, hi, &mut vals, &mut out);
    }
    out
}

/// Sleep runs as seen by a plain scan: `a` and `b` are in one run iff every
/// index between them (inclusive) holds Sleep.
pub fn same_sleep_run<S: Stacks>(stacks: &S, site: i64, a: i64, b: i64) -> bool {
    let (lo, hi) = (a.min(b), a.max(b));
    (lo..=hi).all(|j| stacks.instruction_at(site, j) == Instruction::Sleep)
}
