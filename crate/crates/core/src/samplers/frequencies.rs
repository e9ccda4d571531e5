//! Integer frequency sets free of low-order interference.
//!
//! A set `w_1..w_n` interferes to order `m` when some non-trivial integer
//! combination `sum c_j w_j` vanishes with `sum |c_j| <= m + 1`. Harmonics of
//! one frequency then alias onto combinations of the others.

use std::collections::VecDeque;

const UNSEEN: u8 = u8::MAX;

/// Breadth-first table of the cheapest way to reach each integer from zero
/// using steps of +/- the given frequencies.
struct CombinationTable {
    limit: i64,
    cost: Vec<u8>,
    step: Vec<(u16, i8)>,
}

impl CombinationTable {
    fn build(freqs: &[u32], max_cost: usize, limit: i64) -> Self {
        let width = (2 * limit + 1) as usize;
        let mut cost = vec![UNSEEN; width];
        let mut step = vec![(0u16, 0i8); width];
        let origin = limit as usize;
        cost[origin] = 0;
        let mut queue = VecDeque::from([0i64]);
        while let Some(v) = queue.pop_front() {
            let c = cost[(v + limit) as usize];
            if c as usize >= max_cost {
                continue;
            }
            for (fi, &f) in freqs.iter().enumerate() {
                for sign in [1i8, -1] {
                    let next = v + sign as i64 * f as i64;
                    if next.abs() > limit {
                        continue;
                    }
                    let slot = (next + limit) as usize;
                    if cost[slot] == UNSEEN {
                        cost[slot] = c + 1;
                        step[slot] = (fi as u16, sign);
                        queue.push_back(next);
                    }
                }
            }
        }
        Self { limit, cost, step }
    }

    fn cost(&self, v: i64) -> Option<usize> {
        if v.abs() > self.limit {
            return None;
        }
        match self.cost[(v + self.limit) as usize] {
            UNSEEN => None,
            c => Some(c as usize),
        }
    }
}

/// Searches for a vanishing combination with `sum |c_j| <= order`.
///
/// Returns the coefficient vector when one exists.
pub fn find_interference(freqs: &[u32], order: usize) -> Option<Vec<i64>> {
    if freqs.iter().any(|&f| f == 0) {
        let mut c = vec![0; freqs.len()];
        let zero = freqs.iter().position(|&f| f == 0).unwrap();
        c[zero] = 1;
        return Some(c);
    }
    let max = freqs.iter().copied().max().unwrap_or(0) as i64;
    for j in 1..freqs.len() {
        let earlier = &freqs[..j];
        let table = CombinationTable::build(earlier, order, order as i64 * max);
        for m in 1..order {
            let target = m as i64 * freqs[j] as i64;
            if let Some(c) = table.cost(target) {
                if c + m <= order {
                    let mut coeffs = trace_back(&table, earlier, target);
                    coeffs.resize(freqs.len(), 0);
                    coeffs[j] = -(m as i64);
                    return Some(coeffs);
                }
            }
        }
    }
    None
}

fn trace_back(table: &CombinationTable, freqs: &[u32], mut v: i64) -> Vec<i64> {
    let mut coeffs = vec![0i64; freqs.len()];
    while v != 0 {
        let (fi, sign) = table.step[(v + table.limit) as usize];
        coeffs[fi as usize] += sign as i64;
        v -= sign as i64 * freqs[fi as usize] as i64;
    }
    coeffs
}

/// Renders a combination such as `1*11 - 11*1 = 0`.
pub fn describe_combination(freqs: &[u32], coeffs: &[i64]) -> String {
    let mut terms = Vec::new();
    for (&f, &c) in freqs.iter().zip(coeffs) {
        if c == 0 {
            continue;
        }
        let sign = if c < 0 { "-" } else { "+" };
        terms.push(format!("{sign} {}*{f}", c.abs()));
    }
    let mut text = terms.join(" ");
    if let Some(rest) = text.strip_prefix("+ ") {
        text = rest.to_string();
    }
    format!("{text} = 0")
}

/// Greedy smallest set of `count` frequencies free of interference to order
/// `harmonics` (combinations up to `harmonics + 1` terms), starting at 1.
pub fn interference_free_set(count: usize, harmonics: usize) -> Vec<u32> {
    let order = harmonics + 1;
    let mut set: Vec<u32> = Vec::with_capacity(count);
    let mut candidate = 1u32;
    while set.len() < count {
        set.push(candidate);
        if find_interference(&set, order).is_some() {
            set.pop();
        }
        candidate += 1;
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_sets() {
        assert_eq!(interference_free_set(1, 10), vec![1]);
        assert_eq!(interference_free_set(2, 10), vec![1, 11]);
        let set = interference_free_set(3, 4);
        assert_eq!(set[..2], [1, 5]);
        assert!(find_interference(&set, 5).is_none());
    }

    #[test]
    fn detects_and_describes() {
        let c = find_interference(&[1, 2], 5).unwrap();
        assert_eq!(c.iter().zip([1i64, 2]).map(|(c, f)| c * f).sum::<i64>(), 0);
        assert_eq!(describe_combination(&[1, 2], &c), "2*1 - 1*2 = 0");
        // duplicates always interfere
        assert!(find_interference(&[7, 7], 2).is_some());
        // 11 - 5 - 5 - 1 = 0 needs four terms
        assert!(find_interference(&[1, 5, 11], 4).is_some());
        assert!(find_interference(&[1, 5, 11], 3).is_none());
    }

    #[test]
    fn sets_are_free_brute_force() {
        // exhaustive check of every coefficient vector up to the order
        fn brute(freqs: &[u32], order: i64) -> bool {
            let n = freqs.len();
            let mut c = vec![-order; n];
            loop {
                let l1: i64 = c.iter().map(|v: &i64| v.abs()).sum();
                if l1 > 0 && l1 <= order {
                    let s: i64 = c.iter().zip(freqs).map(|(c, &f)| c * f as i64).sum();
                    if s == 0 {
                        return true;
                    }
                }
                let mut i = 0;
                loop {
                    if i == n {
                        return false;
                    }
                    c[i] += 1;
                    if c[i] <= order {
                        break;
                    }
                    c[i] = -order;
                    i += 1;
                }
            }
        }
        for harmonics in [2usize, 4] {
            let set = interference_free_set(4, harmonics);
            assert!(!brute(&set, harmonics as i64 + 1), "{set:?}");
        }
        assert!(brute(&[1, 5, 11], 4));
        assert!(!brute(&[1, 5, 11], 3));
    }
}
