//! Summation of log-concave index series `Σ_i exp(L(i))`.
//!
//! Every series in the model (the kernel series in the index `a`, the neck
//! sums in `c`, the Gaussian combs) has a concave log-term. Terms are summed
//! outward from the mode; a side stops once the current term, weighted by its
//! squared distance to the mode, has dropped below `rel_cut` of the largest
//! such contribution and the geometric bound on the remainder (valid because
//! successive ratios only shrink) is below the same threshold.

use crate::numerics::logreal::{LogReal, LogSum};

/// Default relative cutoff for series truncation.
pub const SERIES_REL_CUT: f64 = 1e-18;

const MIN_SIDE_TERMS: i64 = 3;
const MAX_TERMS: usize = 50_000_000;
/// A side is closed once successive terms shrink by at least this factor;
/// the remainder is then bounded by the geometric tail `r/(1-r)`. This needs
/// the ratios to keep decreasing, true for log-concave terms and for
/// `a^p e^{-(a-1)t}`, whose upward ratio tends to `e^{-t}` from above.
const TAIL_RATIO: f64 = 0.9;

/// The retained window of a log-concave series.
#[derive(Clone, Debug)]
pub struct SeriesWindow {
    first: i64,
    logs: Vec<f64>,
    peak: i64,
}

impl SeriesWindow {
    /// Collects the terms of `log_term` over `min_index..=max_index`
    /// starting the search at `start`.
    pub fn collect<F>(log_term: F, start: i64, min_index: i64, max_index: i64, rel_cut: f64) -> Self
    where
        F: Fn(i64) -> f64,
    {
        assert!(min_index <= max_index);
        let mut peak = start.clamp(min_index, max_index);
        let mut peak_val = log_term(peak);
        // Hill-climb to the mode.
        loop {
            let mut moved = false;
            if peak < max_index {
                let v = log_term(peak + 1);
                if v > peak_val {
                    peak += 1;
                    peak_val = v;
                    moved = true;
                }
            }
            if !moved && peak > min_index {
                let v = log_term(peak - 1);
                if v > peak_val {
                    peak -= 1;
                    peak_val = v;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }

        let ln_cut = rel_cut.ln();
        let mut reference = f64::NEG_INFINITY;
        let mut up = Vec::new();
        let mut down = Vec::new();
        let mut hi = peak;
        let mut lo = peak;
        let mut up_open = hi < max_index;
        let mut down_open = lo > min_index;
        let mut up_prev = peak_val;
        let mut down_prev = peak_val;
        while (up_open || down_open) && up.len() + down.len() < MAX_TERMS {
            if up_open {
                hi += 1;
                let v = log_term(hi);
                up.push(v);
                let dist = (hi - peak) as f64;
                let contrib = v + 2.0 * dist.ln();
                reference = reference.max(contrib);
                let ratio = (v - up_prev).exp() * ((dist + 1.0) / dist).powi(2);
                up_prev = v;
                let done = hi - peak >= MIN_SIDE_TERMS
                    && ratio < TAIL_RATIO
                    && contrib + (ratio / (1.0 - ratio)).ln().max(0.0) < reference + ln_cut;
                if done || hi >= max_index || v == f64::NEG_INFINITY {
                    up_open = false;
                }
            }
            if down_open {
                lo -= 1;
                let v = log_term(lo);
                down.push(v);
                let dist = (peak - lo) as f64;
                let contrib = v + 2.0 * dist.ln();
                reference = reference.max(contrib);
                let ratio = (v - down_prev).exp() * ((dist + 1.0) / dist).powi(2);
                down_prev = v;
                let done = peak - lo >= MIN_SIDE_TERMS
                    && ratio < TAIL_RATIO
                    && contrib + (ratio / (1.0 - ratio)).ln().max(0.0) < reference + ln_cut;
                if done || lo <= min_index || v == f64::NEG_INFINITY {
                    down_open = false;
                }
            }
        }

        let mut logs = Vec::with_capacity(up.len() + down.len() + 1);
        logs.extend(down.iter().rev());
        logs.push(peak_val);
        logs.extend(up);
        SeriesWindow {
            first: lo,
            logs,
            peak,
        }
    }

    /// Wraps an explicit finite list of log-terms starting at index `first`.
    pub fn from_terms(first: i64, logs: Vec<f64>) -> Self {
        assert!(!logs.is_empty());
        let (pi, _) = logs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        SeriesWindow {
            first,
            logs,
            peak: first + pi as i64,
        }
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn last(&self) -> i64 {
        self.first + self.logs.len() as i64 - 1
    }

    pub fn peak(&self) -> i64 {
        self.peak
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn ln_max(&self) -> f64 {
        self.logs[(self.peak - self.first) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.logs
            .iter()
            .enumerate()
            .map(move |(i, &l)| (self.first + i as i64, l))
    }

    /// `ln Σ exp(L(i))`.
    pub fn ln_sum(&self) -> f64 {
        let m = self.ln_max();
        let s: f64 = self.logs.iter().map(|&l| (l - m).exp()).sum();
        m + s.ln()
    }

    /// `Σ g(i) exp(L(i))` for a signed weight `g`.
    pub fn weighted_sum<G: Fn(i64) -> f64>(&self, g: G) -> LogReal {
        let m = self.ln_max();
        let s: f64 = self.iter().map(|(i, l)| g(i) * (l - m).exp()).sum();
        LogReal::from_real(s).scale_ln(m)
    }

    /// Mean and variance of the index under the normalized weights, by a
    /// centered two-pass sum (no cancellation in the variance).
    pub fn index_moments(&self) -> IndexMoments {
        let m = self.ln_max();
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let peak = self.peak as f64;
        for (i, l) in self.iter() {
            let w = (l - m).exp();
            s0 += w;
            s1 += w * (i as f64 - peak);
        }
        let shift = s1 / s0;
        let mut s2 = 0.0;
        for (i, l) in self.iter() {
            let d = i as f64 - peak - shift;
            s2 += (l - m).exp() * d * d;
        }
        IndexMoments {
            ln_sum: m + s0.ln(),
            mean: peak + shift,
            variance: s2 / s0,
        }
    }

    /// Like [`index_moments`](Self::index_moments) but keeps the variance in
    /// log form, so a distribution pinned to one index up to `e^{-800}` still
    /// reports a meaningful spread.
    pub fn ln_moments(&self) -> LnMoments {
        let m = self.index_moments();
        let mut acc = LogSum::new();
        for (i, l) in self.iter() {
            let d = i as f64 - m.mean;
            if d != 0.0 {
                acc.push_ln(l + 2.0 * d.abs().ln());
            }
        }
        LnMoments {
            ln_sum: m.ln_sum,
            mean: m.mean,
            ln_variance: acc.value().ln_abs() - m.ln_sum,
        }
    }

    /// Normalized weight of index `i` (zero outside the window).
    pub fn ln_weight(&self, i: i64, ln_sum: f64) -> f64 {
        if i < self.first || i > self.last() {
            f64::NEG_INFINITY
        } else {
            self.logs[(i - self.first) as usize] - ln_sum
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexMoments {
    pub ln_sum: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LnMoments {
    pub ln_sum: f64,
    pub mean: f64,
    pub ln_variance: f64,
}
