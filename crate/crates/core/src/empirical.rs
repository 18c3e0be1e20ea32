//! Rank-based pseudo-observations, the empirical copula and sample Kendall's tau.

use serde::{Deserialize, Serialize};

use crate::copula::UnitPair;
use crate::error::{Error, Result};

/// Paired observations `(x_i, y_i)` with `n >= 2` finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pairs: Vec<(f64, f64)>,
}

impl RawSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 observations, got {}", pairs.len())));
        }
        if let Some(i) = pairs.iter().position(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::Domain(format!("observation {} is not finite: {:?}", i + 1, pairs[i])));
        }
        Ok(RawSample { pairs })
    }

    pub fn from_columns(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Contract(format!("column lengths differ: {} vs {}", x.len(), y.len())));
        }
        RawSample::new(x.iter().copied().zip(y.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

/// Pseudo-observations `(rank(x_i) / (n + 1), rank(y_i) / (n + 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    points: Vec<UnitPair>,
}

impl PseudoSample {
    /// Wrap points that are already pseudo-observations (all strictly inside the unit square).
    pub fn from_points(points: Vec<UnitPair>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.is_interior()) {
            return Err(Error::Domain(format!("pseudo-observation ({}, {}) is not interior", p.u, p.v)));
        }
        Ok(PseudoSample { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[UnitPair] {
        &self.points
    }

    /// The same sample with the coordinates exchanged.
    pub fn swapped(&self) -> Self {
        PseudoSample { points: self.points.iter().map(UnitPair::swapped).collect() }
    }
}

/// Mid-ranks (1-based, ties averaged) in O(n log n).
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share the average of ranks i+1..=j.
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Rescaled ranks of each margin.
pub fn pseudo_observations(raw: &RawSample) -> PseudoSample {
    let n = raw.len() as f64;
    let ru = mid_ranks(&raw.xs());
    let rv = mid_ranks(&raw.ys());
    let points = ru.into_iter().zip(rv).map(|(a, b)| UnitPair { u: a / (n + 1.0), v: b / (n + 1.0) }).collect();
    PseudoSample { points }
}

/// Pseudo-observations of a sample already on the unit square (e.g. a copula draw).
pub fn pseudo_observations_of_pairs(points: &[UnitPair]) -> Result<PseudoSample> {
    let raw = RawSample::new(points.iter().map(|p| (p.u, p.v)).collect())?;
    Ok(pseudo_observations(&raw))
}

/// Empirical copula `C_n(u, v) = #{i : u_i <= u, v_i <= v} / n`.
pub fn empirical_copula(ps: &PseudoSample, p: UnitPair) -> f64 {
    let count = ps.points.iter().filter(|q| q.u <= p.u && q.v <= p.v).count();
    count as f64 / ps.len() as f64
}

/// Empirical copula evaluated at every pseudo-observation.
pub fn empirical_copula_at_points(ps: &PseudoSample) -> Vec<f64> {
    ps.points.iter().map(|p| empirical_copula(ps, *p)).collect()
}

/// Kendall's tau-b, computed with Knight's O(n log n) merge-sort algorithm.
pub fn kendall_tau_sample(raw: &RawSample) -> Result<f64> {
    let n = raw.len();
    let mut pairs: Vec<(f64, f64)> = raw.pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n * (n - 1) / 2) as f64;
    let tie_pairs = |counts: &mut dyn Iterator<Item = usize>| counts.map(|t| (t * (t.saturating_sub(1)) / 2) as f64).sum::<f64>();

    // Ties in x, and joint ties in (x, y).
    let mut x_runs = Vec::new();
    let mut xy_runs = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        x_runs.push(j - i);
        let mut k = i;
        while k < j {
            let mut m = k + 1;
            while m < j && pairs[m].1 == pairs[k].1 {
                m += 1;
            }
            xy_runs.push(m - k);
            k = m;
        }
        i = j;
    }
    let n1 = tie_pairs(&mut x_runs.into_iter());
    let n3 = tie_pairs(&mut xy_runs.into_iter());

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys) as f64;

    // After sorting, ys holds y in order; count y ties.
    let mut y_runs = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        y_runs.push(j - i);
        i = j;
    }
    let n2 = tie_pairs(&mut y_runs.into_iter());

    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateData("Kendall's tau is undefined when a margin is entirely tied".into()));
    }
    let concordant_minus_discordant = n0 - n1 - n2 + n3 - 2.0 * swaps;
    Ok((concordant_minus_discordant / denom).clamp(-1.0, 1.0))
}

/// Sort `v` ascending and return the number of strict inversions.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut buf = v.to_vec();
    let mut swaps = 0u64;
    let mut width = 1;
    let mut src_is_v = true;
    while width < n {
        {
            let (src, dst): (&[f64], &mut [f64]) = if src_is_v { (&*v, &mut buf[..]) } else { (&buf[..], &mut *v) };
            // Re-borrow trick is awkward with both slices; copy src when needed.
            let src = src.to_vec();
            let mut start = 0;
            while start < n {
                let mid = (start + width).min(n);
                let end = (start + 2 * width).min(n);
                let (mut i, mut j, mut k) = (start, mid, start);
                while i < mid && j < end {
                    if src[j] < src[i] {
                        dst[k] = src[j];
                        swaps += (mid - i) as u64;
                        j += 1;
                    } else {
                        dst[k] = src[i];
                        i += 1;
                    }
                    k += 1;
                }
                dst[k..k + (mid - i)].copy_from_slice(&src[i..mid]);
                k += mid - i;
                dst[k..k + (end - j)].copy_from_slice(&src[j..end]);
                start = end;
            }
        }
        src_is_v = !src_is_v;
        width *= 2;
    }
    if !src_is_v {
        v.copy_from_slice(&buf);
    }
    swaps
}
