//! Clustering-agreement metrics, summary statistics and simulation studies.

mod sim;

pub use sim::{
    em_vs_gem, mixture_centers, model_selection, sim_mixture, sim_mixture_data, sim_weighted_single, sim_weighted_single_data, EmGemConfig,
    EmGemOutcome, MethodRun, MixtureSimConfig, Regime, SelectionChoice, SelectionConfig, SelectionOutcome, SimSummary, Stat, SummaryRow,
    WeightedSingleConfig,
};

use crate::error::{Error, Result};
use crate::geometry::{distance, HyperPoint};
use crate::mixture::Responsibilities;

/// Largest label count for exhaustive permutation alignment.
pub const MAX_ALIGN_K: usize = 8;

/// Row-wise argmax, ties to the lowest index.
pub fn hard_assign(resp: &Responsibilities) -> Vec<usize> {
    (0..resp.n())
        .map(|i| {
            let row = resp.row(i);
            let mut best = 0;
            for (k, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Vec<Vec<f64>>> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!("label vectors differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Contract("label vectors are empty".into()));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut t = vec![vec![0.0; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        t[i][j] += 1.0;
    }
    Ok(t)
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from the contingency table.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = a.len() as f64;
    let sum_ij: f64 = t.iter().flatten().map(|&v| comb2(v)).sum();
    let rows: f64 = t.iter().map(|r| comb2(r.iter().sum())).sum();
    let cols: f64 = (0..t[0].len()).map(|j| comb2(t.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / comb2(n);
    let max = 0.5 * (rows + cols);
    if max == expected {
        // Both partitions trivial in the same way.
        return Ok(if sum_ij == expected { 1.0 } else { 0.0 });
    }
    Ok((sum_ij - expected) / (max - expected))
}

fn entropy(counts: impl Iterator<Item = f64>, n: f64) -> f64 {
    counts.filter(|&c| c > 0.0).map(|c| -(c / n) * (c / n).ln()).sum()
}

/// Mutual information normalized by the arithmetic mean of the two entropies.
pub fn normalized_mutual_info(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = a.len() as f64;
    let ra: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let cb: Vec<f64> = (0..t[0].len()).map(|j| t.iter().map(|r| r[j]).sum()).collect();
    let ha = entropy(ra.iter().copied(), n);
    let hb = entropy(cb.iter().copied(), n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in t.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                mi += v / n * (n * v / (ra[i] * cb[j])).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Fraction of points in the majority truth class of their predicted cluster.
pub fn purity(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = contingency(pred, truth)?;
    let hit: f64 = t.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).sum();
    Ok(hit / truth.len() as f64)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    fn rec(p: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
        if i == p.len() {
            out.push(p.clone());
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            rec(p, i + 1, out);
            p.swap(i, j);
        }
    }
    rec(&mut p, 0, &mut out);
    out.sort();
    out
}

/// Error rate after relabelling `pred` by the permutation that minimizes it.
pub fn misclassification(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = contingency(truth, pred)?;
    let k = t.len().max(t[0].len());
    if k > MAX_ALIGN_K {
        return Err(Error::Domain(format!("label alignment supports at most {MAX_ALIGN_K} labels, got {k}")));
    }
    let cell = |i: usize, j: usize| t.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
    let best = permutations(k)
        .iter()
        .map(|p| (0..k).map(|j| cell(p[j], j)).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(1.0 - best / truth.len() as f64)
}

/// Permutation `p` minimizing `Σ_k d(truth[k], est[p[k]])`, and that mean error.
pub fn align_centers(truth: &[HyperPoint], est: &[HyperPoint]) -> Result<(Vec<usize>, f64)> {
    if truth.len() != est.len() || truth.is_empty() {
        return Err(Error::Contract("center lists must be nonempty and equally long".into()));
    }
    let k = truth.len();
    if k > MAX_ALIGN_K {
        return Err(Error::Domain(format!("center alignment supports at most {MAX_ALIGN_K} components")));
    }
    let mut dist = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            dist[i][j] = distance(&truth[i], &est[j])?;
        }
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for p in permutations(k) {
        let s: f64 = (0..k).map(|i| dist[i][p[i]]).sum();
        if best.as_ref().is_none_or(|b| s < b.1) {
            best = Some((p, s));
        }
    }
    let (p, s) = best.unwrap();
    Ok((p, s / k as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub ari: f64,
    pub nmi: f64,
    pub purity: f64,
    pub misclassification: f64,
    pub mean_max_responsibility: f64,
    pub mean_entropy: f64,
}

/// Agreement metrics between `truth` and `pred` plus responsibility sharpness.
pub fn cluster_metrics(truth: &[usize], pred: &[usize], resp: &Responsibilities) -> Result<MetricReport> {
    if resp.n() != truth.len() {
        return Err(Error::Contract("responsibilities and labels differ in length".into()));
    }
    let n = resp.n() as f64;
    let mut max_sum = 0.0;
    let mut ent_sum = 0.0;
    for i in 0..resp.n() {
        let row = resp.row(i);
        max_sum += row.iter().copied().fold(0.0, f64::max);
        ent_sum += row.iter().filter(|&&r| r > 0.0).map(|&r| -r * r.ln()).sum::<f64>();
    }
    Ok(MetricReport {
        ari: adjusted_rand(truth, pred)?,
        nmi: normalized_mutual_info(truth, pred)?,
        purity: purity(truth, pred)?,
        misclassification: misclassification(truth, pred)?,
        mean_max_responsibility: max_sum / n,
        mean_entropy: ent_sum / n,
    })
}

/// Median and interquartile range, linearly interpolating order statistics.
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Domain("cannot summarize an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Ok((q(0.5), q(0.75) - q(0.25)))
}
