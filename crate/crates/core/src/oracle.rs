//! Brute-force reference computations for tests. Written against the raw
//! parameter arrays with explicit index loops, sharing no code with the
//! model's own inference paths.

use crate::model::{HarmoniumParams, MultiViewSample, StructureMode};

pub fn gate(p: &HarmoniumParams, k: usize, j: usize) -> f64 {
    match &p.structure {
        StructureMode::Dwh => 1.0,
        StructureMode::Mvh { mask } => f64::from(u8::from(mask[[k, j]])),
        StructureMode::Sa => 1.0 / (1.0 + (-p.switches[[k, j]]).exp()),
    }
}

pub fn hidden_shifted(p: &HarmoniumParams, v: &MultiViewSample) -> Vec<f64> {
    let mut out = vec![0.0; p.hidden_dim];
    for j in 0..p.hidden_dim {
        let mut acc = p.hidden_bias[j];
        for k in 0..p.views.len() {
            for i in 0..p.views[k].dim {
                acc += gate(p, k, j) * p.weights[k][[i, j]] * v.values[k][i];
            }
        }
        out[j] = acc;
    }
    out
}

pub fn visible_shifted(p: &HarmoniumParams, h: &[f64], k: usize) -> Vec<f64> {
    (0..p.views[k].dim)
        .map(|i| {
            let mut acc = p.visible_bias[k][i];
            for j in 0..p.hidden_dim {
                acc += gate(p, k, j) * p.weights[k][[i, j]] * h[j];
            }
            acc
        })
        .collect()
}

/// Bernoulli-only joint energy with positive bias terms.
pub fn energy(p: &HarmoniumParams, v: &[Vec<f64>], h: &[f64]) -> f64 {
    let mut e = 0.0;
    for k in 0..p.views.len() {
        for i in 0..p.views[k].dim {
            for j in 0..p.hidden_dim {
                e += gate(p, k, j) * p.weights[k][[i, j]] * v[k][i] * h[j];
            }
            e += p.visible_bias[k][i] * v[k][i];
        }
    }
    for j in 0..p.hidden_dim {
        e += p.hidden_bias[j] * h[j];
    }
    e
}

pub fn bits(n: usize, count: usize) -> Vec<f64> {
    (0..count).map(|b| ((n >> b) & 1) as f64).collect()
}

pub fn split_views(p: &HarmoniumParams, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut at = 0;
    for v in &p.views {
        out.push(flat[at..at + v.dim].to_vec());
        at += v.dim;
    }
    out
}

/// Full joint probability table indexed `[visible_bits][hidden_bits]`.
pub fn joint_table(p: &HarmoniumParams) -> Vec<Vec<f64>> {
    let d: usize = p.views.iter().map(|v| v.dim).sum();
    let nv = 1usize << d;
    let nh = 1usize << p.hidden_dim;
    let mut table = vec![vec![0.0; nh]; nv];
    let mut z = 0.0;
    for (vb, row) in table.iter_mut().enumerate() {
        let v = split_views(p, &bits(vb, d));
        for (hb, cell) in row.iter_mut().enumerate() {
            *cell = energy(p, &v, &bits(hb, p.hidden_dim)).exp();
            z += *cell;
        }
    }
    for row in &mut table {
        for cell in row.iter_mut() {
            *cell /= z;
        }
    }
    table
}

pub fn flat_index(v: &MultiViewSample) -> usize {
    let mut idx = 0;
    let mut at = 0;
    for view in &v.values {
        for &x in view {
            if x == 1.0 {
                idx |= 1 << at;
            }
            at += 1;
        }
    }
    idx
}

pub fn log_likelihood(p: &HarmoniumParams, data: &[MultiViewSample]) -> f64 {
    let table = joint_table(p);
    data.iter()
        .map(|s| table[flat_index(s)].iter().sum::<f64>().ln())
        .sum::<f64>()
        / data.len() as f64
}

/// `p(h_j = 1 | v)` for each `j`.
pub fn hidden_posterior(p: &HarmoniumParams, v: &MultiViewSample) -> Vec<f64> {
    let table = joint_table(p);
    let row = &table[flat_index(v)];
    let total: f64 = row.iter().sum();
    (0..p.hidden_dim)
        .map(|j| {
            row.iter()
                .enumerate()
                .filter(|(hb, _)| (hb >> j) & 1 == 1)
                .map(|(_, q)| q)
                .sum::<f64>()
                / total
        })
        .collect()
}

/// `p(v_i = 1)` for every visible node, flattened across views.
pub fn visible_marginals(p: &HarmoniumParams) -> Vec<f64> {
    let d: usize = p.views.iter().map(|v| v.dim).sum();
    let table = joint_table(p);
    (0..d)
        .map(|i| {
            table
                .iter()
                .enumerate()
                .filter(|(vb, _)| (vb >> i) & 1 == 1)
                .map(|(_, row)| row.iter().sum::<f64>())
                .sum()
        })
        .collect()
}
