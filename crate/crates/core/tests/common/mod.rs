#![allow(dead_code)]

use tonal_hmm::tied_hmm::{ObservationSeq, TiedHmmParams, TiedState};

/// Exhaustive sums over every state path.
pub struct Enumerated {
    pub total: f64,
    /// `q1[t][k]`.
    pub q1: Vec<Vec<f64>>,
    /// `q2[t][k][k']`.
    pub q2: Vec<Vec<Vec<f64>>>,
    pub best_path: Vec<usize>,
    pub best_prob: f64,
}

pub fn enumerate(
    n_states: usize,
    len: usize,
    prior: impl Fn(usize) -> f64,
    trans: impl Fn(usize, usize) -> f64,
    emit: impl Fn(usize, usize) -> f64,
) -> Enumerated {
    let mut out = Enumerated {
        total: 0.0,
        q1: vec![vec![0.0; n_states]; len],
        q2: vec![vec![vec![0.0; n_states]; n_states]; len.saturating_sub(1)],
        best_path: Vec::new(),
        best_prob: -1.0,
    };
    let mut path = vec![0usize; len];
    loop {
        let mut p = 1.0;
        for t in 0..len {
            p *= if t == 0 {
                prior(path[0])
            } else {
                trans(path[t - 1], path[t])
            };
            p *= emit(t, path[t]);
        }
        out.total += p;
        for t in 0..len {
            out.q1[t][path[t]] += p;
            if t + 1 < len {
                out.q2[t][path[t]][path[t + 1]] += p;
            }
        }
        if p > out.best_prob {
            out.best_prob = p;
            out.best_path = path.clone();
        }
        let mut i = len;
        loop {
            if i == 0 {
                normalize(&mut out);
                return out;
            }
            i -= 1;
            path[i] += 1;
            if path[i] < n_states {
                break;
            }
            path[i] = 0;
        }
    }
}

fn normalize(out: &mut Enumerated) {
    let z = out.total;
    for row in &mut out.q1 {
        row.iter_mut().for_each(|x| *x /= z);
    }
    for block in &mut out.q2 {
        for row in block {
            row.iter_mut().for_each(|x| *x /= z);
        }
    }
}

/// Enumeration over a tied model, with probabilities read straight from
/// the tied tables.
pub fn enumerate_tied(params: &TiedHmmParams, obs: &ObservationSeq) -> Enumerated {
    let s = params.n_states();
    enumerate(
        s,
        obs.len(),
        |_| 1.0 / s as f64,
        |a, b| params.transition(TiedState::from_index(a), TiedState::from_index(b)),
        |t, k| {
            obs.steps[t]
                .iter()
                .map(|&sym| params.emission(TiedState::from_index(k), sym))
                .product()
        },
    )
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Emission row of `type_id` with relative symbols shifted by `r`.
pub fn rotated_row(params: &TiedHmmParams, type_id: usize, r: usize) -> Vec<f64> {
    let row = params.emission_row(type_id);
    (0..row.len()).map(|j| row[(j / 12) * 12 + (j % 12 + r) % 12]).collect()
}

/// Smallest worst-type emission TV distance over type permutations and
/// per-type anchor rotations, with the permutation achieving it.
pub fn aligned_tv(truth: &TiedHmmParams, fitted: &TiedHmmParams) -> (f64, Vec<usize>) {
    let n = truth.n_types();
    let mut best = (f64::INFINITY, Vec::new());
    for perm in permutations(n) {
        let worst = (0..n)
            .map(|t| {
                (0..12)
                    .map(|r| total_variation(truth.emission_row(t), &rotated_row(fitted, perm[t], r)))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        if worst < best.0 {
            best = (worst, perm);
        }
    }
    best
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// A model with well-separated emission rows: type 0 favours {0,4,7},
/// type 1 {0,3,7}, type 2 {0,3,6,8}; transitions mix self-loops with
/// motion by fourths and fifths.
pub fn planted_params(n_types: usize) -> TiedHmmParams {
    use tonal_hmm::tied_hmm::ModelShape;
    let shape = ModelShape::new(n_types, 1);
    let tones: [&[usize]; 3] = [&[0, 4, 7], &[0, 3, 7], &[0, 3, 6, 8]];
    let mut emit = Vec::new();
    for t in 0..n_types {
        let chord = tones[t % 3];
        let mut row = [0.02; 12];
        for &r in chord {
            row[r] = 1.0;
        }
        let sum: f64 = row.iter().sum();
        emit.extend(row.iter().map(|x| x / sum));
    }
    let mut trans = Vec::new();
    for t1 in 0..n_types {
        let mut block = vec![0.0; n_types * 12];
        for t2 in 0..n_types {
            for d in 0..12 {
                let w = match d {
                    0 if t1 == t2 => 3.0,
                    5 | 7 => 1.5,
                    2 | 9 => 0.6,
                    _ => 0.1,
                };
                block[t2 * 12 + d] = w * if t1 == t2 { 1.0 } else { 0.7 };
            }
        }
        let sum: f64 = block.iter().sum();
        trans.extend(block.iter().map(|x| x / sum));
    }
    TiedHmmParams::new(shape, trans, emit).unwrap()
}
