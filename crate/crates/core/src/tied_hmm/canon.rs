//! Canonical anchors and type orderings.
//!
//! A fitted model is only identified up to a per-type rotation of anchors
//! and a permutation of types. Canonicalization fixes the rotation so each
//! type's most probable emission sits at relative pitch class 0.

use rayon::prelude::*;

use super::{viterbi, LabelTrack, ObservationSeq, TiedHmmParams, TiedState};
use crate::error::Result;

/// Rotated parameters with the offset applied to each type.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonicalization {
    pub params: TiedHmmParams,
    /// `offsets[t]`: the new anchor of a type-`t` state is old anchor + offset.
    pub offsets: Vec<u8>,
}

impl Canonicalization {
    pub fn map_state(&self, state: TiedState) -> TiedState {
        state.relabel(self.offsets[state.type_id], state.type_id)
    }
}

impl TiedState {
    fn relabel(self, offset: u8, type_id: usize) -> TiedState {
        TiedState {
            anchor: self.anchor.transpose(offset as i32),
            type_id,
        }
    }
}

/// Rotates each type so its largest emission (lowest index on ties) has
/// relative pitch class 0. The likelihood of any sequence is unchanged.
pub fn canonicalize(params: &TiedHmmParams) -> Canonicalization {
    let shape = params.shape();
    let n = shape.n_types;
    let offsets: Vec<u8> = (0..n)
        .map(|t| {
            let row = params.emission_row(t);
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            (best % 12) as u8
        })
        .collect();
    let mut trans = vec![0.0; shape.trans_len()];
    for t1 in 0..n {
        for t2 in 0..n {
            for d in 0..12 {
                let old = (d + 24 - offsets[t2] as usize + offsets[t1] as usize) % 12;
                trans[shape.trans_index(d, t1, t2)] = params.f(old, t1, t2);
            }
        }
    }
    let mut emit = vec![0.0; shape.emit_len()];
    for t in 0..n {
        for c in 0..shape.n_classes {
            for r in 0..12 {
                emit[shape.emit_index(t, c, r)] = params.mu(t, c, (r + offsets[t] as usize) % 12);
            }
        }
    }
    Canonicalization {
        params: TiedHmmParams::from_parts_unchecked(shape, trans, emit),
        offsets,
    }
}

/// Renumbers types: type `t` becomes `perm[t]`.
///
/// # Panics
/// If `perm` is not a permutation of `0..n_types`.
pub fn permute_types(params: &TiedHmmParams, perm: &[usize]) -> TiedHmmParams {
    let shape = params.shape();
    let n = shape.n_types;
    let mut seen = vec![false; n];
    assert_eq!(perm.len(), n, "permutation length");
    for &p in perm {
        assert!(p < n && !seen[p], "not a permutation: {perm:?}");
        seen[p] = true;
    }
    let mut trans = vec![0.0; shape.trans_len()];
    for t1 in 0..n {
        for t2 in 0..n {
            for d in 0..12 {
                trans[shape.trans_index(d, perm[t1], perm[t2])] = params.f(d, t1, t2);
            }
        }
    }
    let k = shape.n_symbols();
    let mut emit = vec![0.0; shape.emit_len()];
    for t in 0..n {
        emit[perm[t] * k..(perm[t] + 1) * k].copy_from_slice(params.emission_row(t));
    }
    TiedHmmParams::from_parts_unchecked(shape, trans, emit)
}

/// Number of decoded steps per type.
pub fn type_occupancy(tracks: &[LabelTrack], n_types: usize) -> Vec<usize> {
    let mut occ = vec![0; n_types];
    for s in tracks.iter().flat_map(|t| &t.states) {
        occ[s.type_id] += 1;
    }
    occ
}

/// The permutation (old → new) sorting types by descending occupancy,
/// ties kept in index order.
pub fn occupancy_permutation(occupancy: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..occupancy.len()).collect();
    order.sort_by(|&a, &b| occupancy[b].cmp(&occupancy[a]));
    let mut perm = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    perm
}

/// Canonicalizes `params`, then renumbers types by descending Viterbi
/// occupancy over `corpus`.
pub fn canonical_by_occupancy(params: &TiedHmmParams, corpus: &[ObservationSeq]) -> Result<TiedHmmParams> {
    let canon = canonicalize(params).params;
    let tracks = corpus
        .par_iter()
        .map(|obs| viterbi(&canon, obs))
        .collect::<Result<Vec<_>>>()?;
    let perm = occupancy_permutation(&type_occupancy(&tracks, canon.n_types()));
    Ok(permute_types(&canon, &perm))
}

/// Applies a type permutation to a decoded state.
pub fn permute_state(state: TiedState, perm: &[usize]) -> TiedState {
    TiedState {
        anchor: state.anchor,
        type_id: perm[state.type_id],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::PitchClass;
    use crate::tied_hmm::{random_params, ModelShape, ObservationSeq, Symbol, DEFAULT_FLOOR};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(params: &TiedHmmParams, seed: u64) -> ObservationSeq {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        params.sample(&mut rng, 30, |_| 2).1
    }

    #[test]
    fn canonical_rows_peak_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_params(ModelShape::new(3, 2), &mut rng, DEFAULT_FLOOR);
        let c = canonicalize(&p);
        for t in 0..3 {
            let row = c.params.emission_row(t);
            let best = row.iter().cloned().fold(0.0, f64::max);
            let first = row.iter().position(|&x| x == best).unwrap();
            assert_eq!(first % 12, 0);
        }
        assert!(c.params.check().is_ok());
    }

    #[test]
    fn canonicalization_preserves_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_params(ModelShape::new(2, 1), &mut rng, DEFAULT_FLOOR);
        let c = canonicalize(&p);
        let obs = sample(&p, 1);
        let a = crate::tied_hmm::forward_backward(&p, &obs).unwrap();
        let b = crate::tied_hmm::forward_backward(&c.params, &obs).unwrap();
        let (la, lb) = (crate::tied_hmm::log_likelihood(&a), crate::tied_hmm::log_likelihood(&b));
        assert!((la - lb).abs() < 1e-9 * la.abs());
        let state = TiedState::from_index(17);
        let mapped = c.map_state(state);
        let sym = Symbol::note(PitchClass::new(4).unwrap());
        assert!((p.emission(state, sym) - c.params.emission(mapped, sym)).abs() < 1e-15);
    }

    #[test]
    fn permutation_preserves_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_params(ModelShape::new(3, 1), &mut rng, DEFAULT_FLOOR);
        let q = permute_types(&p, &[2, 0, 1]);
        let obs = sample(&p, 2);
        let la = crate::tied_hmm::log_likelihood(&crate::tied_hmm::forward_backward(&p, &obs).unwrap());
        let lb = crate::tied_hmm::log_likelihood(&crate::tied_hmm::forward_backward(&q, &obs).unwrap());
        assert!((la - lb).abs() < 1e-9 * la.abs());
        assert_eq!(q.emission_row(2), p.emission_row(0));
    }

    #[test]
    fn occupancy_order_breaks_ties_by_index() {
        assert_eq!(occupancy_permutation(&[5, 9, 5]), vec![1, 0, 2]);
        assert_eq!(occupancy_permutation(&[1, 2, 3]), vec![2, 1, 0]);
    }
}
