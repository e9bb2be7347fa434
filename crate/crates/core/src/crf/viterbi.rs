//! Max-score path decoding.

use super::{CrfError, Lattice, TransitionMask};

/// Highest-scoring label path and its score. Ties break toward the lower
/// label index at every backpointer (and at the final position).
pub fn viterbi_decode(
    lattice: &Lattice,
    mask: Option<&TransitionMask>,
) -> Result<(Vec<usize>, f64), CrfError> {
    if lattice.is_empty() {
        return Err(CrfError::EmptyLattice);
    }
    let (len, labels) = (lattice.len(), lattice.num_labels());
    let mut delta = vec![f64::NEG_INFINITY; len * labels];
    let mut back = vec![0usize; len * labels];

    for (y, slot) in delta[..labels].iter_mut().enumerate() {
        if mask.is_none_or(|m| m.begin_allowed(y)) {
            *slot = lattice.begin(y) + lattice.emission(0, y);
        }
    }
    for t in 1..len {
        for y in 0..labels {
            let mut best = f64::NEG_INFINITY;
            let mut from = 0;
            for a in 0..labels {
                if mask.is_some_and(|m| !m.allowed(a, y)) {
                    continue;
                }
                let score = delta[(t - 1) * labels + a] + lattice.transition(a, y);
                if score > best {
                    best = score;
                    from = a;
                }
            }
            if best > f64::NEG_INFINITY {
                delta[t * labels + y] = best + lattice.emission(t, y);
                back[t * labels + y] = from;
            }
        }
    }

    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for y in 0..labels {
        let score = delta[(len - 1) * labels + y] + lattice.end(y);
        if score > best {
            best = score;
            last = y;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(CrfError::AllPathsMasked);
    }

    let mut path = vec![0usize; len];
    path[len - 1] = last;
    for t in (1..len).rev() {
        path[t - 1] = back[t * labels + path[t]];
    }
    Ok((path, best))
}
