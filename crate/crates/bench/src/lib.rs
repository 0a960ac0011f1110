//! Shared fixtures for the criterion benchmarks.

use latent_guard::rng::SplitMix64;
use latent_guard::{Embedding, ReferenceIndex};

/// `n` seeded Gaussian reference rows of dimension `d`.
pub fn random_index(n: usize, d: usize, seed: u64) -> ReferenceIndex {
    let mut rng = SplitMix64::new(seed);
    let embs: Vec<Embedding> = (0..n)
        .map(|i| Embedding::new(format!("ref/{i:04}"), rng.normal_vec(d)))
        .collect();
    ReferenceIndex::build(&embs, None).expect("gaussian rows have non-zero norm")
}

pub fn random_query(d: usize, seed: u64) -> Embedding {
    Embedding::new("query", SplitMix64::derive(seed, 1).normal_vec(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shape() {
        let index = random_index(7, 16, 1);
        assert_eq!((index.len(), index.dim()), (7, 16));
        assert_eq!(random_query(16, 1).dim(), 16);
    }
}
