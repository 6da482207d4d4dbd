//! Shared fixtures for the benchmarks.

use std::collections::HashMap;

use crossim_core::index::DocMeta;
use crossim_core::{DocKind, EmbeddingStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` random unit vectors with years spread over 1980..2020, all papers.
pub fn random_unit_store(
    n: usize,
    dim: usize,
    seed: u64,
) -> (EmbeddingStore, HashMap<String, DocMeta>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = EmbeddingStore::new(dim, "random").expect("valid dim");
    let mut meta = HashMap::with_capacity(n);
    for i in 0..n {
        let mut v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let id = format!("d{i:06}");
        store.insert(id.clone(), &v).expect("unique id");
        meta.insert(
            id,
            DocMeta {
                year: 1980 + (i % 40) as i32,
                kind: DocKind::Paper,
            },
        );
    }
    (store, meta)
}

pub fn random_queries(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect()
}
