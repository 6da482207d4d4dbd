use std::collections::{HashMap, HashSet};

use crossim_core::corpus::{CitationLink, CitationLocation, DocKind, PppRecord};
use crossim_core::embed::{embed_text, toy_embed, ToyEmbedder};
use crossim_core::evalbench::{
    aggregate, average_precision, build_tasks, rfr, rr_at10, QueryMetrics, RankedList,
};
use crossim_core::index::{cosine, DocMeta, IndexConfig, SearchFilter, VectorIndex};
use crossim_core::stats::{ols_fit, DesignMatrix};
use crossim_core::studies::{
    ppc_match_study, ppp_ppc_similarity, predict_ppp, PpcMatchConfig, PppPredictConfig,
};
use crossim_core::synth::{generate, SynthConfig};
use crossim_core::{EmbeddingStore, Pooling};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ranking(n: usize, relevant: usize) -> impl Strategy<Value = (Vec<String>, HashSet<String>)> {
    Just((0..n).map(|i| format!("c{i:02}")).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_flat_map(move |ranked| {
            let pool = ranked.clone();
            (Just(ranked), proptest::sample::subsequence(pool, relevant))
        })
        .prop_map(|(ranked, rel)| (ranked, rel.into_iter().collect()))
}

fn random_store(seed: u64, n: usize, dim: usize) -> (EmbeddingStore, HashMap<String, DocMeta>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = EmbeddingStore::new(dim, "random").unwrap();
    let mut meta = HashMap::new();
    for i in 0..n {
        // coarse coordinates make exact score ties likely
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-2i8..=2) as f32).collect();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let id = format!("d{i:04}");
        store.insert(id.clone(), &v).unwrap();
        let kind = if rng.gen_bool(0.5) {
            DocKind::Paper
        } else {
            DocKind::Patent
        };
        meta.insert(
            id,
            DocMeta {
                year: rng.gen_range(1990..2020),
                kind,
            },
        );
    }
    (store, meta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn first_relevant_at_top_iff_reciprocal_rank_one((ranked, rel) in ranking(30, 5)) {
        let first = rfr(&ranked, &rel).unwrap();
        let rr = rr_at10(&ranked, &rel).unwrap();
        prop_assert_eq!(first == 1, rr == 1.0);
        prop_assert!(rr == 0.0 || (0.1..=1.0).contains(&rr));
    }

    #[test]
    fn perfect_average_precision_iff_relevant_on_top((ranked, rel) in ranking(30, 5)) {
        let ap = average_precision(&ranked, &rel).unwrap();
        let on_top = ranked[..rel.len()].iter().all(|id| rel.contains(id));
        prop_assert!(ap > 0.0 && ap <= 1.0);
        prop_assert_eq!(ap == 1.0, on_top);
    }

    #[test]
    fn metrics_ignore_monotone_score_transforms(scores in proptest::collection::vec(-1.0f64..1.0, 30)) {
        let rank = |s: &[f64]| {
            let mut idx: Vec<usize> = (0..s.len()).collect();
            idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
            idx.into_iter().map(|i| format!("c{i:02}")).collect::<Vec<_>>()
        };
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        let rel: HashSet<String> = (0..5).map(|i| format!("c{i:02}")).collect();
        let (a, b) = (rank(&scores), rank(&transformed));
        prop_assert_eq!(average_precision(&a, &rel).unwrap(), average_precision(&b, &rel).unwrap());
        prop_assert_eq!(rfr(&a, &rel).unwrap(), rfr(&b, &rel).unwrap());
        prop_assert_eq!(rr_at10(&a, &rel).unwrap(), rr_at10(&b, &rel).unwrap());
    }

    #[test]
    fn aggregates_are_means(aps in proptest::collection::vec((1usize..26, 0.01f64..1.0), 1..50)) {
        let recs: Vec<QueryMetrics> = aps
            .iter()
            .enumerate()
            .map(|(i, &(r, ap))| QueryMetrics {
                task_id: format!("t{i:03}"),
                rfr: r,
                ap,
                rr10: if r <= 10 { 1.0 / r as f64 } else { 0.0 },
            })
            .collect();
        let rep = aggregate(&recs).unwrap();
        let n = recs.len() as f64;
        prop_assert!((rep.map - recs.iter().map(|r| r.ap).sum::<f64>() / n).abs() < 1e-12);
        prop_assert!((rep.mrr10 - recs.iter().map(|r| r.rr10).sum::<f64>() / n).abs() < 1e-12);
        prop_assert!((rep.avg_rfr - recs.iter().map(|r| r.rfr as f64).sum::<f64>() / n).abs() < 1e-12);
        prop_assert_eq!(rep.query_count, recs.len());
    }

    #[test]
    fn toy_embedding_ignores_token_order(words in proptest::collection::vec("[a-z]{1,8}", 1..40), seed: u64) {
        let mut shuffled = words.clone();
        shuffled.reverse();
        // all-stopword inputs embed to nothing and must fail either way
        match (toy_embed(&words.join(" "), seed, 64), toy_embed(&shuffled.join(" "), seed, 64)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.as_slice(), b.as_slice()),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn pooled_vectors_are_unit(sentences in proptest::collection::vec("[a-z]{2,6}( [a-z]{2,6}){0,6}", 1..6)) {
        let text = sentences.join(". ");
        let e = ToyEmbedder::new(3, 32).unwrap();
        for pooling in [Pooling::Cls, Pooling::Mean] {
            if let Ok(v) = embed_text(&text, pooling, &e) {
                prop_assert!((v.norm() - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(
        v in proptest::collection::vec(-5.0f32..5.0, 8),
        w in proptest::collection::vec(-5.0f32..5.0, 8),
    ) {
        prop_assume!(v.iter().any(|x| *x != 0.0) && w.iter().any(|x| *x != 0.0));
        let a = cosine(&v, &w).unwrap();
        prop_assert_eq!(a, cosine(&w, &v).unwrap());
        prop_assert!((-1.0..=1.0).contains(&a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_search_is_sound_sorted_and_prefix_closed(seed: u64, k in 1usize..60, lo in 1990i32..2020, span in 0i32..30) {
        let (store, meta) = random_store(seed, 300, 6);
        let idx = VectorIndex::build(store, &meta, IndexConfig::exact()).unwrap();
        let filter = SearchFilter { year_min: Some(lo), year_max: Some(lo + span), kind: Some(DocKind::Paper) };
        let query = idx.store().row(0).to_vec();
        let hits = idx.search(&query, k, &filter, None).unwrap();
        let mut brute: Vec<(String, f64)> = idx
            .store()
            .iter()
            .filter(|(id, _)| filter.matches(&meta[*id]))
            .map(|(id, v)| (id.to_string(), cosine(&query, v).unwrap()))
            .collect();
        brute.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        brute.truncate(k);
        let got: Vec<(String, f64)> = hits.iter().map(|n| (n.doc_id.clone(), n.score)).collect();
        prop_assert_eq!(&got, &brute);
        let longer = idx.search(&query, k + 10, &filter, None).unwrap();
        prop_assert_eq!(&longer[..hits.len()], &hits[..]);
    }

    #[test]
    fn residuals_orthogonal_and_row_order_free(seed: u64, n in 20usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = 4;
        let mut data = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row = [1.0, rng.gen_range(-3.0..3.0), rng.gen_range(0.0..10.0), f64::from(u8::from(rng.gen_bool(0.4)))];
            y.push(2.0 - row[1] + 0.3 * row[2] + rng.gen_range(-1.0..1.0));
            data.extend_from_slice(&row);
        }
        let names: Vec<String> = ["Intercept", "x1", "x2", "d"].iter().map(|s| s.to_string()).collect();
        let x = DesignMatrix::from_rows(names.clone(), data.clone()).unwrap();
        let fit = ols_fit(&x, &y).unwrap();
        let e = fit.residuals(&x, &y);
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..p {
            let dot: f64 = (0..n).map(|i| x.row(i)[j] * e[i]).sum();
            prop_assert!(dot.abs() <= 1e-6 * y_norm, "column {} dot {}", j, dot);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<f64> = order.iter().flat_map(|&i| data[i * p..(i + 1) * p].to_vec()).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let refit = ols_fit(&DesignMatrix::from_rows(names, permuted).unwrap(), &py).unwrap();
        for (a, b) in fit.estimates().iter().zip(refit.estimates()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn task_families_do_not_depend_on_seed() {
    let c = generate(&SynthConfig::default()).unwrap();
    let families = |seed| {
        build_tasks(&c.citations, &c.documents, seed)
            .unwrap()
            .tasks
            .into_iter()
            .map(|t| t.task_id)
            .collect::<Vec<_>>()
    };
    assert_eq!(families(1), families(2));
    let a = build_tasks(&c.citations, &c.documents, 1).unwrap().tasks;
    let b = build_tasks(&c.citations, &c.documents, 2).unwrap().tasks;
    assert!(a.iter().zip(&b).any(|(x, y)| x.negatives != y.negatives));
}

#[test]
fn ranked_list_ids_match_candidates() {
    let c = generate(&SynthConfig::default()).unwrap();
    let e = ToyEmbedder::new(1, 64).unwrap();
    let store = crossim_core::embed::embed_corpus(&c.documents, Pooling::Cls, &e, 64, "t").unwrap();
    for task in build_tasks(&c.citations, &c.documents, 1).unwrap().tasks {
        let list: RankedList = crossim_core::evalbench::rank_task(
            &task,
            &store,
            store.get(&task.focal_patent_id).unwrap(),
        )
        .unwrap();
        assert_eq!(list.ordered.len(), 30);
        assert!(list.ordered.windows(2).all(|w| w[0].1 >= w[1].1));
        let mut ids: Vec<&str> = list.ids();
        ids.sort_unstable();
        let mut expected: Vec<&str> = task.candidates().map(String::as_str).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);
    }
}

#[test]
fn study_invariants_on_synthetic_corpus() {
    let c = generate(&SynthConfig::scaled(1500, 11)).unwrap();
    let e = ToyEmbedder::new(2, 64).unwrap();
    let store = crossim_core::embed::embed_corpus(&c.documents, Pooling::Cls, &e, 64, "t").unwrap();
    let meta = crossim_core::index::meta_from_documents(&c.documents);
    let idx = VectorIndex::build(store, &meta, IndexConfig::exact()).unwrap();

    // a PPP that is also cited must not reappear among citation pairs
    let mut ppcs = c.citations.clone();
    let overlap = &c.ppps[0];
    ppcs.push(CitationLink {
        patent_id: overlap.patent_id.clone(),
        paper_id: overlap.paper_id.clone(),
        confidence: 10,
        location: CitationLocation::Front,
        self_citation: false,
    });
    let sep = ppp_ppc_similarity(&c.ppps, &ppcs, idx.store()).unwrap();
    let ppp_keys: HashSet<(&str, &str)> = c
        .ppps
        .iter()
        .map(|p: &PppRecord| (p.patent_id.as_str(), p.paper_id.as_str()))
        .collect();
    assert!(sep
        .records
        .iter()
        .filter(|r| r.pair_type == crossim_core::studies::PairType::Ppc)
        .all(|r| !ppp_keys.contains(&(r.patent_id.as_str(), r.paper_id.as_str()))));

    let rate = |k| {
        let r = predict_ppp(&c.ppps, &idx, PppPredictConfig { k, window_years: 9 }).unwrap();
        let t = r.summary.last().unwrap();
        t.matched as f64 / t.count as f64
    };
    assert!(rate(5) <= rate(50));
    assert!(rate(50) <= rate(500));

    let m = ppc_match_study(
        &c.citations,
        &c.documents,
        &idx,
        PpcMatchConfig {
            k: 300,
            rank_threshold: 100,
        },
    )
    .unwrap();
    assert!(m.per_patent.iter().all(|p| (0.0..=1.0).contains(&p.share)));
    let links: usize = m.per_patent.iter().map(|p| p.links).sum();
    let matched: usize = m.per_patent.iter().map(|p| p.matched).sum();
    assert_eq!(links, m.records.len());
    assert_eq!(matched, m.records.iter().filter(|r| r.matched).count());
}
