use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::clients::{Generation, MockGenerator};
use crate::embed::{Metric, PretrainedLabelEmbedder};
use crate::interpret::Table;
use crate::kb::{KbBuilder, ObjectValue, PropertyId, Triple};

fn fact(b: &mut KbBuilder, s: &str, p: &str, o: ObjectValue) {
    b.triple(Triple {
        subject: s.into(),
        property: p.into(),
        object: o,
    })
    .unwrap();
}

fn text(s: &str) -> ObjectValue {
    ObjectValue::Text(s.into())
}

fn id(s: &str) -> EntityId {
    EntityId::from(s)
}

fn index(metric: Metric, points: &[(&str, &[f64])]) -> EmbeddingIndex {
    let rows = points.iter().map(|(e, v)| (id(e), v.to_vec())).collect();
    EmbeddingIndex::new(points[0].1.len(), metric, rows).unwrap()
}

fn entity_ids(cs: &[Candidate]) -> Vec<&str> {
    cs.iter().map(|c| c.entity.as_str()).collect()
}

/// Two seeds of type T with in-table property P1 and four other entities,
/// of which A and D pass both filters.
fn six_entities() -> (KnowledgeBase, EmbeddingIndex) {
    let mut b = KbBuilder::new();
    for t in ["T", "U"] {
        b.entity(t.into(), t, vec![]).unwrap();
    }
    b.property("P1".into(), "p one").unwrap();
    b.property("P2".into(), "p two").unwrap();
    for (e, ty, p) in [
        ("S1", "T", "P1"),
        ("S2", "T", "P1"),
        ("A", "T", "P1"),
        ("B", "T", "P2"),
        ("C", "U", "P1"),
        ("D", "T", "P1"),
    ] {
        b.entity(e.into(), e, vec![]).unwrap();
        b.instance_of(e.into(), ty.into()).unwrap();
        fact(&mut b, e, p, text("x"));
    }
    let idx = index(
        Metric::Cosine,
        &[
            ("S1", &[1.0, 0.0]),
            ("S2", &[1.0, 0.2]),
            ("A", &[1.0, 0.1]),
            ("B", &[1.0, 0.3]),
            ("C", &[1.0, -0.1]),
            ("D", &[0.5, 1.0]),
        ],
    );
    (b.build().unwrap(), idx)
}

#[test]
fn embedding_candidates_apply_both_filters() {
    let (kb, idx) = six_entities();
    let seeds = [id("S1"), id("S2")];
    let config = SuggestConfig::default();
    let hoods = SeedNeighborhoods::compute(&idx, &seeds, 10);
    let cands = embedding_candidates(&kb, &hoods, &[PropertyId::from("P1")], &config);
    assert_eq!(entity_ids(&cands), ["A", "D"]);
    assert!(cands.iter().all(|c| c.source == CandidateSource::Embedding));

    let none = SeedNeighborhoods::compute(&idx, &[], 10);
    assert!(embedding_candidates(&kb, &none, &[PropertyId::from("P1")], &config).is_empty());

    // no linked columns: only the type filter applies
    let any = embedding_candidates(&kb, &hoods, &[], &config);
    assert_eq!(entity_ids(&any), ["B", "A", "D"]);
}

#[test]
fn high_cardinality_types_need_every_property() {
    let mut b = KbBuilder::new();
    b.entity("Q5".into(), "human", vec![]).unwrap();
    b.property("P1".into(), "a").unwrap();
    b.property("P2".into(), "b").unwrap();
    for (e, props) in [("S", &["P1", "P2"][..]), ("H1", &["P1", "P2"]), ("H2", &["P1"])] {
        b.entity(e.into(), e, vec![]).unwrap();
        b.instance_of(e.into(), "Q5".into()).unwrap();
        for p in props {
            fact(&mut b, e, p, text("v"));
        }
    }
    let kb = b.build().unwrap();
    let idx = index(Metric::Dot, &[("S", &[1.0]), ("H1", &[0.5]), ("H2", &[0.9])]);
    let hoods = SeedNeighborhoods::compute(&idx, &[id("S")], 5);
    let in_table = [PropertyId::from("P1"), PropertyId::from("P2")];
    let mut config = SuggestConfig::default();
    assert_eq!(entity_ids(&embedding_candidates(&kb, &hoods, &in_table, &config)), ["H1"]);
    config.high_cardinality_types.clear();
    assert_eq!(
        entity_ids(&embedding_candidates(&kb, &hoods, &in_table, &config)),
        ["H2", "H1"]
    );
}

fn rappers() -> KnowledgeBase {
    let mut b = KbBuilder::new();
    b.entity("Q5".into(), "human", vec![]).unwrap();
    for (e, label) in [
        ("Q1", "Kanye West"),
        ("Q2", "Kendrick Lamar"),
        ("Q3", "Drake"),
        ("Q4", "Jay-Z"),
    ] {
        b.entity(e.into(), label, vec![]).unwrap();
        b.instance_of(e.into(), "Q5".into()).unwrap();
    }
    b.property("P742".into(), "pseudonym").unwrap();
    b.property("P569".into(), "date of birth").unwrap();
    for (e, nick, born) in [
        ("Q1", "Yeezy", "1977"),
        ("Q2", "K-Dot", "1987"),
        ("Q3", "Drizzy", "1986"),
        ("Q4", "Hova", "1969"),
    ] {
        fact(&mut b, e, "P742", text(nick));
        fact(&mut b, e, "P569", ObjectValue::Time(born.into()));
    }
    b.build().unwrap()
}

fn rapper_table() -> LinkedTable {
    let table = Table::from_strs(&[
        &["Kanye West", "Yeezy", "1977", "Chicago"],
        &["Drake", "Drizzy", "1986", ""],
        &["Someone Else", "?", "", ""],
    ])
    .unwrap();
    let mut linked = LinkedTable::unlinked_columns(table, vec![Some(id("Q1")), Some(id("Q3")), None]);
    linked.column_links.insert(1, Some("P742".into()));
    linked.column_links.insert(2, Some("P569".into()));
    linked.column_links.insert(3, None);
    linked
}

#[test]
fn prompts_follow_the_template() {
    let kb = rappers();
    let linked = rapper_table();
    assert_eq!(
        to_prompt(&kb, &linked, 0).unwrap(),
        "Kanye West has pseudonym Yeezy and has date of birth 1977"
    );
    assert_eq!(to_prompt(&kb, &linked, 2), None);

    let bare = LinkedTable::unlinked_columns(linked.table.clone(), linked.main_column.clone());
    assert_eq!(to_prompt(&kb, &bare, 0).unwrap(), "Kanye West");
    assert_eq!(
        lm_prompt(&kb, &linked),
        "Kanye West has pseudonym Yeezy and has date of birth 1977\nDrake has pseudonym Drizzy and has date of birth 1986"
    );
}

#[test]
fn generated_subject_parsing() {
    assert_eq!(generated_subject("Kendrick Lamar has pseudonym K-Dot"), "Kendrick Lamar");
    assert_eq!(generated_subject("  - Jay-Z has x has y"), "Jay-Z");
    assert_eq!(generated_subject("Nas."), "Nas");
    assert_eq!(generated_subject(""), "");
}

fn generation(text: &str, score: Option<f64>) -> Generation {
    Generation {
        text: text.into(),
        score,
    }
}

fn rapper_generator(linked: &LinkedTable, kb: &KnowledgeBase) -> MockGenerator {
    let outputs = vec![
        generation("Jay-Z has pseudonym Hova\nKendrick Lamar has pseudonym K-Dot", Some(-0.9)),
        generation("Kendrick Lamar has pseudonym K-Dot and has date of birth 1987", Some(-0.4)),
        generation("Drake has pseudonym Drizzy", Some(-0.1)),
        generation("Nobody Known has pseudonym X", Some(-0.2)),
    ];
    MockGenerator::new([(lm_prompt(kb, linked), outputs)].into_iter().collect())
}

#[test]
fn lm_candidates_link_generated_subjects() {
    let kb = rappers();
    let linked = rapper_table();
    let config = SuggestConfig::default();
    let generator = rapper_generator(&linked, &kb);
    let cands = lm_candidates(&kb, &generator, &linked, &config).unwrap();
    assert_eq!(entity_ids(&cands), ["Q2", "Q4"]);
    assert_eq!(cands[0].lm_score, Some(-0.4));
    assert_eq!(cands[1].lm_score, Some(-0.9));
    assert_eq!(generator.calls(), 1);

    let empty = MockGenerator::default();
    assert!(lm_candidates(&kb, &empty, &linked, &config).unwrap().is_empty());
}

/// Three seeds and one candidate with hand-computed features.
#[test]
fn features_of_a_three_seed_fixture() {
    let mut b = KbBuilder::new();
    for t in ["T1", "T2", "T3", "T4"] {
        b.entity(t.into(), t, vec![]).unwrap();
    }
    for p in ["P1", "P2", "P3", "P4", "P5"] {
        b.property(p.into(), p).unwrap();
    }
    let rows: [(&str, &str, &[&str], &[&str]); 5] = [
        ("S1", "abcd", &["T1"], &["P1", "P2", "P3"]),
        ("S2", "abxy", &["T1", "T2"], &["P1", "P3"]),
        ("S3", "zzzz", &["T3"], &["P1", "P4"]),
        ("C", "abcx", &["T1", "T4"], &["P1", "P3", "P5"]),
        ("X", "qqqq", &["T1"], &["P1"]),
    ];
    for (e, label, types, props) in rows {
        b.entity(e.into(), label, vec![]).unwrap();
        for t in types {
            b.instance_of(e.into(), (*t).into()).unwrap();
        }
        for p in props {
            fact(&mut b, e, p, text("v"));
        }
    }
    let kb = b.build().unwrap();
    let idx = index(
        Metric::Cosine,
        &[
            ("S1", &[1.0, 0.0]),
            ("S2", &[0.0, 1.0]),
            ("S3", &[-1.0, 0.0]),
            ("C", &[0.8, 0.6]),
            ("X", &[0.6, -0.8]),
        ],
    );
    let words = [
        ("abcx", [1.0, 0.0]),
        ("abcd", [0.6, 0.8]),
        ("abxy", [0.0, 1.0]),
        ("zzzz", [-1.0, 0.0]),
    ]
    .map(|(w, v)| (String::from(w), v.to_vec()));
    let labels = PretrainedLabelEmbedder::new(2, words);
    let seeds = [id("S1"), id("S2"), id("S3")];
    let hoods = SeedNeighborhoods::compute(&idx, &seeds, 1);
    let in_table = [PropertyId::from("P1")];
    let ctx = FeatureContext::new(&kb, &idx, &labels, &hoods, &in_table);

    let mut c = Candidate::new(id("C"), CandidateSource::Lm);
    c.lm_score = Some(-0.5);
    let f = ctx.extract(&c);
    assert!((f.dist_to_closest_seed - 0.2).abs() < 1e-12);
    assert_eq!(f.extra_property_overlap, 1.0 / 3.0);
    assert_eq!(f.min_label_levenshtein, 0.25);
    assert!((f.min_label_embed_distance - 0.4).abs() < 1e-12);
    assert_eq!(f.type_overlap, 1.0 / 3.0);
    assert_eq!(f.seed_neighbor_fraction, 2.0 / 3.0);
    assert_eq!(f.source, CandidateSource::Lm);
    assert_eq!(f.lm_score, Some(-0.5));

    let same_label = ctx.extract(&Candidate::new(id("S1"), CandidateSource::Embedding));
    assert_eq!(same_label.min_label_levenshtein, 0.0);
    assert_eq!(same_label.lm_score, None);
}

fn featured(e: &str, row: [f64; 6], source: CandidateSource, lm: Option<f64>) -> Candidate {
    let mut c = Candidate::new(id(e), source);
    c.features = Some(FeatureVector {
        dist_to_closest_seed: row[0],
        extra_property_overlap: row[1],
        min_label_levenshtein: row[2],
        min_label_embed_distance: row[3],
        type_overlap: row[4],
        seed_neighbor_fraction: row[5],
        source,
        lm_score: lm,
    });
    c
}

#[test]
fn single_candidate_scores_one() {
    let c = featured("A", [0.1; 6], CandidateSource::Embedding, None);
    let ranked = rank_candidates(&[c], &SuggestConfig::default()).unwrap();
    assert_eq!(ranked.len(), 1);
    assert_eq!(ranked[0].score, 1.0);
    assert_eq!(rank_candidates(&[], &SuggestConfig::default()), Err(RankError::Empty));
    let bare = Candidate::new(id("A"), CandidateSource::Lm);
    assert_eq!(
        rank_candidates(&[bare], &SuggestConfig::default()),
        Err(RankError::MissingFeatures)
    );
}

#[test]
fn neighborhood_sizes() {
    assert_eq!(neighborhood_size(1), 0);
    assert_eq!(neighborhood_size(4), 3);
    assert_eq!(neighborhood_size(100), 5);
    assert_eq!(neighborhood_size(200), 6);
    assert_eq!(neighborhood_size(1000), 30);
}

/// k-th neighbour distance computed by brute force.
fn knn_oracle(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter()
        .enumerate()
        .map(|(i, a)| {
            let mut ds: Vec<f64> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                .collect();
            ds.sort_by(f64::total_cmp);
            ds[k - 1]
        })
        .collect()
}

fn planted_matrix() -> Vec<Vec<f64>> {
    // 50 points on a small grid, three far away
    let mut rows: Vec<Vec<f64>> = (0..50)
        .map(|i| vec![(i % 7) as f64 * 0.01, (i / 7) as f64 * 0.01, 0.5])
        .collect();
    rows.push(vec![1.0, 1.0, 1.0]);
    rows.push(vec![0.9, 0.0, 0.0]);
    rows.push(vec![0.0, 0.9, 1.0]);
    rows
}

#[test]
fn knn_detector_matches_brute_force_and_finds_planted_points() {
    let rows = planted_matrix();
    let scores = outlier_scores(&rows, Detector::Knn);
    let oracle = knn_oracle(&rows, neighborhood_size(rows.len()));
    for (s, o) in scores.iter().zip(&oracle) {
        assert!((s - o).abs() < 1e-12);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let top: BTreeSet<usize> = order[..3].iter().copied().collect();
    assert_eq!(top, [50, 51, 52].into_iter().collect());

    let lof = outlier_scores(&rows, Detector::Lof);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| lof[b].total_cmp(&lof[a]));
    let top: BTreeSet<usize> = order[..3].iter().copied().collect();
    assert_eq!(top, [50, 51, 52].into_iter().collect());
}

#[test]
fn score_normalisation() {
    let n = normalize_scores(&[0.0, 1.0, 2.0, 3.0, 10.0], 0.2);
    // the 0.8 quantile of the five scores is 4.4
    assert_eq!(n[0], 0.0);
    assert!((n[3] - 0.5 * 3.0 / 4.4).abs() < 1e-12);
    assert_eq!(n[4], 1.0);
    assert_eq!(normalize_scores(&[2.0, 2.0], 0.05), [1.0, 1.0]);
    assert!(normalize_scores(&[], 0.05).is_empty());
}

#[test]
fn missing_distances_read_as_farthest() {
    let mut rows = vec![vec![0.0], vec![2.0], vec![NO_DISTANCE]];
    scale_columns(&mut rows);
    assert_eq!(rows, [[0.0], [0.5], [1.0]]);
}

#[test]
fn suggest_subjects_unions_both_sources() {
    let kb = rappers();
    let linked = rapper_table();
    let idx = index(
        Metric::Cosine,
        &[
            ("Q1", &[1.0, 0.0]),
            ("Q2", &[0.9, 0.1]),
            ("Q3", &[0.8, 0.3]),
            ("Q4", &[0.0, 1.0]),
            ("Q5", &[-1.0, 0.0]),
        ],
    );
    let labels = crate::embed::HashedNgramEmbedder::default();
    let generator = rapper_generator(&linked, &kb);
    let models = SuggestModels {
        kb: &kb,
        idx: &idx,
        labels: &labels,
        generator: &generator,
    };
    let mut config = SuggestConfig::default();
    config.k_per_seed = 1;
    let out = suggest_subjects(models, &linked, &config).unwrap();
    assert_eq!(entity_ids(&out.pool.embedding), ["Q2"]);
    let sources: BTreeMap<&str, CandidateSource> =
        out.ranked.iter().map(|r| (r.entity.as_str(), r.source)).collect();
    assert_eq!(sources["Q2"], CandidateSource::Both);
    assert_eq!(sources["Q4"], CandidateSource::Lm);
    assert_eq!(out.ranked.len(), 2);
    assert!(out.ranked.iter().all(|r| (0.0..=1.0).contains(&r.score)));

    let silent = MockGenerator::default();
    let models = SuggestModels {
        generator: &silent,
        ..models
    };
    config.k_per_seed = 0;
    assert!(suggest_subjects(models, &linked, &config).unwrap().ranked.is_empty());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn random_world(points: &[(f64, f64, u8, u8)]) -> (KnowledgeBase, EmbeddingIndex) {
        let mut b = KbBuilder::new();
        for t in ["T0", "T1"] {
            b.entity(t.into(), t, vec![]).unwrap();
        }
        b.property("P0".into(), "p0").unwrap();
        b.property("P1".into(), "p1").unwrap();
        let mut rows = Vec::new();
        for (i, (x, y, ty, props)) in points.iter().enumerate() {
            let e = alloc::format!("E{i:02}");
            b.entity(e.as_str().into(), e.as_str(), vec![]).unwrap();
            b.instance_of(e.as_str().into(), alloc::format!("T{}", ty % 2).into()).unwrap();
            for p in 0..2 {
                if props & (1 << p) != 0 {
                    fact(&mut b, &e, &alloc::format!("P{p}"), text("v"));
                }
            }
            rows.push((id(&e), vec![*x, *y]));
        }
        (b.build().unwrap(), EmbeddingIndex::new(2, Metric::Cosine, rows).unwrap())
    }

    fn raw_feature() -> impl Strategy<Value = ([f64; 6], u8, Option<f64>)> {
        (
            proptest::array::uniform6(0.0f64..1.0),
            0u8..3,
            proptest::option::of(-3.0f64..0.0),
        )
    }

    fn source_of(s: u8) -> CandidateSource {
        [CandidateSource::Embedding, CandidateSource::Lm, CandidateSource::Both][s as usize]
    }

    proptest! {
        #[test]
        fn embedding_candidates_monotone_in_k(
            points in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0u8..2, 0u8..4), 4..14),
            k in 1usize..8,
            extra in 1usize..6,
        ) {
            let (kb, idx) = random_world(&points);
            let seeds = [id("E00"), id("E01")];
            let in_table = [PropertyId::from("P0")];
            let config = SuggestConfig::default();
            let small = embedding_candidates(&kb, &SeedNeighborhoods::compute(&idx, &seeds, k), &in_table, &config);
            let large = embedding_candidates(&kb, &SeedNeighborhoods::compute(&idx, &seeds, k + extra), &in_table, &config);
            let large: BTreeSet<&EntityId> = large.iter().map(|c| &c.entity).collect();
            prop_assert!(small.iter().all(|c| large.contains(&c.entity)));
            prop_assert!(small.iter().all(|c| !seeds.contains(&c.entity)));
        }

        #[test]
        fn ranking_ignores_affine_rescaling(
            raw in proptest::collection::vec(raw_feature(), 2..25),
            column in 0usize..7,
            scale in 0.1f64..20.0,
            shift in -5.0f64..5.0,
            lof in any::<bool>(),
        ) {
            let mut config = SuggestConfig::default();
            config.detector = if lof { Detector::Lof } else { Detector::Knn };
            let build = |transform: bool| -> Vec<Candidate> {
                raw.iter()
                    .enumerate()
                    .map(|(i, (row, s, lm))| {
                        let mut row = *row;
                        let source = source_of(*s);
                        let mut lm = if source == CandidateSource::Embedding { None } else { *lm };
                        if transform {
                            if column < 6 {
                                row[column] = row[column] * scale + shift;
                            } else {
                                lm = lm.map(|v| v * scale + shift);
                            }
                        }
                        featured(&alloc::format!("E{i:02}"), row, source, lm)
                    })
                    .collect()
            };
            let before: Vec<EntityId> = rank_candidates(&build(false), &config).unwrap().into_iter().map(|r| r.entity).collect();
            let after: Vec<EntityId> = rank_candidates(&build(true), &config).unwrap().into_iter().map(|r| r.entity).collect();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn ranking_ignores_input_order(raw in proptest::collection::vec(raw_feature(), 1..20), rotate in 0usize..20) {
            let mut cands: Vec<Candidate> = raw
                .iter()
                .enumerate()
                .map(|(i, (row, s, lm))| featured(&alloc::format!("E{i:02}"), *row, source_of(*s), *lm))
                .collect();
            let config = SuggestConfig::default();
            let a = rank_candidates(&cands, &config).unwrap();
            let r = rotate % cands.len();
            cands.rotate_left(r);
            cands.reverse();
            prop_assert_eq!(a, rank_candidates(&cands, &config).unwrap());
        }

        #[test]
        fn union_recall_dominates_each_source(
            emb in proptest::collection::vec(0u8..20, 0..12),
            lm in proptest::collection::vec(0u8..20, 0..12),
            truth in proptest::collection::btree_set(0u8..20, 0..8),
            n in 0usize..14,
        ) {
            let cands = |xs: &[u8], s| -> Vec<Candidate> {
                let mut seen = BTreeSet::new();
                xs.iter()
                    .filter(|x| seen.insert(**x))
                    .map(|x| Candidate::new(id(&alloc::format!("E{x:02}")), s))
                    .collect()
            };
            let pool = CandidatePool { embedding: cands(&emb, CandidateSource::Embedding), lm: cands(&lm, CandidateSource::Lm) };
            let truth: BTreeSet<EntityId> = truth.iter().map(|x| id(&alloc::format!("E{x:02}"))).collect();
            let r = pool.recall_at(&truth, n);
            prop_assert!(r.combined >= r.embedding.max(r.lm));
        }
    }
}
