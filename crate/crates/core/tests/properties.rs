use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spamtopic_core::classify::{fit, ClassifierKind, ClassifierParams, LabeledSet};
use spamtopic_core::corpus::{
    build_vocabulary, preprocess, Label, LanguageMode, PreprocessConfig, RawUser, UserDocument,
};
use spamtopic_core::eval::{
    cross_validate, metrics, stratified_kfold, ConfusionMatrix, CvConfig, FeatureProtocol, FeatureSource, Seeds,
};
use spamtopic_core::features::{goss, loss, FeatureMatrix};
use spamtopic_core::lda::TopicMatrix;
use spamtopic_core::Matrix;

fn stochastic(rows: Vec<Vec<f64>>) -> TopicMatrix {
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    TopicMatrix(Matrix::from_rows(&rows))
}

fn topic_matrix() -> impl Strategy<Value = TopicMatrix> {
    (2usize..40, 2usize..12)
        .prop_flat_map(|(n, k)| prop::collection::vec(prop::collection::vec(0.001f64..1.0, k), n).prop_map(stochastic))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

proptest! {
    #[test]
    fn goss_columns_are_centered_unit_vectors(x in topic_matrix()) {
        let g = goss(&x).unwrap();
        for c in 0..g.cols() {
            let col: Vec<f64> = g.values.column(c).collect();
            if col.iter().all(|v| *v == 0.0) {
                continue;
            }
            prop_assert!(close(col.iter().sum(), 0.0));
            prop_assert!(close(col.iter().map(|v| v * v).sum(), 1.0));
        }
    }

    #[test]
    fn loss_rows_are_centered_unit_vectors(x in topic_matrix()) {
        let l = loss(&x).unwrap();
        for row in l.values.iter_rows() {
            prop_assert!(close(row.iter().sum(), 0.0));
            prop_assert!(close(row.iter().map(|v| v * v).sum(), 1.0));
        }
    }

    #[test]
    fn goss_ignores_per_column_affine_maps(x in topic_matrix(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let mut y = x.0.clone();
        for r in 0..y.rows() {
            for c in 0..y.cols() {
                y.set(r, c, x.0.get(r, c) * scale + shift);
            }
        }
        let a = goss(&x).unwrap();
        let b = goss(&TopicMatrix(y)).unwrap();
        for (p, q) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-7, "{} vs {}", p, q);
        }
    }

    #[test]
    fn loss_ignores_row_scaling(x in topic_matrix(), scale in 0.1f64..10.0) {
        let mut y = x.0.clone();
        for r in 0..y.rows() {
            for v in y.row_mut(r) {
                *v *= scale;
            }
        }
        let a = loss(&x).unwrap();
        let b = loss(&TopicMatrix(y)).unwrap();
        for (p, q) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn goss_rows_follow_row_permutation(x in topic_matrix(), seed in any::<u64>()) {
        let n = x.n_users();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let permuted = TopicMatrix(x.0.select_rows(&order));
        let a = goss(&x).unwrap();
        let b = goss(&permuted).unwrap();
        for (new_row, &old_row) in order.iter().enumerate() {
            for c in 0..x.n_topics() {
                prop_assert!((b.values.get(new_row, c) - a.values.get(old_row, c)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pretokenized_preprocessing_is_idempotent(
        lists in prop::collection::vec(prop::collection::vec("[a-z]{1,6}|the|and|", 0..8), 1..6)
    ) {
        let config = PreprocessConfig {
            mode: LanguageMode::Pretokenized,
            min_posts: 0,
            min_tokens: 0,
            ..PreprocessConfig::default()
        };
        let user = RawUser { pretokenized: Some(lists.clone()), ..RawUser::new("u", Label::Spammer, vec![]) };
        let once = preprocess(&user, &config).unwrap().admitted().unwrap();
        let again_user = RawUser { pretokenized: Some(vec![once.tokens.clone()]), ..user.clone() };
        let twice = preprocess(&again_user, &config).unwrap().admitted().unwrap();
        prop_assert_eq!(&once.tokens, &twice.tokens);
        prop_assert_eq!(once.post_count, lists.len());
    }

    #[test]
    fn vocabulary_is_a_dense_bijection(docs in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 1..10), 1..8)) {
        let docs: Vec<UserDocument> = docs
            .into_iter()
            .enumerate()
            .map(|(i, tokens)| UserDocument { user_id: format!("u{i}"), label: Label::Legitimate, tokens, post_count: 1 })
            .collect();
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        for i in 0..vocab.len() as u32 {
            prop_assert_eq!(vocab.index_of(vocab.token(i).unwrap()), Some(i));
        }
        prop_assert!(vocab.tokens().windows(2).all(|w| w[0] < w[1]));
        for d in &docs {
            prop_assert_eq!(vocab.encode(d).tokens.len(), d.tokens.len());
        }
    }

    #[test]
    fn f1_bounds(tp in 0u64..500, fn_ in 0u64..500, fp in 0u64..500, tn in 0u64..500) {
        let m = metrics(&ConfusionMatrix { tp, fn_, fp, tn });
        prop_assert!(m.f1 >= 0.0 && m.f1 <= 1.0);
        prop_assert!(m.f1 <= 2.0 * m.precision.min(m.recall) + 1e-15);
        prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
    }

    #[test]
    fn folds_partition_users_and_keep_proportions(pos in 3usize..60, neg in 3usize..60, k in 2usize..4, seed in any::<u64>()) {
        let labels: Vec<Label> = (0..pos + neg).map(|i| Label::from_positive(i < pos)).collect();
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in 0..k {
            let (_, test) = folds.split(f);
            let spam = test.iter().filter(|&&i| labels[i].is_positive()).count();
            prop_assert!(spam == pos / k || spam == pos.div_ceil(k));
            let legit = test.len() - spam;
            prop_assert!(legit == neg / k || legit == neg.div_ceil(k));
            for i in test {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
}

fn gaussian_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let mut m = Matrix::zeros(n, d);
    for r in 0..n {
        for c in 0..d {
            let u: f64 = rng.random_range(1e-12..1.0);
            let v: f64 = rng.random();
            m.set(r, c, (-2.0 * u.ln()).sqrt() * (core::f64::consts::TAU * v).cos());
        }
    }
    m
}

fn named(values: Matrix) -> FeatureMatrix {
    let names = (0..values.cols()).map(|c| format!("f{c}")).collect();
    FeatureMatrix::new(values, names).unwrap()
}

fn cv_f1(x: &FeatureMatrix, labels: &[Label], kind: ClassifierKind, params: &ClassifierParams, seed: u64) -> f64 {
    let cfg = CvConfig {
        kind,
        params,
        folds: 5,
        seeds: Seeds { model: 0, eval: seed },
        protocol: FeatureProtocol::Precomputed,
        feature_set_name: "x".into(),
    };
    cross_validate(&FeatureSource::Precomputed(x), labels, &cfg)
        .unwrap()
        .pooled_metrics
        .f1
}

#[test]
fn random_labels_score_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 200;
    let x = named(gaussian_features(&mut rng, n, 5));
    let params = ClassifierParams::default();
    let mut f1s = Vec::new();
    for shuffle in 0..20 {
        let mut labels: Vec<Label> = (0..n).map(|i| Label::from_positive(i < n / 2)).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        f1s.push(cv_f1(&x, &labels, ClassifierKind::LinearSvm, &params, shuffle));
    }
    let inside = f1s.iter().filter(|f| (0.4..=0.6).contains(*f)).count();
    let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
    assert!(inside >= 18, "{f1s:?}");
    assert!((0.4..=0.6).contains(&mean), "mean {mean}");
}

#[test]
fn separable_data_is_learned_perfectly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 60;
    let mut x = gaussian_features(&mut rng, n, 3);
    let labels: Vec<Label> = (0..n).map(|i| Label::from_positive(i % 2 == 0)).collect();
    for (r, label) in labels.iter().enumerate() {
        let v = x.get(r, 0).abs() + 0.5;
        x.set(r, 0, if label.is_positive() { v } else { -v });
    }
    let x = named(x);
    let params = ClassifierParams::default();
    for kind in ClassifierKind::ALL {
        assert_eq!(cv_f1(&x, &labels, kind, &params, 1), 1.0, "{kind:?}");
    }
}

#[test]
fn tree_models_ignore_monotone_feature_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 80;
    let x = gaussian_features(&mut rng, n, 4);
    let labels: Vec<Label> = (0..n)
        .map(|r| Label::from_positive(x.get(r, 0) + 0.5 * x.get(r, 1) > 0.2))
        .collect();
    let mut y = x.clone();
    for r in 0..n {
        for v in y.row_mut(r) {
            *v = v.powi(3) + 2.0 * *v;
        }
    }
    let (x, y) = (named(x), named(y));
    let params = ClassifierParams::default();
    for kind in [ClassifierKind::Adaboost, ClassifierKind::RandomForest] {
        let a = fit(kind, &LabeledSet::new(x.clone(), labels.clone()).unwrap(), &params, 4).unwrap();
        let b = fit(kind, &LabeledSet::new(y.clone(), labels.clone()).unwrap(), &params, 4).unwrap();
        assert_eq!(a.predict(&x).unwrap(), b.predict(&y).unwrap(), "{kind:?}");
    }
}

#[test]
fn linear_svm_ignores_positive_affine_feature_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 80;
    let x = gaussian_features(&mut rng, n, 3);
    let labels: Vec<Label> = (0..n)
        .map(|r| Label::from_positive(x.get(r, 0) - x.get(r, 2) > 0.0))
        .collect();
    let mut y = x.clone();
    for r in 0..n {
        for (c, v) in y.row_mut(r).iter_mut().enumerate() {
            *v = *v * (c as f64 + 2.0) - 3.0;
        }
    }
    let (x, y) = (named(x), named(y));
    let params = ClassifierParams::default();
    let a = fit(
        ClassifierKind::LinearSvm,
        &LabeledSet::new(x.clone(), labels.clone()).unwrap(),
        &params,
        2,
    )
    .unwrap();
    let b = fit(
        ClassifierKind::LinearSvm,
        &LabeledSet::new(y.clone(), labels.clone()).unwrap(),
        &params,
        2,
    )
    .unwrap();
    let sa = a.decision_scores(&x).unwrap();
    let sb = b.decision_scores(&y).unwrap();
    for (p, q) in sa.iter().zip(&sb) {
        assert!((p - q).abs() <= 1e-9, "{p} vs {q}");
    }
}
