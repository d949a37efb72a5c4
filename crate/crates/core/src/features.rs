//! Topic-outlier features computed from the per-user topic matrix.
//!
//! Both scores centre a slice of the topic matrix and divide by the root of
//! its summed squared deviations, so every non-constant slice comes out with
//! zero sum and unit L2 norm. GOSS slices by topic (across users), LOSS by
//! user (across topics). A constant slice maps to zeros.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{is_mention, is_url, RawUser};
use crate::error::{Error, Result};
use crate::lda::TopicMatrix;
use crate::matrix::Matrix;

/// Named feature columns, one row per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Matrix, column_names: Vec<String>) -> Result<Self> {
        if column_names.len() != values.cols() {
            return Err(Error::ShapeMismatch {
                expected: values.cols(),
                found: column_names.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for (r, row) in values.iter_rows().enumerate() {
            if let Some(c) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::NanFeature { row: r, col: c });
            }
        }
        Ok(FeatureMatrix { values, column_names })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_rows(indices),
            column_names: self.column_names.clone(),
        }
    }
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| alloc::format!("{prefix}_{k}")).collect()
}

/// Centres `slice` and scales it to unit L2 norm in place; constant slices
/// become zeros.
fn standard_score(slice: &mut [f64]) {
    let n = slice.len() as f64;
    let mean = slice.iter().sum::<f64>() / n;
    let ss: f64 = slice.iter().map(|x| (x - mean) * (x - mean)).sum();
    let denom = libm::sqrt(ss);
    for x in slice {
        *x = if denom > 0.0 { (*x - mean) / denom } else { 0.0 };
    }
}

/// Population statistics for GOSS: per-topic mean and root of summed squared
/// deviations. Kept so that users outside the population can be scored
/// against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GossStats {
    pub mean: Vec<f64>,
    pub denom: Vec<f64>,
}

impl GossStats {
    pub fn fit(x: &Matrix) -> Result<GossStats> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::TooFewUsers(n));
        }
        let mut mean = Vec::with_capacity(x.cols());
        let mut denom = Vec::with_capacity(x.cols());
        for k in 0..x.cols() {
            let mu = x.column(k).sum::<f64>() / n as f64;
            let ss: f64 = x.column(k).map(|v| (v - mu) * (v - mu)).sum();
            mean.push(mu);
            denom.push(libm::sqrt(ss));
        }
        Ok(GossStats { mean, denom })
    }

    pub fn apply(&self, x: &Matrix) -> Result<FeatureMatrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.cols(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (k, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.denom[k] > 0.0 {
                    (*v - self.mean[k]) / self.denom[k]
                } else {
                    0.0
                };
            }
        }
        FeatureMatrix::new(out, numbered("goss", x.cols()))
    }
}

/// Global Outlier Standard Score of every user on every topic.
pub fn goss(x: &TopicMatrix) -> Result<FeatureMatrix> {
    GossStats::fit(x.matrix())?.apply(x.matrix())
}

/// Local Outlier Standard Score of every user on every topic.
pub fn loss(x: &TopicMatrix) -> Result<FeatureMatrix> {
    let k = x.n_topics();
    if k < 2 {
        return Err(Error::TooFewTopics(k));
    }
    let mut out = x.matrix().clone();
    for r in 0..out.rows() {
        standard_score(out.row_mut(r));
    }
    FeatureMatrix::new(out, numbered("loss", k))
}

/// The unscaled topic probabilities as a baseline feature set.
pub fn raw(x: &TopicMatrix) -> Result<FeatureMatrix> {
    FeatureMatrix::new(x.matrix().clone(), numbered("raw", x.n_topics()))
}

pub fn concat(parts: &[FeatureMatrix]) -> Result<FeatureMatrix> {
    let Some(first) = parts.first() else {
        return FeatureMatrix::new(Matrix::zeros(0, 0), Vec::new());
    };
    for p in parts {
        if p.rows() != first.rows() {
            return Err(Error::ShapeMismatch {
                expected: first.rows(),
                found: p.rows(),
            });
        }
    }
    let values = Matrix::hstack(&parts.iter().map(|p| &p.values).collect::<Vec<_>>());
    let names = parts.iter().flat_map(|p| p.column_names.iter().cloned()).collect();
    FeatureMatrix::new(values, names)
}

pub const UC_COLUMNS: [&str; 4] = [
    "uc_links_per_tweet",
    "uc_mentions_per_tweet",
    "uc_unique_mentions_per_tweet",
    "uc_unique_links_per_tweet",
];

/// Content features: link and @mention counts per post, total and unique.
pub fn uc_features(users: &[RawUser]) -> Result<FeatureMatrix> {
    let mut values = Matrix::zeros(users.len(), UC_COLUMNS.len());
    for (r, user) in users.iter().enumerate() {
        if user.posts.is_empty() {
            return Err(Error::ZeroPosts(user.user_id.clone()));
        }
        let mut links = 0usize;
        let mut mentions = 0usize;
        let mut unique_links = BTreeSet::new();
        let mut unique_mentions = BTreeSet::new();
        for tok in user.posts.iter().flat_map(|p| p.split_whitespace()) {
            if is_url(tok) {
                links += 1;
                unique_links.insert(tok);
            } else if is_mention(tok) {
                mentions += 1;
                unique_mentions.insert(tok);
            }
        }
        let posts = user.posts.len() as f64;
        let row = values.row_mut(r);
        row[0] = links as f64 / posts;
        row[1] = mentions as f64 / posts;
        row[2] = unique_mentions.len() as f64 / posts;
        row[3] = unique_links.len() as f64 / posts;
    }
    FeatureMatrix::new(values, UC_COLUMNS.iter().map(|s| String::from(*s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use alloc::vec;

    fn tm(rows: &[&[f64]]) -> TopicMatrix {
        TopicMatrix(Matrix::from_rows(rows))
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn goss_two_point_column() {
        let g = goss(&tm(&[&[0.9, 0.1], &[0.1, 0.9]])).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        close(&g.values.column(0).collect::<Vec<_>>(), &[h, -h], 1e-12);
        assert_eq!(g.column_names, vec!["goss_0", "goss_1"]);
    }

    #[test]
    fn goss_constant_column_is_zero() {
        let g = goss(&tm(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert!(g.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn goss_three_users() {
        let g = goss(&tm(&[&[0.2, 0.8], &[0.5, 0.5], &[0.8, 0.2]])).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        close(&g.values.column(0).collect::<Vec<_>>(), &[-h, 0.0, h], 1e-12);
    }

    #[test]
    fn goss_needs_two_users() {
        assert_eq!(goss(&tm(&[&[0.5, 0.5]])), Err(Error::TooFewUsers(1)));
    }

    #[test]
    fn loss_rows() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let l = loss(&tm(&[&[0.9, 0.1]])).unwrap();
        close(l.values.row(0), &[h, -h], 1e-12);
        let l = loss(&tm(&[&[0.25; 4]])).unwrap();
        assert!(l.values.row(0).iter().all(|&v| v == 0.0));
        // Exact-fraction evaluation: deviations (4/15, -1/30, -7/30) over sqrt(19/150).
        let l = loss(&tm(&[&[0.6, 0.3, 0.1]])).unwrap();
        close(
            l.values.row(0),
            &[0.7492686492653552, -0.0936585811581694, -0.6556100681071858],
            1e-12,
        );
    }

    #[test]
    fn loss_needs_two_topics() {
        assert_eq!(loss(&tm(&[&[1.0], &[1.0]])), Err(Error::TooFewTopics(1)));
    }

    #[test]
    fn concat_shapes() {
        let x = tm(&[&[0.2, 0.8], &[0.7, 0.3]]);
        let both = concat(&[goss(&x).unwrap(), loss(&x).unwrap()]).unwrap();
        assert_eq!((both.rows(), both.cols()), (2, 4));
        let g = goss(&x).unwrap();
        assert_eq!(concat(core::slice::from_ref(&g)).unwrap(), g);
        let short = goss(&tm(&[&[0.2, 0.8], &[0.7, 0.3], &[0.1, 0.9]])).unwrap();
        let long = loss(&x).unwrap();
        assert!(matches!(concat(&[short, long]), Err(Error::ShapeMismatch { .. })));
        assert_eq!(concat(&[g.clone(), g]), Err(Error::DuplicateColumn("goss_0".into())));
    }

    #[test]
    fn goss_stats_score_new_users_against_population() {
        let pop = Matrix::from_rows(&[[0.2, 0.8], [0.8, 0.2]]);
        let stats = GossStats::fit(&pop).unwrap();
        let scored = stats.apply(&Matrix::from_rows(&[[0.5, 0.5]])).unwrap();
        close(scored.values.row(0), &[0.0, 0.0], 1e-12);
        assert!(matches!(
            stats.apply(&Matrix::from_rows(&[[1.0]])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn user(posts: &[&str]) -> RawUser {
        RawUser::new("u", Label::Spammer, posts.iter().map(|p| String::from(*p)).collect())
    }

    #[test]
    fn uc_link_counts() {
        let f = uc_features(&[user(&["a http://x http://y", "http://x b"])]).unwrap();
        assert_eq!(f.values.row(0)[0], 1.5);
        assert_eq!(f.values.row(0)[3], 1.0);
    }

    #[test]
    fn uc_mention_counts() {
        let f = uc_features(&[user(&["hi @a @a", "yo @b"])]).unwrap();
        assert_eq!(f.values.row(0)[1], 1.5);
        assert_eq!(f.values.row(0)[2], 1.0);
        let f = uc_features(&[user(&["plain", "text"])]).unwrap();
        assert!(f.values.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uc_rejects_users_without_posts() {
        assert_eq!(uc_features(&[user(&[])]), Err(Error::ZeroPosts("u".into())));
    }
}
