//! Plücker-coordinate checks for the degree-2 lift of `2 x n` matrices to
//! `3 x n` matrices.
//!
//! Column `(x, y)` lifts to `(x², xy, y²)` ([`LiftForm::Veronese`]) or to
//! `(x², xy, y)` ([`LiftForm::Printed`]). Under the Veronese lift each
//! `3 x 3` minor is the product of the three `2 x 2` minors of its columns;
//! under the other form this fails for generic matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::subsets::{self, Combinations};
use crate::tree::WeightedTree;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LiftForm {
    /// Third row `y²`.
    #[default]
    Veronese,
    /// Third row `y`.
    Printed,
}

impl LiftForm {
    pub fn as_str(self) -> &'static str {
        match self {
            LiftForm::Veronese => "veronese",
            LiftForm::Printed => "printed",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "veronese" => Some(LiftForm::Veronese),
            "printed" => Some(LiftForm::Printed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix<S> {
    pub source: [Vec<S>; 2],
    pub lifted: [Vec<S>; 3],
    pub form: LiftForm,
}

impl<S: Scalar> LiftedMatrix<S> {
    pub fn new(source: [Vec<S>; 2], form: LiftForm) -> Result<Self> {
        let n = source[0].len();
        if source[1].len() != n {
            return Err(Error::InvalidArgument("rows must have equal length".into()));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 columns, got {n}")));
        }
        let [x, y] = &source;
        let lifted = [
            x.iter().map(|a| a.clone() * a.clone()).collect(),
            x.iter().zip(y).map(|(a, b)| a.clone() * b.clone()).collect(),
            y.iter()
                .map(|b| match form {
                    LiftForm::Veronese => b.clone() * b.clone(),
                    LiftForm::Printed => b.clone(),
                })
                .collect(),
        ];
        Ok(LiftedMatrix { source, lifted, form })
    }

    pub fn n(&self) -> usize {
        self.source[0].len()
    }
}

fn det2<S: Scalar>(rows: &[Vec<S>; 2], a: usize, b: usize) -> S {
    rows[0][a].clone() * rows[1][b].clone() - rows[0][b].clone() * rows[1][a].clone()
}

fn det3<S: Scalar>(rows: &[Vec<S>; 3], c: [usize; 3]) -> S {
    let m = |r: usize, k: usize| rows[r][c[k]].clone();
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

/// `3 x 3` minors on sorted column triples, in rank order.
pub fn plucker_minors<S: Scalar>(rows: &[Vec<S>; 3]) -> Result<Vec<S>> {
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("rows must have equal length".into()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 columns, got {n}")));
    }
    Ok(subsets::subsets_of_range(n, 3)
        .map(|c| det3(rows, [c[0], c[1], c[2]]))
        .collect())
}

/// Minor on columns in the given order, from the sorted minors.
fn ordered_minor<S: Scalar>(minors: &[S], cols: [usize; 3]) -> S {
    let mut c = cols;
    let mut odd = false;
    for i in 0..3 {
        for j in 0..2 - i {
            if c[j] > c[j + 1] {
                c.swap(j, j + 1);
                odd = !odd;
            }
        }
    }
    let v = minors[subsets::rank(&c)].clone();
    if odd {
        -v
    } else {
        v
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PluckerReport {
    /// Number of three-term relations evaluated.
    pub relations: usize,
    pub max_relative_residual: f64,
}

/// Largest relative residual of `p_rij p_rkl - p_rik p_rjl + p_ril p_rjk`
/// over all distinct `r` and `i < j < k < l`.
pub fn plucker_residuals<S: Scalar>(minors: &[S], n: usize) -> PluckerReport {
    let mut relations = 0;
    let mut worst: f64 = 0.0;
    let all: Vec<usize> = (0..n).collect();
    for r in 0..n {
        let rest: Vec<usize> = all.iter().copied().filter(|&x| x != r).collect();
        for q in Combinations::new(&rest, 4) {
            let (i, j, k, l) = (q[0], q[1], q[2], q[3]);
            let p = |a, b| ordered_minor(minors, [r, a, b]);
            let terms = [p(i, j) * p(k, l), p(i, k) * p(j, l), p(i, l) * p(j, k)];
            let scale = terms.iter().map(|t| t.to_f64().abs()).fold(0.0, f64::max);
            let value = terms[0].clone() - terms[1].clone() + terms[2].clone();
            worst = worst.max(relative(value.to_f64().abs(), scale));
            relations += 1;
        }
    }
    PluckerReport {
        relations,
        max_relative_residual: worst,
    }
}

/// Largest relative gap between each lifted `3 x 3` minor and the product of
/// the three `2 x 2` source minors on the same columns.
pub fn verify_minor_factorization<S: Scalar>(source: &[Vec<S>; 2], form: LiftForm) -> Result<f64> {
    let lifted = LiftedMatrix::new(source.clone(), form)?;
    let minors = plucker_minors(&lifted.lifted)?;
    let mut worst: f64 = 0.0;
    for (c, p) in subsets::subsets_of_range(lifted.n(), 3).zip(&minors) {
        let prod = det2(source, c[0], c[1]) * det2(source, c[0], c[2]) * det2(source, c[1], c[2]);
        let scale = p.to_f64().abs().max(prod.to_f64().abs());
        worst = worst.max(relative((p.clone() - prod).to_f64().abs(), scale));
    }
    Ok(worst)
}

/// `d(a,b) + d(a,c) + d(b,c) = 2 w([abc])` for every leaf triple.
pub fn verify_triple_identity<S: Scalar>(tree: &WeightedTree<S>, tol: f64) -> bool {
    let two = S::from_i64(2);
    subsets::subsets_of_range(tree.leaf_count(), 3).all(|t| {
        let (a, b, c) = (t[0], t[1], t[2]);
        let lhs = tree.distance(a, b) + tree.distance(a, c) + tree.distance(b, c);
        lhs.approx_eq(&(two.clone() * tree.subtree_weight_idx(&t)), tol)
    })
}

/// A `2 x n` matrix with entries drawn from `[-10, 10]`.
pub fn random_source<S: Scalar>(n: usize, seed: u64) -> [Vec<S>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (S::from_i64(-10), S::from_i64(10));
    let mut row = || (0..n).map(|_| S::sample(&mut rng, &lo, &hi)).collect();
    [row(), row()]
}
