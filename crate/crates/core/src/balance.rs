//! SMOTE and ADASYN oversampling on dense feature rows.
//!
//! Every non-majority class is grown to the majority count. Synthetic rows
//! are `x + u * (x_nn - x)` for a class member `x`, one of its `k` same-class
//! nearest neighbors `x_nn`, and `u ~ U[0, 1)` from a seeded ChaCha8 stream.
//! Originals come first in the output, unchanged; synthetic rows follow,
//! grouped by class in label-code order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMethod {
    Smote,
    Adasyn,
    #[default]
    None,
}

impl fmt::Display for BalanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BalanceMethod::Smote => "smote",
            BalanceMethod::Adasyn => "adasyn",
            BalanceMethod::None => "none",
        })
    }
}

impl FromStr for BalanceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smote" => Ok(BalanceMethod::Smote),
            "adasyn" => Ok(BalanceMethod::Adasyn),
            "none" => Ok(BalanceMethod::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown balance method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancerConfig {
    pub method: BalanceMethod,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        BalancerConfig {
            method: BalanceMethod::None,
            k_neighbors: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced<T> {
    pub x: Vec<Vec<T>>,
    pub y: Vec<Label>,
    /// Classes left unbalanced because they had no more than `k` members.
    pub skipped: Vec<Label>,
}

fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum()
}

/// Indices of the `k` points nearest to `points[query]` by Euclidean
/// distance, excluding the query. Ties go to the lower index.
pub fn knn<T: Scalar>(points: &[Vec<T>], query: usize, k: usize) -> Result<Vec<usize>> {
    knn_by(points.len(), query, k, |j| {
        squared_distance(&points[query], &points[j])
    })
}

fn knn_by<T: Scalar>(
    n: usize,
    query: usize,
    k: usize,
    distance: impl Fn(usize) -> T,
) -> Result<Vec<usize>> {
    if k >= n {
        return Err(Error::NeighborCount { k, points: n });
    }
    let mut candidates: Vec<(T, usize)> = (0..n)
        .filter(|&j| j != query)
        .map(|j| (distance(j), j))
        .collect();
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    Ok(candidates.into_iter().take(k).map(|(_, j)| j).collect())
}

/// `x + u * (nn - x)`.
pub fn interpolate<T: Scalar>(x: &[T], nn: &[T], u: T) -> Vec<T> {
    x.iter().zip(nn).map(|(&a, &b)| a + u * (b - a)).collect()
}

/// Splits `total` proportionally to `weights` with largest-remainder
/// rounding; remainder ties go to the lower index. All-zero weights split
/// uniformly.
pub fn proportional_quotas(weights: &[f64], total: usize) -> Vec<usize> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|w| total as f64 * w / sum).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut quotas: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.partial_cmp(&fa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    quotas
}

struct Plan {
    majority: usize,
    members: BTreeMap<Label, Vec<usize>>,
}

fn plan<T>(x: &[Vec<T>], y: &[Label]) -> Result<Plan> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut members: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, &label) in y.iter().enumerate() {
        members.entry(label).or_default().push(i);
    }
    let majority = members.values().map(Vec::len).max().unwrap_or(0);
    Ok(Plan { majority, members })
}

pub fn balance<T: Scalar>(x: &[Vec<T>], y: &[Label], cfg: &BalancerConfig) -> Result<Balanced<T>> {
    match cfg.method {
        BalanceMethod::Smote => smote(x, y, cfg),
        BalanceMethod::Adasyn => adasyn(x, y, cfg),
        BalanceMethod::None => {
            plan(x, y)?;
            Ok(Balanced {
                x: x.to_vec(),
                y: y.to_vec(),
                skipped: Vec::new(),
            })
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidArgument("k_neighbors must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Same-class neighbor lists, as positions within `members`.
fn class_neighbors<T: Scalar>(x: &[Vec<T>], members: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    (0..members.len())
        .map(|i| {
            knn_by(members.len(), i, k, |j| {
                squared_distance(&x[members[i]], &x[members[j]])
            })
        })
        .collect()
}

pub fn smote<T: Scalar>(x: &[Vec<T>], y: &[Label], cfg: &BalancerConfig) -> Result<Balanced<T>> {
    check_k(cfg.k_neighbors)?;
    let plan = plan(x, y)?;
    let k = cfg.k_neighbors;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Balanced {
        x: x.to_vec(),
        y: y.to_vec(),
        skipped: Vec::new(),
    };
    for (&label, members) in &plan.members {
        let needed = plan.majority - members.len();
        if needed == 0 {
            continue;
        }
        if members.len() <= k {
            log::warn!(
                "smote: class {label} has {} members, not more than k = {k}; left unbalanced",
                members.len()
            );
            out.skipped.push(label);
            continue;
        }
        let neighbors = class_neighbors(x, members, k)?;
        for _ in 0..needed {
            let base = rng.gen_range(0..members.len());
            let nn = neighbors[base][rng.gen_range(0..k)];
            let u = T::lit(rng.gen::<f64>());
            out.x
                .push(interpolate(&x[members[base]], &x[members[nn]], u));
            out.y.push(label);
        }
    }
    Ok(out)
}

/// ADASYN: each member's share of the synthetic rows is proportional to the
/// fraction of other-class points among its `k` nearest neighbors over the
/// whole set. Interpolation stays within the class.
pub fn adasyn<T: Scalar>(x: &[Vec<T>], y: &[Label], cfg: &BalancerConfig) -> Result<Balanced<T>> {
    check_k(cfg.k_neighbors)?;
    let plan = plan(x, y)?;
    let k = cfg.k_neighbors;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Balanced {
        x: x.to_vec(),
        y: y.to_vec(),
        skipped: Vec::new(),
    };
    for (&label, members) in &plan.members {
        let needed = plan.majority - members.len();
        if needed == 0 {
            continue;
        }
        if members.len() <= k {
            log::warn!(
                "adasyn: class {label} has {} members, not more than k = {k}; left unbalanced",
                members.len()
            );
            out.skipped.push(label);
            continue;
        }
        let hardness = members
            .iter()
            .map(|&i| {
                let nn = knn(x, i, k)?;
                let foreign = nn.iter().filter(|&&j| y[j] != label).count();
                Ok(foreign as f64 / k as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        if hardness.iter().all(|&r| r == 0.0) {
            log::warn!("adasyn: class {label} has no other-class neighbors; uniform allocation");
        }
        let quotas = proportional_quotas(&hardness, needed);
        let neighbors = class_neighbors(x, members, k)?;
        for (pos, &quota) in quotas.iter().enumerate() {
            for _ in 0..quota {
                let nn = neighbors[pos][rng.gen_range(0..k)];
                let u = T::lit(rng.gen::<f64>());
                out.x.push(interpolate(&x[members[pos]], &x[members[nn]], u));
                out.y.push(label);
            }
        }
    }
    Ok(out)
}
