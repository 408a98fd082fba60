//! In-sample/out-of-sample instance split and the per-cluster
//! train/validation/test row split.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.75, 0.20, 0.05];

/// Instance ids split into `(in_sample, out_of_sample)`, both sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSplit {
    pub in_sample: Vec<String>,
    pub out_of_sample: Vec<String>,
}

/// Uniformly random `n_out`-subset of the instances as out-of-sample.
pub fn split_instances(instance_ids: &[String], n_out: usize, seed: u64) -> Result<InstanceSplit> {
    let mut ids: Vec<String> = instance_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() != instance_ids.len() {
        return Err(Error::Argument("duplicate instance ids".into()));
    }
    if n_out == 0 || n_out >= ids.len() {
        return Err(Error::Argument(format!(
            "need 0 < n_out < {} instances, got n_out = {n_out}",
            ids.len()
        )));
    }
    let mut shuffled = ids;
    shuffled.shuffle(&mut seed::rng(seed));
    let mut out_of_sample = shuffled.split_off(shuffled.len() - n_out);
    let mut in_sample = shuffled;
    in_sample.sort();
    out_of_sample.sort();
    Ok(InstanceSplit {
        in_sample,
        out_of_sample,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RowSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `n` items by `fractions` with largest-remainder rounding; ties in
/// the remainder go to the earlier set.
pub fn largest_remainder(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let quotas = fractions.map(|f| n as f64 * f);
    let mut sizes = quotas.map(|q| libm::floor(q) as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - libm::floor(quotas[a]);
        let rb = quotas[b] - libm::floor(quotas[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

pub fn check_fractions(fractions: &[f64; 3]) -> Result<()> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || libm::fabs(fractions.iter().sum::<f64>() - 1.0) > 1e-9
    {
        return Err(Error::Argument(format!(
            "fractions {fractions:?} must be nonnegative and sum to 1"
        )));
    }
    Ok(())
}

/// Within each cluster label, shuffles the member rows and allots them to
/// train/validation/test by [`largest_remainder`]. Index sets come back
/// sorted.
pub fn stratified_split(labels: &[usize], fractions: &[f64; 3], seed: u64) -> Result<RowSplit> {
    check_fractions(fractions)?;
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        clusters.entry(l).or_default().push(i);
    }
    let mut rng = seed::rng(seed);
    let mut split = RowSplit::default();
    for rows in clusters.values_mut() {
        rows.shuffle(&mut rng);
        let [a, b, _] = largest_remainder(rows.len(), fractions);
        split.train.extend_from_slice(&rows[..a]);
        split.validation.extend_from_slice(&rows[a..a + b]);
        split.test.extend_from_slice(&rows[a + b..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Per-cluster sizes of each set, for reporting.
pub fn cluster_sizes(labels: &[usize], split: &RowSplit) -> BTreeMap<usize, [usize; 3]> {
    let mut out: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
    for (set, rows) in [&split.train, &split.validation, &split.test].into_iter().enumerate() {
        for &i in rows {
            out.entry(labels[i]).or_insert([0; 3])[set] += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| alloc::format!("inst{i:02}")).collect()
    }

    #[test]
    fn instance_split_sizes() {
        let s = split_instances(&ids(41), 11, 5).unwrap();
        assert_eq!((s.in_sample.len(), s.out_of_sample.len()), (30, 11));
        let s = split_instances(&ids(41), 40, 5).unwrap();
        assert_eq!(s.in_sample.len(), 1);
        assert_eq!(
            split_instances(&ids(41), 11, 5).unwrap(),
            split_instances(&ids(41), 11, 5).unwrap()
        );
        assert!(split_instances(&ids(5), 0, 0).is_err());
        assert!(split_instances(&ids(5), 5, 0).is_err());
        assert!(split_instances(&["a".to_string(), "a".to_string()], 1, 0).is_err());
    }

    #[test]
    fn instance_split_partitions() {
        let all = ids(12);
        let s = split_instances(&all, 4, 77).unwrap();
        let mut joined: Vec<String> = s.in_sample.iter().chain(&s.out_of_sample).cloned().collect();
        joined.sort();
        assert_eq!(joined, all);
    }

    #[test]
    fn remainder_rounding() {
        assert_eq!(largest_remainder(20, &DEFAULT_FRACTIONS), [15, 4, 1]);
        assert_eq!(largest_remainder(3, &DEFAULT_FRACTIONS), [2, 1, 0]);
        assert_eq!(largest_remainder(0, &DEFAULT_FRACTIONS), [0, 0, 0]);
    }

    #[test]
    fn stratified_sizes() {
        let s = stratified_split(&[0; 20], &DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (15, 4, 1));
        let s = stratified_split(&[3; 3], &DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (2, 1, 0));

        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let s = stratified_split(&labels, &DEFAULT_FRACTIONS, 4).unwrap();
        let sizes = cluster_sizes(&labels, &s);
        assert_eq!(sizes[&0], sizes[&1]);
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert!(stratified_split(&labels, &[0.5, 0.5, 0.5], 0).is_err());
    }
}
