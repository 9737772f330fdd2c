use serde::Serialize;

/// A group of nearly equal eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub lambda_mean: f64,
    pub complex_multiplicity: usize,
    pub real_dimension: usize,
}

/// Cluster index of each value in an ascending list: consecutive values
/// share a cluster when their gap is at most `tol·max(1, λ)`.
pub fn cluster_ids(values: &[f64], tol: f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(values.len());
    let mut current = 0;
    for (k, &v) in values.iter().enumerate() {
        if k > 0 && v - values[k - 1] > tol * v.abs().max(1.0) {
            current += 1;
        }
        ids.push(current);
    }
    ids
}

/// Greedy gap clustering of ascending eigenvalues. For a nonzero weight every
/// complex eigenvector contributes a real two-dimensional eigenspace.
pub fn cluster_multiplicities(values: &[f64], tol: f64, weight_is_zero: bool) -> Vec<Cluster> {
    let ids = cluster_ids(values, tol);
    let mut out: Vec<Cluster> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for (&v, &id) in values.iter().zip(&ids) {
        if id == out.len() {
            out.push(Cluster {
                lambda_mean: 0.0,
                complex_multiplicity: 0,
                real_dimension: 0,
            });
            sums.push(0.0);
        }
        out[id].complex_multiplicity += 1;
        sums[id] += v;
    }
    for (c, s) in out.iter_mut().zip(sums) {
        c.lambda_mean = s / c.complex_multiplicity as f64;
        c.real_dimension = if weight_is_zero {
            c.complex_multiplicity
        } else {
            2 * c.complex_multiplicity
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_equal_values_merge() {
        let c = cluster_multiplicities(&[1.0, 1.0 + 1e-12, 2.0], 1e-9, false);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].complex_multiplicity, c[0].real_dimension), (2, 4));
        assert_eq!((c[1].lambda_mean, c[1].complex_multiplicity, c[1].real_dimension), (2.0, 1, 2));
    }

    #[test]
    fn weight_zero_counts_real_dimension_once() {
        let c = cluster_multiplicities(&[0.0, 1.0, 1.0], 1e-9, true);
        assert_eq!(c[1].real_dimension, 2);
        assert!(cluster_multiplicities(&[], 1e-9, true).is_empty());
    }
}
