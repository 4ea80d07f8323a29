//! Average-tie (fractional) ranking shared by the correlation, divergence,
//! and panel modules.

/// Direction a rank of 1 corresponds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankOrder {
    /// Rank 1 is the smallest value.
    Ascending,
    /// Rank 1 is the largest value.
    Descending,
}

/// Assigns fractional ranks to `values`, averaging ties.
///
/// Returns one rank per input position, in input order. Equal values share
/// the mean of the ranks they would occupy, so ranks always sum to
/// `n(n+1)/2`.
pub fn average_ranks(values: &[f64], order: RankOrder) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a]
            .partial_cmp(&values[b])
            .expect("rank input must not contain NaN");
        match order {
            RankOrder::Ascending => ord,
            RankOrder::Descending => ord.reverse(),
        }
    });

    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..=j hold tied values; ranks are 1-based.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_values_descending() {
        let ranks = average_ranks(&[3.0, 1.0, 2.0], RankOrder::Descending);
        assert_eq!(ranks, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn tied_values_take_average_rank() {
        let ranks = average_ranks(&[2.0, 2.0, 1.0], RankOrder::Descending);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn ascending_is_reverse_of_descending_for_distinct() {
        let v = [5.0, -1.0, 2.5, 7.0];
        let asc = average_ranks(&v, RankOrder::Ascending);
        let desc = average_ranks(&v, RankOrder::Descending);
        let n = v.len() as f64;
        for (a, d) in asc.iter().zip(&desc) {
            assert_eq!(a + d, n + 1.0);
        }
    }

    #[test]
    fn ranks_sum_invariant() {
        let v = [1.0, 1.0, 1.0, 4.0, 2.0, 2.0];
        let ranks = average_ranks(&v, RankOrder::Ascending);
        let n = v.len() as f64;
        let sum: f64 = ranks.iter().sum();
        assert!((sum - n * (n + 1.0) / 2.0).abs() < 1e-12);
    }
}
