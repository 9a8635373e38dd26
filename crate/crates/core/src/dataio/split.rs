//! Train/test splitting and horizontal client partitioning.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::preprocess::PreparedDataset;
use super::schema::SchemaConfig;
use super::table::RawTable;
use super::DataError;

/// One client's horizontal slice of the training data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientPartition {
    pub client_id: usize,
    pub features: ndarray::Array2<f64>,
    pub labels: Vec<u8>,
}

impl ClientPartition {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }
}

/// Stratified split indices: test row count is `round(test_fraction * n)`
/// overall, apportioned across classes by largest remainder so each class
/// keeps its ratio to within one sample. Returned index lists are in
/// original row order; the draw is seeded.
pub fn stratified_split_indices(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !test_fraction.is_finite() || test_fraction <= 0.0 || test_fraction >= 1.0 {
        return Err(DataError::InvalidFraction(test_fraction));
    }
    let n = labels.len();
    if n < 2 {
        return Err(DataError::TooFewSamples { needed: 2, got: n });
    }
    let mut class_indices: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in labels.iter().enumerate() {
        class_indices[usize::from(label.min(1))].push(i);
    }
    if class_indices[0].is_empty() || class_indices[1].is_empty() {
        return Err(DataError::SingleClass);
    }

    let target_total = (test_fraction * n as f64).round() as usize;
    let quotas = [
        test_fraction * class_indices[0].len() as f64,
        test_fraction * class_indices[1].len() as f64,
    ];
    let mut take = [quotas[0].floor() as usize, quotas[1].floor() as usize];
    let mut leftover = target_total.saturating_sub(take[0] + take[1]);
    // Hand out the remaining slots by largest fractional part, class 0 first
    // on ties.
    let mut order = [0usize, 1usize];
    if quotas[1].fract() > quotas[0].fract() {
        order = [1, 0];
    }
    for class in order {
        if leftover == 0 {
            break;
        }
        take[class] += 1;
        leftover -= 1;
    }
    for class in 0..2 {
        let count = class_indices[class].len();
        if take[class] == 0 || take[class] >= count {
            return Err(DataError::ClassTooSmall { class: class as u8, count });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test: Vec<usize> = Vec::with_capacity(take[0] + take[1]);
    for class in 0..2 {
        let mut pool = class_indices[class].clone();
        pool.shuffle(&mut rng);
        test.extend_from_slice(&pool[..take[class]]);
    }
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

fn subset(data: &PreparedDataset, indices: &[usize]) -> PreparedDataset {
    PreparedDataset {
        features: data.features.select(Axis(0), indices),
        labels: indices.iter().map(|&i| data.labels[i]).collect(),
        feature_names: data.feature_names.clone(),
    }
}

/// Stratified train/test split of a prepared dataset.
pub fn split_train_test(
    data: &PreparedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(PreparedDataset, PreparedDataset), DataError> {
    let (train_idx, test_idx) = stratified_split_indices(&data.labels, test_fraction, seed)?;
    Ok((subset(data, &train_idx), subset(data, &test_idx)))
}

/// Stratified train/test split of a raw table, stratifying on the mapped
/// binary label. Splitting before fitting keeps test rows out of the
/// fitted encoder and scaler statistics.
pub fn split_raw_stratified(
    table: &RawTable,
    schema: &SchemaConfig,
    test_fraction: f64,
    seed: u64,
) -> Result<(RawTable, RawTable), DataError> {
    schema.validate()?;
    let label_idx = table
        .column_index(schema.label_column())
        .ok_or_else(|| DataError::MissingColumns(vec![schema.label_column().to_string()]))?;
    let labels: Vec<u8> = table.rows.iter().map(|r| schema.map_label(&r[label_idx])).collect();
    let (train_idx, test_idx) = stratified_split_indices(&labels, test_fraction, seed)?;
    Ok((table.select_rows(&train_idx), table.select_rows(&test_idx)))
}

/// Splits training data across clients: a seeded shuffle followed by
/// contiguous slices whose sizes differ by at most one, the earlier clients
/// taking the extra rows.
///
/// A single client receives the data in its original order, which keeps a
/// one-client federation bit-identical to centralized training.
pub fn partition_clients(
    train: &PreparedDataset,
    n_clients: usize,
    seed: u64,
) -> Result<Vec<ClientPartition>, DataError> {
    let n = train.n_samples();
    if n_clients == 0 || n_clients > n {
        return Err(DataError::InvalidClientCount { clients: n_clients, rows: n });
    }
    if n_clients == 1 {
        return Ok(vec![ClientPartition {
            client_id: 0,
            features: train.features.clone(),
            labels: train.labels.clone(),
        }]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / n_clients;
    let extra = n % n_clients;
    let mut partitions = Vec::with_capacity(n_clients);
    let mut start = 0;
    for client_id in 0..n_clients {
        let size = base + usize::from(client_id < extra);
        let slice = &order[start..start + size];
        partitions.push(ClientPartition {
            client_id,
            features: train.features.select(Axis(0), slice),
            labels: slice.iter().map(|&i| train.labels[i]).collect(),
        });
        start += size;
    }
    Ok(partitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    /// Rows carry their own index so reassembly can be checked.
    fn indexed_dataset(labels: Vec<u8>) -> PreparedDataset {
        let n = labels.len();
        PreparedDataset {
            features: Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64),
            labels,
            feature_names: vec!["f0".into(), "f1".into()],
        }
    }

    fn alternating(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i % 2) as u8).collect()
    }

    #[test]
    fn hundred_rows_split_eighty_twenty() {
        let data = indexed_dataset(alternating(100));
        let (train, test) = split_train_test(&data, 0.2, 7).unwrap();
        assert_eq!(train.n_samples(), 80);
        assert_eq!(test.n_samples(), 20);
    }

    #[test]
    fn split_is_stratified_within_one_sample() {
        let mut labels = vec![0u8; 55];
        labels.extend(vec![1u8; 45]);
        let data = indexed_dataset(labels);
        let (_, test) = split_train_test(&data, 0.2, 3).unwrap();
        let test_pos = test.labels.iter().filter(|&&l| l == 1).count() as f64;
        let test_neg = test.labels.len() as f64 - test_pos;
        assert!((test_pos - 0.2 * 45.0).abs() < 1.0, "positives in test: {test_pos}");
        assert!((test_neg - 0.2 * 55.0).abs() < 1.0, "negatives in test: {test_neg}");
    }

    #[test]
    fn split_partitions_all_rows_exactly_once() {
        let data = indexed_dataset(alternating(37));
        let (train, test) = split_train_test(&data, 0.25, 11).unwrap();
        let mut seen: Vec<i64> = train
            .features
            .column(0)
            .iter()
            .chain(test.features.column(0).iter())
            .map(|&v| v as i64 / 2)
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..37).collect::<Vec<i64>>());
    }

    #[test]
    fn split_is_seed_deterministic() {
        let data = indexed_dataset(alternating(50));
        let a = split_train_test(&data, 0.3, 5).unwrap();
        let b = split_train_test(&data, 0.3, 5).unwrap();
        let c = split_train_test(&data, 0.3, 6).unwrap();
        assert_eq!(a.1, b.1);
        assert_ne!(a.1, c.1, "different seeds should draw different test sets");
    }

    #[test]
    fn split_rejects_bad_fraction_and_tiny_classes() {
        let data = indexed_dataset(alternating(10));
        for frac in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                split_train_test(&data, frac, 1),
                Err(DataError::InvalidFraction(_))
            ));
        }
        let mut labels = vec![0u8; 9];
        labels.push(1);
        let skewed = indexed_dataset(labels);
        assert!(matches!(
            split_train_test(&skewed, 0.2, 1),
            Err(DataError::ClassTooSmall { class: 1, count: 1 })
        ));
        let single = indexed_dataset(vec![0, 0, 0, 0]);
        assert!(matches!(split_train_test(&single, 0.5, 1), Err(DataError::SingleClass)));
    }

    #[test]
    fn raw_split_matches_prepared_split_indices() {
        let table = RawTable {
            headers: vec!["x".into(), "label".into()],
            rows: (0..20)
                .map(|i| vec![i.to_string(), if i % 2 == 0 { "bad" } else { "ok" }.into()])
                .collect(),
        };
        let schema = SchemaConfig::from_json(
            r#"{
                "columns": [
                    {"name": "x", "kind": "numeric"},
                    {"name": "label", "role": "label"}
                ],
                "label_positive_values": ["bad"]
            }"#,
        )
        .unwrap();
        let (train, test) = split_raw_stratified(&table, &schema, 0.2, 9).unwrap();
        assert_eq!(train.n_rows(), 16);
        assert_eq!(test.n_rows(), 4);
        let mut all: Vec<usize> = train
            .rows
            .iter()
            .chain(test.rows.iter())
            .map(|r| r[0].parse().unwrap())
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<usize>>());
    }

    #[test]
    fn ten_rows_three_clients_split_four_three_three() {
        let data = indexed_dataset(alternating(10));
        let parts = partition_clients(&data, 3, 1).unwrap();
        let sizes: Vec<usize> = parts.iter().map(|p| p.n_samples()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn partitions_are_disjoint_and_cover_everything() {
        let data = indexed_dataset(alternating(23));
        let parts = partition_clients(&data, 5, 42).unwrap();
        let mut seen: Vec<i64> = parts
            .iter()
            .flat_map(|p| p.features.column(0).iter().map(|&v| v as i64 / 2).collect::<Vec<_>>())
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..23).collect::<Vec<i64>>());
        for (i, p) in parts.iter().enumerate() {
            assert_eq!(p.client_id, i);
        }
    }

    #[test]
    fn partitioning_is_seed_deterministic() {
        let data = indexed_dataset(alternating(16));
        let a = partition_clients(&data, 4, 2).unwrap();
        let b = partition_clients(&data, 4, 2).unwrap();
        let c = partition_clients(&data, 4, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn single_client_keeps_original_order() {
        let data = indexed_dataset(alternating(8));
        let parts = partition_clients(&data, 1, 99).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].features, data.features);
        assert_eq!(parts[0].labels, data.labels);
    }

    #[test]
    fn client_count_bounds() {
        let data = indexed_dataset(alternating(4));
        assert!(matches!(
            partition_clients(&data, 0, 1),
            Err(DataError::InvalidClientCount { clients: 0, rows: 4 })
        ));
        assert!(matches!(
            partition_clients(&data, 5, 1),
            Err(DataError::InvalidClientCount { clients: 5, rows: 4 })
        ));
        let parts = partition_clients(&data, 4, 1).unwrap();
        assert!(parts.iter().all(|p| p.n_samples() == 1));
    }

    proptest! {
        #[test]
        fn partition_sizes_never_differ_by_more_than_one(
            n in 2usize..200,
            k in 1usize..20,
            seed in 0u64..1000,
        ) {
            prop_assume!(k <= n);
            let data = indexed_dataset(alternating(n));
            let parts = partition_clients(&data, k, seed).unwrap();
            let sizes: Vec<usize> = parts.iter().map(|p| p.n_samples()).collect();
            let min = *sizes.iter().min().unwrap();
            let max = *sizes.iter().max().unwrap();
            prop_assert!(max - min <= 1, "sizes {:?}", sizes);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        }

        #[test]
        fn split_test_size_is_rounded_fraction(
            n_pos in 3usize..80,
            n_neg in 3usize..80,
            frac in 0.1f64..0.9,
            seed in 0u64..1000,
        ) {
            let mut labels = vec![0u8; n_neg];
            labels.extend(vec![1u8; n_pos]);
            let n = labels.len();
            match stratified_split_indices(&labels, frac, seed) {
                Ok((train, test)) => {
                    prop_assert_eq!(test.len(), (frac * n as f64).round() as usize);
                    prop_assert_eq!(train.len() + test.len(), n);
                }
                Err(DataError::ClassTooSmall { .. }) => {
                    // Legitimate when the rounded per-class quota hits 0 or
                    // the whole class.
                }
                Err(other) => prop_assert!(false, "unexpected error {:?}", other),
            }
        }
    }
}
