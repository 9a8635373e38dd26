//! Deterministic seed derivation.
//!
//! Every stochastic stage (weight init, epoch shuffles, client selection,
//! background sampling, sweep rows) derives its own stream from the run seed
//! so that stages never share RNG state and reordering one stage cannot
//! perturb another.

/// SplitMix64 finalizer. Stable across platforms and releases, unlike the
/// std hasher, so persisted artifacts stay reproducible.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a salt into a base seed, giving an independent substream.
pub fn mix(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}

/// Seed for model weight initialization.
pub fn init_seed(seed: u64) -> u64 {
    mix(seed, 0x494e_4954)
}

/// Seed for the client-selection draw of one round.
pub fn selection_seed(seed: u64, round: usize) -> u64 {
    mix(mix(seed, 0x5345_4c45_4354), round as u64)
}

/// Seed for one client's local training in one round.
///
/// The centralized driver draws its shuffle stream from round 1, client 0,
/// which is what makes a single-client single-round federated run reproduce
/// it exactly.
pub fn client_train_seed(seed: u64, round: usize, client_id: usize) -> u64 {
    mix(mix(mix(seed, 0x434c_4945_4e54), round as u64), client_id as u64)
}

/// Seed for the shuffle that assigns training rows to clients.
pub fn partition_seed(seed: u64) -> u64 {
    mix(seed, 0x5041_5254)
}

/// Seed for sampling the explanation background set.
pub fn background_seed(seed: u64) -> u64 {
    mix(seed, 0x5348_4150)
}

/// Seed for choosing which test rows get explained.
pub fn explain_sample_seed(seed: u64) -> u64 {
    mix(seed, 0x4558_5345)
}

/// Seed for one instance's permutation draws in the sampled explainer.
///
/// Keyed per instance so explaining instances in parallel, or one at a
/// time, yields the same attributions.
pub fn explain_seed(seed: u64, instance_id: usize) -> u64 {
    mix(mix(seed, 0x4558_504c), instance_id as u64)
}
