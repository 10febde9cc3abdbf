//! Instance families.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::instance::{Arrival, Instance, InstanceMeta};

/// Arrival `t` has weight 1 to offline vertices `t..n`.
pub fn upper_triangular(n: usize, seed: u64) -> Instance {
    assert!(n >= 1, "n must be positive");
    let arrivals = (0..n).map(|t| (t..n).map(|i| (i, 1.0)).collect()).collect();
    let meta = InstanceMeta {
        generator: "triangular".into(),
        seed: Some(seed),
        params: json!({ "n": n }),
    };
    Instance::new(n, arrivals, meta).expect("valid by construction")
}

/// For each level in increasing order, one arrival per offline vertex (in a
/// seeded order) with weight `level` to that vertex and a lighter random
/// weight to its successor. The optimum is `n · max(levels)`.
pub fn weighted_layers(n: usize, levels: &[f64], seed: u64) -> Instance {
    assert!(n >= 1, "n must be positive");
    assert!(
        !levels.is_empty()
            && levels[0] > 0.0
            && levels.windows(2).all(|w| w[0] < w[1])
            && levels.iter().all(|l| l.is_finite()),
        "levels must be positive and strictly increasing"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arrivals = Vec::new();
    for &level in levels {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for i in order {
            let mut a = Arrival::new();
            a.insert(i, level);
            if n > 1 {
                let u: f64 = rng.gen();
                a.insert((i + 1) % n, level * u);
            }
            arrivals.push(a);
        }
    }
    let meta = InstanceMeta {
        generator: "layers".into(),
        seed: Some(seed),
        params: json!({ "n": n, "levels": levels }),
    };
    Instance::new(n, arrivals, meta).expect("valid by construction")
}

/// Integer weights in `1..=max_weight` on each edge with probability
/// `density`.
pub fn random(n_offline: usize, n_online: usize, max_weight: u32, density: f64, seed: u64) -> Instance {
    assert!(n_offline >= 1 && max_weight >= 1 && (0.0..=1.0).contains(&density));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arrivals = Vec::with_capacity(n_online);
    for _ in 0..n_online {
        let mut a = Arrival::new();
        for i in 0..n_offline {
            if rng.gen_bool(density) {
                a.insert(i, f64::from(rng.gen_range(1..=max_weight)));
            }
        }
        arrivals.push(a);
    }
    let meta = InstanceMeta {
        generator: "random".into(),
        seed: Some(seed),
        params: json!({
            "n_offline": n_offline,
            "n_online": n_online,
            "max_weight": max_weight,
            "density": density,
        }),
    };
    Instance::new(n_offline, arrivals, meta).expect("valid by construction")
}
