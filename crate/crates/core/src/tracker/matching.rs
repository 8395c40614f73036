use super::features::{Descriptor, FeatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMatch {
    pub query: usize,
    pub train: usize,
    pub distance: u32,
}

/// Nearest and second-nearest distances, ties resolved to the lower index.
fn two_nearest(d: &Descriptor, pool: &[Descriptor]) -> Option<(usize, u32, u32)> {
    let mut best: Option<(usize, u32)> = None;
    let mut second = u32::MAX;
    for (j, other) in pool.iter().enumerate() {
        let dist = d.hamming(other);
        match best {
            None => best = Some((j, dist)),
            Some((_, bd)) if dist < bd => {
                second = bd;
                best = Some((j, dist));
            }
            Some(_) => second = second.min(dist),
        }
    }
    best.map(|(j, bd)| (j, bd, second))
}

/// Hamming nearest-neighbour matching with a ratio test and a mutual-best
/// cross-check, so the result is one-to-one. Ordered by query index.
pub fn match_features(query: &FeatureSet, train: &FeatureSet, ratio: f64) -> Vec<FeatureMatch> {
    if query.is_empty() || train.is_empty() {
        return Vec::new();
    }
    let train_best_query: Vec<usize> = train
        .descriptors
        .iter()
        .map(|t| two_nearest(t, &query.descriptors).map_or(usize::MAX, |(i, _, _)| i))
        .collect();
    query
        .descriptors
        .iter()
        .enumerate()
        .filter_map(|(qi, qd)| {
            let (ti, best, second) = two_nearest(qd, &train.descriptors)?;
            let passes_ratio = second == u32::MAX || (best as f64) < ratio * second as f64;
            (passes_ratio && train_best_query[ti] == qi).then_some(FeatureMatch {
                query: qi,
                train: ti,
                distance: best,
            })
        })
        .collect()
}
