use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ClassId, LabeledDataset, LabeledExample};

/// Nine discs on a unit-spaced 3x3 grid. Class `k` is centred at
/// `(k % 3, k / 3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterSpec {
    pub radius: f64,
    pub points_per_cluster: usize,
    pub seed: u64,
}

impl ClusterSpec {
    pub const DEFAULT_POINTS: usize = 100;

    pub fn new(radius: f64, seed: u64) -> Self {
        Self {
            radius,
            points_per_cluster: Self::DEFAULT_POINTS,
            seed,
        }
    }

    pub fn with_points(self, points_per_cluster: usize) -> Self {
        Self {
            points_per_cluster,
            ..self
        }
    }

    pub fn center(class: usize) -> [f64; 2] {
        [(class % 3) as f64, (class / 3) as f64]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if self.points_per_cluster == 0 {
            return Err(Error::InvalidParameter(
                "points_per_cluster must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The four named radii of the synthetic benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClusterVariant {
    VeryFar,
    Far,
    Close,
    Intersecting,
}

impl ClusterVariant {
    pub const ALL: [ClusterVariant; 4] = [
        ClusterVariant::VeryFar,
        ClusterVariant::Far,
        ClusterVariant::Close,
        ClusterVariant::Intersecting,
    ];

    pub fn radius(self) -> f64 {
        match self {
            ClusterVariant::VeryFar => 0.1,
            ClusterVariant::Far => 0.4,
            ClusterVariant::Close => 0.5,
            ClusterVariant::Intersecting => 0.525,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClusterVariant::VeryFar => "clusters_veryFar",
            ClusterVariant::Far => "clusters_far",
            ClusterVariant::Close => "clusters_close",
            ClusterVariant::Intersecting => "clusters_intersecting",
        }
    }

    pub fn spec(self, seed: u64) -> ClusterSpec {
        ClusterSpec::new(self.radius(), seed)
    }
}

impl fmt::Display for ClusterVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusterVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClusterVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown cluster dataset {s:?}")))
    }
}

/// Points are uniform inside each disc (radius `r * sqrt(u)`, angle `2 pi v`).
pub fn generate_clusters(spec: &ClusterSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut examples = Vec::with_capacity(9 * spec.points_per_cluster);
    for class in 0..9usize {
        let [cx, cy] = ClusterSpec::center(class);
        for _ in 0..spec.points_per_cluster {
            let r = spec.radius * rng.random::<f64>().sqrt();
            let angle = TAU * rng.random::<f64>();
            examples.push(LabeledExample {
                features: vec![cx + r * angle.cos(), cy + r * angle.sin()],
                label: ClassId(class as u32),
            });
        }
    }
    let names = (0..9).map(|k| k.to_string()).collect();
    LabeledDataset::new(examples, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn min_inter_class_distance(ds: &LabeledDataset) -> f64 {
        let ex = ds.examples();
        let mut best = f64::INFINITY;
        for i in 0..ex.len() {
            for j in (i + 1)..ex.len() {
                if ex[i].label != ex[j].label {
                    best = best.min(dist(&ex[i].features, &ex[j].features));
                }
            }
        }
        best
    }

    #[test]
    fn very_far_clusters_are_tight_and_separated() {
        let ds = generate_clusters(&ClusterSpec::new(0.1, 7)).unwrap();
        assert_eq!(ds.len(), 900);
        assert_eq!(ds.class_ids().len(), 9);
        for e in ds.examples() {
            let c = ClusterSpec::center(e.label.index());
            assert!(dist(&e.features, &c) <= 0.1 + 1e-12);
        }
        assert!(min_inter_class_distance(&ds) > 0.8);
    }

    #[test]
    fn touching_clusters_nearly_meet() {
        let ds = generate_clusters(&ClusterSpec::new(0.5, 7)).unwrap();
        let d = min_inter_class_distance(&ds);
        assert!((0.0..0.1).contains(&d), "min distance {d}");
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate_clusters(&ClusterSpec::new(0.4, 3)).unwrap();
        let b = generate_clusters(&ClusterSpec::new(0.4, 3)).unwrap();
        let c = generate_clusters(&ClusterSpec::new(0.4, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ClusterVariant::ALL {
            assert_eq!(v.name().parse::<ClusterVariant>().unwrap(), v);
        }
        assert!(generate_clusters(&ClusterSpec::new(0.0, 1)).is_err());
    }
}
