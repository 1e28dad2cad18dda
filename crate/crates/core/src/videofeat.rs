//! Geometric features of the session mean face.
//!
//! Two blocks are computed on the per-landmark mean over all frames:
//!
//! - polar coordinates (distance, angle) of each stable point relative to
//!   the stable-point centroid, 2 values per point;
//! - segment lengths along fixed landmark chains of the left eye/brow,
//!   right eye/brow and mouth regions.
//!
//! With the default 46 stable points and region chains this gives
//! 92 + 41 = 133 features, all invariant under translation.

use std::collections::HashSet;
use std::f64::consts::PI;

use crate::datamodel::{FeatureVector, LandmarkFrame, LandmarkSeries, Modality, Point, LANDMARK_COUNT};
use crate::error::{Error, Result};

pub const STABLE_POINT_COUNT: usize = 46;

/// Landmarks used for the polar block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StablePointSet {
    indices: Vec<usize>,
}

impl StablePointSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.len() != STABLE_POINT_COUNT {
            return Err(Error::Config(format!(
                "expected {STABLE_POINT_COUNT} stable points, got {}",
                indices.len()
            )));
        }
        let mut seen = HashSet::new();
        for &i in &indices {
            if i >= LANDMARK_COUNT {
                return Err(Error::Config(format!("landmark index {i} out of range")));
            }
            if !seen.insert(i) {
                return Err(Error::Config(format!("landmark index {i} repeated")));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

impl Default for StablePointSet {
    /// Everything except the jaw line (0–16) and the nostril line (31–35).
    fn default() -> Self {
        let indices = (17..=30).chain(36..=67).collect();
        Self { indices }
    }
}

/// A polyline over landmark indices; `closed` adds the last-to-first segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub name: String,
    pub indices: Vec<usize>,
    pub closed: bool,
}

impl Chain {
    fn open(name: &str, range: std::ops::RangeInclusive<usize>) -> Self {
        Self { name: name.into(), indices: range.collect(), closed: false }
    }

    fn closed(name: &str, range: std::ops::RangeInclusive<usize>) -> Self {
        Self { name: name.into(), indices: range.collect(), closed: true }
    }

    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> =
            self.indices.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed && self.indices.len() > 2 {
            out.push((*self.indices.last().unwrap(), self.indices[0]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub name: String,
    pub chains: Vec<Chain>,
    /// Extra point-to-point distances.
    pub pairs: Vec<(String, usize, usize)>,
}

impl Region {
    fn points(&self) -> HashSet<usize> {
        self.chains
            .iter()
            .flat_map(|c| c.indices.iter().copied())
            .chain(self.pairs.iter().flat_map(|&(_, a, b)| [a, b]))
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.chains.iter().map(|c| c.segments().len()).sum::<usize>() + self.pairs.len()
    }
}

/// Regional chains for the group block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionGroups {
    regions: Vec<Region>,
}

impl RegionGroups {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        let mut seen: HashSet<usize> = HashSet::new();
        for region in &regions {
            let points = region.points();
            if let Some(&bad) = points.iter().find(|&&i| i >= LANDMARK_COUNT) {
                return Err(Error::Config(format!("landmark index {bad} out of range")));
            }
            if let Some(&shared) = points.iter().find(|i| seen.contains(i)) {
                return Err(Error::Config(format!(
                    "landmark {shared} appears in more than one region"
                )));
            }
            seen.extend(points);
        }
        Ok(Self { regions })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn feature_count(&self) -> usize {
        self.regions.iter().map(Region::feature_count).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.feature_count());
        for region in &self.regions {
            for chain in &region.chains {
                names.extend(
                    (0..chain.segments().len()).map(|i| format!("{}.{}.d{i}", region.name, chain.name)),
                );
            }
            names.extend(region.pairs.iter().map(|(n, _, _)| format!("{}.{n}", region.name)));
        }
        names
    }
}

impl Default for RegionGroups {
    /// Left brow + eye (11 points), right brow + eye (11), mouth (20).
    fn default() -> Self {
        Self {
            regions: vec![
                Region {
                    name: "left".into(),
                    chains: vec![Chain::open("brow", 17..=21), Chain::closed("eye", 36..=41)],
                    pairs: vec![],
                },
                Region {
                    name: "right".into(),
                    chains: vec![Chain::open("brow", 22..=26), Chain::closed("eye", 42..=47)],
                    pairs: vec![],
                },
                Region {
                    name: "mouth".into(),
                    chains: vec![
                        Chain::closed("outer_lip", 48..=59),
                        Chain::closed("inner_lip", 60..=67),
                    ],
                    pairs: vec![("opening".into(), 62, 66)],
                },
            ],
        }
    }
}

/// Per-landmark mean over all frames.
pub fn mean_shape(series: &LandmarkSeries) -> Result<LandmarkFrame> {
    if series.is_empty() {
        return Err(Error::Empty("landmark series has no frames".into()));
    }
    let n = series.len() as f64;
    let mut sum = [(0.0_f64, 0.0_f64); LANDMARK_COUNT];
    for frame in series.frames() {
        for (acc, p) in sum.iter_mut().zip(frame) {
            acc.0 += p.x;
            acc.1 += p.y;
        }
    }
    Ok(sum.map(|(x, y)| Point::new(x / n, y / n)))
}

fn centroid(shape: &LandmarkFrame, indices: &[usize]) -> Point {
    let n = indices.len() as f64;
    let (sx, sy) = indices
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &i| (sx + shape[i].x, sy + shape[i].y));
    Point::new(sx / n, sy / n)
}

/// Angle in (−π, π]; 0 for a zero offset.
fn polar_angle(dx: f64, dy: f64) -> f64 {
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    let a = dy.atan2(dx);
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Distance and angle of each stable point from the stable centroid,
/// interleaved per point.
pub fn polar_features(shape: &LandmarkFrame, stable: &StablePointSet) -> Vec<f64> {
    let c = centroid(shape, stable.indices());
    stable
        .indices()
        .iter()
        .flat_map(|&i| {
            let (dx, dy) = (shape[i].x - c.x, shape[i].y - c.y);
            [dx.hypot(dy), polar_angle(dx, dy)]
        })
        .collect()
}

pub fn polar_feature_names(stable: &StablePointSet) -> Vec<String> {
    stable
        .indices()
        .iter()
        .flat_map(|i| [format!("p{i}.dist"), format!("p{i}.angle")])
        .collect()
}

/// Segment lengths along the region chains of an already-averaged shape.
pub fn group_features_of_shape(shape: &LandmarkFrame, groups: &RegionGroups) -> Vec<f64> {
    let mut out = Vec::with_capacity(groups.feature_count());
    for region in groups.regions() {
        for chain in &region.chains {
            out.extend(chain.segments().iter().map(|&(a, b)| shape[a].distance(shape[b])));
        }
        out.extend(region.pairs.iter().map(|&(_, a, b)| shape[a].distance(shape[b])));
    }
    out
}

pub fn group_features(series: &LandmarkSeries, groups: &RegionGroups) -> Result<Vec<f64>> {
    Ok(group_features_of_shape(&mean_shape(series)?, groups))
}

pub fn video_feature_names(stable: &StablePointSet, groups: &RegionGroups) -> Vec<String> {
    let mut names = polar_feature_names(stable);
    names.extend(groups.feature_names());
    names
}

/// Polar block followed by the group block.
pub fn extract_video_features(
    session_id: &str,
    series: &LandmarkSeries,
    stable: &StablePointSet,
    groups: &RegionGroups,
) -> Result<FeatureVector> {
    let shape = mean_shape(series)?;
    let mut values = polar_features(&shape, stable);
    values.extend(group_features_of_shape(&shape, groups));
    FeatureVector::new(
        session_id,
        Modality::Video,
        video_feature_names(stable, groups),
        values,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series_of(frames: Vec<LandmarkFrame>) -> LandmarkSeries {
        let ts = (0..frames.len()).map(|i| i as f64 * 0.033).collect();
        LandmarkSeries::new(frames, ts).unwrap()
    }

    fn random_shape(seed: u64) -> LandmarkFrame {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        std::array::from_fn(|_| Point::new(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)))
    }

    #[test]
    fn default_sets() {
        let stable = StablePointSet::default();
        assert_eq!(stable.indices().len(), 46);
        assert!(StablePointSet::new(stable.indices().to_vec()).is_ok());
        let groups = RegionGroups::default();
        let sizes: Vec<usize> = groups.regions().iter().map(|r| r.points().len()).collect();
        assert_eq!(sizes, vec![11, 11, 20]);
        assert_eq!(groups.feature_count(), 41);
        assert!(RegionGroups::new(groups.regions().to_vec()).is_ok());
    }

    #[test]
    fn set_validation() {
        assert!(StablePointSet::new((0..45).collect()).is_err());
        let mut dup: Vec<usize> = (0..46).collect();
        dup[45] = 0;
        assert!(StablePointSet::new(dup).is_err());
        let mut oob: Vec<usize> = (0..46).collect();
        oob[0] = 68;
        assert!(StablePointSet::new(oob).is_err());

        let overlapping = vec![
            Region { name: "a".into(), chains: vec![Chain::open("c", 0..=3)], pairs: vec![] },
            Region { name: "b".into(), chains: vec![Chain::open("c", 3..=5)], pairs: vec![] },
        ];
        assert!(RegionGroups::new(overlapping).is_err());
    }

    #[test]
    fn mean_shape_examples() {
        let a = random_shape(1);
        assert_eq!(mean_shape(&series_of(vec![a])).unwrap(), a);

        let mut f0 = a;
        let mut f1 = a;
        f0[7] = Point::new(0.0, 0.0);
        f1[7] = Point::new(2.0, 4.0);
        assert_eq!(mean_shape(&series_of(vec![f0, f1])).unwrap()[7], Point::new(1.0, 2.0));

        let same = mean_shape(&series_of(vec![a; 100])).unwrap();
        for (p, q) in same.iter().zip(&a) {
            assert!((p.x - q.x).abs() < 1e-9 && (p.y - q.y).abs() < 1e-9);
        }
        assert!(mean_shape(&series_of(vec![])).is_err());
    }

    /// Stable points on a circle of radius `r` around `c`, other points random.
    fn circle_face(c: Point, r: f64, phase: f64) -> (LandmarkFrame, Vec<f64>) {
        let mut shape = random_shape(9);
        let stable = StablePointSet::default();
        let mut angles = Vec::new();
        for (k, &i) in stable.indices().iter().enumerate() {
            let theta = phase + 2.0 * PI * k as f64 / 46.0;
            shape[i] = Point::new(c.x + r * theta.cos(), c.y + r * theta.sin());
            angles.push(theta);
        }
        (shape, angles)
    }

    fn wrap(a: f64) -> f64 {
        let w = a.rem_euclid(2.0 * PI);
        if w > PI {
            w - 2.0 * PI
        } else {
            w
        }
    }

    #[test]
    fn polar_axis_offsets() {
        let (mut shape, _) = circle_face(Point::new(10.0, 20.0), 1.0, 0.0);
        let stable = StablePointSet::default();
        // the first stable point sits at c + (1, 0)
        let f = polar_features(&shape, &stable);
        assert!((f[0] - 1.0).abs() < 1e-12);
        assert!(f[1].abs() < 1e-12);

        // move a symmetric pair so the centroid stays put and one lands on +y
        let i = stable.indices()[0];
        let j = stable.indices()[23];
        shape[i] = Point::new(10.0, 22.0);
        shape[j] = Point::new(10.0, 18.0);
        let f = polar_features(&shape, &stable);
        assert!((f[0] - 2.0).abs() < 1e-12);
        assert!((f[1] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn polar_unit_circle_fixture() {
        let (shape, angles) = circle_face(Point::new(-3.0, 5.0), 1.0, 0.1);
        let f = polar_features(&shape, &StablePointSet::default());
        assert_eq!(f.len(), 92);
        for (k, theta) in angles.iter().enumerate() {
            assert!((f[2 * k] - 1.0).abs() < 1e-12);
            assert!((f[2 * k + 1] - wrap(*theta)).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_point_has_zero_angle() {
        assert_eq!(polar_angle(0.0, 0.0), 0.0);
        assert_eq!(polar_angle(-1.0, -0.0), PI);
    }

    #[test]
    fn group_examples() {
        let mut shape = random_shape(3);
        shape[17] = Point::new(0.0, 0.0);
        shape[18] = Point::new(3.0, 4.0);
        shape[62] = Point::new(50.0, 60.0);
        shape[66] = Point::new(50.0, 60.0);
        for k in 0..6 {
            let theta = PI / 3.0 * k as f64;
            shape[36 + k] = Point::new(100.0 + theta.cos(), 100.0 + theta.sin());
        }
        let groups = RegionGroups::default();
        let f = group_features(&series_of(vec![shape]), &groups).unwrap();
        let names = groups.feature_names();
        assert_eq!(f.len(), 41);
        assert_eq!(names[0], "left.brow.d0");
        assert_eq!(f[0], 5.0);
        assert_eq!(names[40], "mouth.opening");
        assert_eq!(f[40], 0.0);
        for k in 0..6 {
            assert_eq!(names[4 + k], format!("left.eye.d{k}"));
            assert!((f[4 + k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extraction_counts_and_idempotence() {
        let shape = random_shape(5);
        let stable = StablePointSet::default();
        let groups = RegionGroups::default();
        let one = extract_video_features("s", &series_of(vec![shape]), &stable, &groups).unwrap();
        assert_eq!(one.len(), 133);
        let many = extract_video_features("s", &series_of(vec![shape; 7]), &stable, &groups).unwrap();
        for (a, b) in one.values().iter().zip(many.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn translation_invariance(seed in any::<u64>(), dx in -500.0..500.0f64, dy in -500.0..500.0f64) {
            let shape = random_shape(seed);
            let moved = shape.map(|p| Point::new(p.x + dx, p.y + dy));
            let stable = StablePointSet::default();
            let groups = RegionGroups::default();
            let a = extract_video_features("s", &series_of(vec![shape]), &stable, &groups).unwrap();
            let b = extract_video_features("s", &series_of(vec![moved]), &stable, &groups).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn rotation_shifts_angles(seed in any::<u64>(), theta in -PI..PI) {
            let shape = random_shape(seed);
            let stable = StablePointSet::default();
            let c = centroid(&shape, stable.indices());
            let (s, co) = theta.sin_cos();
            let rotated = shape.map(|p| {
                let (x, y) = (p.x - c.x, p.y - c.y);
                Point::new(c.x + co * x - s * y, c.y + s * x + co * y)
            });
            let a = polar_features(&shape, &stable);
            let b = polar_features(&rotated, &stable);
            for k in 0..46 {
                prop_assert!((a[2 * k] - b[2 * k]).abs() < 1e-9);
                let shift = wrap(b[2 * k + 1] - a[2 * k + 1] - theta);
                prop_assert!(shift.abs() < 1e-9);
            }
            let ga = group_features_of_shape(&shape, &RegionGroups::default());
            let gb = group_features_of_shape(&rotated, &RegionGroups::default());
            for (x, y) in ga.iter().zip(&gb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
