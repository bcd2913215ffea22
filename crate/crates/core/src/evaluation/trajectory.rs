use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::geometry::RigidTransform;
use crate::{Error, Result};

/// Frame-indexed world-from-camera poses with strictly increasing ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    entries: Vec<(u64, RigidTransform)>,
}

impl Trajectory {
    /// Sorts by frame id; duplicate ids are rejected.
    pub fn new(mut entries: Vec<(u64, RigidTransform)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("duplicate frame id {}", w[0].0)));
        }
        Ok(Self { entries })
    }

    /// Poses with ids `0, 1, 2, …`.
    pub fn from_poses(poses: impl IntoIterator<Item = RigidTransform>) -> Self {
        Self {
            entries: poses.into_iter().enumerate().map(|(i, p)| (i as u64, p)).collect(),
        }
    }

    /// Chains relative motions (`pose_{i+1} = pose_i · rel_i`) from the identity.
    pub fn from_relative(relative: &[RigidTransform]) -> Self {
        let mut poses = Vec::with_capacity(relative.len() + 1);
        let mut cur = RigidTransform::identity();
        poses.push(cur);
        for r in relative {
            cur = cur.compose(r);
            poses.push(cur);
        }
        Self::from_poses(poses)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, RigidTransform)] {
        &self.entries
    }

    pub fn poses(&self) -> impl Iterator<Item = &RigidTransform> {
        self.entries.iter().map(|e| &e.1)
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, frame_id: u64) -> Option<&RigidTransform> {
        self.entries
            .binary_search_by_key(&frame_id, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Relative motions `pose_i⁻¹ · pose_{i+1}` between consecutive entries.
    pub fn relative_poses(&self) -> Vec<RigidTransform> {
        self.entries
            .windows(2)
            .map(|w| w[0].1.inverse().compose(&w[1].1))
            .collect()
    }

    /// Left-composes every pose with `g`.
    pub fn left_compose(&self, g: &RigidTransform) -> Trajectory {
        Trajectory {
            entries: self.entries.iter().map(|(i, p)| (*i, g.compose(p))).collect(),
        }
    }

    /// Pairs of poses sharing a frame id, in increasing id order.
    pub fn matched<'a>(&'a self, other: &'a Trajectory) -> Vec<(u64, &'a RigidTransform, &'a RigidTransform)> {
        let b: BTreeMap<u64, &RigidTransform> = other.entries.iter().map(|(i, p)| (*i, p)).collect();
        self.entries
            .iter()
            .filter_map(|(i, p)| b.get(i).map(|q| (*i, p, *q)))
            .collect()
    }

    /// `frame_id tx ty tz qx qy qz qw` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# frame_id tx ty tz qx qy qz qw\n");
        for (id, p) in &self.entries {
            let [tx, ty, tz, qx, qy, qz, qw] = p.to_array();
            writeln!(s, "{id} {tx} {ty} {tz} {qx} {qy} {qz} {qw}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 8 {
                return Err(format!("line {}: expected 8 fields, found {}", n + 1, fields.len()));
            }
            let id: u64 = fields[0]
                .parse()
                .map_err(|_| format!("line {}: bad frame id {:?}", n + 1, fields[0]))?;
            let mut v = [0.0; 7];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| format!("line {}: bad number {f:?}", n + 1))?;
            }
            let pose = RigidTransform::from_parts([v[0], v[1], v[2]], [v[3], v[4], v[5], v[6]])
                .map_err(|e| format!("line {}: {e}", n + 1))?;
            entries.push((id, pose));
        }
        Trajectory::new(entries).map_err(|e| e.to_string())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|m| Error::format(path, m))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_se3, Twist};
    use nalgebra::Vector3;

    fn sample() -> Trajectory {
        Trajectory::from_poses((0..5).map(|i| {
            exp_se3(&Twist::new(
                Vector3::new(0.1 * i as f64, -0.05, 0.02),
                Vector3::new(i as f64 * 0.3, 1.0 / 3.0, -0.2),
            ))
            .unwrap()
        }))
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let t = sample();
        assert_eq!(Trajectory::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn parse_sorts_and_ignores_comments() {
        let text = "# header\n2 0 0 0 0 0 0 1\n\n1 1 0 0 0 0 0 1 # trailing\n";
        let t = Trajectory::parse(text).unwrap();
        assert_eq!(t.frame_ids().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(t.get(1).unwrap().translation().x, 1.0);
    }

    #[test]
    fn parse_errors() {
        assert!(Trajectory::parse("1 0 0 0 0 0 1\n").is_err());
        assert!(Trajectory::parse("1 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n").is_err());
        assert!(Trajectory::parse("x 0 0 0 0 0 0 1\n").is_err());
        assert!(Trajectory::parse("1 0 0 0 0 0 0 0\n").is_err());
    }

    #[test]
    fn relative_chain_roundtrip() {
        let t = sample();
        let base = t.left_compose(&t.entries()[0].1.inverse());
        let rebuilt = Trajectory::from_relative(&base.relative_poses());
        for (a, b) in rebuilt.poses().zip(base.poses()) {
            let (dt, dr) = crate::geometry::pose_distance(a, b);
            assert!(dt < 1e-12 && dr < 1e-12);
        }
    }
}
