use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::Trajectory;
use crate::camera::{write_raster, RasterKind};
use crate::checksum::{file_sha256, write_checked, ChecksumList};
use crate::synth::{render_flow, Dataset, MANIFEST_FILE, TRAJECTORY_GT_FILE};
use crate::{Error, Result};

pub const PALINDROME_FILE: &str = "palindrome.txt";

/// `[1, …, n, n, …, 1]`.
pub fn palindrome_indices(n: usize) -> Vec<usize> {
    (1..=n).chain((1..=n).rev()).collect()
}

/// One position of a palindrome sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PalindromeStep {
    /// 1-based frame of the source sequence.
    pub source_frame: usize,
    /// Flow raster to the next position; relative paths resolve against the
    /// palindrome directory. `None` when unavailable (and for the last step).
    pub flow: Option<PathBuf>,
}

/// Contents of `palindrome.txt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PalindromeManifest {
    pub source: PathBuf,
    pub steps: Vec<PalindromeStep>,
}

impl PalindromeManifest {
    pub fn indices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.source_frame).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# position source_frame flow_to_next (1-based)\n");
        let _ = writeln!(out, "source {}", self.source.display());
        for (i, s) in self.steps.iter().enumerate() {
            let flow = s.flow.as_ref().map_or("-".to_string(), |p| p.display().to_string());
            let _ = writeln!(out, "{} {} {}", i + 1, s.source_frame, flow);
        }
        out
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut source = None;
        let mut steps = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("source ") {
                source = Some(PathBuf::from(rest.trim()));
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = |what: &str| parts.next().ok_or_else(|| format!("line {}: missing {what}", ln + 1));
            let pos: usize = next("position")?.parse().map_err(|e| format!("line {}: {e}", ln + 1))?;
            let source_frame: usize = next("source frame")?.parse().map_err(|e| format!("line {}: {e}", ln + 1))?;
            let flow = next("flow")?;
            if pos != steps.len() + 1 || source_frame == 0 {
                return Err(format!("line {}: positions must be consecutive and 1-based", ln + 1));
            }
            steps.push(PalindromeStep {
                source_frame,
                flow: (flow != "-").then(|| PathBuf::from(flow)),
            });
        }
        Ok(Self {
            source: source.ok_or("missing `source` line")?,
            steps,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|m| Error::format(path, m))
    }
}

fn palindrome_flow_file(position: usize) -> String {
    format!("palindrome_{position:06}.flow.drkr")
}

/// Builds the forward-then-reversed remap of the sequence in `dataset_dir`.
///
/// Frames are referenced, not copied. Forward flows point at the source
/// rasters; the turnaround and the reversed half are re-rendered when the
/// source carries its scene description, otherwise they are marked absent.
/// Writes `palindrome.txt`, `trajectory_gt.txt` (ids `0..2N-1`) and
/// `manifest.txt` into `out_dir`.
pub fn palindrome(dataset_dir: &Path, out_dir: &Path) -> Result<PalindromeManifest> {
    let source = Dataset::open(dataset_dir)?;
    if source.is_palindrome() {
        return Err(Error::InvalidArgument(format!(
            "{} is already a palindrome",
            dataset_dir.display()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let source_dir = fs::canonicalize(dataset_dir).map_err(|e| Error::io(dataset_dir, e))?;
    let n = source.len();
    let indices = palindrome_indices(n);
    let mut checksums = ChecksumList::default();

    let mut steps = Vec::with_capacity(2 * n);
    for (p, &frame) in indices.iter().enumerate() {
        let flow = if p + 1 == indices.len() {
            None
        } else if p + 1 < n {
            let path = source_dir.join(crate::synth::frame_file(frame - 1, "flow"));
            path.exists().then_some(path)
        } else if let Some(scene) = source.scene() {
            let flow = render_flow(scene, frame - 1, indices[p + 1] - 1).map_err(|e| e.at_frame(p))?;
            let name = palindrome_flow_file(p + 1);
            let path = out_dir.join(&name);
            write_raster(&path, RasterKind::Flow, &flow)?;
            checksums.push(name.clone(), file_sha256(&path)?);
            Some(PathBuf::from(name))
        } else {
            None
        };
        steps.push(PalindromeStep {
            source_frame: frame,
            flow,
        });
    }

    let gt = source.ground_truth();
    let poses: Vec<_> = indices
        .iter()
        .map(|&i| *gt.get(i as u64 - 1).expect("dataset ids are 0..N-1"))
        .collect();
    checksums.push(
        TRAJECTORY_GT_FILE,
        write_checked(
            &out_dir.join(TRAJECTORY_GT_FILE),
            Trajectory::from_poses(poses).to_text().as_bytes(),
        )?,
    );

    let manifest = PalindromeManifest {
        source: source_dir,
        steps,
    };
    checksums.push(
        PALINDROME_FILE,
        write_checked(&out_dir.join(PALINDROME_FILE), manifest.to_text().as_bytes())?,
    );
    checksums.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_of_three() {
        assert_eq!(palindrome_indices(3), vec![1, 2, 3, 3, 2, 1]);
        assert_eq!(palindrome_indices(7).len(), 14);
    }

    #[test]
    fn text_roundtrip() {
        let m = PalindromeManifest {
            source: PathBuf::from("/data/seq"),
            steps: vec![
                PalindromeStep {
                    source_frame: 1,
                    flow: Some(PathBuf::from("/data/seq/frame_000000.flow.drkr")),
                },
                PalindromeStep {
                    source_frame: 1,
                    flow: None,
                },
            ],
        };
        assert_eq!(PalindromeManifest::parse(&m.to_text()).unwrap(), m);
        assert!(PalindromeManifest::parse("1 1 -\n").is_err());
    }
}
