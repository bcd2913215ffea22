use std::fs;
use std::path::{Path, PathBuf};

use super::render::{render_depth, render_flow, render_frame, render_normals};
use super::SceneSpec;
use crate::camera::{read_intrinsics, read_raster, write_intrinsics, write_raster, RasterKind};
use crate::camera::{DepthMap, FlowField, Intrinsics, NormalMap};
use crate::checksum::{file_sha256, write_checked, ChecksumList};
use crate::evaluation::{PalindromeManifest, Trajectory, PALINDROME_FILE};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SCENE_FILE: &str = "scene.json";
pub const INTRINSICS_FILE: &str = "intrinsics.txt";
pub const TRAJECTORY_GT_FILE: &str = "trajectory_gt.txt";

/// Checksums of everything [`generate_sequence`] wrote, in write order.
pub type SequenceManifest = ChecksumList;

pub fn frame_file(t: usize, label: &str) -> String {
    format!("frame_{t:06}.{label}.drkr")
}

/// Renders every frame of `scene` into `out_dir`.
///
/// Layout: `intrinsics.txt`, `trajectory_gt.txt`, `scene.json`,
/// `frame_%06d.{depth,flow,normal,color}.drkr` (no flow for the last frame)
/// and `manifest.txt` with the SHA-256 of every other file.
pub fn generate_sequence(scene: &SceneSpec, out_dir: &Path) -> Result<SequenceManifest> {
    scene.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = SequenceManifest::default();

    let path = out_dir.join(INTRINSICS_FILE);
    write_intrinsics(&path, &scene.intrinsics)?;
    manifest.push(INTRINSICS_FILE, file_sha256(&path)?);

    let gt = Trajectory::from_poses(scene.trajectory.iter().copied());
    manifest.push(
        TRAJECTORY_GT_FILE,
        write_checked(&out_dir.join(TRAJECTORY_GT_FILE), gt.to_text().as_bytes())?,
    );

    let json = serde_json::to_string_pretty(scene).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    manifest.push(SCENE_FILE, write_checked(&out_dir.join(SCENE_FILE), json.as_bytes())?);

    for t in 0..scene.frame_count {
        let labels = render_frame(scene, t)?;
        let mut put = |label: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
            let name = frame_file(t, label);
            let path = out_dir.join(&name);
            write(&path)?;
            manifest.push(name, file_sha256(&path)?);
            Ok(())
        };
        put("depth", &|p| write_raster(p, RasterKind::Depth, &labels.depth))?;
        if let Some(flow) = &labels.flow_to_next {
            put("flow", &|p| write_raster(p, RasterKind::Flow, flow))?;
        }
        put("normal", &|p| write_raster(p, RasterKind::Normal, &labels.normals))?;
        put("color", &|p| write_raster(p, RasterKind::Color, &labels.color))?;
    }

    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[derive(Clone, Debug)]
struct FrameRef {
    /// 0-based frame of the rendered sequence.
    source: usize,
    depth: PathBuf,
    normals: PathBuf,
    /// Flow to the next position, when stored on disk.
    flow: Option<PathBuf>,
}

/// Read access to a generated sequence, or to a palindrome remap of one.
#[derive(Clone, Debug)]
pub struct Dataset {
    root: PathBuf,
    intrinsics: Intrinsics,
    ground_truth: Trajectory,
    scene: Option<SceneSpec>,
    frames: Vec<FrameRef>,
    palindrome: bool,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        if dir.join(PALINDROME_FILE).exists() {
            return Self::open_palindrome(dir);
        }
        let intrinsics = read_intrinsics(&dir.join(INTRINSICS_FILE))?;
        let ground_truth = Trajectory::read(&dir.join(TRAJECTORY_GT_FILE))?;
        let n = ground_truth.len();
        if n < 2 {
            return Err(Error::format(dir.join(TRAJECTORY_GT_FILE), "need at least 2 poses"));
        }
        if !ground_truth.frame_ids().eq(0..n as u64) {
            return Err(Error::format(dir.join(TRAJECTORY_GT_FILE), "frame ids must be 0..N-1"));
        }
        let scene = Self::read_scene(dir)?;
        let frames = (0..n)
            .map(|t| FrameRef {
                source: t,
                depth: dir.join(frame_file(t, "depth")),
                normals: dir.join(frame_file(t, "normal")),
                flow: (t + 1 < n).then(|| dir.join(frame_file(t, "flow"))),
            })
            .collect();
        Ok(Self {
            root: dir.to_path_buf(),
            intrinsics,
            ground_truth,
            scene,
            frames,
            palindrome: false,
        })
    }

    fn open_palindrome(dir: &Path) -> Result<Self> {
        let remap = PalindromeManifest::read(&dir.join(PALINDROME_FILE))?;
        let source = Self::open(&remap.source)?;
        if source.palindrome {
            return Err(Error::format(dir.join(PALINDROME_FILE), "nested palindromes are not supported"));
        }
        let frames = remap
            .steps
            .iter()
            .map(|step| {
                let src = source
                    .frames
                    .get(step.source_frame.wrapping_sub(1))
                    .ok_or_else(|| {
                        Error::format(
                            dir.join(PALINDROME_FILE),
                            format!("source frame {} out of range", step.source_frame),
                        )
                    })?;
                Ok(FrameRef {
                    source: src.source,
                    depth: src.depth.clone(),
                    normals: src.normals.clone(),
                    flow: step.flow.as_ref().map(|f| dir.join(f)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ground_truth = Trajectory::read(&dir.join(TRAJECTORY_GT_FILE))?;
        if ground_truth.len() != frames.len() {
            return Err(Error::format(
                dir.join(TRAJECTORY_GT_FILE),
                "pose count does not match the palindrome length",
            ));
        }
        Ok(Self {
            root: dir.to_path_buf(),
            intrinsics: source.intrinsics,
            ground_truth,
            scene: source.scene,
            frames,
            palindrome: true,
        })
    }

    fn read_scene(dir: &Path) -> Result<Option<SceneSpec>> {
        let path = dir.join(SCENE_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let scene: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        scene.validate()?;
        Ok(Some(scene))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_palindrome(&self) -> bool {
        self.palindrome
    }

    pub fn ground_truth(&self) -> &Trajectory {
        &self.ground_truth
    }

    pub fn scene(&self) -> Option<&SceneSpec> {
        self.scene.as_ref()
    }

    /// 0-based frame of the rendered sequence shown at position `p`.
    pub fn source_frame(&self, p: usize) -> usize {
        self.frames[p].source
    }

    fn frame(&self, p: usize) -> Result<&FrameRef> {
        self.frames
            .get(p)
            .ok_or_else(|| Error::InvalidArgument(format!("position {p} out of range ({} frames)", self.len())))
    }

    /// Stored depth raster at position `p`.
    pub fn depth(&self, p: usize) -> Result<DepthMap> {
        let f = self.frame(p)?;
        read_raster(&f.depth, RasterKind::Depth).map_err(|e| e.at_frame(p))
    }

    /// Stored normal raster at position `p`.
    pub fn normals(&self, p: usize) -> Result<NormalMap> {
        let f = self.frame(p)?;
        read_raster(&f.normals, RasterKind::Normal).map_err(|e| e.at_frame(p))
    }

    /// Stored flow raster from position `p` to `p + 1`.
    pub fn flow(&self, p: usize) -> Result<FlowField> {
        let f = self.frame(p)?;
        let path = f
            .flow
            .as_ref()
            .ok_or_else(|| Error::UnavailableLabel(format!("no flow stored for position {p}")).at_frame(p))?;
        read_raster(path, RasterKind::Flow).map_err(|e| e.at_frame(p))
    }

    fn require_scene(&self) -> Result<&SceneSpec> {
        self.scene.as_ref().ok_or_else(|| {
            Error::UnavailableLabel(format!("{} has no {SCENE_FILE}; oracle labels need the scene", self.root.display()))
        })
    }

    /// Depth re-rendered in double precision from the stored scene.
    pub fn oracle_depth(&self, p: usize) -> Result<DepthMap> {
        let t = self.frame(p)?.source;
        render_depth(self.require_scene()?, t).map_err(|e| e.at_frame(p))
    }

    /// Normals re-rendered in double precision from the stored scene.
    pub fn oracle_normals(&self, p: usize) -> Result<NormalMap> {
        let t = self.frame(p)?.source;
        render_normals(self.require_scene()?, t).map_err(|e| e.at_frame(p))
    }

    /// Flow from position `p` to `p + 1` re-rendered from the stored scene.
    pub fn oracle_flow(&self, p: usize) -> Result<FlowField> {
        let src = self.frame(p)?.source;
        let dst = self.frame(p + 1)?.source;
        render_flow(self.require_scene()?, src, dst).map_err(|e| e.at_frame(p))
    }
}
