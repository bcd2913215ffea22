use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use drk_core::evaluation::{self, align, apte, ate, rpe, scale_relative_poses, AlignMode, ApteMode, Trajectory};
use drk_core::odometry::{self, FlowSource, InitMode, OdometryConfig};
use drk_core::synth::{self, SceneConfig, ScenePreset, MAX_LEVEL};
use serde_json::json;

use crate::manifest::{manifest_path, RunManifest};
use crate::{AlignArg, ApteModeArg, CliError, EvalArgs, EvalMetric, OdomArgs, PalindromeArgs, SynthArgs};

const MAX_SIDE: usize = 640;
const SEED_ENV: &str = "DRK_SEED";

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_res(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || usage(format!("--res expects WxH with sides in 2..={MAX_SIDE}, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if !(2..=MAX_SIDE).contains(&w) || !(2..=MAX_SIDE).contains(&h) {
        return Err(bad());
    }
    Ok((w, h))
}

fn resolve_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn write_output(manifest: &mut RunManifest, path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    manifest.output(path)?;
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let preset: ScenePreset = args.scene.parse().map_err(usage)?;
    if args.level > MAX_LEVEL {
        return Err(usage(format!("--level must be 0..={MAX_LEVEL}, got {}", args.level)));
    }
    if args.frames < 2 {
        return Err(usage("--frames must be at least 2"));
    }
    let (width, height) = parse_res(&args.res)?;
    let seed = resolve_seed(args.seed)?;
    let mut cfg = SceneConfig::new(preset, args.level, args.frames, width, height, seed);
    cfg.closed_loop = !args.open_loop;
    let scene = cfg.build().map_err(|e| usage(e.to_string()))?;

    let written = synth::generate_sequence(&scene, &args.out)?;
    let mut manifest = RunManifest::new(serde_json::to_value(&cfg).expect("config serializes"), Some(seed));
    for (name, _) in &written.entries {
        manifest.output(&args.out.join(name))?;
    }
    manifest.output(&args.out.join(synth::MANIFEST_FILE))?;
    manifest.write(&manifest_path(&args.out, true), start.elapsed())?;
    log::info!("wrote {} frames to {}", args.frames, args.out.display());
    Ok(())
}

/// `traj.txt` -> `traj.<suffix>.txt`
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

pub fn odom(args: &OdomArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = OdometryConfig {
        iterations: args.iters,
        flow_source: args.flow.parse::<FlowSource>().map_err(usage)?,
        init_mode: args.init.parse::<InitMode>().map_err(usage)?,
        ..OdometryConfig::default()
    };
    cfg.solver.rigid = args.rigid;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if !args.data.is_dir() {
        return Err(CliError::Runtime(format!("{} is not a directory", args.data.display())));
    }

    let run = odometry::run_sequence(&args.data, &cfg)?;
    let mut manifest = RunManifest::new(serde_json::to_value(&cfg).expect("config serializes"), None);
    for name in [synth::MANIFEST_FILE, evaluation::PALINDROME_FILE] {
        let path = args.data.join(name);
        if path.exists() {
            manifest.input(&path)?;
        }
    }
    write_output(&mut manifest, &args.out, &run.trajectory.to_text())?;
    let diagnostics = args.out.with_file_name("diagnostics.csv");
    write_output(&mut manifest, &diagnostics, &run.diagnostics_csv())?;
    if run.palindrome {
        let (fwd, back) = odometry::split_palindrome(&run.trajectory)?;
        write_output(&mut manifest, &with_suffix(&args.out, odometry::FORWARD_SUFFIX), &fwd.to_text())?;
        write_output(&mut manifest, &with_suffix(&args.out, odometry::BACKWARD_SUFFIX), &back.to_text())?;
    }
    manifest.write(&manifest_path(&args.out, false), start.elapsed())?;
    Ok(())
}

fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    Ok(Trajectory::read(path)?)
}

/// Both trajectories must list the same frame ids in the same order.
fn check_ids(a: &Trajectory, a_name: &str, b: &Trajectory, b_name: &str) -> Result<(), CliError> {
    let mut ia = a.frame_ids();
    let mut ib = b.frame_ids();
    for pos in 0.. {
        match (ia.next(), ib.next()) {
            (None, None) => return Ok(()),
            (x, y) if x == y => continue,
            (x, y) => {
                let show = |v: Option<u64>| v.map_or("<end>".to_string(), |v| v.to_string());
                return Err(CliError::Runtime(format!(
                    "frame ids differ at line {}: {a_name} has {}, {b_name} has {}",
                    pos + 1,
                    show(x),
                    show(y)
                )));
            }
        }
    }
    unreachable!()
}

fn align_mode(a: AlignArg) -> AlignMode {
    match a {
        AlignArg::Se3 => AlignMode::Se3,
        AlignArg::Sim3 => AlignMode::Sim3,
    }
}

pub fn eval(metric: &EvalMetric) -> Result<(), CliError> {
    let start = Instant::now();
    let (common, name) = match metric {
        EvalMetric::Rpe(a) => (a, "rpe"),
        EvalMetric::Ate(a) => (a, "ate"),
        EvalMetric::Apte { common, .. } => (common, "apte"),
    };
    let EvalArgs { gt, est, align: align_arg, out } = common;
    let gt_traj = read_trajectory(gt)?;
    let est_traj = read_trajectory(est)?;
    check_ids(&gt_traj, "--gt", &est_traj, "--est")?;
    let mode = align_mode(*align_arg);
    let mut config = json!({ "metric": name, "align": format!("{mode:?}").to_lowercase() });
    let mut manifest_inputs = vec![gt.clone(), est.clone()];

    let csv = match metric {
        EvalMetric::Rpe(_) => {
            let r = rpe(&est_traj, &gt_traj)?;
            let mut s = String::from("metric,value,unit\n");
            let _ = writeln!(s, "rpe_trans_rmse,{},m", r.translation_rmse);
            let _ = writeln!(s, "rpe_trans_mean,{},m", r.translation_mean());
            let _ = writeln!(s, "rpe_rot_rmse,{},deg", r.rotation_rmse.to_degrees());
            let _ = writeln!(s, "rpe_rot_mean,{},deg", r.rotation_mean().to_degrees());
            let _ = writeln!(s, "pairs,{},count", r.pairs.len());
            s
        }
        EvalMetric::Ate(_) => {
            let a = align(&est_traj, &gt_traj, mode)?;
            let value = ate(&est_traj, &gt_traj, mode)?;
            let mut s = String::from("metric,value,unit\n");
            let _ = writeln!(s, "ate,{value},m");
            let _ = writeln!(s, "scale,{},ratio", a.transform.scale());
            let _ = writeln!(s, "matched,{},count", a.matched);
            s
        }
        EvalMetric::Apte { est_back, apte_mode, .. } => {
            let back_traj = read_trajectory(est_back)?;
            check_ids(&est_traj, "--est", &back_traj, "--est-back")?;
            manifest_inputs.push(est_back.clone());
            let apte_mode = match apte_mode {
                ApteModeArg::Loopwise => ApteMode::Loopwise,
                ApteModeArg::Literal => ApteMode::Literal,
            };
            config["apte_mode"] = json!(apte_mode.to_string());
            // sim3: bring both halves to metric scale using the forward run
            let scale = match mode {
                AlignMode::Sim3 => align(&est_traj, &gt_traj, AlignMode::Sim3)?.transform.scale(),
                AlignMode::Se3 => 1.0,
            };
            let forward = scale_relative_poses(&est_traj.relative_poses(), scale);
            let backward = scale_relative_poses(&back_traj.relative_poses(), scale);
            let report = apte(&forward, &backward, apte_mode)?;
            if report.static_warning {
                log::warn!("more than half of the relative motions are static; APTE is trivially small");
            }
            report.to_csv()
        }
    };

    let mut manifest = RunManifest::new(config, None);
    for p in &manifest_inputs {
        manifest.input(p)?;
    }
    write_output(&mut manifest, out, &csv)?;
    manifest.write(&manifest_path(out, false), start.elapsed())?;
    Ok(())
}

pub fn palindrome(args: &PalindromeArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if !args.data.is_dir() {
        return Err(CliError::Runtime(format!("{} is not a directory", args.data.display())));
    }
    evaluation::palindrome(&args.data, &args.out)?;
    let mut manifest = RunManifest::new(json!({ "data": args.data }), None);
    manifest.input(&args.data.join(synth::MANIFEST_FILE))?;
    let written = drk_core::checksum::ChecksumList::read(&args.out.join(synth::MANIFEST_FILE))?;
    for (name, _) in &written.entries {
        manifest.output(&args.out.join(name))?;
    }
    manifest.output(&args.out.join(synth::MANIFEST_FILE))?;
    manifest.write(&manifest_path(&args.out, true), start.elapsed())?;
    Ok(())
}
