//! The seven subcommand runners.
//!
//! Each runner merges flags over config-file values over defaults, writes its
//! CSV (and optional SVG) artifacts plus `manifest.txt`, and only then
//! evaluates its checks, so a failing run still leaves inspectable output.

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modular_burgers::abel::{m_operator_fn, solve_abel_local, AbelData, AbelKind, AbelProblem};
use modular_burgers::diagnostics::{energy_monotonicity_report, positivity_check};
use modular_burgers::fd_solver::{
    convergence_study, simulate, FdConfig, IcPreset, InitialCondition, RunStatus, Snapshot,
    Trajectory,
};
use modular_burgers::field::{GammaSignal, PerturbationField};
use modular_burgers::heat_kernel::odd_exact_solution;
use modular_burgers::picard::{picard_solve, PicardConfig, PicardError};
use modular_burgers::quad::QuadratureSpec;
use modular_burgers::shock_profiles::{
    eval_shock, eval_shock_sided, interface_jump_residual, ShockProfile,
};
use modular_burgers::Side;

use crate::config::FileConfig;
use crate::output::{real, write_csv, write_text, Manifest};
use crate::svg::{line_plot, Series};
use crate::Failure;

/// Merged global options plus the loaded config file, shared by all runners.
pub struct Ctx<'a> {
    file: &'a FileConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl<'a> Ctx<'a> {
    pub fn new(
        file: &'a FileConfig,
        out_flag: Option<PathBuf>,
        seed_flag: Option<u64>,
    ) -> Result<Self, Failure> {
        let out = out_flag
            .or_else(|| file.get_string("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = seed_flag
            .or(file.get_u64("seed").map_err(Failure::Config)?)
            .unwrap_or(0);
        Ok(Ctx { file, out, seed })
    }

    /// Rejects config keys outside this command's set plus the global ones.
    fn known(&self, keys: &[&str]) -> Result<(), Failure> {
        let mut all: Vec<&str> = crate::GLOBAL_KEYS.to_vec();
        all.extend_from_slice(keys);
        self.file.ensure_known(&all).map_err(Failure::Config)
    }

    fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, Failure> {
        Ok(flag
            .or(self.file.get_f64(key).map_err(Failure::Config)?)
            .unwrap_or(default))
    }

    fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, Failure> {
        Ok(flag
            .or(self.file.get_usize(key).map_err(Failure::Config)?)
            .unwrap_or(default))
    }

    /// Boolean flags can only be switched on, so flag OR file value.
    fn flag(&self, key: &str, flag: bool) -> Result<bool, Failure> {
        Ok(flag || self.file.get_bool(key).map_err(Failure::Config)?.unwrap_or(false))
    }

    fn string(&self, key: &str, flag: Option<String>) -> Option<String> {
        flag.or_else(|| self.file.get_string(key))
    }

    fn has(&self, key: &str) -> bool {
        self.file.get_string(key).is_some()
    }
}

fn parse_preset(name: &str) -> Result<IcPreset, Failure> {
    if name.eq_ignore_ascii_case("ic1") {
        Ok(IcPreset::Ic1)
    } else if name.eq_ignore_ascii_case("ic2") {
        Ok(IcPreset::Ic2)
    } else if name.eq_ignore_ascii_case("odd") {
        Ok(IcPreset::Odd)
    } else {
        Err(Failure::Config(format!(
            "unknown preset {name:?} (choose IC1, IC2, or odd)"
        )))
    }
}

fn preset_name(p: IcPreset) -> &'static str {
    match p {
        IcPreset::Ic1 => "IC1",
        IcPreset::Ic2 => "IC2",
        IcPreset::Odd => "odd",
    }
}

fn parse_times(list: &str) -> Result<Vec<f64>, Failure> {
    let mut out = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let t: f64 = part.parse().map_err(|_| {
            Failure::Config(format!("bad time value {part:?} (expected a real number)"))
        })?;
        out.push(t);
    }
    if out.is_empty() {
        return Err(Failure::Config(
            "empty time list (give comma-separated values, e.g. 0.5,1,2)".to_string(),
        ));
    }
    Ok(out)
}

fn status_ok(traj: &Trajectory) -> Result<(), Failure> {
    match &traj.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Aborted { step, reason } => Err(Failure::Run(format!(
            "solver aborted at step {step}: {reason}"
        ))),
    }
}

/// 5-point first and second derivative stencils, accurate enough (≈1e−10)
/// to seed fields whose consumers work at tolerances of 1e−4 and coarser.
fn stencil_d1(f: &dyn Fn(f64) -> f64, y: f64) -> f64 {
    let h = 1e-4;
    (f(y - 2.0 * h) - 8.0 * f(y - h) + 8.0 * f(y + h) - f(y + 2.0 * h)) / (12.0 * h)
}

fn stencil_d2(f: &dyn Fn(f64) -> f64, y: f64) -> f64 {
    let h = 1e-3;
    (-f(y - 2.0 * h) + 16.0 * f(y - h) - 30.0 * f(y) + 16.0 * f(y + h) - f(y + 2.0 * h))
        / (12.0 * h * h)
}

pub fn run_shock(
    ctx: &Ctx,
    w_plus: Option<f64>,
    w_minus: Option<f64>,
    length: Option<f64>,
    h: Option<f64>,
    svg: bool,
) -> Result<(), Failure> {
    ctx.known(&["w-plus", "w-minus", "length", "h", "svg"])?;
    let start = Instant::now();
    let wp = ctx.f64("w-plus", w_plus, 1.0)?;
    let wm = ctx.f64("w-minus", w_minus, -1.0)?;
    let length = ctx.f64("length", length, 30.0)?;
    let h = ctx.f64("h", h, 0.01)?;
    let svg = ctx.flag("svg", svg)?;
    if !(h > 0.0) || !(length > 2.0 * h) {
        return Err(Failure::Config(format!(
            "length and h must be positive with length > 2h (got length = {length}, h = {h})"
        )));
    }
    let profile = ShockProfile::new(wp, wm).map_err(|e| {
        Failure::Config(format!("{e} (w_plus must be positive, w_minus negative)"))
    })?;

    let half = (0.5 * length / h).round() as i64;
    let shock_err = |e: modular_burgers::shock_profiles::ShockError| Failure::Run(e.to_string());
    let mut rows = Vec::with_capacity(2 * half as usize + 1);
    let mut pts = Vec::with_capacity(rows.capacity());
    for j in -half..=half {
        let x = j as f64 * h;
        let w = eval_shock(&profile, x, 0).map_err(shock_err)?;
        let wx = eval_shock(&profile, x, 1).map_err(shock_err)?;
        rows.push(format!("{},{},{}", real(x), real(w), real(wx)));
        pts.push((x, w));
    }
    write_csv(&ctx.out.join("shock.csv"), "x,w,w_x", &rows)?;
    if svg {
        let plot = line_plot(
            "viscous shock profile",
            "x",
            "w",
            &[Series { label: format!("w(+inf) = {wp}, w(-inf) = {wm}"), points: pts }],
        );
        write_text(&ctx.out.join("shock.svg"), &plot)?;
    }

    let mut manifest = Manifest::new("shock");
    manifest.set("w-plus", wp);
    manifest.set("w-minus", wm);
    manifest.set("length", length);
    manifest.set("h", h);
    manifest.set("svg", svg);
    manifest.write(&ctx.out, start.elapsed())?;

    let mut bad = Vec::new();
    let at = |x: f64, d: u8| eval_shock(&profile, x, d).unwrap_or(f64::NAN);
    if at(0.0, 0).abs() > 1e-12 {
        bad.push(format!("w(0) = {:.3e}, expected 0", at(0.0, 0)));
    }
    let kink = (eval_shock_sided(&profile, 0.0, 1, Side::Plus).unwrap_or(f64::NAN)
        - eval_shock_sided(&profile, 0.0, 1, Side::Minus).unwrap_or(f64::NAN))
    .abs();
    if kink > 1e-12 {
        bad.push(format!("derivative jump at the interface: {kink:.3e}"));
    }
    let jump = interface_jump_residual(&profile, 0.0).abs();
    if jump > 1e-12 {
        bad.push(format!("curvature jump residual: {jump:.3e}"));
    }
    let x_max = half as f64 * h;
    let tail_r = (at(x_max, 0) - wp).abs();
    let tail_l = (at(-x_max, 0) - wm).abs();
    if tail_r > 0.05 * wp.abs() || tail_l > 0.05 * wm.abs() {
        bad.push(format!(
            "tails not settled at ±{x_max}: |w-w(+inf)| = {tail_r:.3e}, |w-w(-inf)| = {tail_l:.3e} (increase --length)"
        ));
    }
    for j in 1..=half {
        let x = j as f64 * h;
        if at(x, 0) <= 0.0 || at(-x, 0) >= 0.0 {
            bad.push(format!("sign pattern broken near x = ±{x:.4}"));
            break;
        }
    }
    if bad.is_empty() {
        println!("shock: {} samples, interface conditions hold", rows.len());
        Ok(())
    } else {
        Err(Failure::Check(format!("shock profile checks failed: {}", bad.join("; "))))
    }
}

/// Parse a user CSV with header `y,v_plus,v_minus` sampling the perturbation
/// pair on the interior grid y = h, 2h, …; the file defines h and the span.
fn load_user_data(path: &PathBuf) -> Result<(f64, Vec<f64>, Vec<f64>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read data file {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("y,v_plus,v_minus") => {}
        other => {
            return Err(Failure::Config(format!(
                "data file must start with the header `y,v_plus,v_minus`, got {other:?}"
            )))
        }
    }
    let mut ys = Vec::new();
    let mut vp = Vec::new();
    let mut vm = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Failure::Config(format!(
                "data line {}: expected 3 comma-separated columns, got {}",
                idx + 2,
                cols.len()
            )));
        }
        let mut nums = [0.0f64; 3];
        for (slot, col) in nums.iter_mut().zip(&cols) {
            *slot = col.parse().map_err(|_| {
                Failure::Config(format!("data line {}: {col:?} is not a number", idx + 2))
            })?;
        }
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(Failure::Config(format!("data line {}: non-finite value", idx + 2)));
        }
        ys.push(nums[0]);
        vp.push(nums[1]);
        vm.push(nums[2]);
    }
    if ys.len() < 4 {
        return Err(Failure::Config(format!(
            "data file has {} rows; at least 4 interior nodes are required",
            ys.len()
        )));
    }
    let h = ys[0];
    if !(h > 0.0) {
        return Err(Failure::Config(format!(
            "first node must sit at y = h > 0 (interior grid, no y = 0 row), got {h}"
        )));
    }
    for (j, &y) in ys.iter().enumerate() {
        let want = (j + 1) as f64 * h;
        if (y - want).abs() > 1e-9 * want.max(1.0) {
            return Err(Failure::Config(format!(
                "data grid is not uniform: row {} has y = {y}, expected {want}",
                j + 2
            )));
        }
    }
    Ok((h, vp, vm))
}

/// The front sign pattern and far-boundary smallness the scheme assumes;
/// violations reject the run before it starts.
fn reject_bad_data(cfg: &FdConfig, vp: &[f64], vm: &[f64]) -> Result<(), Failure> {
    let tail = vp.last().unwrap().abs().max(vm.last().unwrap().abs());
    if tail > 1e-4 {
        return Err(Failure::Config(format!(
            "initial data does not vanish at the far boundary (|v| = {tail:.3e} at y = {}); sample a wider span",
            cfg.length - cfg.grid_step()
        )));
    }
    let probe = Trajectory {
        config: cfg.clone(),
        snapshots: vec![Snapshot {
            k: 0,
            t: 0.0,
            v_plus: vp.to_vec(),
            v_minus: vm.to_vec(),
            gamma: 0.0,
            xi: 0.0,
        }],
        gamma_series: vec![0.0],
        xi_series: vec![0.0],
        norm_series: vec![],
        status: RunStatus::Completed,
    };
    let bad = positivity_check(&probe);
    if let Some(v) = bad.first() {
        return Err(Failure::Config(format!(
            "initial data breaks the front sign pattern at {} points (first: w = {:.3e} at x = {:.4}); shrink the perturbation",
            bad.len(),
            v.w,
            v.x
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run_simulate(
    ctx: &Ctx,
    ic: Option<String>,
    data: Option<PathBuf>,
    t_final: Option<f64>,
    length: Option<f64>,
    h: Option<f64>,
    tau: Option<f64>,
    stride: Option<usize>,
    predictor_corrector: bool,
    svg: bool,
) -> Result<(), Failure> {
    ctx.known(&["ic", "data", "T", "length", "h", "tau", "stride", "predictor-corrector", "svg"])?;
    let start = Instant::now();
    let ic_name = ctx.string("ic", ic);
    let data_path = ctx
        .string("data", data.map(|p| p.display().to_string()))
        .map(PathBuf::from);
    let pc = ctx.flag("predictor-corrector", predictor_corrector)?;
    let svg = ctx.flag("svg", svg)?;

    let grid_given = h.is_some() || length.is_some() || ctx.has("h") || ctx.has("length");
    let (ic_cond, ic_label, default_t, length, h) = match (ic_name, data_path) {
        (Some(_), Some(_)) => {
            return Err(Failure::Config(
                "give either --ic or --data, not both".to_string(),
            ))
        }
        (None, None) => {
            return Err(Failure::Config(
                "an initial condition is required (--ic IC1|IC2|odd or --data FILE)".to_string(),
            ))
        }
        (Some(name), None) => {
            let preset = parse_preset(&name)?;
            let length = ctx.f64("length", length, 30.0)?;
            let h = ctx.f64("h", h, 0.01)?;
            (
                InitialCondition::Preset(preset),
                preset_name(preset).to_string(),
                preset.default_t_final(),
                length,
                h,
            )
        }
        (None, Some(path)) => {
            if grid_given {
                return Err(Failure::Config(
                    "--data files define the grid; drop --length/--h".to_string(),
                ));
            }
            let (h, vp, vm) = load_user_data(&path)?;
            let length = (vp.len() + 1) as f64 * h;
            (
                InitialCondition::Samples { v_plus: vp, v_minus: vm },
                format!("file:{}", path.display()),
                4.0,
                length,
                h,
            )
        }
    };
    if !(h > 0.0) || !(length > 2.0 * h) {
        return Err(Failure::Config(format!(
            "length and h must be positive with length > 2h (got length = {length}, h = {h})"
        )));
    }
    let n_interior = (length / h).round() as usize - 1;
    let tau = ctx.f64("tau", tau, 0.002)?;
    let t_final = ctx.f64("T", t_final, default_t)?;
    if !(tau > 0.0) || !(t_final > 0.0) {
        return Err(Failure::Config(format!(
            "tau and T must be positive (got tau = {tau}, T = {t_final})"
        )));
    }
    let steps = ((t_final / tau).round() as usize).max(1);
    let stride = ctx.usize("stride", stride, (steps / 8).max(1))?;
    if stride == 0 {
        return Err(Failure::Config("stride must be at least 1".to_string()));
    }

    let cfg = FdConfig {
        length,
        n_interior,
        tau,
        t_final,
        ic: ic_cond,
        predictor_corrector: pc,
        snapshot_stride: stride,
    };
    if let InitialCondition::Samples { v_plus, v_minus } = &cfg.ic {
        let (vp, vm) = (v_plus.clone(), v_minus.clone());
        reject_bad_data(&cfg, &vp, &vm)?;
    }
    let traj = simulate(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
    status_ok(&traj)?;

    let mut interface = Vec::with_capacity(traj.gamma_series.len());
    for (k, norms) in traj.norm_series.iter().enumerate() {
        interface.push(format!(
            "{},{},{},{},{}",
            real(norms.t),
            real(traj.gamma_series[k]),
            real(traj.xi_series[k]),
            real(norms.h1_energy),
            real(norms.sup_norm)
        ));
    }
    write_csv(
        &ctx.out.join("interface.csv"),
        "t,gamma,xi,h1_energy,sup_norm",
        &interface,
    )?;

    let mut rows = Vec::new();
    for snap in &traj.snapshots {
        for s in traj.line(snap) {
            rows.push(format!("{},{},{},{}", real(snap.t), real(s.x), real(s.u), real(s.w)));
        }
    }
    write_csv(&ctx.out.join("trajectory.csv"), "t,x,u,w", &rows)?;

    if svg {
        write_text(
            &ctx.out.join("profiles.svg"),
            &profiles_plot(&traj, "perturbation profiles"),
        )?;
        write_text(
            &ctx.out.join("interface.svg"),
            &interface_plot(&traj, "interface signal and front position"),
        )?;
    }

    let mut manifest = Manifest::new("simulate");
    manifest.set("ic", &ic_label);
    manifest.set("T", t_final);
    manifest.set("length", length);
    manifest.set("h", cfg.grid_step());
    manifest.set("tau", tau);
    manifest.set("steps", steps);
    manifest.set("stride", stride);
    manifest.set("predictor-corrector", pc);
    manifest.set("svg", svg);
    manifest.set("seed", ctx.seed);
    manifest.write(&ctx.out, start.elapsed())?;

    let energy = energy_monotonicity_report(&traj);
    let positivity = positivity_check(&traj);
    let mut bad = Vec::new();
    if !energy.violations.is_empty() {
        let worst = energy
            .violations
            .iter()
            .map(|v| v.increase)
            .fold(0.0f64, f64::max);
        bad.push(format!(
            "H1 energy increased at {} steps (worst +{worst:.3e}, tolerance {:.1e})",
            energy.violations.len(),
            energy.tolerance
        ));
    }
    if !positivity.is_empty() {
        let v = &positivity[0];
        bad.push(format!(
            "front sign pattern violated at {} grid points (first: w = {:.3e} at t = {:.3}, x = {:.4})",
            positivity.len(),
            v.w,
            v.t,
            v.x
        ));
    }
    if bad.is_empty() {
        println!(
            "simulate: {} steps, gamma(T) = {:.6e}, xi(T) = {:.6e}, checks clean",
            steps,
            traj.final_gamma(),
            traj.final_xi()
        );
        Ok(())
    } else {
        Err(Failure::Check(bad.join("; ")))
    }
}

/// u vs x for up to four snapshots spread over the run.
fn profiles_plot(traj: &Trajectory, title: &str) -> String {
    let n = traj.snapshots.len();
    let mut picks = vec![0, n / 3, 2 * n / 3, n - 1];
    picks.dedup();
    let series: Vec<Series> = picks
        .into_iter()
        .map(|i| {
            let snap = &traj.snapshots[i];
            Series {
                label: format!("t = {:.3}", snap.t),
                points: traj.line(snap).into_iter().map(|s| (s.x, s.u)).collect(),
            }
        })
        .collect();
    line_plot(title, "x", "u", &series)
}

/// γ and ξ against t over the whole run.
fn interface_plot(traj: &Trajectory, title: &str) -> String {
    let gamma: Vec<(f64, f64)> = traj
        .norm_series
        .iter()
        .zip(&traj.gamma_series)
        .map(|(n, &g)| (n.t, g))
        .collect();
    let xi: Vec<(f64, f64)> = traj
        .norm_series
        .iter()
        .zip(&traj.xi_series)
        .map(|(n, &x)| (n.t, x))
        .collect();
    line_plot(
        title,
        "t",
        "value",
        &[
            Series { label: "gamma".to_string(), points: gamma },
            Series { label: "xi".to_string(), points: xi },
        ],
    )
}

pub fn run_exact_odd(
    ctx: &Ctx,
    times: Option<String>,
    length: Option<f64>,
    h: Option<f64>,
    svg: bool,
) -> Result<(), Failure> {
    ctx.known(&["times", "length", "h", "svg"])?;
    let start = Instant::now();
    let times = parse_times(&ctx.string("times", times).unwrap_or_else(|| "0.5,1,2".to_string()))?;
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Failure::Config(format!(
            "times must be positive (got {t}); the odd solution is evaluated at t > 0"
        )));
    }
    let length = ctx.f64("length", length, 12.0)?;
    let h = ctx.f64("h", h, 0.02)?;
    let svg = ctx.flag("svg", svg)?;
    if !(h > 0.0) || !(length > 2.0 * h) {
        return Err(Failure::Config(format!(
            "length and h must be positive with length > 2h (got length = {length}, h = {h})"
        )));
    }

    let fine = 0.002;
    let u0 = PerturbationField::from_fn(fine, (length / fine).round() as usize, |y| {
        0.5 * IcPreset::Odd.v_plus(y)
    })
    .map_err(|e| Failure::Run(e.to_string()))?;
    let spec = QuadratureSpec::default();
    let profile = ShockProfile::normalized();

    let half = (0.5 * length / h).round() as i64;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &t in &times {
        let mut pts = Vec::with_capacity(2 * half as usize + 1);
        for j in -half..=half {
            let x = j as f64 * h;
            let u_abs = odd_exact_solution(&u0, t, x.abs(), 0, &spec)
                .map_err(|e| Failure::Run(e.to_string()))?;
            let u = if x < 0.0 { -u_abs } else { u_abs };
            let w0 = eval_shock(&profile, x, 0).map_err(|e| Failure::Run(e.to_string()))?;
            rows.push(format!("{},{},{},{}", real(t), real(x), real(u), real(w0 + u)));
            pts.push((x, u));
        }
        series.push(Series { label: format!("t = {t}"), points: pts });
    }
    write_csv(&ctx.out.join("exact_odd.csv"), "t,x,u,w", &rows)?;
    if svg {
        write_text(
            &ctx.out.join("exact_odd.svg"),
            &line_plot("odd-sector exact solution", "x", "u", &series),
        )?;
    }

    let mut manifest = Manifest::new("exact-odd");
    manifest.set(
        "times",
        times.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.set("length", length);
    manifest.set("h", h);
    manifest.set("svg", svg);
    manifest.write(&ctx.out, start.elapsed())?;
    println!("exact-odd: {} rows over {} times", rows.len(), times.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run_picard(
    ctx: &Ctx,
    ic: Option<String>,
    t_final: Option<f64>,
    levels: Option<usize>,
    grid_step: Option<f64>,
    y_span: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    nested: bool,
    svg: bool,
) -> Result<(), Failure> {
    ctx.known(&["ic", "T", "levels", "grid-step", "y-span", "tol", "max-iter", "nested", "svg"])?;
    let start = Instant::now();
    let preset = parse_preset(&ctx.string("ic", ic).unwrap_or_else(|| "IC1".to_string()))?;
    let nested = ctx.flag("nested", nested)?;
    let svg = ctx.flag("svg", svg)?;
    let defaults = PicardConfig::default();
    let cfg = PicardConfig {
        t_final: ctx.f64("T", t_final, defaults.t_final)?,
        n_time_levels: ctx.usize("levels", levels, defaults.n_time_levels)?,
        grid_step: ctx.f64("grid-step", grid_step, defaults.grid_step)?,
        y_span: ctx.f64("y-span", y_span, defaults.y_span)?,
        tol: ctx.f64("tol", tol, defaults.tol)?,
        max_iter: ctx.usize("max-iter", max_iter, defaults.max_iter)?,
        nested,
        quad: defaults.quad,
    };
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;

    // One-sided Duhamel variables from the preset perturbation pair.
    let up = move |y: f64| 0.5 * (preset.v_minus(y) + preset.v_plus(y));
    let um = move |y: f64| 0.5 * (preset.v_minus(y) - preset.v_plus(y));
    let n = (cfg.y_span / cfg.grid_step).round() as usize;
    let build = |f: &dyn Fn(f64) -> f64| {
        PerturbationField::from_fn_with_derivs(
            cfg.grid_step,
            n,
            f,
            |y| stencil_d1(f, y),
            |y| stencil_d2(f, y),
        )
    };
    let u0p = build(&up).map_err(|e| Failure::Config(e.to_string()))?;
    let u0m = build(&um).map_err(|e| Failure::Config(e.to_string()))?;

    let (state, report) = picard_solve(&u0p, &u0m, &cfg).map_err(|e| match e {
        PicardError::NonFiniteField { .. } | PicardError::NonFiniteGamma { .. } => {
            Failure::Run(e.to_string())
        }
        other => Failure::Config(other.to_string()),
    })?;

    let dt = state.time_step;
    let gammas = state.gamma.values();
    let mut rows = Vec::with_capacity(gammas.len());
    for (k, &g) in gammas.iter().enumerate() {
        let cont = report.continuity_residuals.get(k).copied().unwrap_or(f64::NAN);
        let inter = report.interface_residuals.get(k).copied().unwrap_or(f64::NAN);
        rows.push(format!(
            "{},{},{},{}",
            real(k as f64 * dt),
            real(g),
            real(cont),
            real(inter)
        ));
    }
    write_csv(
        &ctx.out.join("picard.csv"),
        "t,gamma,continuity_residual,interface_residual",
        &rows,
    )?;
    if svg {
        let pts: Vec<(f64, f64)> = gammas
            .iter()
            .enumerate()
            .map(|(k, &g)| (k as f64 * dt, g))
            .collect();
        write_text(
            &ctx.out.join("picard.svg"),
            &line_plot(
                "fixed-point interface signal",
                "t",
                "gamma",
                &[Series { label: "gamma".to_string(), points: pts }],
            ),
        )?;
    }

    let mut manifest = Manifest::new("picard");
    manifest.set("ic", preset_name(preset));
    manifest.set("T", cfg.t_final);
    manifest.set("levels", cfg.n_time_levels);
    manifest.set("grid-step", cfg.grid_step);
    manifest.set("y-span", cfg.y_span);
    manifest.set("tol", cfg.tol);
    manifest.set("max-iter", cfg.max_iter);
    manifest.set("nested", nested);
    manifest.set("svg", svg);
    manifest.write(&ctx.out, start.elapsed())?;

    println!(
        "picard: {} iterations, converged = {}, max continuity residual = {:.3e}, max interface residual = {:.3e}",
        report.iterations,
        report.converged,
        report.max_continuity_residual(),
        report.max_interface_residual()
    );
    if report.converged {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "fixed-point iteration did not converge in {} sweeps (last change {:.3e}, tol {:.1e}); raise --max-iter or --tol",
            report.iterations,
            report.sweep_changes.last().copied().unwrap_or(f64::NAN),
            cfg.tol
        )))
    }
}

pub fn run_abel_check(
    ctx: &Ctx,
    t_values: Option<String>,
    bumps: Option<usize>,
) -> Result<(), Failure> {
    ctx.known(&["t-values", "bumps"])?;
    let start = Instant::now();
    let times =
        parse_times(&ctx.string("t-values", t_values).unwrap_or_else(|| "0.25,1,4".to_string()))?;
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Failure::Config(format!("t-values must be positive (got {t})")));
    }
    let bumps = ctx.usize("bumps", bumps, 5)?;
    let spec = QuadratureSpec::default();
    let run_err = |e: modular_burgers::abel::AbelError| Failure::Run(e.to_string());

    let f = PerturbationField::from_fn_with_derivs(
        0.01,
        1200,
        |y| y * (-y).exp(),
        |y| (1.0 - y) * (-y).exp(),
        |y| (y - 2.0) * (-y).exp(),
    )
    .map_err(|e| Failure::Run(e.to_string()))?;
    let g = |tau: f64, eta: f64| (-tau).exp() * (-eta).exp();
    let t_top = times.iter().fold(1.0f64, |m, &t| m.max(t));
    let n_local = ((t_top + 0.5) / 0.002).ceil() as usize;
    let local = GammaSignal::from_fn(0.002, n_local, |tau| (-tau).exp())
        .map_err(|e| Failure::Run(e.to_string()))?;

    let problems: [(&str, AbelProblem); 3] = [
        ("from-f", AbelProblem { data: AbelData::FromF(&f), quad: spec }),
        ("from-g", AbelProblem { data: AbelData::FromG(&g), quad: spec }),
        ("local", AbelProblem { data: AbelData::Local(&local), quad: spec }),
    ];

    let mut rows = Vec::new();
    let mut all_pass = true;
    let push = |rows: &mut Vec<String>, check: &str, kind: &str, t: f64, value: f64, bound: f64| {
        let pass = value <= bound;
        rows.push(format!(
            "{check},{kind},{},{},{},{}",
            real(t),
            real(value),
            real(bound),
            pass
        ));
        pass
    };

    for (kind, problem) in &problems {
        debug_assert!(matches!(
            problem.kind(),
            AbelKind::FromF | AbelKind::FromG | AbelKind::Local
        ));
        for &t in &times {
            let r = problem.residual(t).map_err(run_err)?;
            all_pass &= push(&mut rows, "residual", kind, t, r, 1e-5);
        }
    }

    let one = GammaSignal::constant(1.0, 4.0);
    let point = (solve_abel_local(&one, std::f64::consts::PI, &spec).map_err(run_err)? - 1.0).abs();
    all_pass &= push(&mut rows, "closed-form", "local", std::f64::consts::PI, point, 1e-8);

    // Random bump rows: adding a localized bump to the solved signal must
    // push the defining-equation residual visibly off zero, so the inversion
    // is the equation's solution and not an artifact of slack quadrature.
    let t_bump = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for (kind, problem) in &problems {
        let rhs = problem.rhs(t_bump).map_err(run_err)?;
        let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
        let solved = |tau: f64| -> f64 {
            if let Some(&v) = cache.borrow().get(&tau.to_bits()) {
                return v;
            }
            let v = problem.solve(tau).unwrap_or(f64::NAN);
            cache.borrow_mut().insert(tau.to_bits(), v);
            v
        };
        let base = (m_operator_fn(&solved, t_bump, &spec).map_err(run_err)? - rhs).abs();
        for _ in 0..bumps {
            let eps = rng.gen_range(0.02..0.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let center = rng.gen_range(0.1..0.9) * t_bump;
            let width = rng.gen_range(0.05..0.3) * t_bump;
            let bumped = |tau: f64| solved(tau) + eps * (-((tau - center) / width).powi(2)).exp();
            let pushed = (m_operator_fn(&bumped, t_bump, &spec).map_err(run_err)? - rhs).abs();
            let gain = pushed - base;
            let pass = gain > 1e-4;
            rows.push(format!(
                "bump,{kind},{},{},{},{pass}",
                real(t_bump),
                real(gain),
                real(1e-4)
            ));
            all_pass &= pass;
        }
    }

    write_csv(
        &ctx.out.join("abel_check.csv"),
        "check,kind,t,value,bound,pass",
        &rows,
    )?;
    let mut manifest = Manifest::new("abel-check");
    manifest.set(
        "t-values",
        times.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.set("bumps", bumps);
    manifest.set("seed", ctx.seed);
    manifest.write(&ctx.out, start.elapsed())?;

    if all_pass {
        println!("abel-check: {} rows, all within bounds", rows.len());
        Ok(())
    } else {
        let failed = rows.iter().filter(|r| r.ends_with("false")).count();
        Err(Failure::Check(format!(
            "abel-check: {failed} of {} rows out of bounds (see abel_check.csv)",
            rows.len()
        )))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_convergence(
    ctx: &Ctx,
    case: Option<String>,
    levels: Option<usize>,
    length: Option<f64>,
    n0: Option<usize>,
    tau: Option<f64>,
    t_final: Option<f64>,
    tau_quadratic: bool,
) -> Result<(), Failure> {
    ctx.known(&["case", "levels", "length", "n0", "tau", "T", "tau-quadratic"])?;
    let start = Instant::now();
    let case = ctx.string("case", case).unwrap_or_else(|| "odd".to_string());
    let (preset, d_len, d_n0, d_tau, d_t, order_floor) = match case.as_str() {
        "odd" => (IcPreset::Odd, 8.0, 79, 0.05, 0.5, 1.9),
        "general" => (IcPreset::Ic1, 10.0, 99, 0.05, 1.0, 0.9),
        other => {
            return Err(Failure::Config(format!(
                "unknown case {other:?} (choose odd or general)"
            )))
        }
    };
    let levels = ctx.usize("levels", levels, 4)?;
    let tau_quadratic = ctx.flag("tau-quadratic", tau_quadratic)?;
    let cfg = FdConfig {
        length: ctx.f64("length", length, d_len)?,
        n_interior: ctx.usize("n0", n0, d_n0)?,
        tau: ctx.f64("tau", tau, d_tau)?,
        t_final: ctx.f64("T", t_final, d_t)?,
        ic: InitialCondition::Preset(preset),
        predictor_corrector: false,
        snapshot_stride: 1_000_000,
    };
    let table = convergence_study(&cfg, levels, tau_quadratic)
        .map_err(|e| Failure::Config(e.to_string()))?;

    let mut rows = Vec::with_capacity(table.len());
    println!("level  h            tau          error        order");
    for r in &table {
        let order = r.order.map(|o| real(o)).unwrap_or_default();
        rows.push(format!(
            "{},{},{},{},{order}",
            r.level,
            real(r.h),
            real(r.tau),
            real(r.error)
        ));
        println!(
            "{:<6} {:<12.4e} {:<12.4e} {:<12.4e} {}",
            r.level,
            r.h,
            r.tau,
            r.error,
            r.order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".to_string())
        );
    }
    write_csv(&ctx.out.join("convergence.csv"), "level,h,tau,error,order", &rows)?;

    let mut manifest = Manifest::new("convergence");
    manifest.set("case", &case);
    manifest.set("levels", levels);
    manifest.set("length", cfg.length);
    manifest.set("n0", cfg.n_interior);
    manifest.set("tau", cfg.tau);
    manifest.set("T", cfg.t_final);
    manifest.set("tau-quadratic", tau_quadratic);
    manifest.write(&ctx.out, start.elapsed())?;

    let shrinking = table.windows(2).all(|w| w[1].error < w[0].error);
    let last_order = table.last().and_then(|r| r.order);
    match last_order {
        Some(order) if shrinking && order >= order_floor => Ok(()),
        Some(order) => Err(Failure::Check(format!(
            "convergence degraded: shrinking errors = {shrinking}, final observed order {order:.3} < {order_floor}"
        ))),
        None => Err(Failure::Check("convergence table has no observed order".to_string())),
    }
}

pub fn run_reproduce_figures(ctx: &Ctx) -> Result<(), Failure> {
    ctx.known(&[])?;
    let start = Instant::now();
    let figures = [
        ("fig1", IcPreset::Ic1, 250usize, [0.0, 1.0, 2.0, 4.0]),
        ("fig2", IcPreset::Ic2, 500usize, [0.0, 2.0, 6.0, 12.0]),
    ];
    let mut manifest = Manifest::new("reproduce-figures");
    let mut bad = Vec::new();
    for (tag, preset, stride, times) in figures {
        let mut cfg = FdConfig::preset(preset);
        cfg.snapshot_stride = stride;
        let traj = simulate(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
        status_ok(&traj)?;

        let mut rows = Vec::new();
        let mut series = Vec::new();
        for &target in &times {
            let snap = traj
                .snapshots
                .iter()
                .find(|s| (s.t - target).abs() < 1e-9)
                .ok_or_else(|| {
                    Failure::Run(format!("{tag}: no snapshot at t = {target} (stride {stride})"))
                })?;
            let mut pts = Vec::new();
            for s in traj.line(snap) {
                rows.push(format!("{},{},{},{}", real(snap.t), real(s.x), real(s.u), real(s.w)));
                pts.push((s.x, s.u));
            }
            series.push(Series { label: format!("t = {target}"), points: pts });
        }
        write_csv(&ctx.out.join(format!("{tag}_profiles.csv")), "t,x,u,w", &rows)?;
        write_text(
            &ctx.out.join(format!("{tag}_profiles.svg")),
            &line_plot(
                &format!("perturbation profiles, {}", preset_name(preset)),
                "x",
                "u",
                &series,
            ),
        )?;

        let mut interface = Vec::with_capacity(traj.gamma_series.len());
        for (k, norms) in traj.norm_series.iter().enumerate() {
            interface.push(format!(
                "{},{},{},{},{}",
                real(norms.t),
                real(traj.gamma_series[k]),
                real(traj.xi_series[k]),
                real(norms.h1_energy),
                real(norms.sup_norm)
            ));
        }
        write_csv(
            &ctx.out.join(format!("{tag}_interface.csv")),
            "t,gamma,xi,h1_energy,sup_norm",
            &interface,
        )?;
        write_text(
            &ctx.out.join(format!("{tag}_interface.svg")),
            &interface_plot(&traj, &format!("interface dynamics, {}", preset_name(preset))),
        )?;

        manifest.set(&format!("{tag}_ic"), preset_name(preset));
        manifest.set(&format!("{tag}_T"), cfg.t_final);
        manifest.set(&format!("{tag}_length"), cfg.length);
        manifest.set(&format!("{tag}_h"), cfg.grid_step());
        manifest.set(&format!("{tag}_tau"), cfg.tau);
        manifest.set(&format!("{tag}_stride"), stride);

        let energy = energy_monotonicity_report(&traj);
        if !energy.violations.is_empty() {
            bad.push(format!("{tag}: {} energy increases", energy.violations.len()));
        }
        let positivity = positivity_check(&traj);
        if !positivity.is_empty() {
            bad.push(format!("{tag}: {} sign-pattern violations", positivity.len()));
        }
        println!(
            "{tag}: {} done, gamma(T) = {:.6e}, xi(T) = {:.6e}",
            preset_name(preset),
            traj.final_gamma(),
            traj.final_xi()
        );
    }
    manifest.write(&ctx.out, start.elapsed())?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(bad.join("; ")))
    }
}
