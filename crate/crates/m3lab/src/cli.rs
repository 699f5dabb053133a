//! Command-line front end: runs, run directories and reports.
//!
//! A run directory holds `config.txt` (canonical config), `run.json`
//! (slice index and step metadata), `slice_NNNN.mfld` and
//! `invariants.csv`. Exit codes: 0 success, 1 a check failed, 2 invalid
//! input, 3 numerical instability.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{NlsInit, RunConfig, SpinInit, System};
use crate::equivalence::{equiv_from_slices, l_equiv_check, EquivOptions, QMapOptions};
use crate::error::{Error, Result};
use crate::fields::{inv_dx, integrate2, DerivScheme, Field, Grid2, ScalarField};
use crate::frames::{coeffs_from_frame, frame_from_spin, mlxii_residual, FrameCoeffs, FrameRates};
use crate::init;
use crate::invariants::{charges, q1, ChargeSeries};
use crate::io::Mfld;
use crate::lax::{frame_zero_curvature, pauli_identities, spin_zero_curvature, zero_curvature_q, F1Reading, LambdaFlow};
use crate::nls_dynamics::{rhs_from_fields, step_rk4_nls, NlsParams, NlsState};
use crate::spin_dynamics::{default_dt, rhs_from_spin, step_rk4_spin, SpinParams, SpinState};

#[derive(Parser, Debug)]
#[command(name = "m3lab", version, about = "Spin / NLS equivalence laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a spin model and write a run directory.
    SimulateSpin {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run an NLS-type model and write a run directory.
    SimulateNls {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Frames, coefficients and compatibility residuals of a spin run.
    Frame { run_dir: PathBuf },
    /// Spin-to-NLS residual on saved slices and on a grid ladder.
    EquivCheck {
        run_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
    },
    /// Zero-curvature residual at a spectral parameter.
    LaxCheck {
        run_dir: PathBuf,
        /// `re,im`
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        spin_side: bool,
    },
    /// Charge time series of a spin run.
    Charges { run_dir: PathBuf },
    /// Residual table of the closed-form λ-flow.
    LambdaCheck {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        k: f64,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Algebra, operator and reduction checks.
    Selftest,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SliceRecord {
    pub index: usize,
    pub step: usize,
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub kind: String,
    pub config_hash: String,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dt: f64,
    pub steps: usize,
    pub save_every: usize,
    pub slices: Vec<SliceRecord>,
    /// Largest renormalization correction (spin) or conjugacy defect (NLS).
    pub max_correction: f64,
}

fn slice_name(i: usize) -> String {
    format!("slice_{i:04}.mfld")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))? + "\n";
    fs::write(path, &text)?;
    Ok(text)
}

fn time_steps(cfg: &RunConfig) -> (f64, usize) {
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&cfg.grid));
    let steps = (cfg.t_end / dt).round() as usize;
    (dt, steps)
}

/// Write `config.txt`, copying an input field file next to it so the run
/// directory is self-contained.
fn prepare_dir(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = match &cfg.system {
        System::Spin(_, SpinInit::File(p)) | System::Nls(_, NlsInit::File(p)) => Some(p),
        _ => None,
    };
    let mut text = cfg.canonical.clone();
    if let Some(p) = file {
        fs::copy(p, dir.join("init.mfld"))?;
        text = text
            .lines()
            .map(|l| if l.starts_with("init.file") { "init.file = init.mfld".to_string() } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
    }
    fs::write(dir.join("config.txt"), text)?;
    Ok(())
}

/// Run a spin configuration into `dir`.
pub fn simulate_spin(cfg: &RunConfig, dir: &Path) -> Result<RunRecord> {
    let System::Spin(p, _) = &cfg.system else {
        return Err(Error::Config("simulate-spin needs a spin.* configuration".into()));
    };
    prepare_dir(cfg, dir)?;
    let (dt, steps) = time_steps(cfg);
    let mut st = SpinState::new(cfg.spin_init_on(cfg.grid)?, p)?;
    let mut slices = Vec::new();
    let mut csv = String::from("t,K1,Q1,renorm_correction\n");
    let mut max_corr = 0.0f64;
    let mut save = |st: &SpinState, step: usize, slices: &mut Vec<SliceRecord>| -> Result<()> {
        let i = slices.len();
        Mfld::from_vector(&st.s).write(&dir.join(slice_name(i)))?;
        let q = q1(&st.s, cfg.scheme);
        writeln!(csv, "{:.17e},{:.17e},{:.17e},{:.17e}", st.t, 4.0 * PI * q, q, st.renorm_correction).unwrap();
        slices.push(SliceRecord { index: i, step, t: st.t, file: slice_name(i) });
        Ok(())
    };
    save(&st, 0, &mut slices)?;
    for step in 1..=steps {
        st = step_rk4_spin(&st, p, dt)?;
        max_corr = max_corr.max(st.renorm_correction);
        if step % cfg.save_every == 0 || step == steps {
            save(&st, step, &mut slices)?;
        }
    }
    fs::write(dir.join("invariants.csv"), csv)?;
    let rec = record(cfg, "spin", dt, steps, slices, max_corr);
    write_json(&dir.join("run.json"), &rec)?;
    Ok(rec)
}

fn record(cfg: &RunConfig, kind: &str, dt: f64, steps: usize, slices: Vec<SliceRecord>, max_correction: f64) -> RunRecord {
    RunRecord {
        kind: kind.into(),
        config_hash: cfg.hash(),
        nx: cfg.grid.nx,
        ny: cfg.grid.ny,
        lx: cfg.grid.lx,
        ly: cfg.grid.ly,
        dt,
        steps,
        save_every: cfg.save_every,
        slices,
        max_correction,
    }
}

fn nls_init(cfg: &RunConfig, p: &NlsParams) -> Result<NlsState> {
    let System::Nls(_, init) = &cfg.system else { unreachable!() };
    let g = cfg.grid;
    match init {
        NlsInit::PlaneWave { amp, k1, k2 } => NlsState::reduced(init::plane_wave(g, *amp, *k1, *k2), p),
        NlsInit::Packet { amp, width, k1 } => NlsState::reduced(init::periodic_packet(g, *amp, *width, *k1), p),
        NlsInit::File(path) => {
            let m = Mfld::read(path)?;
            if m.grid != g {
                return Err(Error::Grid(format!("{} holds a different grid", path.display())));
            }
            match m.ncomp {
                2 => NlsState::reduced(m.complex(0)?, p),
                4 => NlsState::general(m.complex(0)?, m.complex(2)?, p),
                n => Err(Error::Format(format!("NLS data need 2 or 4 components, got {n}"))),
            }
        }
    }
}

/// Components `Re q, Im q, Re p, Im p, v` with `v` including the background.
fn nls_mfld(st: &NlsState, p: &NlsParams) -> Mfld {
    let parts = [st.q.re(), st.q.im(), st.p.re(), st.p.im(), st.v_total(p)];
    Mfld::from_components(&[&parts[0], &parts[1], &parts[2], &parts[3], &parts[4]]).expect("one grid")
}

/// Run an NLS configuration into `dir`.
pub fn simulate_nls(cfg: &RunConfig, dir: &Path) -> Result<RunRecord> {
    let System::Nls(p, _) = &cfg.system else {
        return Err(Error::Config("simulate-nls needs an nls.* configuration".into()));
    };
    prepare_dir(cfg, dir)?;
    let (dt, steps) = time_steps(cfg);
    let mut st = nls_init(cfg, p)?;
    let mut slices = Vec::new();
    let mut csv = String::from("t,mass,conjugate_defect\n");
    let mut max_def = 0.0f64;
    let mut save = |st: &NlsState, step: usize, slices: &mut Vec<SliceRecord>| -> Result<()> {
        let i = slices.len();
        nls_mfld(st, p).write(&dir.join(slice_name(i)))?;
        let mass = integrate2(&st.p.zip_map(&st.q, |a, b| a * b).re());
        writeln!(csv, "{:.17e},{:.17e},{:.17e}", st.t, mass, st.conjugate_defect).unwrap();
        slices.push(SliceRecord { index: i, step, t: st.t, file: slice_name(i) });
        Ok(())
    };
    save(&st, 0, &mut slices)?;
    for step in 1..=steps {
        st = step_rk4_nls(&st, p, dt)?;
        max_def = max_def.max(st.conjugate_defect);
        if step % cfg.save_every == 0 || step == steps {
            save(&st, step, &mut slices)?;
        }
    }
    fs::write(dir.join("invariants.csv"), csv)?;
    let rec = record(cfg, "nls", dt, steps, slices, max_def);
    write_json(&dir.join("run.json"), &rec)?;
    Ok(rec)
}

/// A run directory loaded back from disk.
pub struct RunDir {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub record: RunRecord,
}

impl RunDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let config = RunConfig::load(&dir.join("config.txt"))?;
        let text = fs::read_to_string(dir.join("run.json"))?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { dir: dir.to_path_buf(), config, record })
    }

    fn spin_params(&self) -> Result<SpinParams> {
        match &self.config.system {
            System::Spin(p, _) => Ok(*p),
            _ => Err(Error::Config("not a spin run".into())),
        }
    }

    pub fn spin_slice(&self, i: usize) -> Result<SpinState> {
        let p = self.spin_params()?;
        let m = Mfld::read(&self.dir.join(&self.record.slices[i].file))?;
        let mut st = SpinState::new(m.vector(0)?, &p)?;
        st.t = self.record.slices[i].t;
        Ok(st)
    }

    pub fn nls_slice(&self, i: usize) -> Result<NlsState> {
        let System::Nls(p, _) = &self.config.system else {
            return Err(Error::Config("not an NLS run".into()));
        };
        let m = Mfld::read(&self.dir.join(&self.record.slices[i].file))?;
        let mut st = NlsState::general(m.complex(0)?, m.complex(2)?, p)?;
        st.t = self.record.slices[i].t;
        Ok(st)
    }

    /// Index of the most central slice whose neighbours are equally spaced.
    pub fn central_triple(&self) -> Result<usize> {
        let s = &self.record.slices;
        if s.len() < 3 {
            return Err(Error::Config(format!("run has {} slices, at least 3 are needed", s.len())));
        }
        let mid = s.len() / 2;
        let mut order: Vec<usize> = (1..s.len() - 1).collect();
        order.sort_by_key(|&i| i.abs_diff(mid));
        order
            .into_iter()
            .find(|&i| s[i].step - s[i - 1].step == s[i + 1].step - s[i].step)
            .ok_or_else(|| Error::Config("no equally spaced slice triple".into()))
    }
}

#[derive(Serialize)]
struct SliceCompat {
    t: f64,
    report: crate::frames::MlxiiReport,
}

/// Write frames and coefficients of every slice; returns the JSON report.
pub fn frame_cmd(run: &RunDir) -> Result<String> {
    let p = run.spin_params()?;
    let sc = p.scheme;
    let n = run.record.slices.len();
    let frames = (0..n)
        .map(|i| frame_from_spin(&run.spin_slice(i)?.s, sc, p.beta))
        .collect::<Result<Vec<_>>>()?;
    let plain: Vec<FrameCoeffs> = frames.iter().map(|f| coeffs_from_frame(f, sc, None)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        frames[i].to_mfld().write(&run.dir.join(format!("frame_{i:04}.mfld")))?;
        let interior = i > 0 && i + 1 < n;
        let (coeffs, rates) = if interior {
            let span = run.record.slices[i + 1].t - run.record.slices[i - 1].t;
            let r = FrameRates::central(&frames[i - 1], &frames[i + 1], span);
            (coeffs_from_frame(&frames[i], sc, Some(&r)), Some(FrameCoeffs::central(&plain[i - 1], &plain[i + 1], span)))
        } else {
            (plain[i].clone(), None)
        };
        coeffs.to_mfld().write(&run.dir.join(format!("coeffs_{i:04}.mfld")))?;
        out.push(SliceCompat {
            t: run.record.slices[i].t,
            report: mlxii_residual(&coeffs, rates.as_ref(), Some(&frames[i]), sc, p.beta),
        });
    }
    #[derive(Serialize)]
    struct Report {
        config_hash: String,
        slices: Vec<SliceCompat>,
    }
    write_json(&run.dir.join("frames.json"), &Report { config_hash: run.record.config_hash.clone(), slices: out })
}

/// Order band accepted by `equiv-check`.
pub const ORDER_MIN: f64 = 1.7;

pub fn equiv_cmd(run: &RunDir, ladder: Option<&[usize]>) -> Result<(String, bool)> {
    let p = run.spin_params()?;
    let i = run.central_triple()?;
    let s = [run.spin_slice(i - 1)?, run.spin_slice(i)?, run.spin_slice(i + 1)?];
    let span = s[2].t - s[0].t;
    let opts = QMapOptions { scheme: p.scheme, ..QMapOptions::default() };
    let slices = equiv_from_slices([&s[0].s, &s[1].s, &s[2].s], span, &p, &opts)?;
    let default = [32, 64, 128];
    let ladder = ladder.unwrap_or(&default);
    let report = if run.config.spin_init_is_builtin() {
        let g = run.config.grid;
        let eo = EquivOptions { q_map: opts, ..EquivOptions::default() };
        Some(l_equiv_check(&|grid: Grid2| run.config.spin_init_on(grid), &p, ladder, (g.lx, g.ly), &eo)?)
    } else {
        None
    };
    let pass = report.as_ref().map_or(true, |r| r.order >= ORDER_MIN);
    #[derive(Serialize)]
    struct Out<'a> {
        config_hash: &'a str,
        slice_time: f64,
        slices: crate::equivalence::NlsResidual,
        ladder: Option<crate::equivalence::EquivReport>,
        pass: bool,
    }
    let out = Out { config_hash: &run.record.config_hash, slice_time: s[1].t, slices, ladder: report, pass };
    Ok((write_json(&run.dir.join("equiv.json"), &out)?, pass))
}

fn parse_lambda(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("bad spectral parameter '{s}'")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Config(format!("spectral parameter must be re,im, got '{s}'"))),
    }
}

pub fn lax_cmd(run: &RunDir, lambda: Complex64, spin_side: bool) -> Result<String> {
    let i = run.central_triple()?;
    let mut j = serde_json::Map::new();
    j.insert("config_hash".into(), run.record.config_hash.clone().into());
    j.insert("lambda".into(), serde_json::json!([lambda.re, lambda.im]));
    match &run.config.system {
        System::Nls(p, _) => {
            let s = [run.nls_slice(i - 1)?, run.nls_slice(i)?, run.nls_slice(i + 1)?];
            let span = s[2].t - s[0].t;
            j.insert("q_side".into(), zero_curvature_q(&s[0], &s[1], &s[2], span, p, lambda).into());
        }
        System::Spin(p, _) => {
            let s = [run.spin_slice(i - 1)?, run.spin_slice(i)?, run.spin_slice(i + 1)?];
            let span = s[2].t - s[0].t;
            let sc = p.scheme;
            let f: Vec<_> = s.iter().map(|st| frame_from_spin(&st.s, sc, p.beta)).collect::<Result<_>>()?;
            let rates = FrameRates::central(&f[0], &f[2], span);
            let c = coeffs_from_frame(&f[1], sc, Some(&rates));
            let cr = FrameCoeffs::central(&coeffs_from_frame(&f[0], sc, None), &coeffs_from_frame(&f[2], sc, None), span);
            j.insert("frame".into(), serde_json::to_value(frame_zero_curvature(&c, Some(&cr), sc, p.beta)).unwrap());
            if spin_side {
                for (name, reading) in [("spin_grouped", F1Reading::Grouped), ("spin_split", F1Reading::Split)] {
                    let r = spin_zero_curvature(&s[0], &s[1], &s[2], span, p, lambda, reading)?;
                    j.insert(name.into(), r.into());
                }
            }
        }
    }
    let text = serde_json::to_string_pretty(&j).unwrap() + "\n";
    fs::write(run.dir.join("lax.json"), &text)?;
    Ok(text)
}

pub fn charges_cmd(run: &RunDir) -> Result<String> {
    let p = run.spin_params()?;
    let mut series = ChargeSeries::default();
    for i in 0..run.record.slices.len() {
        let st = run.spin_slice(i)?;
        let f = frame_from_spin(&st.s, p.scheme, p.beta)?;
        let c = coeffs_from_frame(&f, p.scheme, None);
        series.push(st.t, charges(&f, &c, p.scheme));
    }
    let csv = series.to_csv();
    fs::write(run.dir.join("charges.csv"), &csv)?;
    Ok(csv)
}

/// λ-flow residual table; the flag is true when every analytic residual
/// is below `1e-12`.
pub fn lambda_table(flow: &LambdaFlow, samples: usize) -> Result<(String, bool)> {
    let t_max = if flow.k != 0.0 { 0.3 * flow.a / flow.k } else { 1.0 };
    let mut s = String::from("y,t,re,im,analytic,fd\n");
    let mut pass = true;
    for i in 0..samples {
        let y = 0.25 + 1.5 * (i % 10) as f64 / 9.0;
        let t = t_max * (i / 10) as f64 / (samples.div_ceil(10).max(2) - 1) as f64;
        let r = flow.sample(y, t, 1e-4)?;
        pass &= r.analytic < 1e-12;
        writeln!(s, "{:.6},{:.6},{:.15e},{:.15e},{:.3e},{:.3e}", r.y, r.t, r.lambda[0], r.lambda[1], r.analytic, r.fd).unwrap();
    }
    Ok((s, pass))
}

/// One named self-check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

pub fn selftest() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let pauli = pauli_identities();
    out.push(Check { name: "pauli identities", value: pauli.checks.len() as f64, pass: pauli.all_pass() });

    let g = Grid2::square(32)?;
    let f = ScalarField::from_fn(g, |x, y| (x.sin() + 0.5 * (x + 2.0 * y).cos()).exp());
    let a = inv_dx(&f)?;
    let back = a.field.dx(DerivScheme::SPECTRAL);
    let err = back.sub(&f.remove_mean_x()).max_abs();
    out.push(Check { name: "ddx . inv_dx = id - mean_x", value: err, pass: err < 1e-10 });

    let c4 = |n: usize| -> Result<f64> {
        let g = Grid2::square(n)?;
        let f = ScalarField::from_fn(g, |x, y| (x.sin() + 0.3 * y.cos()).exp());
        let exact = ScalarField::from_fn(g, |x, y| x.cos() * (x.sin() + 0.3 * y.cos()).exp());
        Ok(f.dx(DerivScheme::CENTRAL4).sub(&exact).max_abs())
    };
    let ratio = c4(32)? / c4(64)?;
    out.push(Check { name: "central4 error ratio 32 -> 64", value: ratio, pass: (ratio - 16.0).abs() <= 2.0 });

    let q = init::periodic_packet(g, 0.6, 0.9, 1);
    let qb = q.conj();
    let (za, _) = rhs_from_fields(&q, &qb, &NlsParams::m3q(0.0, 1.0)?);
    let (zb, _) = rhs_from_fields(&q, &qb, &NlsParams::zakharov());
    out.push(Check { name: "M3q at (0, 1) equals Zakharov", value: za.max_dist(&zb), pass: za == zb });
    let (sa, _) = rhs_from_fields(&q, &qb, &NlsParams::m3q(0.7, 0.0)?);
    let (sb, _) = rhs_from_fields(&q, &qb, &NlsParams::strachan(0.7)?);
    out.push(Check { name: "M3q at d = 0 equals Strachan", value: sa.max_dist(&sb), pass: sa == sb });

    let s = init::random_smooth_spin(g, 3, 2, 0.7);
    let (ra, _, _) = rhs_from_spin(&s, &SpinParams::m3(0.4, 0.0, 0.6)?);
    let (rb, _, _) = rhs_from_spin(&s, &SpinParams::m2(0.4, 0.6)?);
    out.push(Check { name: "spin M3 at d = 0 equals M2", value: ra.max_dist(&rb), pass: ra == rb });
    Ok(out)
}

fn set_threads() {
    if let Some(n) = std::env::var("M3LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Ignore the error raised when a pool already exists (repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn output_dir(cfg: &RunConfig, over: Option<PathBuf>) -> PathBuf {
    over.unwrap_or_else(|| cfg.output_dir.clone())
}

/// Execute a parsed command; returns `Ok(false)` when a check failed.
pub fn execute(cmd: Command) -> Result<bool> {
    set_threads();
    match cmd {
        Command::SimulateSpin { config, output_dir: o } => {
            let cfg = RunConfig::load(&config)?;
            let rec = simulate_spin(&cfg, &output_dir(&cfg, o))?;
            println!("{} slices, t = {}", rec.slices.len(), rec.slices.last().map_or(0.0, |s| s.t));
            Ok(true)
        }
        Command::SimulateNls { config, output_dir: o } => {
            let cfg = RunConfig::load(&config)?;
            let rec = simulate_nls(&cfg, &output_dir(&cfg, o))?;
            println!("{} slices, t = {}", rec.slices.len(), rec.slices.last().map_or(0.0, |s| s.t));
            Ok(true)
        }
        Command::Frame { run_dir } => {
            print!("{}", frame_cmd(&RunDir::open(&run_dir)?)?);
            Ok(true)
        }
        Command::EquivCheck { run_dir, ladder } => {
            let (text, pass) = equiv_cmd(&RunDir::open(&run_dir)?, ladder.as_deref())?;
            print!("{text}");
            Ok(pass)
        }
        Command::LaxCheck { run_dir, lambda, spin_side } => {
            print!("{}", lax_cmd(&RunDir::open(&run_dir)?, parse_lambda(&lambda)?, spin_side)?);
            Ok(true)
        }
        Command::Charges { run_dir } => {
            print!("{}", charges_cmd(&RunDir::open(&run_dir)?)?);
            Ok(true)
        }
        Command::LambdaCheck { n, k, a, c, samples } => {
            if n == 0.0 {
                return Err(Error::Param("n must be nonzero".into()));
            }
            let (table, pass) = lambda_table(&LambdaFlow { n, k, a, cc: c }, samples)?;
            print!("{table}");
            Ok(pass)
        }
        Command::Selftest => {
            let checks = selftest()?;
            for c in &checks {
                println!("{} {:<34} {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            Ok(checks.iter().all(|c| c.pass))
        }
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
