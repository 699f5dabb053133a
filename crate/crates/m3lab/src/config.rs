//! Flat `key = value` run configuration with dotted keys.
//!
//! ```text
//! # reference run
//! grid.nx = 64
//! grid.ny = 64
//! scheme = spectral
//! spin.model = m3
//! spin.c = 0.3
//! spin.init = modulated-helix
//! run.t_end = 0.05
//! ```
//!
//! Unknown keys and repeated keys are errors. Lengths default to `2π`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{DerivScheme, Grid2, Scheme, VectorField3};
use crate::init::{self, HelixParams, LumpParams};
use crate::io::Mfld;
use crate::nls_dynamics::{NlsModel, NlsParams};
use crate::spin_dynamics::{SpinModel, SpinParams};

const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "scheme",
    "spin.model",
    "spin.c",
    "spin.d",
    "spin.l",
    "spin.beta",
    "spin.init",
    "nls.model",
    "nls.c",
    "nls.d",
    "nls.beta",
    "nls.v_background",
    "nls.init",
    "init.file",
    "init.twist",
    "init.shift",
    "init.warp",
    "init.tilt1",
    "init.tilt3",
    "init.radius",
    "init.support",
    "init.modes",
    "init.amp",
    "init.k1",
    "init.k2",
    "init.width",
    "run.dt",
    "run.t_end",
    "run.save_every",
    "run.output_dir",
    "run.seed",
];

#[derive(Clone, Debug, PartialEq)]
pub enum SpinInit {
    /// `S = (0, 0, 1)` everywhere.
    Uniform,
    Helix(HelixParams),
    Lump(LumpParams),
    Random { modes: usize, amp: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum NlsInit {
    PlaneWave { amp: f64, k1: i32, k2: i32 },
    Packet { amp: f64, width: f64, k1: i32 },
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub enum System {
    Spin(SpinParams, SpinInit),
    Nls(NlsParams, NlsInit),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: Grid2,
    pub scheme: DerivScheme,
    pub system: System,
    /// Time step; `None` means the default CFL fraction.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Steps between saved slices.
    pub save_every: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Sorted `key = value` lines as parsed.
    pub canonical: String,
}

struct Table {
    map: BTreeMap<String, String>,
}

impl Table {
    fn str(&self, k: &str) -> Option<&str> {
        self.map.get(k).map(|s| s.as_str())
    }

    fn parse<T: FromStr>(&self, k: &str) -> Result<Option<T>> {
        match self.str(k) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Config(format!("{k}: cannot parse '{v}'"))),
        }
    }

    fn or<T: FromStr>(&self, k: &str, default: T) -> Result<T> {
        Ok(self.parse(k)?.unwrap_or(default))
    }

    fn require(&self, k: &str) -> Result<&str> {
        self.str(k).ok_or_else(|| Error::Config(format!("missing key {k}")))
    }
}

fn parse_table(text: &str) -> Result<Table> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", no + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: repeated key '{k}'", no + 1)));
        }
    }
    Ok(Table { map })
}

impl RunConfig {
    /// Parse config text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let t = parse_table(text)?;
        let grid = Grid2::new(
            t.or("grid.nx", 64usize)?,
            t.or("grid.ny", 64usize)?,
            t.or("grid.lx", 2.0 * PI)?,
            t.or("grid.ly", 2.0 * PI)?,
        )?;
        let scheme = match t.str("scheme") {
            None => DerivScheme::SPECTRAL,
            Some(s) => match Scheme::from_str(s)? {
                Scheme::Spectral => DerivScheme::SPECTRAL,
                Scheme::Central4 => DerivScheme::CENTRAL4,
            },
        };
        let is_spin = t.map.keys().any(|k| k.starts_with("spin."));
        let is_nls = t.map.keys().any(|k| k.starts_with("nls."));
        let file = |t: &Table| -> Result<PathBuf> {
            let p = base.join(t.require("init.file")?);
            if !p.is_file() {
                return Err(Error::Config(format!("init.file {} does not exist", p.display())));
            }
            Ok(p)
        };
        let system = match (is_spin, is_nls) {
            (true, true) => return Err(Error::Config("a run is either spin.* or nls.*, not both".into())),
            (false, false) => return Err(Error::Config("no spin.* or nls.* section".into())),
            (true, false) => {
                let model = SpinModel::from_str(t.require("spin.model")?)?;
                let p = SpinParams::new(
                    model,
                    t.or("spin.c", 0.0)?,
                    t.or("spin.d", 1.0)?,
                    t.or("spin.l", 0.0)?,
                    t.or("spin.beta", 1.0)?,
                )?
                .with_scheme(scheme);
                let h = HelixParams::default();
                let l = LumpParams::default();
                let init = match t.str("spin.init").unwrap_or("modulated-helix") {
                    "modulated-helix" => SpinInit::Helix(HelixParams {
                        twist: t.or("init.twist", h.twist)?,
                        shift: t.or("init.shift", h.shift)?,
                        warp: t.or("init.warp", h.warp)?,
                        tilt1: t.or("init.tilt1", h.tilt1)?,
                        tilt3: t.or("init.tilt3", h.tilt3)?,
                    }),
                    "uniform" => SpinInit::Uniform,
                    "stereographic-lump" | "lump" => SpinInit::Lump(LumpParams {
                        radius: t.or("init.radius", l.radius)?,
                        support: t.or("init.support", l.support)?,
                    }),
                    "random" => SpinInit::Random { modes: t.or("init.modes", 2)?, amp: t.or("init.amp", 0.5)? },
                    "file" => SpinInit::File(file(&t)?),
                    other => return Err(Error::Config(format!("unknown spin.init '{other}'"))),
                };
                if p.beta != 1.0 && !matches!(init, SpinInit::File(_)) {
                    return Err(Error::Config("built-in spin data lie on the unit sphere; beta = -1 needs init.file".into()));
                }
                System::Spin(p, init)
            }
            (false, true) => {
                let model = NlsModel::from_str(t.require("nls.model")?)?;
                let p = NlsParams::new(model, t.or("nls.c", 0.0)?, t.or("nls.d", 1.0)?, t.or("nls.beta", 1.0)?)?
                    .with_background(t.or("nls.v_background", 0.0)?)
                    .with_scheme(scheme);
                let init = match t.str("nls.init").unwrap_or("plane-wave") {
                    "plane-wave" => NlsInit::PlaneWave {
                        amp: t.or("init.amp", 0.5)?,
                        k1: t.or("init.k1", 1)?,
                        k2: t.or("init.k2", 1)?,
                    },
                    "packet" => NlsInit::Packet {
                        amp: t.or("init.amp", 0.5)?,
                        width: t.or("init.width", 0.8)?,
                        k1: t.or("init.k1", 1)?,
                    },
                    "file" => NlsInit::File(file(&t)?),
                    other => return Err(Error::Config(format!("unknown nls.init '{other}'"))),
                };
                System::Nls(p, init)
            }
        };
        let dt = t.parse("run.dt")?;
        if let Some(dt) = dt {
            if !(dt > 0.0f64) {
                return Err(Error::Config(format!("run.dt must be positive, got {dt}")));
            }
        }
        let t_end: f64 = t.or("run.t_end", 0.0)?;
        if !(t_end >= 0.0) {
            return Err(Error::Config(format!("run.t_end must be non-negative, got {t_end}")));
        }
        let save_every: usize = t.or("run.save_every", 10)?;
        if save_every == 0 {
            return Err(Error::Config("run.save_every must be at least 1".into()));
        }
        let canonical = t.map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        Ok(Self {
            grid,
            scheme,
            system,
            dt,
            t_end,
            save_every,
            output_dir: PathBuf::from(t.str("run.output_dir").unwrap_or("run")),
            seed: t.or("run.seed", 0)?,
            canonical,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Initial spin field sampled on `grid` (which may differ from the
    /// configured grid for built-in data).
    pub fn spin_init_on(&self, grid: Grid2) -> Result<VectorField3> {
        let System::Spin(_, init) = &self.system else {
            return Err(Error::Config("not a spin run".into()));
        };
        Ok(match init {
            SpinInit::Uniform => VectorField3::constant(grid, [0.0, 0.0, 1.0]),
            SpinInit::Helix(h) => init::modulated_helix(grid, h),
            SpinInit::Lump(l) => init::stereographic_lump(grid, l),
            SpinInit::Random { modes, amp } => init::random_smooth_spin(grid, self.seed, *modes, *amp),
            SpinInit::File(p) => {
                let m = Mfld::read(p)?;
                if m.grid != grid {
                    return Err(Error::Grid(format!("{} holds a different grid", p.display())));
                }
                m.vector(0)?
            }
        })
    }

    /// Whether the spin datum can be resampled on other grids.
    pub fn spin_init_is_builtin(&self) -> bool {
        matches!(&self.system, System::Spin(_, init) if !matches!(init, SpinInit::File(_)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_hash() {
        let c = RunConfig::parse("spin.model = m1\n", Path::new(".")).unwrap();
        assert_eq!(c.grid.nx, 64);
        assert!(matches!(c.system, System::Spin(_, SpinInit::Helix(_))));
        assert_eq!(c.hash().len(), 64);
        let c2 = RunConfig::parse("# comment\n  spin.model=m1  \n", Path::new(".")).unwrap();
        assert_eq!(c.hash(), c2.hash());
    }

    #[test]
    fn unknown_and_repeated_keys_are_fatal() {
        assert!(matches!(RunConfig::parse("spin.modle = m1", Path::new(".")), Err(Error::Config(_))));
        assert!(RunConfig::parse("spin.model = m1\nspin.model = m3", Path::new(".")).is_err());
        assert!(RunConfig::parse("spin.model", Path::new(".")).is_err());
    }

    #[test]
    fn model_constraints_apply_at_parse_time() {
        assert!(RunConfig::parse("spin.model = m2\nspin.c = 1\nspin.d = 1\nspin.l = 1", Path::new(".")).is_err());
        assert!(RunConfig::parse("spin.model = m3\nspin.c = 0.5\nspin.d = 1\nspin.l = -1", Path::new(".")).is_err());
        assert!(RunConfig::parse("nls.model = zakharov\nnls.c = 1", Path::new(".")).is_err());
        assert!(RunConfig::parse("grid.nx = 4\nspin.model = m1", Path::new(".")).is_err());
        assert!(RunConfig::parse("spin.model = m1\nnls.model = zakharov", Path::new(".")).is_err());
    }

    #[test]
    fn builtin_spin_inits() {
        let g = Grid2::square(16).unwrap();
        for name in ["uniform", "modulated-helix", "stereographic-lump", "lump", "random"] {
            let c = RunConfig::parse(&format!("spin.model = m1\nspin.init = {name}\n"), Path::new(".")).unwrap();
            assert!(c.spin_init_is_builtin());
            let s = c.spin_init_on(g).unwrap();
            assert!(s.data.iter().all(|v| (crate::fields::norm3(v) - 1.0).abs() < 1e-12), "{name}");
        }
        assert!(RunConfig::parse("spin.model = m1\nspin.init = swirl\n", Path::new(".")).is_err());
    }

    #[test]
    fn missing_file_is_rejected() {
        let r = RunConfig::parse("spin.model = m1\nspin.init = file\ninit.file = nope.mfld", Path::new("."));
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
