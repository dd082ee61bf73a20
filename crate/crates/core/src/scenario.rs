//! Scenario configuration, geometry and random placement.
//!
//! The service region is the rectangle `[-D_x/2, D_x/2] x [-D_y/2, D_y/2]` on
//! the ground plane. The cable runs along `y = 0` at height `d`, fed from its
//! left end at `(-D_x/2, 0, d)`. Slots are numbered from 1 starting at the feed.
//!
//! Sampling uses [`ChaCha8Rng`] seeded from a single `u64`, so an instance is a
//! pure function of `(config, seed)` and trials can run on any thread.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kvfile;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const GEOMETRY_TOL: f64 = 1e-9;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Physical and protocol parameters of one deployment.
///
/// [`Default`] gives the reference deployment: 3.5 GHz, -64 dBm noise,
/// 0.1 dB/m cable loss, permittivity 1.26, 3 m cable height, a 50 m x 20 m
/// region, 50 slots at 1 m spacing, 4 users, 20 scatterers, 0.5 bit/s/Hz
/// target rate and 20 dBm transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub carrier_freq_hz: f64,
    pub noise_power_dbm: f64,
    pub transmit_power_dbm: f64,
    pub attenuation_db_per_m: f64,
    pub relative_permittivity: f64,
    pub cable_height_m: f64,
    pub region_x_m: f64,
    pub region_y_m: f64,
    pub num_slots: usize,
    pub slot_spacing_m: f64,
    pub num_users: usize,
    pub num_scatterers: usize,
    pub target_rate_bps_hz: f64,
    pub rng_seed: u64,
    /// Scatterer heights are drawn from `(0, wall_height_m]`.
    pub wall_height_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            carrier_freq_hz: 3.5e9,
            noise_power_dbm: -64.0,
            transmit_power_dbm: 20.0,
            attenuation_db_per_m: 0.1,
            relative_permittivity: 1.26,
            cable_height_m: 3.0,
            region_x_m: 50.0,
            region_y_m: 20.0,
            num_slots: 50,
            slot_spacing_m: 1.0,
            num_users: 4,
            num_scatterers: 20,
            target_rate_bps_hz: 0.5,
            rng_seed: 0,
            wall_height_m: 3.0,
        }
    }
}

/// Keys accepted in a config file, in canonical order.
pub const CONFIG_KEYS: [&str; 15] = [
    "carrier_freq_hz",
    "noise_power_dbm",
    "transmit_power_dbm",
    "attenuation_db_per_m",
    "relative_permittivity",
    "cable_height_m",
    "region_x_m",
    "region_y_m",
    "num_slots",
    "slot_spacing_m",
    "num_users",
    "num_scatterers",
    "target_rate_bps_hz",
    "rng_seed",
    "wall_height_m",
];

impl ScenarioConfig {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Free-space normalization `lambda / (4 pi)`.
    pub fn eta(&self) -> f64 {
        self.wavelength_m() / (4.0 * std::f64::consts::PI)
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_m()
    }

    pub fn transmit_power_w(&self) -> f64 {
        dbm_to_watts(self.transmit_power_dbm)
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    /// Transmit SNR `P_t / sigma^2` in linear units.
    pub fn snr_linear(&self) -> f64 {
        self.transmit_power_w() / self.noise_power_w()
    }

    /// Slot spacing that fills the region's x-extent with `num_slots` slots.
    pub fn default_slot_spacing(region_x_m: f64, num_slots: usize) -> f64 {
        region_x_m / num_slots as f64
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check(pos(self.carrier_freq_hz), "carrier_freq_hz must be positive")?;
        check(self.noise_power_dbm.is_finite(), "noise_power_dbm must be finite")?;
        check(
            self.transmit_power_dbm.is_finite(),
            "transmit_power_dbm must be finite",
        )?;
        check(
            self.attenuation_db_per_m.is_finite() && self.attenuation_db_per_m >= 0.0,
            "attenuation_db_per_m must be nonnegative",
        )?;
        check(
            self.relative_permittivity.is_finite() && self.relative_permittivity >= 1.0,
            "relative_permittivity must be >= 1",
        )?;
        check(pos(self.cable_height_m), "cable_height_m must be positive")?;
        check(pos(self.region_x_m), "region_x_m must be positive")?;
        check(pos(self.region_y_m), "region_y_m must be positive")?;
        check(self.num_slots >= 1, "num_slots must be at least 1")?;
        check(pos(self.slot_spacing_m), "slot_spacing_m must be positive")?;
        check(self.num_users >= 1, "num_users must be at least 1")?;
        check(
            self.target_rate_bps_hz.is_finite() && self.target_rate_bps_hz >= 0.0,
            "target_rate_bps_hz must be nonnegative",
        )?;
        check(pos(self.wall_height_m), "wall_height_m must be positive")?;
        let span = (self.num_slots - 1) as f64 * self.slot_spacing_m;
        if span > self.region_x_m * (1.0 + GEOMETRY_TOL) {
            return Err(Error::Config(format!(
                "slots span {span} m but region_x_m is {} m",
                self.region_x_m
            )));
        }
        Ok(())
    }

    /// Parses a config file body. Keys left out keep their default value,
    /// except `slot_spacing_m`, which defaults to `region_x_m / num_slots`.
    pub fn from_kv_str(text: &str, origin: &str) -> Result<Self> {
        let entries = kvfile::parse(text, origin)?;
        let mut cfg = ScenarioConfig::default();
        let mut spacing_given = false;
        for e in &entries {
            match e.key.as_str() {
                "carrier_freq_hz" => cfg.carrier_freq_hz = kvfile::parse_value(e, origin)?,
                "noise_power_dbm" => cfg.noise_power_dbm = kvfile::parse_value(e, origin)?,
                "transmit_power_dbm" => cfg.transmit_power_dbm = kvfile::parse_value(e, origin)?,
                "attenuation_db_per_m" => {
                    cfg.attenuation_db_per_m = kvfile::parse_value(e, origin)?
                }
                "relative_permittivity" => {
                    cfg.relative_permittivity = kvfile::parse_value(e, origin)?
                }
                "cable_height_m" => cfg.cable_height_m = kvfile::parse_value(e, origin)?,
                "region_x_m" => cfg.region_x_m = kvfile::parse_value(e, origin)?,
                "region_y_m" => cfg.region_y_m = kvfile::parse_value(e, origin)?,
                "num_slots" => cfg.num_slots = kvfile::parse_value(e, origin)?,
                "slot_spacing_m" => {
                    cfg.slot_spacing_m = kvfile::parse_value(e, origin)?;
                    spacing_given = true;
                }
                "num_users" => cfg.num_users = kvfile::parse_value(e, origin)?,
                "num_scatterers" => cfg.num_scatterers = kvfile::parse_value(e, origin)?,
                "target_rate_bps_hz" => cfg.target_rate_bps_hz = kvfile::parse_value(e, origin)?,
                "rng_seed" => cfg.rng_seed = kvfile::parse_value(e, origin)?,
                "wall_height_m" => cfg.wall_height_m = kvfile::parse_value(e, origin)?,
                other => {
                    return Err(Error::Parse {
                        path: origin.to_string(),
                        line: e.line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if !spacing_given && cfg.num_slots > 0 {
            cfg.slot_spacing_m = Self::default_slot_spacing(cfg.region_x_m, cfg.num_slots);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text, &path.display().to_string())
    }

    /// Serializes every field in the config-file format.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let values: [String; 15] = [
            self.carrier_freq_hz.to_string(),
            self.noise_power_dbm.to_string(),
            self.transmit_power_dbm.to_string(),
            self.attenuation_db_per_m.to_string(),
            self.relative_permittivity.to_string(),
            self.cable_height_m.to_string(),
            self.region_x_m.to_string(),
            self.region_y_m.to_string(),
            self.num_slots.to_string(),
            self.slot_spacing_m.to_string(),
            self.num_users.to_string(),
            self.num_scatterers.to_string(),
            self.target_rate_bps_hz.to_string(),
            self.rng_seed.to_string(),
            self.wall_height_m.to_string(),
        ];
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Location of slot `k` (1-based).
pub fn slot_position(config: &ScenarioConfig, k: usize) -> Result<Point3> {
    if k == 0 || k > config.num_slots {
        return Err(Error::Index {
            index: k,
            len: config.num_slots,
        });
    }
    Ok(Point3::new(
        -config.region_x_m / 2.0 + (k - 1) as f64 * config.slot_spacing_m,
        0.0,
        config.cable_height_m,
    ))
}

pub fn feed_position(config: &ScenarioConfig) -> Point3 {
    Point3::new(-config.region_x_m / 2.0, 0.0, config.cable_height_m)
}

/// A point scatterer with its complex path gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: Point3,
    pub gain: Complex64,
}

/// One random draw of user and scatterer placement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance {
    config: ScenarioConfig,
    users: Vec<Point3>,
    scatterers: Vec<Scatterer>,
}

impl ScenarioInstance {
    /// Builds an instance from explicit positions, checking that users lie on
    /// the ground inside the region and scatterers lie on a boundary wall.
    pub fn new(
        config: ScenarioConfig,
        users: Vec<Point3>,
        scatterers: Vec<Scatterer>,
    ) -> Result<Self> {
        config.validate()?;
        if users.len() != config.num_users {
            return Err(Error::Dimension {
                expected: config.num_users,
                got: users.len(),
            });
        }
        if scatterers.len() != config.num_scatterers {
            return Err(Error::Dimension {
                expected: config.num_scatterers,
                got: scatterers.len(),
            });
        }
        let hx = config.region_x_m / 2.0 + GEOMETRY_TOL;
        let hy = config.region_y_m / 2.0 + GEOMETRY_TOL;
        for (i, u) in users.iter().enumerate() {
            if !u.is_finite() || u.x.abs() > hx || u.y.abs() > hy || u.z != 0.0 {
                return Err(Error::Config(format!(
                    "user {} at {:?} is outside the ground region",
                    i + 1,
                    u
                )));
            }
        }
        for (i, s) in scatterers.iter().enumerate() {
            let p = s.position;
            let on_x_wall = (p.x.abs() - config.region_x_m / 2.0).abs() <= GEOMETRY_TOL
                && p.y.abs() <= hy;
            let on_y_wall = (p.y.abs() - config.region_y_m / 2.0).abs() <= GEOMETRY_TOL
                && p.x.abs() <= hx;
            let height_ok = p.z > 0.0 && p.z <= config.wall_height_m + GEOMETRY_TOL;
            if !p.is_finite() || !(on_x_wall || on_y_wall) || !height_ok {
                return Err(Error::Config(format!(
                    "scatterer {} at {:?} is not on a boundary wall",
                    i + 1,
                    p
                )));
            }
            if !(s.gain.re.is_finite() && s.gain.im.is_finite()) {
                return Err(Error::Config(format!("scatterer {} gain is not finite", i + 1)));
            }
        }
        Ok(ScenarioInstance {
            config,
            users,
            scatterers,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn users(&self) -> &[Point3] {
        &self.users
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }
}

/// Draws users uniformly over the ground rectangle, scatterers uniformly
/// over the four walls (by perimeter length) with uniform height, and
/// unit-variance circularly-symmetric Gaussian gains.
pub fn sample_scenario(config: &ScenarioConfig) -> Result<ScenarioInstance> {
    sample_scenario_with_seed(config, config.rng_seed)
}

pub fn sample_scenario_with_seed(config: &ScenarioConfig, seed: u64) -> Result<ScenarioInstance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dx, dy) = (config.region_x_m, config.region_y_m);

    let users = (0..config.num_users)
        .map(|_| {
            let x = -dx / 2.0 + dx * rng.random::<f64>();
            let y = -dy / 2.0 + dy * rng.random::<f64>();
            Point3::new(x, y, 0.0)
        })
        .collect::<Vec<_>>();

    let perimeter = 2.0 * (dx + dy);
    let positions = (0..config.num_scatterers)
        .map(|_| {
            let s = perimeter * rng.random::<f64>();
            let z = config.wall_height_m * (1.0 - rng.random::<f64>());
            let (x, y) = if s < dx {
                (-dx / 2.0 + s, -dy / 2.0)
            } else if s < dx + dy {
                (dx / 2.0, -dy / 2.0 + (s - dx))
            } else if s < 2.0 * dx + dy {
                (dx / 2.0 - (s - dx - dy), dy / 2.0)
            } else {
                (-dx / 2.0, dy / 2.0 - (s - 2.0 * dx - dy))
            };
            Point3::new(x, y, z)
        })
        .collect::<Vec<_>>();

    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let scatterers = positions
        .into_iter()
        .map(|position| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Scatterer {
                position,
                gain: Complex64::new(scale * re, scale * im),
            }
        })
        .collect();

    ScenarioInstance::new(config.clone(), users, scatterers)
}
