//! Channel synthesis from the feed point to every user via every slot.
//!
//! Each entry is the in-cable term times the sum of a direct path and a
//! single-bounce scatterer path, both shaped by the slot's downward conical
//! pattern. The fixed-antenna baseline uses the same scatterers with
//! isotropic elements and no in-cable term.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{feed_position, slot_position, Point3, ScenarioConfig, ScenarioInstance, Scatterer};

const MIN_DISTANCE_M: f64 = 1e-9;

/// Complex `K x N` matrix of slot-to-user channels.
///
/// Stored user-major so that the per-user column `h_n` is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    num_slots: usize,
    num_users: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn from_columns(columns: Vec<Vec<Complex64>>) -> Result<Self> {
        let num_users = columns.len();
        let num_slots = columns.first().map_or(0, Vec::len);
        if num_users == 0 || num_slots == 0 {
            return Err(Error::Domain("channel matrix must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(num_slots * num_users);
        for col in columns {
            if col.len() != num_slots {
                return Err(Error::Dimension {
                    expected: num_slots,
                    got: col.len(),
                });
            }
            data.extend(col);
        }
        if data.iter().any(|h| !(h.re.is_finite() && h.im.is_finite())) {
            return Err(Error::Domain("channel matrix has non-finite entries".into()));
        }
        Ok(ChannelMatrix {
            num_slots,
            num_users,
            data,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// Entry for slot `k` and user `n`, both 0-based.
    pub fn get(&self, k: usize, n: usize) -> Complex64 {
        self.data[n * self.num_slots + k]
    }

    /// Channel vector `h_n` of user `n` (0-based).
    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.num_slots..(n + 1) * self.num_slots]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.num_slots)
    }

    /// CSV with header `k,n,re,im`, 1-based indices, shortest round-trip floats.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("k,n,re,im\n");
        for k in 0..self.num_slots {
            for n in 0..self.num_users {
                let h = self.get(k, n);
                let _ = writeln!(s, "{},{},{},{}", k + 1, n + 1, h.re, h.im);
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Feed-to-slot term for slot `k` (1-based): attenuation plus phase progression
/// at the guided wavelength.
pub fn guided_channel(config: &ScenarioConfig, k: usize) -> Result<Complex64> {
    if k == 0 || k > config.num_slots {
        return Err(Error::Index {
            index: k,
            len: config.num_slots,
        });
    }
    let run = (k - 1) as f64 * config.slot_spacing_m;
    let magnitude = 10f64.powf(-config.attenuation_db_per_m * run / 20.0);
    let phase = -config.wavenumber() * config.relative_permittivity.sqrt() * run;
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Direct slot-to-user path with the conical pattern `sin(theta) = d / r`.
pub fn los_channel(config: &ScenarioConfig, slot: &Point3, user: &Point3) -> Result<Complex64> {
    let r = slot.distance(user);
    if r < MIN_DISTANCE_M {
        return Err(Error::Domain(format!(
            "user {user:?} coincides with slot {slot:?}"
        )));
    }
    let sin_theta = (slot.z - user.z) / r;
    Ok(Complex64::from_polar(config.eta() * sin_theta / r, -config.wavenumber() * r))
}

/// Elevation factor from a slot down to a scatterer, clamped to `[0, 1]` so
/// that scatterers at or above the cable are not illuminated.
fn scatterer_elevation(slot: &Point3, scat: &Point3, r: f64) -> f64 {
    ((slot.z - scat.z) / r).clamp(0.0, 1.0)
}

/// Single-bounce paths from `source` to `user` through every scatterer.
fn scattered_sum(
    config: &ScenarioConfig,
    scatterers: &[Scatterer],
    source: &Point3,
    user: &Point3,
    conical: bool,
) -> Result<Complex64> {
    let wavenumber = config.wavenumber();
    let mut acc = Complex64::new(0.0, 0.0);
    for s in scatterers {
        let r1 = s.position.distance(source);
        let r2 = user.distance(&s.position);
        if r1 < MIN_DISTANCE_M || r2 < MIN_DISTANCE_M {
            return Err(Error::Domain(format!(
                "scatterer at {:?} coincides with an endpoint",
                s.position
            )));
        }
        let pattern = if conical {
            scatterer_elevation(source, &s.position, r1)
        } else {
            1.0
        };
        acc += s.gain * Complex64::from_polar(pattern / (r1 * r2), -wavenumber * (r1 + r2));
    }
    Ok(acc * config.eta())
}

pub fn nlos_channel(
    config: &ScenarioConfig,
    scatterers: &[Scatterer],
    slot: &Point3,
    user: &Point3,
) -> Result<Complex64> {
    scattered_sum(config, scatterers, slot, user, true)
}

/// Full `K x N` matrix `h_{k,n} = h_k (h_los + h_nlos)`.
pub fn composite_channel(instance: &ScenarioInstance) -> Result<ChannelMatrix> {
    let config = instance.config();
    let slots = (1..=config.num_slots)
        .map(|k| Ok((guided_channel(config, k)?, slot_position(config, k)?)))
        .collect::<Result<Vec<_>>>()?;
    let columns = instance
        .users()
        .iter()
        .map(|user| {
            slots
                .iter()
                .map(|(guided, slot)| {
                    let los = los_channel(config, slot, user)?;
                    let nlos = nlos_channel(config, instance.scatterers(), slot, user)?;
                    Ok(guided * (los + nlos))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelMatrix::from_columns(columns)
}

/// Element `m` (0-based) of the half-wavelength array anchored at the feed.
pub fn fixed_element_position(config: &ScenarioConfig, m: usize) -> Point3 {
    let feed = feed_position(config);
    Point3::new(feed.x + m as f64 * config.wavelength_m() / 2.0, feed.y, feed.z)
}

/// Channel of a `K`-element isotropic uniform linear array along x.
pub fn fixed_antenna_channel(instance: &ScenarioInstance) -> Result<ChannelMatrix> {
    let config = instance.config();
    let eta = config.eta();
    let wavenumber = config.wavenumber();
    let elements = (0..config.num_slots)
        .map(|m| fixed_element_position(config, m))
        .collect::<Vec<_>>();
    let columns = instance
        .users()
        .iter()
        .map(|user| {
            elements
                .iter()
                .map(|el| {
                    let r = el.distance(user);
                    if r < MIN_DISTANCE_M {
                        return Err(Error::Domain("user coincides with array element".into()));
                    }
                    let los = Complex64::from_polar(eta / r, -wavenumber * r);
                    let nlos = scattered_sum(config, instance.scatterers(), el, user, false)?;
                    Ok(los + nlos)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelMatrix::from_columns(columns)
}
