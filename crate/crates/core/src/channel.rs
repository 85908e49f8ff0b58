//! Per-frame Rician channel synthesis.
//!
//! Line-of-sight components use planar-wave array responses at the centre
//! angles of each link; scattered components are i.i.d. CN(0, 1) draws. Each
//! realization carries the BS-to-surface matrix `g` (`M x L`), one column
//! vector per passenger for the surface-to-passenger link (`v[i]`, so that a
//! passenger hears `v[i]^H diag(theta) g f`), and the no-surface reference
//! channels `direct[i]` (heard as `direct[i]^H f`).

use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::error::{invalid_config, invalid_input, Result};
use crate::numerics::{cis, db_to_linear, ComplexMatrix, RngStream, C64};
use crate::scenario::{
    angles, distance_bs_irs, draw_user, irs_position, DirectModel, FrameSchedule, Point3, ScenarioConfig,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-wavelength antenna arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayGeometry {
    /// Linear array along the rail (`y`) axis.
    Ula { elements: usize },
    /// Square planar array in the `yz` plane; element `m` sits at column
    /// `m / side` along `y` and row `m % side` along `z`.
    Upa { side: usize },
}

impl ArrayGeometry {
    /// Square planar array with `elements` entries.
    pub fn upa(elements: usize) -> Result<Self> {
        let side = (elements as f64).sqrt().round() as usize;
        if side == 0 || side * side != elements {
            return Err(invalid_config(format!(
                "a square planar array needs a perfect-square element count, got {elements}"
            )));
        }
        Ok(Self::Upa { side })
    }

    pub fn len(&self) -> usize {
        match *self {
            Self::Ula { elements } => elements,
            Self::Upa { side } => side * side,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Array response toward `(azimuth, elevation)`.
///
/// With the direction cosines `u_y = cos(el) sin(az)` and `u_z = sin(el)`, the
/// entry of an element at half-wavelength offsets `(n_y, n_z)` is
/// `exp(j pi (n_y u_y + n_z u_z))`. The reference element (index 0) is 1.
pub fn steering(azimuth: f64, elevation: f64, array: ArrayGeometry) -> Vec<C64> {
    let uy = elevation.cos() * azimuth.sin();
    let uz = elevation.sin();
    match array {
        ArrayGeometry::Ula { elements } => (0..elements).map(|l| cis(PI * l as f64 * uy)).collect(),
        ArrayGeometry::Upa { side } => (0..side * side)
            .map(|m| cis(PI * ((m / side) as f64 * uy + (m % side) as f64 * uz)))
            .collect(),
    }
}

/// Large-scale amplitude `sqrt(h0 * d^-beta)` with `h0` in dB.
pub fn pathloss_amplitude(ref_loss_db: f64, distance: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(invalid_input(format!("path length must be positive, got {distance}")));
    }
    Ok((db_to_linear(ref_loss_db) * distance.powf(-exponent)).sqrt())
}

/// Weights `(los, nlos)` of a Rician mix with K-factor in dB.
pub fn rician_weights(kf_db: f64) -> (f64, f64) {
    let kappa = db_to_linear(kf_db);
    ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
}

/// `sqrt(k/(k+1)) los + sqrt(1/(k+1)) nlos`, `k = 10^(kf/10)`.
///
/// `nlos` is mixed as given: callers that want both terms to share the
/// large-scale amplitude scale it beforehand.
pub fn rician_mix(los: &ComplexMatrix, nlos: &ComplexMatrix, kf_db: f64) -> Result<ComplexMatrix> {
    if (los.rows(), los.cols()) != (nlos.rows(), nlos.cols()) {
        return Err(invalid_input(format!(
            "cannot mix a {}x{} LoS term with a {}x{} scattered term",
            los.rows(),
            los.cols(),
            nlos.rows(),
            nlos.cols()
        )));
    }
    let data = mix_slices(los.as_slice(), nlos.as_slice(), kf_db);
    ComplexMatrix::from_vec(los.rows(), los.cols(), data)
}

fn mix_slices(los: &[C64], nlos: &[C64], kf_db: f64) -> Vec<C64> {
    let (a, b) = rician_weights(kf_db);
    los.iter().zip(nlos).map(|(x, y)| x * a + y * b).collect()
}

/// Angles and Doppler shift of the BS-to-surface line-of-sight path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    /// Azimuth and elevation at the surface, pointing back at the base station.
    pub arrival: (f64, f64),
    /// Azimuth and elevation at the base station, pointing at the surface.
    pub departure: (f64, f64),
    /// Doppler shift in Hz; zero unless enabled.
    pub doppler: f64,
}

pub fn bs_irs_geometry(cfg: &ScenarioConfig, irs: Point3) -> Result<LosGeometry> {
    let arrival = angles(irs, cfg.bs_position)?;
    let departure = angles(cfg.bs_position, irs)?;
    let doppler = if cfg.doppler_enabled {
        // The train moves along +y; the shift follows the projection of the
        // velocity onto the direction of the transmitter.
        let toward_bs = cfg.bs_position - irs;
        cfg.speed_mps() * cfg.carrier_freq / SPEED_OF_LIGHT * toward_bs.y / toward_bs.norm()
    } else {
        0.0
    };
    Ok(LosGeometry {
        arrival,
        departure,
        doppler,
    })
}

/// Deterministic BS-to-surface component at frame `k`, `M x L`.
pub fn los_bs_irs(cfg: &ScenarioConfig, sched: &FrameSchedule, k: usize) -> Result<ComplexMatrix> {
    let irs = irs_position(sched, cfg, k)?;
    let geo = bs_irs_geometry(cfg, irs)?;
    let amp = pathloss_amplitude(cfg.ref_loss, distance_bs_irs(sched, cfg, k)?, cfg.pathloss_exp_bs_irs)?;
    los_matrix(cfg, &geo, amp)
}

fn los_matrix(cfg: &ScenarioConfig, geo: &LosGeometry, amp: f64) -> Result<ComplexMatrix> {
    let at_irs = steering(geo.arrival.0, geo.arrival.1, ArrayGeometry::upa(cfg.irs_elements)?);
    let at_bs = steering(
        geo.departure.0,
        geo.departure.1,
        ArrayGeometry::Ula {
            elements: cfg.bs_antennas,
        },
    );
    let doppler = cis(TAU * geo.doppler * cfg.frame_duration);
    Ok(ComplexMatrix::from_fn(at_irs.len(), at_bs.len(), |m, l| {
        at_irs[m] * at_bs[l] * doppler * amp
    }))
}

/// Deterministic surface-to-passenger component (column form).
pub fn los_irs_user(cfg: &ScenarioConfig, irs: Point3, user: Point3) -> Result<Vec<C64>> {
    let (az, el) = angles(irs, user)?;
    let amp = pathloss_amplitude(cfg.ref_loss, irs.distance(user), cfg.pathloss_exp_irs_user)?;
    Ok(steering(az, el, ArrayGeometry::upa(cfg.irs_elements)?)
        .into_iter()
        .map(|a| a.conj() * amp)
        .collect())
}

/// Deterministic BS-to-passenger component for the Rician reference model.
fn los_bs_user(cfg: &ScenarioConfig, user: Point3) -> Result<(Vec<C64>, f64)> {
    let (az, el) = angles(cfg.bs_position, user)?;
    let amp = pathloss_amplitude(cfg.ref_loss, cfg.bs_position.distance(user), cfg.pathloss_exp_bs_irs)?;
    let a = steering(
        az,
        el,
        ArrayGeometry::Ula {
            elements: cfg.bs_antennas,
        },
    );
    Ok((a.into_iter().map(|z| z.conj() * amp).collect(), amp))
}

/// One frame of channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub frame: usize,
    /// BS-to-surface matrix, `M x L`.
    pub g: ComplexMatrix,
    /// Surface-to-passenger vectors, one length-`M` column per passenger.
    pub v: Vec<Vec<C64>>,
    /// No-surface reference channels, one length-`L` column per passenger.
    pub direct: Vec<Vec<C64>>,
    /// Noise power in watts.
    pub noise_var: f64,
    pub irs_position: Point3,
    pub user_positions: Vec<Point3>,
}

impl ChannelRealization {
    pub fn irs_elements(&self) -> usize {
        self.g.rows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.g.cols()
    }

    pub fn users(&self) -> usize {
        self.v.len()
    }

    pub fn all_finite(&self) -> bool {
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        self.g.all_finite() && self.v.iter().flatten().all(finite) && self.direct.iter().flatten().all(finite)
    }

    /// Writes the realization as `frame,link,row,col,re,im` rows. Links are
    /// `G` (row = element, col = antenna), `v` (row = passenger, col = element)
    /// and `direct` (row = passenger, col = antenna).
    pub fn write_dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "frame,link,row,col,re,im")?;
        for r in 0..self.g.rows() {
            for (c, z) in self.g.row(r).iter().enumerate() {
                writeln!(out, "{},G,{r},{c},{:e},{:e}", self.frame, z.re, z.im)?;
            }
        }
        for (link, rows) in [("v", &self.v), ("direct", &self.direct)] {
            for (r, row) in rows.iter().enumerate() {
                for (c, z) in row.iter().enumerate() {
                    writeln!(out, "{},{link},{r},{c},{:e},{:e}", self.frame, z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Draws the channel state of served frame `k`.
///
/// Random draws happen in a fixed order (scattered BS-to-surface matrix, then
/// per passenger: seat, surface-to-passenger scatter, direct-link scatter), so
/// a given stream always yields the same realization whatever is enabled.
pub fn synthesize_frame(
    cfg: &ScenarioConfig,
    sched: &FrameSchedule,
    k: usize,
    rng: &mut RngStream,
) -> Result<ChannelRealization> {
    if !sched.is_served(k) {
        return Err(invalid_input(format!(
            "frame {k} outside the served window {:?}",
            sched.served_frames()
        )));
    }
    let m = cfg.irs_elements;
    let l = cfg.bs_antennas;
    let irs = irs_position(sched, cfg, k)?;
    let geo = bs_irs_geometry(cfg, irs)?;
    let amp_g = pathloss_amplitude(cfg.ref_loss, distance_bs_irs(sched, cfg, k)?, cfg.pathloss_exp_bs_irs)?;
    let scatter = |amp: f64| if cfg.nlos_pathloss_scaled { amp } else { 1.0 };

    let los_g = los_matrix(cfg, &geo, amp_g)?;
    let nlos_g = rng.sample_cn01(m, l).scale(scatter(amp_g));
    let g = rician_mix(&los_g, &nlos_g, cfg.rician_kf)?;

    let penetration = db_to_linear(-cfg.penetration_loss).sqrt();
    let mut user_positions = Vec::with_capacity(cfg.users_per_cluster);
    let mut v = Vec::with_capacity(cfg.users_per_cluster);
    let mut direct = Vec::with_capacity(cfg.users_per_cluster);
    for _ in 0..cfg.users_per_cluster {
        let user = draw_user(cfg, irs, rng);
        let los_v = los_irs_user(cfg, irs, user)?;
        let amp_v = los_v[0].norm();
        let nlos_v: Vec<C64> = rng.cn01_vec(m).into_iter().map(|z| z * scatter(amp_v)).collect();
        let nlos_d = rng.cn01_vec(l);
        let v_i = mix_slices(&los_v, &nlos_v, cfg.rician_kf);
        let h = match cfg.direct_model {
            DirectModel::Window => g.adjoint_mul_vec(&v_i),
            DirectModel::Rician => {
                let (los_d, amp_d) = los_bs_user(cfg, user)?;
                let nlos_d: Vec<C64> = nlos_d.into_iter().map(|z| z * scatter(amp_d)).collect();
                mix_slices(&los_d, &nlos_d, cfg.rician_kf)
            }
        };
        user_positions.push(user);
        v.push(v_i);
        direct.push(h.into_iter().map(|z| z * penetration).collect());
    }

    Ok(ChannelRealization {
        frame: k,
        g,
        v,
        direct,
        noise_var: cfg.noise_watts(),
        irs_position: irs,
        user_positions,
    })
}
