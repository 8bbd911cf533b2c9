//! Air-to-ground link model: geometry, elevation-dependent LoS probability,
//! mean path loss and received SNR.
//!
//! All functions are pure. Elevation angles are in degrees because the
//! logistic LoS parameters are fitted on a degree scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distances below this are clamped when computing SNR.
pub const NEAR_FIELD_CLAMP_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
    /// Antenna height above ground.
    pub z_m: f64,
}

impl BaseStation {
    pub fn new(id: u32, x_m: f64, y_m: f64, z_m: f64) -> Self {
        Self { id, x_m, y_m, z_m }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x_m, self.y_m, self.z_m]
    }

    pub fn ground(&self) -> [f64; 2] {
        [self.x_m, self.y_m]
    }
}

/// Channel parameters. Excess loss factors are stored on a linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub fc_hz: f64,
    pub c_mps: f64,
    pub a_logistic: f64,
    pub b_logistic: f64,
    pub eta_los: f64,
    pub eta_nlos: f64,
    pub tx_power_w: f64,
    pub rx_gain: f64,
    pub noise_w: f64,
}

impl Default for ChannelParams {
    /// 3.3 GHz urban macro setting with 0.09 W transmit power.
    fn default() -> Self {
        Self {
            fc_hz: 3.3e9,
            c_mps: SPEED_OF_LIGHT,
            a_logistic: 12.08,
            b_logistic: 0.11,
            eta_los: db_to_linear(3.0),
            eta_nlos: db_to_linear(25.0),
            tx_power_w: 0.09,
            rx_gain: 1.0,
            noise_w: 7.21e-16,
        }
    }
}

impl ChannelParams {
    pub fn eta_los_db(&self) -> f64 {
        linear_to_db(self.eta_los)
    }

    pub fn eta_nlos_db(&self) -> f64 {
        linear_to_db(self.eta_nlos)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("fc_hz", self.fc_hz),
            ("c_mps", self.c_mps),
            ("a", self.a_logistic),
            ("b", self.b_logistic),
            ("eta_los", self.eta_los),
            ("eta_nlos", self.eta_nlos),
            ("tx_power_w", self.tx_power_w),
            ("rx_gain", self.rx_gain),
            ("noise_w", self.noise_w),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "channel parameter {name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.eta_nlos < self.eta_los {
            return Err(Error::InvalidInput(
                "eta_nlos must be at least eta_los".into(),
            ));
        }
        Ok(())
    }

    /// Free-space factor `(4 pi fc d / c)^2`.
    pub fn free_space_factor(&self, d_m: f64) -> f64 {
        let k = 4.0 * std::f64::consts::PI * self.fc_hz * d_m / self.c_mps;
        k * k
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub elevation_deg: f64,
}

/// 3D distance and elevation angle from the BS antenna to the UAV.
///
/// A zero horizontal offset maps to 90 degrees (UAV overhead), including the
/// coincident case.
pub fn link_geometry(uav: [f64; 3], bs: &BaseStation) -> LinkGeometry {
    let dx = uav[0] - bs.x_m;
    let dy = uav[1] - bs.y_m;
    let dz = uav[2] - bs.z_m;
    let horizontal = dx.hypot(dy);
    let distance_m = horizontal.hypot(dz);
    let elevation_deg = if horizontal == 0.0 {
        if dz >= 0.0 {
            90.0
        } else {
            -90.0
        }
    } else {
        (dz / horizontal).atan().to_degrees()
    };
    LinkGeometry {
        distance_m,
        elevation_deg,
    }
}

/// Logistic LoS probability `1 / (1 + a exp(-b (theta - a)))`.
pub fn los_probability(theta_deg: f64, params: &ChannelParams) -> f64 {
    let a = params.a_logistic;
    let b = params.b_logistic;
    1.0 / (1.0 + a * (-b * (theta_deg - a)).exp())
}

fn path_loss_at(geom: LinkGeometry, params: &ChannelParams) -> f64 {
    let p = los_probability(geom.elevation_deg, params);
    let fs = params.free_space_factor(geom.distance_m);
    p * fs * params.eta_los + (1.0 - p) * fs * params.eta_nlos
}

/// LoS-probability-weighted mean path loss (linear).
pub fn mean_path_loss(uav: [f64; 3], bs: &BaseStation, params: &ChannelParams) -> f64 {
    path_loss_at(link_geometry(uav, bs), params)
}

/// Received SNR (linear) from `bs` at `uav`.
pub fn snr(uav: [f64; 3], bs: &BaseStation, params: &ChannelParams) -> f64 {
    let mut geom = link_geometry(uav, bs);
    geom.distance_m = geom.distance_m.max(NEAR_FIELD_CLAMP_M);
    let loss = path_loss_at(geom, params);
    params.rx_gain * params.tx_power_w / (loss * params.noise_w)
}

/// SNR at horizontal distance `r` from a BS of antenna height `bs_height`,
/// for a UAV flying at `altitude`.
pub fn snr_at_radius(r_m: f64, altitude_m: f64, bs_height_m: f64, params: &ChannelParams) -> f64 {
    let bs = BaseStation::new(0, 0.0, 0.0, bs_height_m);
    snr([r_m, 0.0, altitude_m], &bs, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vertical_and_horizontal_links() {
        let g = link_geometry([0.0, 0.0, 300.0], &BaseStation::new(1, 0.0, 0.0, 100.0));
        assert_eq!(g.distance_m, 200.0);
        assert_eq!(g.elevation_deg, 90.0);

        let g = link_geometry([100.0, 0.0, 300.0], &BaseStation::new(1, 0.0, 0.0, 300.0));
        assert_eq!(g.distance_m, 100.0);
        assert_eq!(g.elevation_deg, 0.0);

        let g = link_geometry([3.0, 4.0, 300.0], &BaseStation::new(1, 0.0, 0.0, 300.0));
        assert_relative_eq!(g.distance_m, 5.0, max_relative = 1e-15);
    }

    #[test]
    fn coincident_points() {
        let g = link_geometry([1.0, 2.0, 3.0], &BaseStation::new(1, 1.0, 2.0, 3.0));
        assert_eq!(g.distance_m, 0.0);
        assert_eq!(g.elevation_deg, 90.0);
    }

    #[test]
    fn los_probability_values() {
        let p = ChannelParams::default();
        assert_relative_eq!(los_probability(12.08, &p), 1.0 / 13.08, max_relative = 1e-14);
        assert_relative_eq!(los_probability(90.0, &p), 0.997716247081094, max_relative = 1e-12);
        let mut prev = 0.0;
        for i in 0..=900 {
            let q = los_probability(i as f64 * 0.1, &p);
            assert!(q > prev && q < 1.0);
            prev = q;
        }
    }

    #[test]
    fn unit_free_space_distance() {
        let p = ChannelParams::default();
        let d = p.c_mps / (4.0 * std::f64::consts::PI * p.fc_hz);
        let bs = BaseStation::new(1, 0.0, 0.0, 0.0);
        let loss = mean_path_loss([0.0, 0.0, d], &bs, &p);
        let q = 0.997716247081094;
        let expected = q * 10f64.powf(0.3) + (1.0 - q) * 10f64.powf(2.5);
        assert_relative_eq!(loss, expected, max_relative = 1e-12);
    }

    #[test]
    fn equal_excess_losses_remove_angle_dependence() {
        let mut p = ChannelParams::default();
        p.eta_los = 7.0;
        p.eta_nlos = 7.0;
        let bs = BaseStation::new(1, 0.0, 0.0, 0.0);
        for uav in [[0.0, 0.0, 500.0], [500.0, 0.0, 0.0], [300.0, 400.0, 0.0]] {
            let loss = mean_path_loss(uav, &bs, &p);
            assert_relative_eq!(loss, 7.0 * p.free_space_factor(500.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn path_loss_increases_with_horizontal_distance() {
        let p = ChannelParams::default();
        let bs = BaseStation::new(1, 0.0, 0.0, 100.0);
        let mut prev = mean_path_loss([0.0, 0.0, 300.0], &bs, &p);
        for i in 1..=100_000 {
            let r = i as f64 * 0.1;
            let loss = mean_path_loss([r, 0.0, 300.0], &bs, &p);
            assert!(loss > prev, "not increasing at r = {r}");
            prev = loss;
        }
    }

    #[test]
    fn path_loss_between_los_and_nlos_bounds() {
        let p = ChannelParams::default();
        let bs = BaseStation::new(1, 10.0, -20.0, 35.0);
        for i in 0..200 {
            let uav = [i as f64 * 37.0, i as f64 * -11.0, 300.0];
            let g = link_geometry(uav, &bs);
            let fs = p.free_space_factor(g.distance_m);
            let loss = mean_path_loss(uav, &bs, &p);
            assert!(loss >= fs * p.eta_los * (1.0 - 1e-14));
            assert!(loss <= fs * p.eta_nlos * (1.0 + 1e-14));
        }
    }

    #[test]
    fn snr_substitution_and_scaling() {
        let p = ChannelParams::default();
        // unit path loss
        assert_relative_eq!(p.rx_gain * p.tx_power_w / p.noise_w, 1.248266e14, max_relative = 1e-6);

        let bs = BaseStation::new(1, 0.0, 0.0, 100.0);
        let uav = [0.0, 0.0, 300.0];
        // independent recomputation
        let d: f64 = 200.0;
        let theta: f64 = 90.0;
        let plos = 1.0 / (1.0 + 12.08 * (-0.11 * (theta - 12.08)).exp());
        let fs = (4.0 * std::f64::consts::PI * 3.3e9 * d / 299_792_458.0).powi(2);
        let loss = plos * fs * 10f64.powf(0.3) + (1.0 - plos) * fs * 10f64.powf(2.5);
        let expected = 0.09 / (loss * 7.21e-16);
        assert_relative_eq!(snr(uav, &bs, &p), expected, max_relative = 1e-12);

        let mut doubled = p;
        doubled.noise_w *= 2.0;
        assert_relative_eq!(snr(uav, &bs, &doubled), 0.5 * expected, max_relative = 1e-14);
    }

    #[test]
    fn snr_near_field_clamp() {
        let p = ChannelParams::default();
        let bs = BaseStation::new(1, 0.0, 0.0, 100.0);
        let at_bs = snr([0.0, 0.0, 100.0], &bs, &p);
        let at_one = snr([0.0, 0.0, 101.0], &bs, &p);
        assert!(at_bs.is_finite());
        assert_relative_eq!(at_bs, at_one, max_relative = 1e-14);
    }

    #[test]
    fn rejects_nonpositive_params() {
        let mut p = ChannelParams::default();
        assert!(p.validate().is_ok());
        p.noise_w = 0.0;
        assert!(p.validate().is_err());
        let mut p = ChannelParams::default();
        p.eta_nlos = 1.0;
        assert!(p.validate().is_err());
    }
}
