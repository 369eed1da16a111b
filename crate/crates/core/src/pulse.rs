//! Closed laser-parameter loops and the fields they generate.
//!
//! Along the loop the intensity and wavelength follow
//! `I = I_max sin(φ/2)`, `λ = λ0 ± δλ sin φ` with `φ = 2πt/T`. The field is
//! `E(t) = E0(t) cos(ω(t)·t)`; the frequency seen by the adiabatic Floquet
//! picture is `ω_eff = d(ω t)/dt`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// A time-dependent electric field on `[0, duration]`.
pub trait Field: Sync {
    fn value(&self, t: f64) -> f64;
    fn duration(&self) -> f64;
}

/// Field of fixed amplitude, used by the analytic checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    pub amplitude: f64,
    pub duration: f64,
}

impl Field for ConstantField {
    fn value(&self, _t: f64) -> f64 {
        self.amplitude
    }

    fn duration(&self) -> f64 {
        self.duration
    }
}

/// Sense in which the loop is traversed in the (I, λ) plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Clockwise,
    Counterclockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseContour {
    /// Peak intensity, W·cm⁻².
    pub i_max: f64,
    /// Central wavelength, nm.
    pub lambda0: f64,
    /// Wavelength excursion, nm.
    pub delta_lambda: f64,
    /// Total duration, a.u.
    pub t_tot: f64,
    pub orientation: Orientation,
}

/// Instantaneous laser parameters at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSample {
    pub t: f64,
    pub intensity: f64,
    pub wavelength: f64,
    pub amplitude: f64,
    pub omega: f64,
    pub omega_eff: f64,
}

impl PulseContour {
    pub fn new(i_max: f64, lambda0: f64, delta_lambda: f64, t_tot: f64) -> Result<Self> {
        let c = Self {
            i_max,
            lambda0,
            delta_lambda,
            t_tot,
            orientation: Orientation::Clockwise,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_max >= 0.0) || !self.i_max.is_finite() {
            return Err(Error::config("contour.i_max", "must be finite and >= 0"));
        }
        if !(self.t_tot > 0.0) || !self.t_tot.is_finite() {
            return Err(Error::config("contour.t_tot", "must be finite and > 0"));
        }
        if !(self.delta_lambda >= 0.0) {
            return Err(Error::config("contour.delta_lambda", "must be >= 0"));
        }
        if !(self.lambda0 > self.delta_lambda) {
            return Err(Error::config(
                "contour.lambda0",
                "must exceed delta_lambda so the wavelength stays positive",
            ));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_tot).contains(&t) {
            return Err(Error::Domain {
                quantity: "time",
                value: t,
                reason: "outside [0, t_tot]",
            });
        }
        Ok(())
    }

    fn signed_delta(&self) -> f64 {
        match self.orientation {
            Orientation::Clockwise => self.delta_lambda,
            Orientation::Counterclockwise => -self.delta_lambda,
        }
    }

    fn phase(&self, t: f64) -> f64 {
        2.0 * PI * t / self.t_tot
    }

    fn intensity_unchecked(&self, t: f64) -> f64 {
        // sin(φ/2) is non-negative on [0, 2π]; clamp the rounding at the ends.
        (self.i_max * (0.5 * self.phase(t)).sin()).max(0.0)
    }

    fn wavelength_unchecked(&self, t: f64) -> f64 {
        self.lambda0 + self.signed_delta() * self.phase(t).sin()
    }

    fn omega_unchecked(&self, t: f64) -> f64 {
        units::WAVELENGTH_ENERGY_NM / self.wavelength_unchecked(t)
    }

    /// `(I, λ)` at time `t`.
    pub fn contour_point(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        if t == self.t_tot {
            return Ok((0.0, self.lambda0));
        }
        Ok((self.intensity_unchecked(t), self.wavelength_unchecked(t)))
    }

    pub fn omega(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.omega_unchecked(t))
    }

    /// `dω/dt` by the chain rule through `λ(t)`.
    pub fn omega_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let lambda = self.wavelength_unchecked(t);
        let dlambda = self.signed_delta() * self.phase(t).cos() * 2.0 * PI / self.t_tot;
        Ok(-units::WAVELENGTH_ENERGY_NM / (lambda * lambda) * dlambda)
    }

    pub fn omega_eff(&self, t: f64) -> Result<f64> {
        Ok(self.omega(t)? + t * self.omega_rate(t)?)
    }

    /// Field envelope `E0(t)`.
    pub fn amplitude(&self, t: f64) -> Result<f64> {
        let (i, _) = self.contour_point(t)?;
        units::intensity_to_field(i)
    }

    pub fn field_at(&self, t: f64) -> Result<f64> {
        let e0 = self.amplitude(t)?;
        Ok(e0 * (self.omega_unchecked(t) * t).cos())
    }

    pub fn sample(&self, t: f64) -> Result<ContourSample> {
        let (intensity, wavelength) = self.contour_point(t)?;
        Ok(ContourSample {
            t,
            intensity,
            wavelength,
            amplitude: units::intensity_to_field(intensity)?,
            omega: self.omega(t)?,
            omega_eff: self.omega_eff(t)?,
        })
    }

    /// Evenly spaced samples including both ends.
    pub fn samples(&self, count: usize) -> Result<Vec<ContourSample>> {
        let count = count.max(2);
        (0..count)
            .map(|k| {
                let t = if k + 1 == count {
                    self.t_tot
                } else {
                    self.t_tot * k as f64 / (count - 1) as f64
                };
                self.sample(t)
            })
            .collect()
    }

    /// Shoelace area of the sampled loop in the (I, λ) plane; negative when clockwise.
    pub fn signed_area(&self, count: usize) -> Result<f64> {
        let pts = self.samples(count)?;
        Ok(0.5
            * pts
                .windows(2)
                .map(|w| w[0].intensity * w[1].wavelength - w[1].intensity * w[0].wavelength)
                .sum::<f64>())
    }

    pub fn write_csv(&self, count: usize, mut out: impl Write) -> Result<()> {
        let io = |e| Error::io("contour csv", e);
        writeln!(out, "t,intensity,wavelength,amplitude,omega,omega_eff").map_err(io)?;
        for s in self.samples(count)? {
            writeln!(
                out,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                s.t, s.intensity, s.wavelength, s.amplitude, s.omega, s.omega_eff
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

impl Field for PulseContour {
    fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_tot);
        if t == self.t_tot {
            return 0.0;
        }
        let e0 = (self.intensity_unchecked(t) / units::AU_INTENSITY_W_CM2).sqrt();
        e0 * (self.omega_unchecked(t) * t).cos()
    }

    fn duration(&self) -> f64 {
        self.t_tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run_d() -> PulseContour {
        PulseContour::new(0.5e13, 420.0, 30.0, 2315.0).unwrap()
    }

    #[test]
    fn contour_points() {
        let c = run_d();
        assert_eq!(c.contour_point(0.0).unwrap(), (0.0, 420.0));
        let (i, l) = c.contour_point(c.t_tot / 4.0).unwrap();
        assert!((i - 0.5e13 * (PI / 4.0).sin()).abs() < 1.0);
        assert!((l - 450.0).abs() < 1e-12);
        let (i, l) = c.contour_point(c.t_tot / 2.0).unwrap();
        assert!((i - 0.5e13).abs() < 1e-3);
        assert!((l - 420.0).abs() < 1e-12);
        assert_eq!(c.contour_point(c.t_tot).unwrap(), c.contour_point(0.0).unwrap());
        assert!(c.contour_point(-1.0).is_err());
        assert!(c.contour_point(c.t_tot + 1.0).is_err());
    }

    #[test]
    fn effective_frequency() {
        let flat = PulseContour::new(0.5e13, 420.0, 0.0, 2315.0).unwrap();
        let w0 = units::wavelength_to_omega(420.0).unwrap();
        for t in [0.0, 300.0, 1500.0, 2315.0] {
            assert!((flat.omega_eff(t).unwrap() - w0).abs() < 1e-15);
        }
        let c = run_d();
        assert_eq!(c.omega_eff(0.0).unwrap(), w0);
        // centred difference of ω(t)·t with step 1e-3 a.u.
        let h = 1e-3;
        for t in [1.0, 400.0, 1157.5, 2000.0, 2314.0] {
            let phase = |s: f64| c.omega(s).unwrap() * s;
            let fd = (phase(t + h) - phase(t - h)) / (2.0 * h);
            let exact = c.omega_eff(t).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6, "t={t}: {fd} vs {exact}");
        }
    }

    #[test]
    fn field_values() {
        let c = run_d();
        assert_eq!(c.field_at(0.0).unwrap(), 0.0);
        assert_eq!(c.field_at(c.t_tot).unwrap(), 0.0);
        assert_eq!(c.value(c.t_tot), 0.0);
        let peak = units::intensity_to_field(0.5e13).unwrap();
        assert!((c.amplitude(c.t_tot / 2.0).unwrap() - peak).abs() < 1e-15);
        for k in 0..=5000 {
            let t = c.t_tot * k as f64 / 5000.0;
            assert!(c.field_at(t).unwrap().abs() <= peak * (1.0 + 1e-14));
        }
    }

    #[test]
    fn orientation_sign() {
        let c = run_d();
        assert!(c.signed_area(2001).unwrap() < 0.0);
        let ccw = c.with_orientation(Orientation::Counterclockwise);
        assert!(ccw.signed_area(2001).unwrap() > 0.0);
    }

    #[test]
    fn phase_is_c1() {
        // ω(t)·t sampled densely: successive slopes never jump.
        let c = run_d();
        let n = 20000;
        let dt = c.t_tot / n as f64;
        let phase: Vec<f64> = (0..=n).map(|k| c.omega_unchecked(k as f64 * dt) * k as f64 * dt).collect();
        let slopes: Vec<f64> = phase.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        let max_jump = slopes.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(max_jump < 1e-4, "{max_jump}");
    }

    #[test]
    fn invalid_contours() {
        assert!(PulseContour::new(-1.0, 420.0, 30.0, 10.0).is_err());
        assert!(PulseContour::new(1.0, 20.0, 30.0, 10.0).is_err());
        assert!(PulseContour::new(1.0, 420.0, 30.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn intensity_non_negative(frac in 0.0f64..=1.0, i_max in 0.0f64..1e14) {
            let c = PulseContour::new(i_max, 500.0, 40.0, 1234.5).unwrap();
            let (i, l) = c.contour_point(frac * c.t_tot).unwrap();
            prop_assert!(i >= 0.0 && i <= i_max);
            prop_assert!(l >= 460.0 - 1e-9 && l <= 540.0 + 1e-9);
        }
    }
}
