//! Antenna geometries and array responses for the full-dimensional lens
//! array and the half-wavelength uniform planar array (UPA).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{sinc, tolerant_floor};

/// How azimuth endpoints of each elevation row are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LensConvention {
    /// Index ranges taken verbatim: `-n_minus ..= n_plus` per row.
    Inclusive,
    /// Positive azimuth endpoint dropped: `-n_minus ..= n_plus - 1` per row.
    #[default]
    Trimmed,
}

/// Elevation/azimuth index pair of one lens element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LensElement {
    pub q_e: i32,
    pub q_a: i32,
}

/// Common interface for the two array types used by the channel model.
pub trait ArrayGeometry: Send + Sync {
    fn num_elements(&self) -> usize;

    /// Response of element `index` to a plane wave from `(theta, phi)`.
    fn element_response(&self, index: usize, theta: f64, phi: f64) -> Complex64;

    /// Full response vector.
    fn response(&self, theta: f64, phi: f64) -> Vec<Complex64> {
        (0..self.num_elements()).map(|q| self.element_response(q, theta, phi)).collect()
    }
}

/// Lens antenna array on the focal surface of a `d_y x d_z` EM lens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensGeometry {
    pub d_y: f64,
    pub d_z: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub convention: LensConvention,
    elements: Vec<LensElement>,
}

/// Enumerates the lens elements row-major by `q_e`, then `q_a`.
pub fn enumerate_lens_elements(
    d_y: f64,
    d_z: f64,
    theta_minus: f64,
    theta_plus: f64,
    phi_minus: f64,
    phi_plus: f64,
    convention: LensConvention,
) -> LensGeometry {
    let e_lo = -tolerant_floor(d_z * theta_minus.sin());
    let e_hi = tolerant_floor(d_z * theta_plus.sin());
    let mut elements = Vec::new();
    for q_e in e_lo..=e_hi {
        let sin_t = q_e as f64 / d_z;
        let cos_t = (1.0 - sin_t * sin_t).max(0.0).sqrt();
        let n_minus = tolerant_floor(d_y * cos_t * phi_minus.sin());
        let n_plus = tolerant_floor(d_y * cos_t * phi_plus.sin());
        let a_hi = match convention {
            LensConvention::Inclusive => n_plus,
            LensConvention::Trimmed => n_plus - 1,
        };
        for q_a in -n_minus..=a_hi {
            elements.push(LensElement { q_e: q_e as i32, q_a: q_a as i32 });
        }
    }
    LensGeometry { d_y, d_z, theta_minus, theta_plus, phi_minus, phi_plus, convention, elements }
}

impl LensGeometry {
    pub fn elements(&self) -> &[LensElement] {
        &self.elements
    }

    /// Amplitude response of a single element.
    pub fn amplitude(&self, element: LensElement, theta: f64, phi: f64) -> f64 {
        (self.d_z * self.d_y).sqrt()
            * sinc(element.q_e as f64 - self.d_z * theta.sin())
            * sinc(element.q_a as f64 - self.d_y * theta.cos() * phi.sin())
    }

    /// Elevation and azimuth angles the element is focused on.
    pub fn element_angles(&self, element: LensElement) -> (f64, f64) {
        let theta = (element.q_e as f64 / self.d_z).clamp(-1.0, 1.0).asin();
        let denom = self.d_y * theta.cos();
        let phi = if denom > 0.0 { (element.q_a as f64 / denom).clamp(-1.0, 1.0).asin() } else { 0.0 };
        (theta, phi)
    }
}

/// Real-valued lens response over all elements.
pub fn lens_response(geom: &LensGeometry, theta: f64, phi: f64) -> Vec<f64> {
    geom.elements.iter().map(|&e| geom.amplitude(e, theta, phi)).collect()
}

impl ArrayGeometry for LensGeometry {
    fn num_elements(&self) -> usize {
        self.elements.len()
    }

    fn element_response(&self, index: usize, theta: f64, phi: f64) -> Complex64 {
        Complex64::new(self.amplitude(self.elements[index], theta, phi), 0.0)
    }
}

/// Half-wavelength uniform planar array in the y-z plane. Element `q` sits
/// at `(m_z, m_y) = (q / q_y, q % q_y)`, matching `a_z (x) a_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpaGeometry {
    pub d_y: f64,
    pub d_z: f64,
    pub q_y: usize,
    pub q_z: usize,
}

impl UpaGeometry {
    pub fn new(d_y: f64, d_z: f64) -> Self {
        Self {
            d_y,
            d_z,
            q_y: tolerant_floor(2.0 * d_y).max(0) as usize,
            q_z: tolerant_floor(2.0 * d_z).max(0) as usize,
        }
    }
}

/// UPA response `a_z(theta) (x) a_y(theta, phi)`.
pub fn upa_response(geom: &UpaGeometry, theta: f64, phi: f64) -> Vec<Complex64> {
    let amp_z = (geom.d_z / geom.q_z as f64).sqrt();
    let amp_y = (geom.d_y / geom.q_y as f64).sqrt();
    let a_z: Vec<Complex64> =
        (0..geom.q_z).map(|m| Complex64::from_polar(amp_z, PI * m as f64 * theta.sin())).collect();
    let a_y: Vec<Complex64> =
        (0..geom.q_y).map(|m| Complex64::from_polar(amp_y, PI * m as f64 * theta.cos() * phi.sin())).collect();
    a_z.iter().flat_map(|z| a_y.iter().map(move |y| z * y)).collect()
}

impl ArrayGeometry for UpaGeometry {
    fn num_elements(&self) -> usize {
        self.q_y * self.q_z
    }

    fn element_response(&self, index: usize, theta: f64, phi: f64) -> Complex64 {
        let (m_z, m_y) = (index / self.q_y, index % self.q_y);
        let amp = (self.d_z / self.q_z as f64).sqrt() * (self.d_y / self.q_y as f64).sqrt();
        let phase = PI * (m_z as f64 * theta.sin() + m_y as f64 * theta.cos() * phi.sin());
        Complex64::from_polar(amp, phase)
    }

    fn response(&self, theta: f64, phi: f64) -> Vec<Complex64> {
        upa_response(self, theta, phi)
    }
}
