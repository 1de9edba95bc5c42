//! n = 1 products on the octagon surface.
//!
//! All coefficients live in the representative chart with holomorphic
//! frames. A Beltrami differential is a dzbar (x) d/dz with |.|^2 = |a|^2; a
//! section of K^k is f dz^k with |.|^2 = |f|^2 g^{-k}. A form u dzbar (x) dz^m
//! is stored as the section (u / g) dz^{m-1}, which is an isometry; the
//! bundle Laplacian of that K^{m-1} section stands in for the Laplacian on
//! (0,1)-forms. A Beltrami differential mu is stored in K^2 through the
//! antilinear isometry mu -> g conj(mu).

use super::{ProductTables, Slots, WedgeTables};
use crate::error::{Error, Result};
use crate::fiber::{assemble_laplacian, dbar_laplacian, DiscreteFiber};
use crate::ks_wp::{harmonic_beltrami, QD_DIMENSION};
use crate::linalg::C64;
use crate::spectral::{DegreeTag, Field, SpectralDecomposition};

/// Dimension of holomorphic sections of K^k on a genus-2 surface.
pub fn section_count(k: i32) -> usize {
    match k {
        0 => 1,
        1 => 2,
        k if k >= 2 => 2 * k as usize - 1,
        _ => 0,
    }
}

fn bundle_spectrum(fiber: &DiscreteFiber, k: i32) -> Result<SpectralDecomposition> {
    if k == 0 {
        return assemble_laplacian(fiber);
    }
    dbar_laplacian(fiber, k)?.spectrum(64, section_count(k))
}

#[derive(Debug, Clone)]
pub struct GeometricTables {
    pub p: usize,
    pub m: u32,
    /// Beltrami coefficients a_i.
    pub ks: Vec<Vec<C64>>,
    /// p = 1: sections f of K^{m+1}; p = 0: sections s of K^{m-1}.
    pub sections: Vec<Vec<C64>>,
    /// Kahler coefficient g at each vertex.
    pub g: Vec<f64>,
}

impl GeometricTables {
    fn weight(&self, v: usize, k: i32) -> f64 {
        self.g[v].powi(-k)
    }

    fn section_power(&self) -> i32 {
        if self.p == 1 {
            self.m as i32 + 1
        } else {
            self.m as i32 - 1
        }
    }
}

impl ProductTables for GeometricTables {
    fn n(&self) -> usize {
        1
    }
    fn p(&self) -> usize {
        self.p
    }
    fn num_ks(&self) -> usize {
        self.ks.len()
    }
    fn num_sections(&self) -> usize {
        self.sections.len()
    }
    fn ks_dot(&self, i: usize, j: usize) -> Field {
        Field::function(self.ks[i].iter().zip(&self.ks[j]).map(|(a, b)| a * b.conj()).collect())
    }
    fn section_dot(&self, k: usize, l: usize) -> Field {
        let e = self.section_power();
        Field::function(
            (0..self.g.len())
                .map(|v| self.sections[k][v] * self.sections[l][v].conj() * self.weight(v, e))
                .collect(),
        )
    }
    fn section(&self, k: usize) -> Field {
        Field::new(self.sections[k].clone(), DegreeTag::Section { k: self.section_power() })
    }
    fn cup_lower(&self, i: usize, k: usize) -> Result<Field> {
        if self.p != 1 {
            return Err(Error::Degree("lowering cup product needs p > 0".into()));
        }
        let vals = (0..self.g.len()).map(|v| self.ks[i][v] * self.sections[k][v] / self.g[v]).collect();
        Ok(Field::new(vals, DegreeTag::Section { k: self.m as i32 - 1 }))
    }
    fn cup_raise(&self, j: usize, k: usize) -> Result<Field> {
        if self.p != 0 {
            return Err(Error::Degree("raising cup product needs p < n".into()));
        }
        let vals = (0..self.g.len()).map(|v| self.ks[j][v].conj() * self.g[v] * self.sections[k][v]).collect();
        Ok(Field::new(vals, DegreeTag::Section { k: self.m as i32 + 1 }))
    }
}

/// Beltrami differentials from the quadratic-differential basis, together
/// with the K^2 spectrum they came from.
fn beltrami_basis(fiber: &DiscreteFiber) -> Result<(Vec<Vec<C64>>, SpectralDecomposition)> {
    let k2 = bundle_spectrum(fiber, 2)?;
    let ks = (0..QD_DIMENSION)
        .map(|nu| harmonic_beltrami(fiber, &k2.eigenvector(nu)).coefficients)
        .collect();
    Ok((ks, k2))
}

/// Tables and slots for the direct-image formula on the octagon fiber,
/// Kodaira-Spencer forms from the quadratic differentials.
pub fn geometric_direct_image(fiber: &DiscreteFiber, p: usize, m: u32) -> Result<(GeometricTables, Slots)> {
    if !fiber.is_hyperbolic() {
        return Err(Error::Domain("geometric curvature needs the octagon fiber".into()));
    }
    if p > 1 || m == 0 {
        return Err(Error::Degree(format!("n = 1 needs p in {{0, 1}} and m >= 1, got p = {p}, m = {m}")));
    }
    let (ks, k2) = beltrami_basis(fiber)?;
    let function = assemble_laplacian(fiber)?;
    let g: Vec<f64> = fiber.vertices.iter().map(|&z| fiber.kahler_at(z)).collect();
    let mi = m as i32;
    let (sections, slots) = if p == 1 {
        let top = if mi + 1 == 2 { k2 } else { bundle_spectrum(fiber, mi + 1)? };
        let sec = (0..section_count(mi + 1)).map(|nu| top.eigenvector(nu).values).collect();
        let lower = if mi == 1 { function.clone() } else { bundle_spectrum(fiber, mi - 1)? };
        (sec, Slots { function, sections: Some(top), lower: Some(lower), raise: None })
    } else {
        if m != 1 {
            return Err(Error::Degree(format!("H^1(K^{m}) vanishes in genus 2 for m >= 2")));
        }
        let sec = vec![function.eigenvector(0).values];
        let raise = k2;
        (sec, Slots { sections: Some(function.clone()), function, lower: None, raise: Some(raise) })
    };
    Ok((GeometricTables { p, m, ks, sections, g }, slots))
}

#[derive(Debug, Clone)]
pub struct GeometricWedgeTables {
    pub p: usize,
    pub ks: Vec<Vec<C64>>,
    /// p = 0: constant functions; p = 1: Beltrami coefficients.
    pub sections: Vec<Vec<C64>>,
    pub g: Vec<f64>,
}

impl WedgeTables for GeometricWedgeTables {
    fn n(&self) -> usize {
        1
    }
    fn p(&self) -> usize {
        self.p
    }
    fn num_ks(&self) -> usize {
        self.ks.len()
    }
    fn num_sections(&self) -> usize {
        self.sections.len()
    }
    fn ks_dot(&self, i: usize, j: usize) -> Field {
        Field::function(self.ks[i].iter().zip(&self.ks[j]).map(|(a, b)| a * b.conj()).collect())
    }
    fn section_dot(&self, k: usize, l: usize) -> Field {
        Field::function(self.sections[k].iter().zip(&self.sections[l]).map(|(a, b)| a * b.conj()).collect())
    }
    fn section(&self, k: usize) -> Field {
        if self.p == 0 {
            Field::function(self.sections[k].clone())
        } else {
            let vals = self.sections[k].iter().zip(&self.g).map(|(a, g)| a.conj() * g).collect();
            Field::new(vals, DegreeTag::Section { k: 2 })
        }
    }
    fn wedge_raise(&self, i: usize, k: usize) -> Result<Field> {
        if self.p != 0 {
            return Err(Error::Degree("the exterior product vanishes for p = n".into()));
        }
        let vals = (0..self.g.len()).map(|v| (self.ks[i][v] * self.sections[k][v]).conj() * self.g[v]).collect();
        Ok(Field::new(vals, DegreeTag::Section { k: 2 }))
    }
    fn wedge_lower(&self, j: usize, k: usize) -> Result<Field> {
        if self.p != 1 {
            return Err(Error::Degree("the contraction vanishes for p = 0".into()));
        }
        Ok(Field::function(self.ks[j].iter().zip(&self.sections[k]).map(|(a, b)| a.conj() * b).collect()))
    }
    fn raise_is_antilinear(&self) -> bool {
        true
    }
}

/// Tables and slots for the tangent-bundle formula; for p = 1 the sections
/// are the Beltrami differentials themselves.
pub fn geometric_tangent(fiber: &DiscreteFiber, p: usize) -> Result<(GeometricWedgeTables, Slots)> {
    if !fiber.is_hyperbolic() {
        return Err(Error::Domain("geometric curvature needs the octagon fiber".into()));
    }
    if p > 1 {
        return Err(Error::Degree(format!("n = 1 needs p in {{0, 1}}, got {p}")));
    }
    let (ks, k2) = beltrami_basis(fiber)?;
    let function = assemble_laplacian(fiber)?;
    let g: Vec<f64> = fiber.vertices.iter().map(|&z| fiber.kahler_at(z)).collect();
    if p == 0 {
        let sections = vec![function.eigenvector(0).values];
        let slots = Slots { sections: Some(function.clone()), function, lower: None, raise: Some(k2) };
        Ok((GeometricWedgeTables { p, ks, sections, g }, slots))
    } else {
        let sections = ks.clone();
        let slots = Slots { lower: Some(function.clone()), function, sections: Some(k2), raise: None };
        Ok((GeometricWedgeTables { p, ks, sections, g }, slots))
    }
}
