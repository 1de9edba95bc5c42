//! On-disk cache of meshes and spectra under $KECURV_CACHE_DIR. Without the
//! variable nothing is cached.

use crate::CliError;
use kecurv::fiber::io::{read_mesh, write_mesh};
use kecurv::fiber::{assemble_laplacian, build_hyperbolic_octagon_fiber, build_torus_fiber, DiscreteFiber};
use kecurv::spectral::SpectralDecomposition;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

pub const CACHE_ENV: &str = "KECURV_CACHE_DIR";

#[derive(Debug, Clone, Default)]
pub struct Cache {
    pub dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Cache { dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    fn path(&self, name: &str) -> Result<Option<PathBuf>, CliError> {
        let Some(dir) = &self.dir else { return Ok(None) };
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        Ok(Some(dir.join(name)))
    }

    fn mesh(&self, name: &str, build: impl FnOnce() -> kecurv::Result<DiscreteFiber>) -> Result<DiscreteFiber, CliError> {
        if let Some(p) = self.path(name)? {
            if let Ok(text) = std::fs::read_to_string(&p) {
                if let Ok(f) = read_mesh(&text) {
                    return Ok(f);
                }
            }
            let f = build()?;
            std::fs::write(&p, write_mesh(&f)).map_err(|e| CliError::Io(p.display().to_string(), e))?;
            return Ok(f);
        }
        Ok(build()?)
    }

    pub fn octagon(&self, level: u32) -> Result<DiscreteFiber, CliError> {
        self.mesh(&format!("octagon-L{level}.mesh"), || build_hyperbolic_octagon_fiber(level))
    }

    pub fn torus(&self, side: f64, resolution: usize) -> Result<DiscreteFiber, CliError> {
        self.mesh(&format!("torus-{side}-{resolution}.mesh"), || build_torus_fiber(side, resolution))
    }

    /// Function Laplacian spectrum of a fiber, keyed by `key`.
    pub fn laplacian(&self, key: &str, fiber: &DiscreteFiber) -> Result<SpectralDecomposition, CliError> {
        if let Some(p) = self.path(&format!("{key}.spec"))? {
            if let Ok(f) = File::open(&p) {
                if let Ok(s) = SpectralDecomposition::read_from(BufReader::new(f)) {
                    if s.nodes() == fiber.num_vertices() {
                        return Ok(s);
                    }
                }
            }
            let s = assemble_laplacian(fiber)?;
            let f = File::create(&p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
            s.write_to(BufWriter::new(f))?;
            return Ok(s);
        }
        Ok(assemble_laplacian(fiber)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cached_mesh_and_spectrum_reload_identically() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache { dir: Some(dir.path().to_path_buf()) };
        let a = c.octagon(2).unwrap();
        let b = c.octagon(2).unwrap();
        assert_eq!(a.vertices, b.vertices);
        let s1 = c.laplacian("o2", &a).unwrap();
        let s2 = c.laplacian("o2", &b).unwrap();
        assert_eq!(s1.eigenvalues(), s2.eigenvalues());
        assert!(dir.path().join("octagon-L2.mesh").exists());
    }
}
