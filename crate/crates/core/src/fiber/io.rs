//! Plain-text mesh format (see `docs/formats.md`).

use super::{DiscreteFiber, FiberKind, Mobius, SidePairing};
use crate::error::{Error, Result};
use crate::linalg::C64;
use std::collections::HashMap;
use std::fmt::Write as _;

pub fn write_mesh(fiber: &DiscreteFiber) -> String {
    let mut s = String::new();
    s.push_str("KEFIBER 1\n");
    match fiber.kind {
        FiberKind::Torus { side, resolution } => writeln!(s, "kind torus {side} {resolution}").unwrap(),
        FiberKind::Octagon { level } => writeln!(s, "kind octagon {level}").unwrap(),
    }
    writeln!(s, "laplacian_scale {}", fiber.laplacian_scale).unwrap();
    writeln!(s, "defects {} {}", fiber.pairing_defect, fiber.holonomy_defect).unwrap();
    writeln!(s, "vertices {}", fiber.vertices.len()).unwrap();
    for z in &fiber.vertices {
        writeln!(s, "{} {}", z.re, z.im).unwrap();
    }
    let mut map_ids: HashMap<[u64; 8], usize> = HashMap::new();
    let mut maps: Vec<Mobius> = Vec::new();
    let mut id_of = |m: &Mobius| {
        let key = [m.a.re, m.a.im, m.b.re, m.b.im, m.c.re, m.c.im, m.d.re, m.d.im].map(f64::to_bits);
        *map_ids.entry(key).or_insert_with(|| {
            maps.push(*m);
            maps.len() - 1
        })
    };
    let mut tri_lines = Vec::with_capacity(fiber.triangles.len());
    for (t, tri) in fiber.triangles.iter().enumerate() {
        let c = &fiber.corners[t];
        let m: Vec<usize> = fiber.corner_maps[t].iter().map(&mut id_of).collect();
        tri_lines.push(format!(
            "{} {} {} {} {} {} {} {} {} {} {} {}",
            tri[0], tri[1], tri[2], c[0].re, c[0].im, c[1].re, c[1].im, c[2].re, c[2].im, m[0], m[1], m[2]
        ));
    }
    let pair_maps: Vec<usize> = fiber.side_pairings.iter().map(|p| id_of(&p.map)).collect();
    writeln!(s, "maps {}", maps.len()).unwrap();
    for m in &maps {
        writeln!(s, "{} {} {} {} {} {} {} {}", m.a.re, m.a.im, m.b.re, m.b.im, m.c.re, m.c.im, m.d.re, m.d.im).unwrap();
    }
    writeln!(s, "triangles {}", tri_lines.len()).unwrap();
    for l in tri_lines {
        s.push_str(&l);
        s.push('\n');
    }
    writeln!(s, "pairings {}", fiber.side_pairings.len()).unwrap();
    for (p, mi) in fiber.side_pairings.iter().zip(pair_maps) {
        write!(s, "{} {} {} {}", p.from_side, p.to_side, mi, p.chain.len()).unwrap();
        for v in &p.chain {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    s
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (no, l) in self.it.by_ref() {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok((no + 1, l.split_whitespace().collect()));
        }
        Err(Error::Format("unexpected end of mesh file".into()))
    }

    fn header(&mut self, name: &str) -> Result<Vec<&'a str>> {
        let (no, f) = self.next()?;
        if f.first() != Some(&name) {
            return Err(Error::Format(format!("line {no}: expected '{name}'")));
        }
        Ok(f[1..].to_vec())
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("cannot parse '{s}'")))
}

pub fn read_mesh(text: &str) -> Result<DiscreteFiber> {
    let mut lines = Lines { it: text.lines().enumerate() };
    let magic = lines.header("KEFIBER")?;
    if magic.first() != Some(&"1") {
        return Err(Error::Format("unsupported mesh version".into()));
    }
    let kind = lines.header("kind")?;
    let kind = match kind.first().copied() {
        Some("torus") if kind.len() == 3 => FiberKind::Torus { side: num(kind[1])?, resolution: num(kind[2])? },
        Some("octagon") if kind.len() == 2 => FiberKind::Octagon { level: num(kind[1])? },
        _ => return Err(Error::Format("bad kind line".into())),
    };
    let laplacian_scale: f64 = num(lines.header("laplacian_scale")?.first().copied().unwrap_or(""))?;
    let d = lines.header("defects")?;
    if d.len() != 2 {
        return Err(Error::Format("bad defects line".into()));
    }
    let (pairing_defect, holonomy_defect) = (num(d[0])?, num(d[1])?);
    let nv: usize = num(lines.header("vertices")?.first().copied().unwrap_or(""))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (_, f) = lines.next()?;
        if f.len() != 2 {
            return Err(Error::Format("vertex lines need 2 numbers".into()));
        }
        vertices.push(C64::new(num(f[0])?, num(f[1])?));
    }
    let nm: usize = num(lines.header("maps")?.first().copied().unwrap_or(""))?;
    let mut maps = Vec::with_capacity(nm);
    for _ in 0..nm {
        let (_, f) = lines.next()?;
        if f.len() != 8 {
            return Err(Error::Format("map lines need 8 numbers".into()));
        }
        let v: Vec<f64> = f.iter().map(|x| num(x)).collect::<Result<_>>()?;
        maps.push(Mobius {
            a: C64::new(v[0], v[1]),
            b: C64::new(v[2], v[3]),
            c: C64::new(v[4], v[5]),
            d: C64::new(v[6], v[7]),
        });
    }
    let nt: usize = num(lines.header("triangles")?.first().copied().unwrap_or(""))?;
    let mut triangles = Vec::with_capacity(nt);
    let mut corners = Vec::with_capacity(nt);
    let mut corner_maps = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, f) = lines.next()?;
        if f.len() != 12 {
            return Err(Error::Format(format!("line {no}: triangle lines need 12 fields")));
        }
        let idx: [usize; 3] = [num(f[0])?, num(f[1])?, num(f[2])?];
        if idx.iter().any(|&i| i >= nv) {
            return Err(Error::Format(format!("line {no}: vertex index out of range")));
        }
        let c = [
            C64::new(num(f[3])?, num(f[4])?),
            C64::new(num(f[5])?, num(f[6])?),
            C64::new(num(f[7])?, num(f[8])?),
        ];
        let mut m = [Mobius::identity(); 3];
        for i in 0..3 {
            let mi: usize = num(f[9 + i])?;
            m[i] = *maps.get(mi).ok_or_else(|| Error::Format(format!("line {no}: map index out of range")))?;
        }
        triangles.push(idx);
        corners.push(c);
        corner_maps.push(m);
    }
    let np: usize = num(lines.header("pairings")?.first().copied().unwrap_or(""))?;
    let mut side_pairings = Vec::with_capacity(np);
    for _ in 0..np {
        let (no, f) = lines.next()?;
        if f.len() < 4 {
            return Err(Error::Format(format!("line {no}: short pairing line")));
        }
        let len: usize = num(f[3])?;
        if f.len() != 4 + len {
            return Err(Error::Format(format!("line {no}: chain length mismatch")));
        }
        let mi: usize = num(f[2])?;
        side_pairings.push(SidePairing {
            from_side: num(f[0])?,
            to_side: num(f[1])?,
            map: *maps.get(mi).ok_or_else(|| Error::Format("pairing map out of range".into()))?,
            chain: f[4..].iter().map(|x| num(x)).collect::<Result<_>>()?,
        });
    }
    DiscreteFiber {
        kind,
        vertices,
        triangles,
        corners,
        corner_maps,
        side_pairings,
        metric_density: Vec::new(),
        area_weights: Vec::new(),
        edges: Vec::new(),
        laplacian_scale,
        pairing_defect,
        holonomy_defect,
    }
    .finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{build_hyperbolic_octagon_fiber, build_torus_fiber};

    #[test]
    fn round_trip_preserves_mesh() {
        for f in [build_hyperbolic_octagon_fiber(2).unwrap(), build_torus_fiber(1.0, 8).unwrap()] {
            let g = read_mesh(&write_mesh(&f)).unwrap();
            assert_eq!(f.triangles, g.triangles);
            assert_eq!(f.vertices, g.vertices);
            assert_eq!(f.corners, g.corners);
            assert_eq!(f.area_weights, g.area_weights);
            assert_eq!(f.side_pairings.len(), g.side_pairings.len());
        }
    }

    #[test]
    fn rejects_truncated_input() {
        let f = build_torus_fiber(1.0, 8).unwrap();
        let text = write_mesh(&f);
        let cut = &text[..text.len() / 2];
        assert!(read_mesh(cut).is_err());
        assert!(read_mesh("KEFIBER 2\n").is_err());
    }
}
