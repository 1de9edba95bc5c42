use super::mobius::{geodesic_interpolate, Mobius};
use super::{signed_area, DiscreteFiber, FiberKind, SidePairing};
use crate::error::{Error, Result};
use crate::linalg::C64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Euclidean radius of the corners of the regular octagon with angles pi/4.
pub fn octagon_corner_radius() -> f64 {
    2f64.powf(-0.25)
}

fn corner(k: usize) -> C64 {
    C64::from_polar(octagon_corner_radius(), PI / 8.0 + (k % 8) as f64 * PI / 4.0)
}

fn side_point(k: usize, t: f64) -> C64 {
    geodesic_interpolate(corner(k), corner(k + 1), t)
}

/// Side pairing generators: for k in {0, 1, 4, 5} the map sending side k
/// onto side k+2 with reversed orientation (labels a b a^-1 b^-1 c d c^-1 d^-1).
pub fn octagon_generators() -> Vec<(usize, Mobius)> {
    [0usize, 1, 4, 5]
        .iter()
        .map(|&k| {
            let m = Mobius::from_three_points(
                [corner(k), corner(k + 1), side_point(k, 0.5)],
                [corner(k + 3), corner(k + 2), side_point(k + 2, 0.5)],
            );
            (k, m)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Center,
    Corner,
    Ray(usize, usize),
    Side(usize, usize),
    Interior(usize, usize, usize),
}

struct VertexCopies {
    rep: C64,
    copies: Vec<(C64, Mobius)>,
}

pub fn build_hyperbolic_octagon_fiber(level: u32) -> Result<DiscreteFiber> {
    if level < 1 || level > 8 {
        return Err(Error::Domain(format!("octagon refinement level must lie in 1..=8, got {level}")));
    }
    let n = 1usize << level;
    let gens = octagon_generators();
    let ray_len = 2.0 * octagon_corner_radius().atanh();

    let key_of = |k: usize, i: usize, j: usize| -> Key {
        if i == 0 {
            Key::Center
        } else if i == n && (j == 0 || j == n) {
            Key::Corner
        } else if j == 0 {
            Key::Ray(k % 8, i)
        } else if j == i {
            Key::Ray((k + 1) % 8, i)
        } else if i == n {
            let s = k % 8;
            if matches!(s, 2 | 3 | 6 | 7) {
                Key::Side(s - 2, n - j)
            } else {
                Key::Side(s, j)
            }
        } else {
            Key::Interior(k % 8, i, j)
        }
    };
    let pos_of = |k: usize, i: usize, j: usize| -> C64 {
        if i == 0 {
            return C64::new(0.0, 0.0);
        }
        let r = (0.5 * ray_len * i as f64 / n as f64).tanh();
        let a = C64::from_polar(r, PI / 8.0 + (k % 8) as f64 * PI / 4.0);
        let b = C64::from_polar(r, PI / 8.0 + ((k + 1) % 8) as f64 * PI / 4.0);
        if j == 0 {
            a
        } else if j == i {
            b
        } else {
            geodesic_interpolate(a, b, j as f64 / i as f64)
        }
    };

    // Deck maps for the eight copies of the corner, by breadth-first search.
    let mut corner_maps: Vec<Option<Mobius>> = vec![None; 8];
    corner_maps[0] = Some(Mobius::identity());
    let mut queue = vec![0usize];
    let mut holonomy_defect: f64 = 0.0;
    let all_gens: Vec<Mobius> = gens.iter().flat_map(|(_, g)| [*g, g.inverse()]).collect();
    while let Some(j) = queue.pop() {
        let gj = corner_maps[j].unwrap();
        for h in &all_gens {
            let p = h.apply(corner(j));
            if let Some(i) = (0..8).find(|&i| (corner(i) - p).norm() < 1e-9) {
                let cand = h.compose(&gj);
                match corner_maps[i] {
                    None => {
                        corner_maps[i] = Some(cand);
                        queue.push(i);
                    }
                    Some(gi) => holonomy_defect = holonomy_defect.max(gi.distance(&cand)),
                }
            }
        }
    }
    if corner_maps.iter().any(|m| m.is_none()) {
        return Err(Error::Mesh { triangle: 0, reason: "corners do not form a single class".into() });
    }

    let mut ids: HashMap<Key, usize> = HashMap::new();
    let mut verts: Vec<VertexCopies> = Vec::new();
    let mut pairing_defect: f64 = 0.0;
    let mut vertex_id = |key: Key, k: usize, i: usize, j: usize, verts: &mut Vec<VertexCopies>| -> usize {
        if let Some(&id) = ids.get(&key) {
            return id;
        }
        let id = verts.len();
        let vc = match key {
            Key::Corner => VertexCopies {
                rep: corner(0),
                copies: (0..8).map(|c| (corner_maps[c].unwrap().apply(corner(0)), corner_maps[c].unwrap())).collect(),
            },
            Key::Side(s, jj) => {
                let rep = side_point(s, jj as f64 / n as f64);
                let g = gens.iter().find(|(gk, _)| *gk == s).unwrap().1;
                VertexCopies { rep, copies: vec![(rep, Mobius::identity()), (g.apply(rep), g)] }
            }
            _ => {
                let p = pos_of(k, i, j);
                VertexCopies { rep: p, copies: vec![(p, Mobius::identity())] }
            }
        };
        verts.push(vc);
        ids.insert(key, id);
        id
    };

    let mut triangles = Vec::new();
    let mut corners = Vec::new();
    let mut cmaps = Vec::new();
    for k in 0..8 {
        for i in 0..n {
            for j in 0..=i {
                let mut tris = vec![[(i, j), (i + 1, j), (i + 1, j + 1)]];
                if j < i {
                    tris.push([(i, j), (i + 1, j + 1), (i, j + 1)]);
                }
                for tri in tris {
                    let mut idx = [0usize; 3];
                    let mut pos = [C64::new(0.0, 0.0); 3];
                    let mut maps = [Mobius::identity(); 3];
                    for c in 0..3 {
                        let (ii, jj) = tri[c];
                        let key = key_of(k, ii, jj);
                        let id = vertex_id(key, k, ii, jj, &mut verts);
                        let p = pos_of(k, ii, jj);
                        let (cp, cm) = verts[id]
                            .copies
                            .iter()
                            .min_by(|a, b| (a.0 - p).norm().total_cmp(&(b.0 - p).norm()))
                            .copied()
                            .unwrap();
                        pairing_defect = pairing_defect.max((cp - p).norm());
                        idx[c] = id;
                        pos[c] = cp;
                        maps[c] = cm;
                    }
                    if signed_area(&pos) < 0.0 {
                        idx.swap(1, 2);
                        pos.swap(1, 2);
                        maps.swap(1, 2);
                    }
                    triangles.push(idx);
                    corners.push(pos);
                    cmaps.push(maps);
                }
            }
        }
    }

    let side_pairings = gens
        .iter()
        .map(|&(s, g)| {
            let chain = (0..=n)
                .map(|j| {
                    let key = if j == 0 || j == n { Key::Corner } else { Key::Side(s, j) };
                    ids[&key]
                })
                .collect();
            SidePairing { from_side: s, to_side: s + 2, map: g, chain }
        })
        .collect();

    let mut fiber = DiscreteFiber {
        kind: FiberKind::Octagon { level },
        vertices: verts.iter().map(|v| v.rep).collect(),
        triangles,
        corners,
        corner_maps: cmaps,
        side_pairings,
        metric_density: Vec::new(),
        area_weights: Vec::new(),
        edges: Vec::new(),
        laplacian_scale: 0.5,
        pairing_defect,
        holonomy_defect,
    };
    fiber.delaunay_flip(64);
    fiber.finalize()
}
