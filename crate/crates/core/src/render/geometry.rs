//! Ray intersection against the primitive shapes, in object-local frames.

use alloc::vec::Vec;

pub type Vec3 = [f64; 3];

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Row-major 3x3 rotation.
pub type Mat3 = [[f64; 3]; 3];

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_t_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Rotation about +z by `angle` radians.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation about +x by `angle` radians.
pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

/// Nearest hit: distance along the ray and the local-frame normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub normal: Vec3,
}

const EPS: f64 = 1e-9;

fn nearer(best: &mut Option<Hit>, t: f64, normal: Vec3, t_min: f64) {
    if t > t_min && best.is_none_or(|b| t < b.t) {
        *best = Some(Hit { t, normal });
    }
}

/// Sphere of radius `r` at the origin.
pub fn hit_sphere(ray: &Ray, r: f64, t_min: f64) -> Option<Hit> {
    let (o, d) = (ray.origin, ray.dir);
    let a = dot(d, d);
    let b = dot(o, d);
    let c = dot(o, o) - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = libm::sqrt(disc);
    for t in [(-b - sq) / a, (-b + sq) / a] {
        if t > t_min {
            return Some(Hit { t, normal: scale(add(o, scale(d, t)), 1.0 / r) });
        }
    }
    None
}

/// Axis-aligned box with half-extent `h` at the origin.
pub fn hit_box(ray: &Ray, h: f64, t_min: f64) -> Option<Hit> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut n0, mut n1) = ([0.0; 3], [0.0; 3]);
    for axis in 0..3 {
        let (o, d) = (ray.origin[axis], ray.dir[axis]);
        if d.abs() < EPS {
            if o.abs() > h {
                return None;
            }
            continue;
        }
        let (mut a, mut b) = ((-h - o) / d, (h - o) / d);
        let mut na = [0.0; 3];
        na[axis] = -1.0;
        let mut nb = [0.0; 3];
        nb[axis] = 1.0;
        if a > b {
            core::mem::swap(&mut a, &mut b);
            core::mem::swap(&mut na, &mut nb);
        }
        if a > t0 {
            t0 = a;
            n0 = na;
        }
        if b < t1 {
            t1 = b;
            n1 = nb;
        }
        if t0 > t1 {
            return None;
        }
    }
    if t0 > t_min {
        Some(Hit { t: t0, normal: n0 })
    } else if t1 > t_min {
        Some(Hit { t: t1, normal: n1 })
    } else {
        None
    }
}

/// Capped cylinder along z with radius `r` and half-height `h`.
pub fn hit_cylinder(ray: &Ray, r: f64, h: f64, t_min: f64) -> Option<Hit> {
    let (o, d) = (ray.origin, ray.dir);
    let mut best = None;
    let a = d[0] * d[0] + d[1] * d[1];
    if a > EPS {
        let b = o[0] * d[0] + o[1] * d[1];
        let c = o[0] * o[0] + o[1] * o[1] - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = libm::sqrt(disc);
            for t in [(-b - sq) / a, (-b + sq) / a] {
                let z = o[2] + t * d[2];
                if z.abs() <= h {
                    let p = add(o, scale(d, t));
                    nearer(&mut best, t, [p[0] / r, p[1] / r, 0.0], t_min);
                }
            }
        }
    }
    if d[2].abs() > EPS {
        for (cap, nz) in [(h, 1.0), (-h, -1.0)] {
            let t = (cap - o[2]) / d[2];
            let p = add(o, scale(d, t));
            if p[0] * p[0] + p[1] * p[1] <= r * r {
                nearer(&mut best, t, [0.0, 0.0, nz], t_min);
            }
        }
    }
    best
}

/// Closed triangle mesh with per-face normals, centred on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Radius of a sphere around the origin containing every vertex.
    pub bound: f64,
}

impl Mesh {
    fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        let bound = vertices.iter().map(|&v| norm(v)).fold(0.0, f64::max);
        Mesh { vertices, faces, bound }
    }

    /// Unit icosphere after `subdivisions` rounds of edge splitting.
    pub fn icosphere(subdivisions: usize) -> Self {
        let p = (1.0 + libm::sqrt(5.0)) / 2.0;
        let mut vertices: Vec<Vec3> = [
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ]
        .iter()
        .map(|&v| normalize(v))
        .collect();
        let mut faces: Vec<[usize; 3]> = alloc::vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut cache = alloc::collections::BTreeMap::new();
            let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    vertices.push(normalize(scale(add(vertices[a], vertices[b]), 0.5)));
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        Mesh::new(vertices, faces)
    }

    /// Prism with `sides` facets approximating a unit-radius cylinder of
    /// half-height `h`.
    pub fn prism(sides: usize, h: f64) -> Self {
        let mut vertices = Vec::with_capacity(2 * sides + 2);
        for k in 0..sides {
            let a = 2.0 * core::f64::consts::PI * k as f64 / sides as f64;
            let (s, c) = (libm::sin(a), libm::cos(a));
            vertices.push([c, s, -h]);
            vertices.push([c, s, h]);
        }
        let (bottom, top) = (vertices.len(), vertices.len() + 1);
        vertices.push([0.0, 0.0, -h]);
        vertices.push([0.0, 0.0, h]);
        let mut faces = Vec::with_capacity(4 * sides);
        for k in 0..sides {
            let (b0, t0) = (2 * k, 2 * k + 1);
            let (b1, t1) = (2 * ((k + 1) % sides), 2 * ((k + 1) % sides) + 1);
            faces.extend([[b0, b1, t1], [b0, t1, t0], [top, t0, t1], [bottom, b1, b0]]);
        }
        Mesh::new(vertices, faces)
    }

    /// Nearest hit with the mesh scaled uniformly by `k`.
    pub fn hit(&self, ray: &Ray, k: f64, t_min: f64) -> Option<Hit> {
        let r = self.bound * k * (1.0 + 1e-9);
        if dot(ray.origin, ray.origin) > r * r && hit_sphere(ray, r, 0.0).is_none() {
            return None;
        }
        let mut best = None;
        for f in &self.faces {
            let [a, b, c] = f.map(|i| scale(self.vertices[i], k));
            let e1 = sub(b, a);
            let e2 = sub(c, a);
            let p = cross(ray.dir, e2);
            let det = dot(e1, p);
            if det.abs() < 1e-14 {
                continue;
            }
            let inv = 1.0 / det;
            let s = sub(ray.origin, a);
            let u = dot(s, p) * inv;
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let q = cross(s, e1);
            let v = dot(ray.dir, q) * inv;
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            let t = dot(e2, q) * inv;
            nearer(&mut best, t, normalize(cross(e1, e2)), t_min);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_hits() {
        let ray = Ray { origin: [0.0, 0.0, 5.0], dir: [0.0, 0.0, -1.0] };
        let s = hit_sphere(&ray, 1.0, 1e-9).unwrap();
        assert!((s.t - 4.0).abs() < 1e-12);
        assert_eq!(s.normal, [0.0, 0.0, 1.0]);
        let b = hit_box(&ray, 0.5, 1e-9).unwrap();
        assert!((b.t - 4.5).abs() < 1e-12);
        assert_eq!(b.normal, [0.0, 0.0, 1.0]);
        let c = hit_cylinder(&ray, 1.0, 2.0, 1e-9).unwrap();
        assert!((c.t - 3.0).abs() < 1e-12);
        let side = Ray { origin: [5.0, 0.0, 0.0], dir: [-1.0, 0.0, 0.0] };
        let c = hit_cylinder(&side, 1.0, 2.0, 1e-9).unwrap();
        assert!((c.t - 4.0).abs() < 1e-12);
        assert_eq!(c.normal, [1.0, 0.0, 0.0]);
        let miss = Ray { origin: [5.0, 5.0, 0.0], dir: [0.0, 0.0, 1.0] };
        assert!(hit_sphere(&miss, 1.0, 0.0).is_none());
        assert!(hit_box(&miss, 1.0, 0.0).is_none());
        assert!(hit_cylinder(&miss, 1.0, 1.0, 0.0).is_none());
    }

    #[test]
    fn meshes_are_close_to_their_analytic_shapes() {
        let ico = Mesh::icosphere(1);
        assert_eq!(ico.faces.len(), 80);
        assert_eq!(ico.vertices.len(), 42);
        let ray = Ray { origin: [0.0, 0.0, 5.0], dir: [0.0, 0.0, -1.0] };
        let t = ico.hit(&ray, 1.0, 1e-9).unwrap().t;
        assert!(t > 3.999 && t < 4.2, "{t}");
        let prism = Mesh::prism(12, 1.0);
        let side = Ray { origin: [5.0, 0.0, 0.0], dir: [-1.0, 0.0, 0.0] };
        let h = prism.hit(&side, 1.0, 1e-9).unwrap();
        assert!((h.t - 4.0).abs() < 0.05);
        assert!(h.normal[0] > 0.9);
    }
}
