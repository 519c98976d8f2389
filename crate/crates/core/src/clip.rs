//! Clipping of segments, triangles and tetrahedra by halfspaces `n . x <= c`.
//! Pieces are returned as simplices; orientation of the pieces is not preserved.

use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Self {
        Plane { normal, offset }
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

#[inline]
fn cut(a: &Vec3, b: &Vec3, da: f64, db: f64) -> Vec3 {
    let t = da / (da - db);
    a + (b - a) * t
}

/// Parameter interval `[t0, t1]` of `a + t (b - a)`, `t in [0,1]`, inside all planes.
pub fn clip_segment(a: &Vec3, b: &Vec3, planes: &[Plane]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for p in planes {
        let da = p.eval(a);
        let db = p.eval(b);
        if da > 0.0 && db > 0.0 {
            return None;
        }
        if da > 0.0 {
            t0 = t0.max(da / (da - db));
        } else if db > 0.0 {
            t1 = t1.min(da / (da - db));
        }
        if t0 >= t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn clip_triangle_once(t: &[Vec3; 3], p: &Plane, out: &mut Vec<[Vec3; 3]>) {
    let d = [p.eval(&t[0]), p.eval(&t[1]), p.eval(&t[2])];
    let inside: Vec<usize> = (0..3).filter(|&i| d[i] <= 0.0).collect();
    match inside.len() {
        3 => out.push(*t),
        0 => {}
        1 => {
            let a = inside[0];
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            out.push([t[a], cut(&t[a], &t[b], d[a], d[b]), cut(&t[a], &t[c], d[a], d[c])]);
        }
        _ => {
            let c = (0..3).find(|i| d[*i] > 0.0).unwrap();
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            let bc = cut(&t[b], &t[c], d[b], d[c]);
            let ac = cut(&t[a], &t[c], d[a], d[c]);
            out.push([t[a], t[b], bc]);
            out.push([t[a], bc, ac]);
        }
    }
}

pub fn clip_triangle(t: &[Vec3; 3], planes: &[Plane]) -> Vec<[Vec3; 3]> {
    let mut cur = vec![*t];
    let mut next = Vec::new();
    for p in planes {
        next.clear();
        for piece in &cur {
            clip_triangle_once(piece, p, &mut next);
        }
        std::mem::swap(&mut cur, &mut next);
        if cur.is_empty() {
            break;
        }
    }
    cur
}

fn clip_tet_once(t: &[Vec3; 4], p: &Plane, out: &mut Vec<[Vec3; 4]>) {
    let d = [p.eval(&t[0]), p.eval(&t[1]), p.eval(&t[2]), p.eval(&t[3])];
    let (mut ins, mut outs) = ([0usize; 4], [0usize; 4]);
    let (mut ni, mut no) = (0, 0);
    for i in 0..4 {
        if d[i] <= 0.0 {
            ins[ni] = i;
            ni += 1;
        } else {
            outs[no] = i;
            no += 1;
        }
    }
    let x = |i: usize, j: usize| cut(&t[i], &t[j], d[i], d[j]);
    match ni {
        4 => out.push(*t),
        0 => {}
        1 => {
            let a = ins[0];
            out.push([t[a], x(a, outs[0]), x(a, outs[1]), x(a, outs[2])]);
        }
        3 => {
            let (a, b, c, o) = (ins[0], ins[1], ins[2], outs[0]);
            let (ap, bp, cp) = (x(a, o), x(b, o), x(c, o));
            out.push([t[a], t[b], t[c], ap]);
            out.push([t[b], t[c], ap, bp]);
            out.push([t[c], ap, bp, cp]);
        }
        _ => {
            let (a, b, c, e) = (ins[0], ins[1], outs[0], outs[1]);
            let (ac, ae, bc, be) = (x(a, c), x(a, e), x(b, c), x(b, e));
            out.push([t[a], ac, ae, t[b]]);
            out.push([ac, ae, t[b], bc]);
            out.push([ae, t[b], bc, be]);
        }
    }
}

pub fn clip_tet(t: &[Vec3; 4], planes: &[Plane]) -> Vec<[Vec3; 4]> {
    let mut cur = vec![*t];
    let mut next = Vec::new();
    for p in planes {
        next.clear();
        for piece in &cur {
            clip_tet_once(piece, p, &mut next);
        }
        std::mem::swap(&mut cur, &mut next);
        if cur.is_empty() {
            break;
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{tet_volume, triangle_area_vector};

    fn unit_box() -> Vec<Plane> {
        let mut v = Vec::new();
        for k in 0..3 {
            let mut n = Vec3::zeros();
            n[k] = 1.0;
            v.push(Plane::new(n, 1.0));
            v.push(Plane::new(-n, 0.0));
        }
        v
    }

    #[test]
    fn segment_clip_parameters() {
        let (t0, t1) = clip_segment(&Vec3::new(-1.0, 0.5, 0.5), &Vec3::new(3.0, 0.5, 0.5), &unit_box()).unwrap();
        assert!((t0 - 0.25).abs() < 1e-15 && (t1 - 0.5).abs() < 1e-15);
        assert!(clip_segment(&Vec3::new(2.0, 0.0, 0.0), &Vec3::new(3.0, 0.0, 0.0), &unit_box()).is_none());
    }

    #[test]
    fn triangle_area_conserved_by_complementary_cuts() {
        let t = [Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.9, 0.1, 0.4), Vec3::new(0.3, 0.8, 0.6)];
        let p = Plane::new(Vec3::new(1.0, 0.3, -0.2), 0.4);
        let q = Plane::new(-p.normal, -p.offset);
        let area = |v: &Vec<[Vec3; 3]>| v.iter().map(|s| triangle_area_vector(s).norm()).sum::<f64>();
        let total = triangle_area_vector(&t).norm();
        assert!((area(&clip_triangle(&t, &[p])) + area(&clip_triangle(&t, &[q])) - total).abs() < 1e-15);
    }

    #[test]
    fn tet_volume_conserved_by_complementary_cuts() {
        let t = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.1, 0.0), Vec3::new(0.2, 1.0, 0.1), Vec3::new(0.1, 0.3, 1.2)];
        let total = tet_volume(&t).abs();
        let vol = |v: &Vec<[Vec3; 4]>| v.iter().map(|s| tet_volume(s).abs()).sum::<f64>();
        for (n, c) in [(Vec3::new(1.0, 0.0, 0.0), 0.05), (Vec3::new(1.0, 1.0, 1.0), 0.9), (Vec3::new(-0.3, 1.0, 0.4), 0.5), (Vec3::new(0.0, 0.0, 1.0), 1.1)] {
            let p = Plane::new(n, c);
            let q = Plane::new(-n, -c);
            assert!((vol(&clip_tet(&t, &[p])) + vol(&clip_tet(&t, &[q])) - total).abs() < 1e-15 * 10.0);
        }
    }

    #[test]
    fn cube_corner_clip() {
        let t = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0), Vec3::new(0.0, 0.0, 2.0)];
        let pieces = clip_tet(&t, &unit_box());
        let v: f64 = pieces.iter().map(|s| tet_volume(s).abs()).sum();
        // unit cube minus the corner beyond x+y+z=2
        assert!((v - (1.0 - 1.0 / 6.0)).abs() < 1e-14);
    }
}
