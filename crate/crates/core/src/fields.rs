//! Analytic test fields with exact derivatives.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Mat3, Vec3};
use crate::mollify::{ScalarField, SmoothScalarField, SmoothVectorField, VectorField};

type ScalarFnBox = Box<dyn Fn(&Vec3) -> f64 + Send + Sync>;
type VectorFnBox = Box<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type MatrixFnBox = Box<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;

pub struct AnalyticScalar {
    pub name: String,
    value: ScalarFnBox,
    gradient: VectorFnBox,
}

impl AnalyticScalar {
    pub fn new<F, G>(name: impl Into<String>, value: F, gradient: G) -> Self
    where
        F: Fn(&Vec3) -> f64 + Send + Sync + 'static,
        G: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    {
        AnalyticScalar { name: name.into(), value: Box::new(value), gradient: Box::new(gradient) }
    }

    /// `f * g` with the product rule.
    pub fn product(a: AnalyticScalar, b: AnalyticScalar) -> Self {
        let name = format!("{}*{}", a.name, b.name);
        let a = std::sync::Arc::new(a);
        let b = std::sync::Arc::new(b);
        let (a2, b2) = (a.clone(), b.clone());
        AnalyticScalar::new(
            name,
            move |x| (a.value)(x) * (b.value)(x),
            move |x| (a2.gradient)(x) * (b2.value)(x) + (b2.gradient)(x) * (a2.value)(x),
        )
    }
}

impl ScalarField for AnalyticScalar {
    fn value(&self, x: &Vec3) -> f64 {
        (self.value)(x)
    }
}

impl SmoothScalarField for AnalyticScalar {
    fn gradient(&self, x: &Vec3) -> Vec3 {
        (self.gradient)(x)
    }
}

pub struct AnalyticVector {
    pub name: String,
    value: VectorFnBox,
    jacobian: MatrixFnBox,
}

impl AnalyticVector {
    pub fn new<F, J>(name: impl Into<String>, value: F, jacobian: J) -> Self
    where
        F: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
        J: Fn(&Vec3) -> Mat3 + Send + Sync + 'static,
    {
        AnalyticVector { name: name.into(), value: Box::new(value), jacobian: Box::new(jacobian) }
    }

    /// `s * v` with the product rule.
    pub fn scaled(s: AnalyticScalar, v: AnalyticVector) -> Self {
        let name = format!("{}*{}", s.name, v.name);
        let s = std::sync::Arc::new(s);
        let v = std::sync::Arc::new(v);
        let (s2, v2) = (s.clone(), v.clone());
        AnalyticVector::new(
            name,
            move |x| (v.value)(x) * (s.value)(x),
            move |x| (v2.jacobian)(x) * (s2.value)(x) + (v2.value)(x) * (s2.gradient)(x).transpose(),
        )
    }
}

impl VectorField for AnalyticVector {
    fn value(&self, x: &Vec3) -> Vec3 {
        (self.value)(x)
    }
}

impl SmoothVectorField for AnalyticVector {
    fn jacobian(&self, x: &Vec3) -> Mat3 {
        (self.jacobian)(x)
    }
}

/// `grad f` as a vector field.
pub struct Gradient<'a>(pub &'a dyn SmoothScalarField);

impl VectorField for Gradient<'_> {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.0.gradient(x)
    }
}

/// `curl g` as a vector field.
pub struct Curl<'a>(pub &'a dyn SmoothVectorField);

impl VectorField for Curl<'_> {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.0.curl(x)
    }
}

/// `div g` as a scalar field.
pub struct Divergence<'a>(pub &'a dyn SmoothVectorField);

impl ScalarField for Divergence<'_> {
    fn value(&self, x: &Vec3) -> f64 {
        self.0.divergence(x)
    }
}

/// `sin(a . x + phase)`.
pub fn plane_wave(a: Vec3, phase: f64) -> AnalyticScalar {
    AnalyticScalar::new(format!("wave({:.2},{:.2},{:.2})", a.x, a.y, a.z), move |x| (a.dot(x) + phase).sin(), move |x| {
        a * (a.dot(x) + phase).cos()
    })
}

/// `sin(pi x) sin(pi y) sin(pi z)`; vanishes on the unit cube boundary.
pub fn sine_bubble() -> AnalyticScalar {
    AnalyticScalar::new(
        "sinsinsin",
        |x| (PI * x.x).sin() * (PI * x.y).sin() * (PI * x.z).sin(),
        |x| {
            let (s, c) = ((PI * x).map(f64::sin), (PI * x).map(f64::cos));
            Vec3::new(c.x * s.y * s.z, s.x * c.y * s.z, s.x * s.y * c.z) * PI
        },
    )
}

/// `(64 x(1-x) y(1-y) z(1-z))^k`: vanishes to order `k` on the unit cube boundary.
pub fn polynomial_bubble(k: i32) -> AnalyticScalar {
    let b = |x: &Vec3| 64.0 * x.x * (1.0 - x.x) * x.y * (1.0 - x.y) * x.z * (1.0 - x.z);
    AnalyticScalar::new(
        format!("bubble^{k}"),
        move |x| b(x).powi(k),
        move |x| {
            let p = |t: f64| t * (1.0 - t);
            let dp = |t: f64| 1.0 - 2.0 * t;
            let db = Vec3::new(dp(x.x) * p(x.y) * p(x.z), p(x.x) * dp(x.y) * p(x.z), p(x.x) * p(x.y) * dp(x.z)) * 64.0;
            if k == 0 {
                Vec3::zeros()
            } else {
                db * (k as f64 * b(x).powi(k - 1))
            }
        },
    )
}

pub fn affine_scalar(a: Vec3, b: f64) -> AnalyticScalar {
    AnalyticScalar::new("affine", move |x| a.dot(x) + b, move |_| a)
}

pub fn constant_vector(c: Vec3) -> AnalyticVector {
    AnalyticVector::new("const", move |_| c, |_| Mat3::zeros())
}

/// `A x + b`.
pub fn affine_vector(a: Mat3, b: Vec3) -> AnalyticVector {
    AnalyticVector::new("affine", move |x| a * x + b, move |_| a)
}

/// Smooth trigonometric vector field with nonzero curl and divergence.
pub fn trig_vector(freq: f64) -> AnalyticVector {
    let w = freq;
    AnalyticVector::new(
        format!("trig({w:.2})"),
        move |x| Vec3::new((w * x.y).sin() * (w * x.z).cos(), (w * x.z).sin() + (w * x.x).cos(), (w * (x.x + x.y)).sin() * x.z),
        move |x| {
            let (sy, cy, sz, cz) = ((w * x.y).sin(), (w * x.y).cos(), (w * x.z).sin(), (w * x.z).cos());
            let sxy = (w * (x.x + x.y)).sin();
            let cxy = (w * (x.x + x.y)).cos();
            Mat3::new(
                0.0,
                w * cy * cz,
                -w * sy * sz,
                -w * (w * x.x).sin(),
                0.0,
                w * cz,
                w * cxy * x.z,
                w * cxy * x.z,
                sxy,
            )
        },
    )
}

/// Gradient of a scalar as an analytic vector field (curl-free); needs the Hessian.
pub fn gradient_of_wave(a: Vec3, phase: f64) -> AnalyticVector {
    AnalyticVector::new("grad wave", move |x| a * (a.dot(x) + phase).cos(), move |x| -(a * a.transpose()) * (a.dot(x) + phase).sin())
}

/// Fields with vanishing tangential trace on the unit cube:
/// `(s(x) sin(pi y) sin(pi z), sin(pi x) t(y) sin(pi z), sin(pi x) sin(pi y) u(z))`.
pub fn tangential_bubble_vector() -> AnalyticVector {
    AnalyticVector::new(
        "tangential-bubble",
        |x| {
            let s = (PI * x).map(f64::sin);
            Vec3::new((2.0 * x.x).cos() * s.y * s.z, (1.0 + x.y * x.x) * s.x * s.z, (x.z + x.y).exp() * s.x * s.y)
        },
        |x| {
            let s = (PI * x).map(f64::sin);
            let c = (PI * x).map(f64::cos);
            let a = (2.0 * x.x).cos();
            let da = -2.0 * (2.0 * x.x).sin();
            let b = 1.0 + x.y * x.x;
            let e = (x.z + x.y).exp();
            Mat3::new(
                da * s.y * s.z,
                a * PI * c.y * s.z,
                a * s.y * PI * c.z,
                x.y * s.x * s.z + b * PI * c.x * s.z,
                x.x * s.x * s.z,
                b * s.x * PI * c.z,
                e * PI * c.x * s.y,
                e * s.x * s.y + e * s.x * PI * c.y,
                e * s.x * s.y,
            )
        },
    )
}

/// Field with vanishing normal trace on the unit cube:
/// `(sin(pi x) a(x,y,z), sin(pi y) b(x,y,z), sin(pi z) c(x,y,z))`.
pub fn normal_bubble_vector() -> AnalyticVector {
    AnalyticVector::new(
        "normal-bubble",
        |x| {
            let s = (PI * x).map(f64::sin);
            Vec3::new(s.x * (x.y + 2.0 * x.z).cos(), s.y * (1.0 + x.x * x.z), s.z * (x.x - x.y).exp())
        },
        |x| {
            let s = (PI * x).map(f64::sin);
            let c = (PI * x).map(f64::cos);
            let a = (x.y + 2.0 * x.z).cos();
            let sa = (x.y + 2.0 * x.z).sin();
            let b = 1.0 + x.x * x.z;
            let e = (x.x - x.y).exp();
            Mat3::new(
                PI * c.x * a,
                -s.x * sa,
                -2.0 * s.x * sa,
                s.y * x.z,
                PI * c.y * b,
                s.y * x.x,
                s.z * e,
                -s.z * e,
                PI * c.z * e,
            )
        },
    )
}

/// Seeded battery of smooth scalar fields.
pub fn scalar_battery(seed: u64, count: usize) -> Vec<AnalyticScalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![sine_bubble()];
    while out.len() < count {
        let a = Vec3::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        out.push(plane_wave(a, rng.gen_range(0.0..PI)));
    }
    out.truncate(count);
    out
}

/// Seeded battery of smooth vector fields.
pub fn vector_battery(seed: u64, count: usize) -> Vec<AnalyticVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![trig_vector(2.0), tangential_bubble_vector(), normal_bubble_vector()];
    while out.len() < count {
        let w = rng.gen_range(1.0..4.0);
        out.push(trig_vector(w));
    }
    out.truncate(count);
    out
}
