//! Analytic implicit fields and their CSG composition.
//!
//! A field is an expression tree of quadric primitives combined with
//! pointwise min/max/negation: union(a,b) = min, intersection = max,
//! complement = −a, subtraction = max(a, −b). Derivatives follow the active
//! branch, so every field answers φ, ∇φ and D²φ anywhere (the creases of
//! min/max are handled by a deterministic tie-break).

use nalgebra::{Matrix3, Vector3};

use super::sample::FieldSample;
use crate::scalar::{real, Scalar};

/// Implicit scalar field on R³, negative inside.
#[derive(Debug, Clone)]
pub enum ImplicitField<S: Scalar> {
    /// |p − center|² − radius²
    Sphere { center: Vector3<S>, radius: S },
    /// x²/a² + y²/b² + z²/c² − 1, centered at the origin
    Ellipsoid { semi_axes: Vector3<S> },
    /// normal·p − offset (negative on the side the normal points away from)
    HalfSpace { normal: Vector3<S>, offset: S },
    /// x² + y² − radius², axis along z
    CylinderAlongZ { radius: S },
    Min(Box<ImplicitField<S>>, Box<ImplicitField<S>>),
    Max(Box<ImplicitField<S>>, Box<ImplicitField<S>>),
    Neg(Box<ImplicitField<S>>),
}

/// Union of interiors: pointwise min.
pub fn csg_union<S: Scalar>(a: ImplicitField<S>, b: ImplicitField<S>) -> ImplicitField<S> {
    ImplicitField::Min(Box::new(a), Box::new(b))
}

/// Intersection of interiors: pointwise max.
pub fn csg_intersect<S: Scalar>(a: ImplicitField<S>, b: ImplicitField<S>) -> ImplicitField<S> {
    ImplicitField::Max(Box::new(a), Box::new(b))
}

/// Complement: pointwise negation.
pub fn csg_complement<S: Scalar>(a: ImplicitField<S>) -> ImplicitField<S> {
    ImplicitField::Neg(Box::new(a))
}

/// a minus the interior of b: max(a, −b).
pub fn csg_subtract<S: Scalar>(a: ImplicitField<S>, b: ImplicitField<S>) -> ImplicitField<S> {
    csg_intersect(a, csg_complement(b))
}

impl<S: Scalar> ImplicitField<S> {
    pub fn value(&self, p: &Vector3<S>) -> S {
        match self {
            ImplicitField::Sphere { center, radius } => {
                (p - center).norm_squared() - *radius * *radius
            }
            ImplicitField::Ellipsoid { semi_axes } => {
                let q = Vector3::new(p.x / semi_axes.x, p.y / semi_axes.y, p.z / semi_axes.z);
                q.norm_squared() - S::one()
            }
            ImplicitField::HalfSpace { normal, offset } => normal.dot(p) - *offset,
            ImplicitField::CylinderAlongZ { radius } => {
                p.x * p.x + p.y * p.y - *radius * *radius
            }
            ImplicitField::Min(a, b) => a.value(p).min(b.value(p)),
            ImplicitField::Max(a, b) => a.value(p).max(b.value(p)),
            ImplicitField::Neg(a) => -a.value(p),
        }
    }

    /// φ, ∇φ and D²φ of the active branch. Ties at min/max creases resolve
    /// to the left operand.
    pub fn sample(&self, p: &Vector3<S>) -> FieldSample<S> {
        match self {
            ImplicitField::Sphere { center, radius } => {
                let d = p - center;
                FieldSample {
                    phi: d.norm_squared() - *radius * *radius,
                    grad: d * real::<S>(2.0),
                    hess: Matrix3::identity() * real::<S>(2.0),
                }
            }
            ImplicitField::Ellipsoid { semi_axes } => {
                let inv2 = Vector3::new(
                    S::one() / (semi_axes.x * semi_axes.x),
                    S::one() / (semi_axes.y * semi_axes.y),
                    S::one() / (semi_axes.z * semi_axes.z),
                );
                let two = real::<S>(2.0);
                FieldSample {
                    phi: p.x * p.x * inv2.x + p.y * p.y * inv2.y + p.z * p.z * inv2.z - S::one(),
                    grad: Vector3::new(two * p.x * inv2.x, two * p.y * inv2.y, two * p.z * inv2.z),
                    hess: Matrix3::from_diagonal(&(inv2 * two)),
                }
            }
            ImplicitField::HalfSpace { normal, offset } => FieldSample {
                phi: normal.dot(p) - *offset,
                grad: *normal,
                hess: Matrix3::zeros(),
            },
            ImplicitField::CylinderAlongZ { radius } => {
                let two = real::<S>(2.0);
                let mut hess = Matrix3::zeros();
                hess[(0, 0)] = two;
                hess[(1, 1)] = two;
                FieldSample {
                    phi: p.x * p.x + p.y * p.y - *radius * *radius,
                    grad: Vector3::new(two * p.x, two * p.y, S::zero()),
                    hess,
                }
            }
            ImplicitField::Min(a, b) => {
                if a.value(p) <= b.value(p) {
                    a.sample(p)
                } else {
                    b.sample(p)
                }
            }
            ImplicitField::Max(a, b) => {
                if a.value(p) >= b.value(p) {
                    a.sample(p)
                } else {
                    b.sample(p)
                }
            }
            ImplicitField::Neg(a) => {
                let s = a.sample(p);
                FieldSample {
                    phi: -s.phi,
                    grad: -s.grad,
                    hess: -s.hess,
                }
            }
        }
    }
}

/// The four reference shapes used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phantom {
    /// x² + y² + z² − 1
    Sphere,
    /// x² + y²/4 + z² − 1 (semi-axes 1, 2, 1)
    Ellipsoid,
    /// min of two radius-0.8 spheres centered at (0, 0, ±0.7)
    FusedSpheres,
    /// max(z − 1, −(z + 1), x² + y² − 0.4²): finite cylinder, radius 0.4, length 2
    Cylinder,
}

impl Phantom {
    pub fn field<S: Scalar>(self) -> ImplicitField<S> {
        match self {
            Phantom::Sphere => ImplicitField::Sphere {
                center: Vector3::zeros(),
                radius: S::one(),
            },
            Phantom::Ellipsoid => ImplicitField::Ellipsoid {
                semi_axes: Vector3::new(S::one(), real(2.0), S::one()),
            },
            Phantom::FusedSpheres => csg_union(
                ImplicitField::Sphere {
                    center: Vector3::new(S::zero(), S::zero(), real(0.7)),
                    radius: real(0.8),
                },
                ImplicitField::Sphere {
                    center: Vector3::new(S::zero(), S::zero(), real(-0.7)),
                    radius: real(0.8),
                },
            ),
            Phantom::Cylinder => csg_intersect(
                csg_intersect(
                    ImplicitField::HalfSpace {
                        normal: Vector3::new(S::zero(), S::zero(), S::one()),
                        offset: S::one(),
                    },
                    ImplicitField::HalfSpace {
                        normal: Vector3::new(S::zero(), S::zero(), -S::one()),
                        offset: S::one(),
                    },
                ),
                ImplicitField::CylinderAlongZ { radius: real(0.4) },
            ),
        }
    }
}

/// Evaluate a phantom's implicit value at a point.
pub fn phantom_field<S: Scalar>(phantom: Phantom, p: &Vector3<S>) -> S {
    phantom.field().value(p)
}
