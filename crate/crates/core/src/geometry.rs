//! Metric computations inside a single decorated Euclidean triangle.
//!
//! A triangle `{i, j, k}` is described by its lengths `(l_ij, l_jk, l_ki)`
//! and the radii `(r_i, r_j, r_k)` of its vertex-circles. Layouts place `i`
//! at the origin, `j` on the positive x-axis and `k` in the upper half-plane,
//! so `(i, j, k)` is counter-clockwise.

use nalgebra::{Point2, Vector2};
use thiserror::Error;

/// Predicate tolerance for degeneracy tests.
pub const GEOM_EPS: f64 = 1e-12;
/// Relative tolerance on orthogonality residuals of face-circles.
pub const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("lengths {0:?} violate the strict triangle inequality")]
    DegenerateTriangle([f64; 3]),
    #[error("no real circle is orthogonal to all three vertex-circles (radius^2 = {0})")]
    ImaginaryRadicalCircle(f64),
    #[error("the hinge quad is not convex across its shared edge")]
    NonConvexQuad,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoratedTriangle {
    /// `(l_ij, l_jk, l_ki)`.
    pub lengths: [f64; 3],
    /// `(r_i, r_j, r_k)`.
    pub radii: [f64; 3],
}

/// Inner angles at `(i, j, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleAngles(pub [f64; 3]);

impl TriangleAngles {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// The circle orthogonal to the three vertex-circles, in layout coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceCircle {
    pub center: Point2<f64>,
    pub radius: f64,
    /// Signed distances from the center to the lines of `(ij, jk, ki)`,
    /// positive on the triangle's side.
    pub edge_distances: [f64; 3],
}

/// Intersection angles `(alpha_ij^k, alpha_jk^i, alpha_ki^j)` between the
/// face-circle and the three edge lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCircleAngles(pub [f64; 3]);

fn check_lengths(l: [f64; 3]) -> Result<(), GeometryError> {
    let mut s = l;
    s.sort_by(f64::total_cmp);
    if !(s[0] > 0.0) || !s[2].is_finite() || s[0] + s[1] - s[2] <= GEOM_EPS * s[2] {
        return Err(GeometryError::DegenerateTriangle(l));
    }
    Ok(())
}

/// Heron's formula in the cancellation-free ordering.
pub fn triangle_area(lengths: [f64; 3]) -> Result<f64, GeometryError> {
    check_lengths(lengths)?;
    let mut s = lengths;
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    Ok(0.25 * p.max(0.0).sqrt())
}

pub fn triangle_angles(lengths: [f64; 3]) -> Result<TriangleAngles, GeometryError> {
    let area4 = 4.0 * triangle_area(lengths)?;
    let [lij, ljk, lki] = lengths;
    let (a2, b2, c2) = (lij * lij, ljk * ljk, lki * lki);
    // tan(theta) = 4A / (sum of squared adjacent sides - squared opposite side)
    Ok(TriangleAngles([
        area4.atan2(a2 + c2 - b2),
        area4.atan2(a2 + b2 - c2),
        area4.atan2(b2 + c2 - a2),
    ]))
}

pub fn layout_triangle(lengths: [f64; 3]) -> Result<[Point2<f64>; 3], GeometryError> {
    let area = triangle_area(lengths)?;
    let [lij, ljk, lki] = lengths;
    let x = (lij * lij + lki * lki - ljk * ljk) / (2.0 * lij);
    let y = 2.0 * area / lij;
    Ok([Point2::origin(), Point2::new(lij, 0.0), Point2::new(x, y)])
}

fn signed_distance(a: Point2<f64>, b: Point2<f64>, p: Point2<f64>) -> f64 {
    let e = b - a;
    let w = p - a;
    (e.x * w.y - e.y * w.x) / e.norm()
}

pub fn face_circle(tri: &DecoratedTriangle) -> Result<FaceCircle, GeometryError> {
    let [pi, pj, pk] = layout_triangle(tri.lengths)?;
    let [ri, rj, rk] = tri.radii;
    let lij = pj.x;
    // Equal power with respect to i and j, then i and k.
    let cx = (lij * lij + ri * ri - rj * rj) / (2.0 * lij);
    let pk2 = pk.coords.norm_squared();
    let cy = (pk2 + ri * ri - rk * rk - 2.0 * cx * pk.x) / (2.0 * pk.y);
    let center = Point2::new(cx, cy);
    let rho2 = center.coords.norm_squared() - ri * ri;
    let scale = tri.lengths.iter().fold(0.0f64, |m, &l| m.max(l));
    if !(rho2 > GEOM_EPS * scale * scale) {
        return Err(GeometryError::ImaginaryRadicalCircle(rho2));
    }
    Ok(FaceCircle {
        center,
        radius: rho2.sqrt(),
        edge_distances: [cy, signed_distance(pj, pk, center), signed_distance(pk, pi, center)],
    })
}

impl EdgeCircleAngles {
    pub fn from_face_circle(fc: &FaceCircle) -> Self {
        EdgeCircleAngles(fc.edge_distances.map(|h| (h / fc.radius).clamp(-1.0, 1.0).acos()))
    }
}

pub fn edge_circle_angles(tri: &DecoratedTriangle) -> Result<EdgeCircleAngles, GeometryError> {
    Ok(EdgeCircleAngles::from_face_circle(&face_circle(tri)?))
}

/// The five lengths of two triangles `(i, j, k)` and `(j, i, l)` hinged
/// along `{ij}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hinge {
    pub ij: f64,
    pub jk: f64,
    pub ki: f64,
    pub il: f64,
    pub lj: f64,
}

impl Hinge {
    /// The same hinge seen from the other triangle.
    pub fn mirrored(self) -> Self {
        Hinge {
            ij: self.ij,
            jk: self.il,
            ki: self.lj,
            il: self.jk,
            lj: self.ki,
        }
    }
}

/// Length of the diagonal `{kl}` after unfolding the hinge into the plane.
pub fn flip_diagonal_length(h: &Hinge) -> Result<f64, GeometryError> {
    let [_, _, k] = layout_triangle([h.ij, h.jk, h.ki])?;
    // Triangle (i, j, l) laid out above the axis, then reflected below it.
    let [_, _, l_up] = layout_triangle([h.ij, h.lj, h.il])?;
    let l = Point2::new(l_up.x, -l_up.y);
    let t = k.y / (k.y - l.y);
    let x_cross = k.x + t * (l.x - k.x);
    let slack = GEOM_EPS * h.ij;
    if !(x_cross > slack && x_cross < h.ij - slack) {
        return Err(GeometryError::NonConvexQuad);
    }
    let d: Vector2<f64> = l - k;
    Ok(d.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn equilateral_angles() {
        let a = triangle_angles([1.0, 1.0, 1.0]).unwrap();
        for t in a.0 {
            assert!(close(t, FRAC_PI_3, 1e-15));
        }
    }

    #[test]
    fn right_angle_opposite_hypotenuse() {
        // l_ij = 3, l_jk = 4, l_ki = 5: the angle at j faces l_ki.
        let a = triangle_angles([3.0, 4.0, 5.0]).unwrap();
        assert!(close(a.0[1], FRAC_PI_2, 1e-15));
        assert!(close(a.sum(), PI, 1e-15));
    }

    #[test]
    fn collapsed_triangle_rejected() {
        assert!(matches!(
            triangle_angles([1.0, 1.0, 2.0]),
            Err(GeometryError::DegenerateTriangle(_))
        ));
        assert!(triangle_angles([1.0, 0.0, 1.0]).is_err());
        assert!(triangle_angles([1.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn equilateral_layout() {
        let [a, b, c] = layout_triangle([1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a, Point2::origin());
        assert_eq!(b, Point2::new(1.0, 0.0));
        assert!(close(c.x, 0.5, 1e-15) && close(c.y, 3f64.sqrt() / 2.0, 1e-15));
    }

    #[test]
    fn right_triangle_layout_reproduces_lengths() {
        let l = [3.0, 4.0, 5.0];
        let [a, b, c] = layout_triangle(l).unwrap();
        assert!(close((b - a).norm(), 3.0, 1e-12));
        assert!(close((c - b).norm(), 4.0, 1e-12));
        assert!(close((a - c).norm(), 5.0, 1e-12));
    }

    #[test]
    fn equilateral_face_circle() {
        let tri = DecoratedTriangle {
            lengths: [3.0; 3],
            radii: [1.0; 3],
        };
        let fc = face_circle(&tri).unwrap();
        let bary = Point2::new(1.5, 3f64.sqrt() / 2.0);
        assert!((fc.center - bary).norm() < 1e-14);
        assert!(close(fc.radius, 2f64.sqrt(), 1e-14));
        for h in fc.edge_distances {
            assert!(close(h, 3f64.sqrt() / 2.0, 1e-14));
        }
        // alpha = arccos(sqrt(3/8)), cross-checked by intersecting the circle
        // with the edge line and measuring the tangent direction there.
        let a = EdgeCircleAngles::from_face_circle(&fc);
        let half_chord = (fc.radius.powi(2) - 0.75).sqrt();
        let hit = Point2::new(1.5 + half_chord, 0.0);
        let radial = hit - fc.center;
        let tangent = Vector2::new(-radial.y, radial.x).normalize();
        let edge_dir = Vector2::new(-1.0, 0.0);
        // Center lies inside, so the interior angle is the acute one.
        let oracle = tangent.dot(&edge_dir).abs().acos();
        for t in a.0 {
            assert!(close(t, (3.0f64 / 8.0).sqrt().acos(), 1e-14));
            assert!(close(t, 0.9117, 1e-4));
            assert!(close(t, oracle, 1e-12));
        }
    }

    #[test]
    fn right_triangle_face_circle_is_orthogonal() {
        let tri = DecoratedTriangle {
            lengths: [3.0, 4.0, 5.0],
            radii: [0.5; 3],
        };
        let fc = face_circle(&tri).unwrap();
        let pts = layout_triangle(tri.lengths).unwrap();
        // Direct substitution: |c - v_p|^2 - r_p^2 is the same for all p.
        let powers: Vec<f64> = pts
            .iter()
            .zip(tri.radii)
            .map(|(p, r)| (fc.center - p).norm_squared() - r * r)
            .collect();
        for p in &powers {
            assert!(close(*p, fc.radius.powi(2), 1e-10));
        }
    }

    #[test]
    fn center_on_edge_line_gives_right_angle() {
        let fc = FaceCircle {
            center: Point2::new(0.5, 0.0),
            radius: 1.0,
            edge_distances: [0.0, 0.3, 0.3],
        };
        assert_eq!(EdgeCircleAngles::from_face_circle(&fc).0[0], FRAC_PI_2);
    }

    #[test]
    fn clamped_angles_when_line_misses() {
        let fc = FaceCircle {
            center: Point2::new(0.0, 0.0),
            radius: 1.0,
            edge_distances: [2.0, -2.0, 0.5],
        };
        let a = EdgeCircleAngles::from_face_circle(&fc).0;
        assert_eq!(a[0], 0.0);
        assert_eq!(a[1], PI);
    }

    #[test]
    fn small_radii_approach_circumcircle() {
        // Regression value only: with r -> 0 the face-circle tends to the
        // circumcircle, whose distance to edge ij is R cos(theta_k).
        let l = [3.0, 4.0, 5.0];
        let tri = DecoratedTriangle {
            lengths: l,
            radii: [1e-6; 3],
        };
        let a = edge_circle_angles(&tri).unwrap();
        let th = triangle_angles(l).unwrap();
        assert!((a.0[0] - th.0[2]).abs() < 1e-6);
        assert!((a.0[0] - 0.6f64.asin()).abs() < 1e-6);
    }

    #[test]
    fn imaginary_radical_circle() {
        // Overlapping big circles: power at the radical center is negative.
        let tri = DecoratedTriangle {
            lengths: [1.0; 3],
            radii: [2.0; 3],
        };
        assert!(matches!(face_circle(&tri), Err(GeometryError::ImaginaryRadicalCircle(_))));
    }

    #[test]
    fn rhombus_diagonal() {
        let h = Hinge {
            ij: 1.0,
            jk: 1.0,
            ki: 1.0,
            il: 1.0,
            lj: 1.0,
        };
        assert!(close(flip_diagonal_length(&h).unwrap(), 3f64.sqrt(), 1e-15));
    }

    #[test]
    fn kite_diagonal_is_twice_the_height() {
        let h = Hinge {
            ij: 2.0,
            jk: 1.7,
            ki: 1.3,
            il: 1.3,
            lj: 1.7,
        };
        let [_, _, k] = layout_triangle([h.ij, h.jk, h.ki]).unwrap();
        assert!(close(flip_diagonal_length(&h).unwrap(), 2.0 * k.y, 1e-14));
    }

    #[test]
    fn non_convex_hinge_rejected() {
        // k sits far beyond j, so kl passes outside the open segment ij.
        let h = Hinge {
            ij: 1.0,
            jk: 0.3,
            ki: 1.2,
            il: 1.0,
            lj: 1.0,
        };
        assert_eq!(flip_diagonal_length(&h), Err(GeometryError::NonConvexQuad));
    }

    fn tri_lengths() -> impl Strategy<Value = [f64; 3]> {
        (0.2f64..2.0, 0.2f64..2.0, 0.05f64..0.95).prop_map(|(a, b, t)| {
            // third side strictly between |a-b| and a+b
            let lo = (a - b).abs();
            let hi = a + b;
            [a, b, lo + (hi - lo) * t]
        })
    }

    proptest! {
        #[test]
        fn layout_reproduces_lengths(l in tri_lengths()) {
            let [a, b, c] = layout_triangle(l).unwrap();
            prop_assert!(close((b - a).norm(), l[0], 1e-12));
            prop_assert!(close((c - b).norm(), l[1], 1e-12));
            prop_assert!(close((a - c).norm(), l[2], 1e-12));
            prop_assert!(c.y > 0.0);
        }

        #[test]
        fn angles_sum_to_pi(l in tri_lengths()) {
            let a = triangle_angles(l).unwrap();
            prop_assert!((a.sum() - PI).abs() < 1e-12);
            prop_assert!(a.0.iter().all(|&t| t > 0.0 && t < PI));
        }

        #[test]
        fn face_circle_invariants(l in tri_lengths(), rf in prop::array::uniform3(0.02f64..0.3), s in 0.1f64..10.0) {
            let min_l = l.iter().cloned().fold(f64::INFINITY, f64::min);
            let radii = rf.map(|f| f * min_l);
            let tri = DecoratedTriangle { lengths: l, radii };
            let fc = face_circle(&tri).unwrap();
            let pts = layout_triangle(l).unwrap();
            for (p, r) in pts.iter().zip(radii) {
                let res = (fc.center - p).norm_squared() - r * r - fc.radius.powi(2);
                prop_assert!(res.abs() <= ORTHO_TOL * (fc.center - p).norm_squared().max(1.0));
            }
            let ang = EdgeCircleAngles::from_face_circle(&fc);
            for (a, h) in ang.0.iter().zip(fc.edge_distances) {
                prop_assert!((a.cos() * fc.radius - h).abs() < 1e-12 * (1.0 + fc.radius));
            }
            // Homogeneity.
            let scaled = DecoratedTriangle { lengths: l.map(|x| x * s), radii: radii.map(|x| x * s) };
            let fs = face_circle(&scaled).unwrap();
            prop_assert!(close(fs.radius, s * fc.radius, 1e-10));
            prop_assert!((fs.center - fc.center * s).norm() < 1e-9 * s * (1.0 + fc.center.coords.norm()));
            // Cyclic relabelling keeps radius and distances (rotated).
            let rot = DecoratedTriangle { lengths: [l[1], l[2], l[0]], radii: [radii[1], radii[2], radii[0]] };
            let fr = face_circle(&rot).unwrap();
            prop_assert!(close(fr.radius, fc.radius, 1e-9));
            for c in 0..3 {
                prop_assert!((fr.edge_distances[c] - fc.edge_distances[(c + 1) % 3]).abs() < 1e-9 * (1.0 + fc.radius));
            }
        }

        #[test]
        fn diagonal_matches_angle_sum_law(l1 in tri_lengths(), t in 0.05f64..0.95, u in 0.05f64..0.95, s in 0.2f64..5.0) {
            // Hinge sharing l1[0] as ij; second triangle built on the same base.
            let ij = l1[0];
            let a = 0.5 * ij + u * 1.5;
            let lo = (ij - a).abs();
            let b = lo + (ij + a - lo) * t;
            let h = Hinge { ij, jk: l1[1], ki: l1[2], il: b, lj: a };
            let th1 = triangle_angles([h.ij, h.jk, h.ki]).unwrap();
            let th2 = triangle_angles([h.ij, h.lj, h.il]).unwrap();
            let at_i = th1.0[0] + th2.0[0];
            let at_j = th1.0[1] + th2.0[1];
            match flip_diagonal_length(&h) {
                Ok(d) => {
                    prop_assert!(at_i < PI && at_j < PI);
                    let oracle = (h.ki * h.ki + h.il * h.il - 2.0 * h.ki * h.il * at_i.cos()).sqrt();
                    prop_assert!(close(d, oracle, 1e-12));
                    let m = flip_diagonal_length(&h.mirrored()).unwrap();
                    prop_assert!(close(d, m, 1e-12));
                    let hs = Hinge { ij: h.ij * s, jk: h.jk * s, ki: h.ki * s, il: h.il * s, lj: h.lj * s };
                    prop_assert!(close(flip_diagonal_length(&hs).unwrap(), s * d, 1e-12));
                }
                Err(e) => {
                    prop_assert_eq!(e, GeometryError::NonConvexQuad);
                    prop_assert!(at_i >= PI - 1e-9 || at_j >= PI - 1e-9);
                }
            }
        }
    }
}
