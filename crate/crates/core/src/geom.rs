//! Points, orientation predicates and the closed-form constructions used by
//! the mapping engine.
//!
//! Every routine is generic over [`Scalar`]; with [`Rational`] coordinates all
//! predicates are exact and all constructions are closed (no rounding).

use thiserror::Error;

use crate::scalar::Scalar;
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("line is defined by two coincident points")]
    DegenerateLine,
    #[error("triangle is degenerate or clockwise")]
    DegenerateTriangle,
    #[error("affine weights sum to {0}, expected exactly 1")]
    WeightSum(String),
    #[error("{points} points but {weights} weights")]
    WeightCount { points: usize, weights: usize },
    #[error("coordinate does not fit in binary64")]
    Overflow,
}

/// Sign of an orientation determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative = -1,
    Zero = 0,
    Positive = 1,
}

impl Sign {
    pub fn of<S: Scalar>(v: &S) -> Sign {
        if v.is_positive() {
            Sign::Positive
        } else if v.is_negative() {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    fn from_f64(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sign::Positive
    }

    pub fn as_i8(self) -> i8 {
        self as i8
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Point2<S> {
    pub x: S,
    pub y: S,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Point3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Scalar> Point2<S> {
    pub fn new(x: S, y: S) -> Self {
        Point2 { x, y }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Point2::new(self.x.clone() - o.x.clone(), self.y.clone() - o.y.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Point2::new(self.x.clone() + o.x.clone(), self.y.clone() + o.y.clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        Point2::new(self.x.clone() * s.clone(), self.y.clone() * s.clone())
    }

    pub fn cross(&self, o: &Self) -> S {
        self.x.clone() * o.y.clone() - self.y.clone() * o.x.clone()
    }

    pub fn dot(&self, o: &Self) -> S {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone()
    }

    pub fn dist2(&self, o: &Self) -> S {
        let d = self.sub(o);
        d.dot(&d)
    }

    /// `self + t (other - self)`
    pub fn lerp(&self, other: &Self, t: &S) -> Self {
        self.add(&other.sub(self).scale(t))
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64_nearest(), self.y.to_f64_nearest()]
    }

    pub fn from_f64(p: [f64; 2]) -> Option<Self> {
        Some(Point2::new(S::from_f64_exact(p[0])?, S::from_f64_exact(p[1])?))
    }
}

impl<S: Scalar> Point3<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Point3 { x, y, z }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Point3::new(self.x.clone() - o.x.clone(), self.y.clone() - o.y.clone(), self.z.clone() - o.z.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Point3::new(self.x.clone() + o.x.clone(), self.y.clone() + o.y.clone(), self.z.clone() + o.z.clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        Point3::new(self.x.clone() * s.clone(), self.y.clone() * s.clone(), self.z.clone() * s.clone())
    }

    pub fn cross(&self, o: &Self) -> Self {
        Point3::new(
            self.y.clone() * o.z.clone() - self.z.clone() * o.y.clone(),
            self.z.clone() * o.x.clone() - self.x.clone() * o.z.clone(),
            self.x.clone() * o.y.clone() - self.y.clone() * o.x.clone(),
        )
    }

    pub fn dot(&self, o: &Self) -> S {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone() + self.z.clone() * o.z.clone()
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero() && self.z.is_zero()
    }

    pub fn lerp(&self, other: &Self, t: &S) -> Self {
        self.add(&other.sub(self).scale(t))
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.x.to_f64_nearest(), self.y.to_f64_nearest(), self.z.to_f64_nearest()]
    }

    pub fn from_f64(p: [f64; 3]) -> Option<Self> {
        Some(Point3::new(S::from_f64_exact(p[0])?, S::from_f64_exact(p[1])?, S::from_f64_exact(p[2])?))
    }

    pub fn xy(&self) -> Point2<S> {
        Point2::new(self.x.clone(), self.y.clone())
    }
}

/// Closed segment between two distinct points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment2<S> {
    pub a: Point2<S>,
    pub b: Point2<S>,
}

impl<S: Scalar> Segment2<S> {
    pub fn new(a: Point2<S>, b: Point2<S>) -> Result<Self, GeomError> {
        if a == b {
            return Err(GeomError::DegenerateSegment);
        }
        Ok(Segment2 { a, b })
    }
}

/// Twice the signed area of `(a, b, c)`.
pub fn orient2d_det<S: Scalar>(a: &Point2<S>, b: &Point2<S>, c: &Point2<S>) -> S {
    let l = (b.x.clone() - a.x.clone()) * (c.y.clone() - a.y.clone());
    let r = (b.y.clone() - a.y.clone()) * (c.x.clone() - a.x.clone());
    l - r
}

/// Orientation of the triple: `Positive` for counterclockwise.
pub fn orient2d<S: Scalar>(a: &Point2<S>, b: &Point2<S>, c: &Point2<S>) -> Sign {
    let l = (b.x.clone() - a.x.clone()) * (c.y.clone() - a.y.clone());
    let r = (b.y.clone() - a.y.clone()) * (c.x.clone() - a.x.clone());
    match l.partial_cmp(&r) {
        Some(std::cmp::Ordering::Greater) => Sign::Positive,
        Some(std::cmp::Ordering::Less) => Sign::Negative,
        _ => Sign::Zero,
    }
}

/// Exact orientation of three binary64 points (adaptive-precision evaluation,
/// the sign is always correct for finite inputs).
pub fn orient2d_f64(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Sign {
    let det = robust::orient2d(
        robust::Coord { x: a[0], y: a[1] },
        robust::Coord { x: b[0], y: b[1] },
        robust::Coord { x: c[0], y: c[1] },
    );
    Sign::from_f64(det)
}

/// Intersection of segment `s` with the infinite line through `p` and `q`.
///
/// Returns `None` when the two are parallel (including colinear overlap) or
/// when the crossing falls outside the segment. With `inclusive` the segment
/// endpoints count as part of the segment.
pub fn segment_line_intersection<S: Scalar>(
    s: &Segment2<S>,
    p: &Point2<S>,
    q: &Point2<S>,
    inclusive: bool,
) -> Result<Option<Point2<S>>, GeomError> {
    if s.a == s.b {
        return Err(GeomError::DegenerateSegment);
    }
    if p == q {
        return Err(GeomError::DegenerateLine);
    }
    Ok(segment_line_param(&s.a, &s.b, p, q, inclusive).map(|t| s.a.lerp(&s.b, &t)))
}

/// Parameter `t` such that `a + t (b - a)` lies on line `pq`, restricted to
/// `[0, 1]` (inclusive) or `(0, 1)`.
pub fn segment_line_param<S: Scalar>(
    a: &Point2<S>,
    b: &Point2<S>,
    p: &Point2<S>,
    q: &Point2<S>,
    inclusive: bool,
) -> Option<S> {
    let da = orient2d_det(p, q, a);
    let db = orient2d_det(p, q, b);
    let denom = da.clone() - db;
    if denom.is_zero() {
        return None;
    }
    let t = da / denom;
    let inside = if inclusive { t >= S::zero() && t <= S::one() } else { t > S::zero() && t < S::one() };
    inside.then_some(t)
}

/// Whether `p` lies inside the counterclockwise triangle `(a, b, c)`.
pub fn point_in_triangle<S: Scalar>(
    p: &Point2<S>,
    a: &Point2<S>,
    b: &Point2<S>,
    c: &Point2<S>,
    strict: bool,
) -> Result<bool, GeomError> {
    if orient2d(a, b, c) != Sign::Positive {
        return Err(GeomError::DegenerateTriangle);
    }
    let s = [orient2d(a, b, p), orient2d(b, c, p), orient2d(c, a, p)];
    Ok(if strict { s.iter().all(|&x| x == Sign::Positive) } else { s.iter().all(|&x| x != Sign::Negative) })
}

/// `true` iff the quad `a, b, c, d` (in cyclic order) turns strictly left at
/// every corner.
pub fn is_strictly_convex_quad<S: Scalar>(a: &Point2<S>, b: &Point2<S>, c: &Point2<S>, d: &Point2<S>) -> bool {
    orient2d(a, b, c) == Sign::Positive
        && orient2d(b, c, d) == Sign::Positive
        && orient2d(c, d, a) == Sign::Positive
        && orient2d(d, a, b) == Sign::Positive
}

/// Weighted sum of points; the weights must sum to exactly one.
pub fn affine_combination<S: Scalar>(points: &[Point2<S>], weights: &[S]) -> Result<Point2<S>, GeomError> {
    if points.len() != weights.len() || points.is_empty() {
        return Err(GeomError::WeightCount { points: points.len(), weights: weights.len() });
    }
    let sum = weights.iter().fold(S::zero(), |acc, w| acc + w.clone());
    if !sum.is_one() {
        return Err(GeomError::WeightSum(format!("{sum:?}")));
    }
    let mut acc = Point2::new(S::zero(), S::zero());
    for (p, w) in points.iter().zip(weights) {
        if !w.is_zero() {
            acc = acc.add(&p.scale(w));
        }
    }
    Ok(acc)
}

/// Nearest-binary64 rounding of an exact point, together with the exact
/// value of the rounded coordinates.
pub fn snap_to_double(p: &Point2<Rational>) -> Result<([f64; 2], Point2<Rational>), GeomError> {
    let d = p.to_f64();
    if !d[0].is_finite() || !d[1].is_finite() {
        return Err(GeomError::Overflow);
    }
    let back = Point2::from_f64(d).ok_or(GeomError::Overflow)?;
    Ok((d, back))
}

/// Exact value of `p` as binary64 coordinates, if it is representable.
pub fn exact_f64(p: &Point2<Rational>) -> Option<[f64; 2]> {
    let d = p.to_f64();
    if !d[0].is_finite() || !d[1].is_finite() {
        return None;
    }
    // a rational equals its rounding iff the denominator is a power of two and
    // the value has at most 53 significant bits; the round trip checks both
    let back: Point2<Rational> = Point2::from_f64(d)?;
    (back == *p).then_some(d)
}

/// Exact rational from a binary64 value.
pub fn exact(v: f64) -> Rational {
    Rational::from_float(v).expect("finite coordinate")
}

pub fn ept(x: f64, y: f64) -> Point2<Rational> {
    Point2::new(exact(x), exact(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn p(x: i64, y: i64) -> Point2<Rational> {
        Point2::new(ratio(x, 1), ratio(y, 1))
    }

    fn pr(x: (i64, i64), y: (i64, i64)) -> Point2<Rational> {
        Point2::new(ratio(x.0, x.1), ratio(y.0, y.1))
    }

    #[test]
    fn orient_examples() {
        assert_eq!(orient2d(&p(0, 0), &p(1, 0), &p(0, 1)), Sign::Positive);
        assert_eq!(orient2d(&p(0, 0), &p(2, 1), &p(4, 2)), Sign::Zero);
        assert_eq!(orient2d(&p(0, 0), &p(0, 1), &p(1, 0)), Sign::Negative);
    }

    #[test]
    fn f64_orientation_convention() {
        assert_eq!(orient2d_f64([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), Sign::Positive);
        assert_eq!(orient2d_f64([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]), Sign::Negative);
        // colinear to the last bit
        assert_eq!(orient2d_f64([0.1, 0.1], [0.2, 0.2], [0.30000000000000004, 0.30000000000000004]), Sign::Zero);
    }

    #[test]
    fn segment_line_examples() {
        let s = Segment2::new(p(0, 0), p(2, 2)).unwrap();
        assert_eq!(segment_line_intersection(&s, &p(0, 2), &p(2, 0), true).unwrap(), Some(p(1, 1)));

        let s = Segment2::new(p(0, 0), p(1, 0)).unwrap();
        assert_eq!(segment_line_intersection(&s, &p(0, 1), &p(1, 1), true).unwrap(), None);

        let s = Segment2::new(p(0, 0), p(4, 0)).unwrap();
        let x = segment_line_intersection(&s, &p(1, -1), &p(1, 1), true).unwrap().unwrap();
        assert_eq!(x, p(1, 0));
        // on the segment: a + t (b - a) with t = 1/4
        assert_eq!(p(0, 0).lerp(&p(4, 0), &ratio(1, 4)), x);
        // on the line: colinear with p, q
        assert_eq!(orient2d(&p(1, -1), &p(1, 1), &x), Sign::Zero);
    }

    #[test]
    fn segment_line_endpoint_flag() {
        let s = Segment2::new(p(0, 0), p(2, 0)).unwrap();
        assert_eq!(segment_line_intersection(&s, &p(2, -1), &p(2, 1), true).unwrap(), Some(p(2, 0)));
        assert_eq!(segment_line_intersection(&s, &p(2, -1), &p(2, 1), false).unwrap(), None);
        assert_eq!(segment_line_intersection(&s, &p(3, -1), &p(3, 1), true).unwrap(), None);
    }

    #[test]
    fn degenerate_segment_is_an_error() {
        assert_eq!(Segment2::new(p(1, 1), p(1, 1)), Err(GeomError::DegenerateSegment));
        let s = Segment2 { a: p(1, 1), b: p(1, 1) };
        assert_eq!(segment_line_intersection(&s, &p(0, 0), &p(1, 0), true), Err(GeomError::DegenerateSegment));
        let s = Segment2::new(p(0, 0), p(1, 1)).unwrap();
        assert_eq!(segment_line_intersection(&s, &p(0, 0), &p(0, 0), true), Err(GeomError::DegenerateLine));
    }

    #[test]
    fn point_in_triangle_examples() {
        let (a, b, c) = (p(0, 0), p(1, 0), p(0, 1));
        assert!(point_in_triangle(&pr((1, 3), (1, 3)), &a, &b, &c, true).unwrap());
        assert!(!point_in_triangle(&pr((1, 2), (0, 1)), &a, &b, &c, true).unwrap());
        assert!(point_in_triangle(&pr((1, 2), (0, 1)), &a, &b, &c, false).unwrap());
        assert!(!point_in_triangle(&p(2, 2), &a, &b, &c, false).unwrap());
        assert_eq!(point_in_triangle(&p(0, 0), &a, &p(2, 0), &p(3, 0), false), Err(GeomError::DegenerateTriangle));
    }

    #[test]
    fn convex_quad_examples() {
        assert!(is_strictly_convex_quad(&p(0, 0), &p(1, 0), &p(1, 1), &p(0, 1)));
        // dart: (0,0),(4,0),(2,1),(2,4) turns right at (2,1)
        assert!(!is_strictly_convex_quad(&p(0, 0), &p(4, 0), &p(2, 1), &p(2, 4)));
        assert!(!is_strictly_convex_quad(&p(0, 0), &p(1, 0), &p(2, 0), &p(1, 1)));
    }

    #[test]
    fn affine_examples() {
        let w = [ratio(99, 200), ratio(99, 200), ratio(2, 200)];
        let q = affine_combination(&[p(2, 0), p(0, 2), p(0, 0)], &w).unwrap();
        assert_eq!(q, pr((99, 100), (99, 100)));

        let q = affine_combination(&[p(2, 0), p(0, 2), p(0, 0)], &[ratio(1, 1), ratio(0, 1), ratio(0, 1)]).unwrap();
        assert_eq!(q, p(2, 0));

        let q = affine_combination(&[p(1, 0), p(0, 0)], &[ratio(99, 100), ratio(1, 100)]).unwrap();
        assert_eq!(q, pr((99, 100), (0, 1)));

        assert!(matches!(
            affine_combination(&[p(1, 0), p(0, 0)], &[ratio(1, 2), ratio(1, 3)]),
            Err(GeomError::WeightSum(_))
        ));
    }

    #[test]
    fn snap_examples() {
        let (d, back) = snap_to_double(&pr((1, 2), (3, 4))).unwrap();
        assert_eq!(d, [0.5, 0.75]);
        assert_eq!(back, pr((1, 2), (3, 4)));

        let third = pr((1, 3), (0, 1));
        let (d, back) = snap_to_double(&third).unwrap();
        assert_eq!(d[0], 1.0 / 3.0);
        assert_ne!(back, third);
        assert_eq!(exact_f64(&third), None);

        let huge = Point2::new(Rational::from_integer(num_traits::pow(BigInt::from(10), 400)), ratio(0, 1));
        assert_eq!(snap_to_double(&huge), Err(GeomError::Overflow));
    }

    #[test]
    fn generic_over_floats() {
        let a = Point2::new(0.0f32, 0.0);
        let b = Point2::new(1.0f32, 0.0);
        let c = Point2::new(0.0f32, 1.0);
        assert_eq!(orient2d(&a, &b, &c), Sign::Positive);
        let m = affine_combination(&[a, b], &[0.5f32, 0.5]).unwrap();
        assert_eq!(m, Point2::new(0.5, 0.0));
    }

    /// Orientation via plain big-integer cross products after clearing all
    /// denominators; independent of the rational arithmetic above.
    fn orient_oracle(pts: [(i64, i64, i64, i64); 3]) -> i8 {
        // point k = (xn/xd, yn/yd)
        let den: BigInt = pts.iter().map(|q| BigInt::from(q.1) * BigInt::from(q.3)).product();
        let scaled: Vec<(BigInt, BigInt)> = pts
            .iter()
            .map(|q| {
                let x = BigInt::from(q.0) * (&den / BigInt::from(q.1));
                let y = BigInt::from(q.2) * (&den / BigInt::from(q.3));
                (x, y)
            })
            .collect();
        let (a, b, c) = (&scaled[0], &scaled[1], &scaled[2]);
        let det = (&b.0 - &a.0) * (&c.1 - &a.1) - (&b.1 - &a.1) * (&c.0 - &a.0);
        match det.sign() {
            num_bigint::Sign::Plus => 1,
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
        }
    }

    fn coord() -> impl Strategy<Value = (i64, i64)> {
        (-50i64..50, 1i64..12)
    }

    fn rpoint() -> impl Strategy<Value = (i64, i64, i64, i64)> {
        (coord(), coord()).prop_map(|(x, y)| (x.0, x.1, y.0, y.1))
    }

    fn to_pt(q: (i64, i64, i64, i64)) -> Point2<Rational> {
        Point2::new(ratio(q.0, q.1), ratio(q.2, q.3))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn orient_matches_integer_oracle(a in rpoint(), b in rpoint(), c in rpoint(), colinear in any::<bool>(), k in -3i64..4) {
            let (pa, pb) = (to_pt(a), to_pt(b));
            let pc = if colinear {
                // c on line ab, exactly
                pa.lerp(&pb, &ratio(k, 2))
            } else {
                to_pt(c)
            };
            let got = orient2d(&pa, &pb, &pc).as_i8();
            let c_tuple = {
                let x = pc.x.clone();
                let y = pc.y.clone();
                let num = |r: &Rational| i64::try_from(r.numer().clone()).unwrap();
                let den = |r: &Rational| i64::try_from(r.denom().clone()).unwrap();
                (num(&x), den(&x), num(&y), den(&y))
            };
            prop_assert_eq!(got, orient_oracle([a, b, c_tuple]));
            if colinear { prop_assert_eq!(got, 0); }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn orient_antisymmetry(a in rpoint(), b in rpoint(), c in rpoint()) {
            let (a, b, c) = (to_pt(a), to_pt(b), to_pt(c));
            let s = orient2d(&a, &b, &c);
            prop_assert_eq!(s, -orient2d(&a, &c, &b));
            prop_assert_eq!(s, orient2d(&b, &c, &a));
        }

        #[test]
        fn crossing_point_lies_on_both(a in rpoint(), b in rpoint(), p in rpoint(), q in rpoint()) {
            let (a, b, p, q) = (to_pt(a), to_pt(b), to_pt(p), to_pt(q));
            prop_assume!(a != b && p != q);
            let s = Segment2::new(a.clone(), b.clone()).unwrap();
            if let Some(x) = segment_line_intersection(&s, &p, &q, true).unwrap() {
                prop_assert_eq!(orient2d(&p, &q, &x), Sign::Zero);
                prop_assert_eq!(orient2d(&a, &b, &x), Sign::Zero);
                let d = b.sub(&a);
                let t = x.sub(&a).dot(&d) / d.dot(&d);
                prop_assert!(t >= ratio(0, 1) && t <= ratio(1, 1));
            } else {
                // no crossing: both endpoints strictly on one side, or parallel
                let sa = orient2d(&p, &q, &a);
                let sb = orient2d(&p, &q, &b);
                prop_assert!(sa == sb && (sa != Sign::Zero || orient2d(&a, &b, &p) == Sign::Zero));
            }
        }

        #[test]
        fn f64_predicate_agrees_with_rational(ax in -1e3f64..1e3, ay in -1e3f64..1e3, bx in -1e3f64..1e3, by in -1e3f64..1e3, t in -2f64..2f64) {
            // c nearly on line ab
            let c = [ax + t * (bx - ax), ay + t * (by - ay)];
            let exact3 = orient2d(&ept(ax, ay), &ept(bx, by), &ept(c[0], c[1]));
            prop_assert_eq!(orient2d_f64([ax, ay], [bx, by], c), exact3);
        }
    }
}
