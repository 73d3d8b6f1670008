//! Exact coordinate sidecar: one vertex per line, each coordinate written as
//! `numerator/denominator` in lowest terms with a positive denominator,
//! coordinates separated by a single space, lines ended by `\n`.

use std::fmt::Write as _;

use afm::{ExactPoint2, ExactPoint3, Point2, Point3, Rational};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("line {line}: expected {want} coordinates, found {got}")]
    Arity { line: usize, want: usize, got: usize },
    #[error("line {line}: bad rational {token:?}")]
    Token { line: usize, token: String },
}

fn put(s: &mut String, q: &Rational) {
    let _ = write!(s, "{}/{}", q.numer(), q.denom());
}

fn coords(text: &str, want: usize) -> Result<Vec<Vec<Rational>>, SidecarError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            let line = i + 1;
            let row = l
                .split(' ')
                .map(|t| {
                    if !t.contains('/') {
                        return Err(SidecarError::Token { line, token: t.to_string() });
                    }
                    t.parse::<Rational>().map_err(|_| SidecarError::Token { line, token: t.to_string() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != want {
                return Err(SidecarError::Arity { line, want, got: row.len() });
            }
            Ok(row)
        })
        .collect()
}

pub fn write_2d(points: &[ExactPoint2]) -> String {
    let mut s = String::new();
    for p in points {
        put(&mut s, &p.x);
        s.push(' ');
        put(&mut s, &p.y);
        s.push('\n');
    }
    s
}

pub fn write_3d(points: &[ExactPoint3]) -> String {
    let mut s = String::new();
    for p in points {
        put(&mut s, &p.x);
        s.push(' ');
        put(&mut s, &p.y);
        s.push(' ');
        put(&mut s, &p.z);
        s.push('\n');
    }
    s
}

pub fn read_2d(text: &str) -> Result<Vec<ExactPoint2>, SidecarError> {
    Ok(coords(text, 2)?
        .into_iter()
        .map(|mut r| {
            let y = r.pop().expect("arity checked");
            Point2::new(r.pop().expect("arity checked"), y)
        })
        .collect())
}

pub fn read_3d(text: &str) -> Result<Vec<ExactPoint3>, SidecarError> {
    Ok(coords(text, 3)?
        .into_iter()
        .map(|mut r| {
            let z = r.pop().expect("arity checked");
            let y = r.pop().expect("arity checked");
            Point3::new(r.pop().expect("arity checked"), y, z)
        })
        .collect())
}
