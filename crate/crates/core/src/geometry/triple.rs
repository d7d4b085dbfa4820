use super::{HalfPlane, Point2};
use crate::error::{Error, Result};

/// Which regions meet at a candidate vertex. Site indices refer to the site
/// list, boundary indices to the domain half-planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleIndices {
    /// Three sites `i, j, l`.
    Sites(usize, usize, usize),
    /// Sites `i, j` and domain edge `l`.
    SitesAndBoundary { i: usize, j: usize, l: usize },
    /// Site `i` and domain edges `j, l`.
    SiteAndBoundaries { i: usize, j: usize, l: usize },
}

/// Candidate vertex where the given regions touch: the solution of the 2x2
/// system formed by the two bisector or edge lines through it.
///
/// For fixed indices the result is affine in `xi`. Fails when the two lines
/// are parallel up to a relative tolerance of `1e-12`.
pub fn triple_point(indices: TripleIndices, sites: &[Point2], boundary: &[HalfPlane], xi: &[f64]) -> Result<Point2> {
    let site =
        |k: usize| sites.get(k).copied().ok_or_else(|| Error::InvalidInput(format!("site index {k} out of range")));
    let weight =
        |k: usize| xi.get(k).copied().ok_or_else(|| Error::InvalidInput(format!("weight index {k} out of range")));
    let edge = |k: usize| {
        boundary.get(k).copied().ok_or_else(|| Error::InvalidInput(format!("boundary index {k} out of range")))
    };
    let (r1, b1, r2, b2) = match indices {
        TripleIndices::Sites(i, j, l) => {
            (site(i)? - site(j)?, weight(i)? - weight(j)?, site(i)? - site(l)?, weight(i)? - weight(l)?)
        }
        TripleIndices::SitesAndBoundary { i, j, l } => {
            let h = edge(l)?;
            (site(i)? - site(j)?, weight(i)? - weight(j)?, h.normal, h.offset)
        }
        TripleIndices::SiteAndBoundaries { i, j, l } => {
            site(i)?;
            let (hj, hl) = (edge(j)?, edge(l)?);
            (hj.normal, hj.offset, hl.normal, hl.offset)
        }
    };
    solve_rows(r1, b1, r2, b2)
}

fn solve_rows(r1: Point2, b1: f64, r2: Point2, b2: f64) -> Result<Point2> {
    let det = r1.cross(r2);
    if !(det.abs() > 1e-12 * r1.norm() * r2.norm()) {
        return Err(Error::Singular(format!("lines with directions {r1:?} and {r2:?} are parallel")));
    }
    Ok(Point2::new((b1 * r2.y - b2 * r1.y) / det, (r1.x * b2 - r2.x * b1) / det))
}
