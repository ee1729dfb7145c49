//! Finite boxes of the integer lattice.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// `[-H, H]^d` with nearest-neighbour unit edges, rooted at the origin.
/// Vertices are numbered lexicographically with the first coordinate
/// varying fastest.
pub fn build_lattice_box(d: usize, halfwidth: usize) -> Result<WeightedGraph> {
    if d == 0 || halfwidth == 0 {
        return Err(Error::InvalidArgument(format!(
            "lattice box needs d >= 1 and H >= 1, got d={d}, H={halfwidth}"
        )));
    }
    let side = 2 * halfwidth + 1;
    let total = side
        .checked_pow(d as u32)
        .filter(|&t| t <= 20_000_000)
        .ok_or_else(|| Error::Capacity(format!("box [-{halfwidth},{halfwidth}]^{d} is too large")))?;
    let h = halfwidth as i64;
    let point = |mut k: usize| -> Vec<i64> {
        (0..d)
            .map(|_| {
                let x = (k % side) as i64 - h;
                k /= side;
                x
            })
            .collect()
    };
    let coords: Vec<Vec<f64>> = (0..total)
        .map(|k| point(k).into_iter().map(|x| x as f64).collect())
        .collect();
    let exact = (0..total)
        .map(|k| point(k).into_iter().map(Rational64::from_integer).collect())
        .collect();
    let mut edges = Vec::with_capacity(d * total);
    let mut stride = 1;
    for _ in 0..d {
        for k in 0..total {
            if (k / stride) % side + 1 < side {
                edges.push((k, k + stride, 1.0));
            }
        }
        stride *= side;
    }
    let root = (total - 1) / 2;
    WeightedGraph::new(coords, edges, root)?.with_exact_coords(exact)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_boxes() {
        let g = build_lattice_box(1, 1).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (3, 2));
        assert_eq!(g.coords(g.root()), &[0.0]);
        let g = build_lattice_box(2, 1).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (9, 12));
        assert_eq!(g.coords(g.root()), &[0.0, 0.0]);
        assert_eq!(build_lattice_box(1, 5).unwrap().num_vertices(), 11);
        assert!(build_lattice_box(0, 3).is_err());
    }

    #[test]
    fn edges_are_unit_length() {
        let g = build_lattice_box(3, 2).unwrap();
        for e in g.edges() {
            assert_eq!(g.euclidean(e.u, e.v), 1.0);
        }
        assert_eq!(g.num_edges(), 3 * 4 * 25);
    }
}
