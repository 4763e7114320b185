//! Even closed walks as vertex sequences, the moves they induce, and the
//! vertex-sequence characterisation of primitive walks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph_model::{Edge, Graph, Move};

/// An even closed walk `(i_1, ..., i_2p)` with `i_{2p+1} = i_1` implied.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClosedWalk {
    vertices: Vec<usize>,
}

impl ClosedWalk {
    /// Validates the walk against `graph`: even length of at least four and
    /// every cyclically consecutive pair an edge.
    pub fn new(graph: &Graph, vertices: Vec<usize>) -> Result<Self> {
        let walk = Self::on_complete(vertices)?;
        if let Some(e) = walk.edges().find(|&e| !graph.has_edge(e)) {
            return Err(Error::InvalidWalk(format!("{e} is not an edge of the graph")));
        }
        Ok(walk)
    }

    /// Validation for a walk on a complete graph: only shape checks.
    pub(crate) fn on_complete(vertices: Vec<usize>) -> Result<Self> {
        let len = vertices.len();
        if len < 4 || !len.is_multiple_of(2) {
            return Err(Error::InvalidWalk(format!(
                "length {len} is not an even number of at least 4"
            )));
        }
        if let Some(l) = (0..len).find(|&l| vertices[l] == vertices[(l + 1) % len]) {
            return Err(Error::InvalidWalk(format!(
                "vertex {} repeats consecutively",
                vertices[l] + 1
            )));
        }
        Ok(ClosedWalk { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of steps `2p`.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Traversed edges in order, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let len = self.vertices.len();
        (0..len).map(move |l| Edge::new(self.vertices[l], self.vertices[(l + 1) % len]))
    }

    /// How many of the positions `i_1..i_2p` hold vertex `v`.
    pub fn vertex_multiplicity(&self, v: usize) -> usize {
        self.vertices.iter().filter(|&&u| u == v).count()
    }

    fn positions(&self) -> HashMap<usize, Vec<usize>> {
        let mut positions: HashMap<usize, Vec<usize>> = HashMap::new();
        for (l, &v) in self.vertices.iter().enumerate() {
            positions.entry(v).or_default().push(l);
        }
        positions
    }

    /// Every vertex is visited once or twice, and for each twice-visited
    /// vertex the two closed sub-walks split there are odd and meet only in
    /// that vertex.
    ///
    /// With multiplicities capped at two, the meeting condition is the same
    /// as no two repeat-chords `(l, l')` crossing, which is what is checked.
    pub fn is_primitive(&self) -> bool {
        let mut chords = Vec::new();
        for pos in self.positions().into_values() {
            match pos.as_slice() {
                [_] => {}
                &[l, l2] => {
                    if (l2 - l) % 2 == 0 {
                        return false;
                    }
                    chords.push((l, l2));
                }
                _ => return false,
            }
        }
        for (k, &(a, b)) in chords.iter().enumerate() {
            for &(c, d) in &chords[k + 1..] {
                let c_inside = a < c && c < b;
                let d_inside = a < d && d < b;
                if c_inside != d_inside {
                    return false;
                }
            }
        }
        true
    }

    /// The move `f_w`: odd-position edges count +1, even-position edges -1.
    pub fn to_move(&self) -> Move {
        Move::from_entries(
            self.edges()
                .enumerate()
                .map(|(l, e)| (e, if l % 2 == 0 { 1 } else { -1 })),
        )
    }

    /// True when no edge is traversed with both signs, i.e. `|f_w|_1` equals
    /// the walk length.
    pub fn is_cancellation_free(&self) -> bool {
        self.to_move().l1_norm() == self.len() as u64
    }

    /// Cyclic shift by `offset` positions.
    pub fn rotated(&self, offset: usize) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.rotate_left(offset % self.len());
        ClosedWalk { vertices }
    }

    /// The same closed walk traversed backwards from `i_1`.
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices[1..].reverse();
        ClosedWalk { vertices }
    }
}

/// `walk_to_move` as a free function.
pub fn walk_to_move(walk: &ClosedWalk) -> Move {
    walk.to_move()
}

pub fn is_square_free(z: &Move) -> bool {
    z.is_square_free()
}

impl fmt::Display for ClosedWalk {
    /// Comma-separated 1-based vertices, e.g. `1,2,3,1,4,5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(|v| (v + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses the comma-separated form; edges are validated only for shape
/// (the walk is taken to live on a complete graph). Use [`ClosedWalk::new`]
/// to validate against a specific graph.
impl FromStr for ClosedWalk {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let vertices = s
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(v) if v > 0 => Ok(v - 1),
                _ => Err(Error::InvalidWalk(format!("bad vertex label {:?}", t.trim()))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::on_complete(vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn walk(s: &str) -> ClosedWalk {
        s.parse().unwrap()
    }

    fn e(i: usize, j: usize) -> Edge {
        Edge::new(i - 1, j - 1)
    }

    #[test]
    fn multiplicities() {
        assert_eq!(walk("1,2,3,4").vertex_multiplicity(0), 1);
        assert_eq!(walk("1,2,3,1,4,5").vertex_multiplicity(0), 2);
        assert_eq!(walk("1,2,3,4").vertex_multiplicity(6), 0);
    }

    #[test]
    fn primitivity_examples() {
        assert!(walk("1,2,3,4").is_primitive());
        assert!(walk("1,2,3,1,4,5").is_primitive());
        assert!(!walk("1,2,3,4,1,2,3,4").is_primitive());
        assert!(!walk("1,2,3,4,5,2,6,7").is_primitive());
        // two triangles joined by a doubled bridge
        assert!(walk("1,2,3,1,4,5,6,4").is_primitive());
    }

    #[test]
    fn crossing_chords_are_not_primitive() {
        // 1 and 2 both repeat with odd gaps but their chords cross
        let w = walk("1,2,3,1,2,4");
        assert!(!w.is_primitive());
        assert!(!w.is_cancellation_free());
    }

    #[test]
    fn moves_alternate_along_the_walk() {
        let z = walk("1,2,3,4").to_move();
        assert_eq!(
            z,
            Move::from_entries([(e(1, 2), 1), (e(3, 4), 1), (e(2, 3), -1), (e(1, 4), -1)])
        );
        let z = walk("1,2,3,1,4,5").to_move();
        let expected = [
            (e(1, 2), 1),
            (e(1, 3), 1),
            (e(4, 5), 1),
            (e(2, 3), -1),
            (e(1, 4), -1),
            (e(1, 5), -1),
        ];
        assert_eq!(z, Move::from_entries(expected));
        assert!(walk("1,2,1,2").to_move().is_zero());
    }

    #[test]
    fn square_free() {
        assert!(is_square_free(&walk("1,2,3,4").to_move()));
        assert!(is_square_free(&walk("1,2,3,1,4,5").to_move()));
        assert!(!is_square_free(&walk("1,2,3,4,1,2,3,4").to_move()));
        assert!(!is_square_free(&walk("1,2,3,1,4,5,6,4").to_move()));
    }

    #[test]
    fn shape_validation() {
        assert!("1,2".parse::<ClosedWalk>().is_err());
        assert!("1,2,3".parse::<ClosedWalk>().is_err());
        assert!("1,1,2,3".parse::<ClosedWalk>().is_err());
        assert!("1,2,3,1".parse::<ClosedWalk>().is_err());
        let cycle = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(ClosedWalk::new(&cycle, vec![0, 1, 2, 3]).is_ok());
        assert!(ClosedWalk::new(&cycle, vec![0, 2, 1, 3]).is_err());
    }

    #[test]
    fn display_round_trip() {
        assert_eq!(walk("1,2,3,1,4,5").to_string(), "1,2,3,1,4,5");
    }

    fn arb_walk() -> impl Strategy<Value = ClosedWalk> {
        (2usize..=5, 5usize..=7).prop_flat_map(|(p, n)| {
            prop::collection::vec(0..n, 2 * p)
                .prop_filter_map("consecutive repeat", |v| ClosedWalk::on_complete(v).ok())
        })
    }

    proptest! {
        #[test]
        fn walk_moves_balance(w in arb_walk()) {
            let g = Graph::complete(7);
            prop_assert!(crate::graph_model::is_move(&g, w.to_move().iter()).unwrap());
        }

        #[test]
        fn primitivity_invariant_under_even_rotation_and_reversal(w in arb_walk(), k in 0usize..5) {
            let shifted = w.rotated(2 * k);
            prop_assert_eq!(shifted.is_primitive(), w.is_primitive());
            prop_assert_eq!(shifted.to_move(), w.to_move());
            prop_assert_eq!(w.reversed().is_primitive(), w.is_primitive());
            prop_assert_eq!(w.rotated(1).to_move(), w.to_move().negated());
        }

        #[test]
        fn primitive_walks_have_disjoint_signed_supports(w in arb_walk()) {
            if w.is_primitive() {
                prop_assert!(w.is_cancellation_free());
                let z = w.to_move();
                prop_assert!(!z.is_zero());
                let repeated_edge = {
                    let mut edges: Vec<Edge> = w.edges().collect();
                    edges.sort();
                    edges.windows(2).any(|p| p[0] == p[1])
                };
                prop_assert_eq!(z.is_square_free(), !repeated_edge);
            }
        }
    }
}
