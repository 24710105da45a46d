//! The `G_N = F^{⊗n}` polar transform and the two-graph index mapping.
//!
//! All vectors are in natural (Arıkan, non bit-reversed) order. Bits are
//! stored one per `u8` with values `0` or `1`.

use crate::error::{Error, Result};

/// Largest Kronecker exponent accepted by [`kron_matrix`].
pub const KRON_MATRIX_MAX_EXPONENT: u32 = 10;

/// One of the two equivalent decoding graphs.
///
/// On [`GraphId::G`] the sub-codes are the columns of the `√N × √N` codeword
/// array; on [`GraphId::Gpi`] they are the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphId {
    G,
    Gpi,
}

impl GraphId {
    /// Graph decoded in iteration `t` (1-based): `G` when `t` is odd.
    pub fn for_iteration(t: usize) -> Self {
        if t % 2 == 1 {
            GraphId::G
        } else {
            GraphId::Gpi
        }
    }

    pub fn other(self) -> Self {
        match self {
            GraphId::G => GraphId::Gpi,
            GraphId::Gpi => GraphId::G,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GraphId::G => "G",
            GraphId::Gpi => "Gpi",
        }
    }
}

impl std::str::FromStr for GraphId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G" => Ok(GraphId::G),
            "Gpi" => Ok(GraphId::Gpi),
            other => Err(Error::invalid(format!("unknown graph `{other}`, expected G or Gpi"))),
        }
    }
}

/// A `(sub-code, position)` coordinate together with its global index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coord {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

fn check_len(len: usize) -> Result<()> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "transform length must be a power of two >= 2, got {len}"
        )));
    }
    Ok(())
}

/// Computes `x <- x · G_N` over GF(2) in place.
///
/// Butterfly with `log2(N)` stages; since `G_N` is an involution the same call
/// also inverts the transform.
pub fn gn_transform_in_place(bits: &mut [u8]) -> Result<()> {
    check_len(bits.len())?;
    butterfly(bits);
    Ok(())
}

/// Unchecked butterfly used by the hot decoding paths; `bits.len()` must be a
/// power of two.
#[inline]
pub(crate) fn butterfly(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// Returns `u · G_N` as a new vector.
pub fn gn_transform(u: &[u8]) -> Result<Vec<u8>> {
    let mut c = u.to_vec();
    gn_transform_in_place(&mut c)?;
    Ok(c)
}

/// Explicit `F^{⊗n}` as a dense `2^n × 2^n` 0/1 matrix (row-major rows).
///
/// Oracle only; refuses exponents above [`KRON_MATRIX_MAX_EXPONENT`].
pub fn kron_matrix(n: u32) -> Result<Vec<Vec<u8>>> {
    if n > KRON_MATRIX_MAX_EXPONENT {
        return Err(Error::invalid(format!(
            "kron_matrix is an oracle limited to n <= {KRON_MATRIX_MAX_EXPONENT}, got {n}"
        )));
    }
    let mut m = vec![vec![1u8]];
    for _ in 0..n {
        let size = m.len();
        let mut next = vec![vec![0u8; 2 * size]; 2 * size];
        for r in 0..size {
            for c in 0..size {
                let v = m[r][c];
                // F = [[1,0],[1,1]]
                next[r][c] = v;
                next[r + size][c] = v;
                next[r + size][c + size] = v;
            }
        }
        m = next;
    }
    Ok(m)
}

/// Maps sub-code coordinate `(i, j)` on `graph` to the global code position.
pub fn map_index(i: usize, j: usize, graph: GraphId, n_sub: usize) -> Result<usize> {
    if i >= n_sub || j >= n_sub {
        return Err(Error::invalid(format!(
            "coordinate ({i}, {j}) outside a {n_sub}x{n_sub} layout"
        )));
    }
    Ok(global_index(i, j, graph, n_sub))
}

#[inline]
pub(crate) fn global_index(i: usize, j: usize, graph: GraphId, n_sub: usize) -> usize {
    match graph {
        GraphId::G => j * n_sub + i,
        GraphId::Gpi => i * n_sub + j,
    }
}

/// Inverse of [`map_index`].
pub fn unmap_index(k: usize, graph: GraphId, n_sub: usize) -> Result<Coord> {
    if k >= n_sub * n_sub {
        return Err(Error::invalid(format!("position {k} outside a code of length {}", n_sub * n_sub)));
    }
    let (hi, lo) = (k / n_sub, k % n_sub);
    let (i, j) = match graph {
        GraphId::G => (lo, hi),
        GraphId::Gpi => (hi, lo),
    };
    Ok(Coord { i, j, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_transforms() {
        assert_eq!(gn_transform(&[0, 0]).unwrap(), vec![0, 0]);
        assert_eq!(gn_transform(&[0, 1]).unwrap(), vec![1, 1]);
        assert_eq!(gn_transform(&[1, 0]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(gn_transform(&[1, 0, 1]).is_err());
        assert!(gn_transform(&[1]).is_err());
        assert!(gn_transform(&[]).is_err());
    }

    #[test]
    fn kron_small() {
        assert_eq!(kron_matrix(1).unwrap(), vec![vec![1, 0], vec![1, 1]]);
        assert_eq!(
            kron_matrix(2).unwrap(),
            vec![
                vec![1, 0, 0, 0],
                vec![1, 1, 0, 0],
                vec![1, 0, 1, 0],
                vec![1, 1, 1, 1]
            ]
        );
        assert!(kron_matrix(11).is_err());
    }

    #[test]
    fn kron_is_involution() {
        let m = kron_matrix(3).unwrap();
        let n = m.len();
        for r in 0..n {
            for c in 0..n {
                let v = (0..n).fold(0u8, |acc, t| acc ^ (m[r][t] & m[t][c]));
                assert_eq!(v, u8::from(r == c));
            }
        }
    }

    #[test]
    fn index_map_examples() {
        assert_eq!(map_index(3, 5, GraphId::G, 128).unwrap(), 643);
        assert_eq!(map_index(3, 5, GraphId::Gpi, 128).unwrap(), 389);
        assert_eq!(map_index(7, 7, GraphId::G, 128).unwrap(), 903);
        assert_eq!(map_index(7, 7, GraphId::Gpi, 128).unwrap(), 903);
        assert!(map_index(128, 0, GraphId::G, 128).is_err());
        assert!(map_index(0, 128, GraphId::Gpi, 128).is_err());
    }

    #[test]
    fn index_map_is_bijective_and_transposes() {
        let n = 8;
        for graph in [GraphId::G, GraphId::Gpi] {
            let mut seen = vec![false; n * n];
            for i in 0..n {
                for j in 0..n {
                    let k = map_index(i, j, graph, n).unwrap();
                    assert!(!seen[k]);
                    seen[k] = true;
                    let c = unmap_index(k, graph, n).unwrap();
                    assert_eq!((c.i, c.j), (i, j));
                    // the same position seen from the other graph has swapped coordinates
                    assert_eq!(map_index(j, i, graph.other(), n).unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn graph_alternates() {
        assert_eq!(GraphId::for_iteration(1), GraphId::G);
        assert_eq!(GraphId::for_iteration(2), GraphId::Gpi);
        assert_eq!(GraphId::for_iteration(5), GraphId::G);
    }
}
