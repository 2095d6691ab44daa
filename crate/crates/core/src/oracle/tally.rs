//! Streamed tallies over `G_d(n)` that never materialize the support.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::oracle::enumerate::{check_regular_params, count_labeled_regular, for_each_regular};

/// Streaming visits up to this many times the materialization cap.
pub const STREAM_FACTOR: usize = 10;

fn check_stream(n: usize, d: usize, caps: &Caps) -> Result<()> {
    check_regular_params(n, d)?;
    caps.check_oracle_n(n)?;
    let cap = caps.oracle_max_support.saturating_mul(STREAM_FACTOR);
    if count_labeled_regular(n, d) > BigUint::from(cap) {
        return Err(Error::CapExceeded { what: "streamed oracle support", value: usize::MAX, cap });
    }
    Ok(())
}

/// Exact `P(uv in G | H subset G)` for `G` uniform on `G_d(n)`, by visiting
/// every graph.
pub fn exact_edge_probability(n: usize, d: usize, h: &Graph, u: usize, v: usize, caps: &Caps) -> Result<BigRational> {
    if h.n() != n {
        return Err(Error::VertexCountMismatch(h.n(), n));
    }
    if u >= n || v >= n || u == v {
        return Err(Error::InvalidEdge(u + 1, v + 1, n));
    }
    check_stream(n, d, caps)?;
    let h_rows = h.rows().ok_or(Error::CapExceeded { what: "oracle vertex count", value: n, cap: 64 })?.to_vec();
    let (mut with_h, mut with_both) = (0u64, 0u64);
    for_each_regular(n, d, |rows| {
        if rows.iter().zip(&h_rows).all(|(r, hr)| r & hr == *hr) {
            with_h += 1;
            if rows[u] >> v & 1 == 1 {
                with_both += 1;
            }
        }
    });
    if with_h == 0 {
        return Err(Error::EmptySupport);
    }
    Ok(BigRational::new(BigInt::from(with_both), BigInt::from(with_h)))
}
