//! Every size cap and budget in one place.
//!
//! | cap | default | growth past the default |
//! |-----|---------|-------------------------|
//! | `oracle_max_n` | 12 | labeled regular graph counts grow like `n^{dn/2}`; n = 12, d = 3 already has 1.2e10 graphs |
//! | `oracle_max_degree_sum` | 5 | composition supports grow with the degree sum |
//! | `oracle_max_support` | 2e6 | memory of materialized distributions, about 100 bytes per graph |
//! | `pm_max_n` | 28 | matching DP state count grows like `2^bandwidth` |
//! | `one_factor_max_n` | 16 | ordered 1-factorisation recursion |
//! | `rejection_budget` | 1e6 | expected configuration-model attempts are about `exp((d^2-1)/4)` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub oracle_max_n: usize,
    pub oracle_max_degree_sum: usize,
    pub oracle_max_support: usize,
    pub pm_max_n: usize,
    pub one_factor_max_n: usize,
    /// Attempts before a rejection sampler gives up.
    pub rejection_budget: u64,
    /// Exposed subgraphs with more than this fraction of `dn` edges are
    /// refused by the conditional edge-probability estimate.
    pub edge_prob_max_edge_fraction: f64,
    /// Upper bound for the McKay `epsilon`; must lie in (0, 2/3).
    pub mckay_epsilon: f64,
    /// Step guard for the residual-measure recursion.
    pub zeta_max_steps: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            oracle_max_n: 12,
            oracle_max_degree_sum: 5,
            oracle_max_support: 2_000_000,
            pm_max_n: 28,
            one_factor_max_n: 16,
            rejection_budget: 1_000_000,
            edge_prob_max_edge_fraction: 0.5,
            mckay_epsilon: 0.66,
            zeta_max_steps: 10_000,
        }
    }
}

impl Caps {
    pub fn check_oracle_n(&self, n: usize) -> Result<()> {
        if n > self.oracle_max_n {
            return Err(Error::CapExceeded { what: "oracle vertex count", value: n, cap: self.oracle_max_n });
        }
        Ok(())
    }

    pub fn check_degree_sum(&self, sum: usize) -> Result<()> {
        if sum > self.oracle_max_degree_sum {
            return Err(Error::CapExceeded { what: "oracle degree sum", value: sum, cap: self.oracle_max_degree_sum });
        }
        Ok(())
    }
}
