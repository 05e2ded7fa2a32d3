//! Random Belyi surfaces built by gluing ideal hyperbolic triangles along
//! random trivalent ribbon graphs, together with the machinery used to study
//! their local limits: exact topology, the geodesic length spectrum through
//! integer holonomy, Monte Carlo convergence statistics, spectral measures,
//! classification of infinite-type surfaces by their ends, and the discrete
//! mass transport principle.

pub mod bs_stats;
pub mod ends;
mod error;
pub mod graph;
pub mod holonomy;
pub mod ribbon_graph;
pub mod seed;
pub mod spectral;
pub mod unimodular;

pub use error::{Error, Result};
pub use graph::Multigraph;
pub use holonomy::{ClosedGeodesic, HolonomyMatrix, Turn, TurnWord};
pub use ribbon_graph::{RibbonGraph, SurfaceInvariants};

/// Default cap on the number of search nodes an enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Work limit shared by the enumerators and walk counters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    pub max_nodes: u64,
}

impl Budget {
    pub const fn new(max_nodes: u64) -> Self {
        Budget { max_nodes }
    }

    pub const fn unlimited() -> Self {
        Budget { max_nodes: u64::MAX }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_BUDGET)
    }
}

/// Running node counter checked against a [`Budget`].
#[derive(Debug)]
pub(crate) struct Meter {
    used: u64,
    cap: u64,
    what: &'static str,
}

impl Meter {
    pub(crate) fn new(budget: Budget, what: &'static str) -> Self {
        Meter { used: 0, cap: budget.max_nodes, what }
    }

    #[inline]
    pub(crate) fn tick(&mut self, n: u64) -> Result<()> {
        self.used = self.used.saturating_add(n);
        if self.used > self.cap {
            Err(Error::BudgetExceeded { what: self.what, cap: self.cap })
        } else {
            Ok(())
        }
    }
}
