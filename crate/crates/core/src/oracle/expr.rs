use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One factor of a ⊕-composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// Uniform on `d`-regular graphs.
    Uniform(usize),
    /// `d`-regular graphs weighted by their number of 1-factorisations.
    Nu(usize),
}

impl Atom {
    pub fn degree(self) -> usize {
        match self {
            Atom::Uniform(d) | Atom::Nu(d) => d,
        }
    }
}

/// A measure expression: a single atom or an edge-disjoint composition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeasureExpr {
    pub parts: Vec<Atom>,
}

impl MeasureExpr {
    pub fn atom(a: Atom) -> Self {
        MeasureExpr { parts: vec![a] }
    }

    pub fn mu(d: usize) -> Self {
        Self::atom(Atom::Uniform(d))
    }

    pub fn nu(d: usize) -> Self {
        Self::atom(Atom::Nu(d))
    }

    pub fn oplus(parts: impl IntoIterator<Item = Atom>) -> Self {
        MeasureExpr { parts: parts.into_iter().collect() }
    }

    pub fn degree_sum(&self) -> usize {
        self.parts.iter().map(|a| a.degree()).sum()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Uniform(d) => write!(f, "mu{d}"),
            Atom::Nu(d) => write!(f, "nu{d}"),
        }
    }
}

impl fmt::Display for MeasureExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for Atom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (ctor, digits): (fn(usize) -> Atom, &str) = if let Some(rest) = s.strip_prefix("mu") {
            (Atom::Uniform, rest)
        } else if let Some(rest) = s.strip_prefix("nu") {
            (Atom::Nu, rest)
        } else {
            return Err(Error::Parse(format!("unknown measure atom `{s}` (expected muD or nuD)")));
        };
        let d = digits.parse::<usize>().map_err(|_| Error::Parse(format!("bad degree in `{s}`")))?;
        if d == 0 {
            return Err(Error::Parse(format!("degree must be positive in `{s}`")));
        }
        Ok(ctor(d))
    }
}

impl FromStr for MeasureExpr {
    type Err = Error;

    /// `mu3`, `nu2`, `mu3+nu2`, `mu1+mu1+mu1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = s.split('+').map(str::parse).collect::<Result<Vec<Atom>, _>>()?;
        Ok(MeasureExpr { parts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let e: MeasureExpr = "mu3+nu2".parse().unwrap();
        assert_eq!(e, MeasureExpr::oplus([Atom::Uniform(3), Atom::Nu(2)]));
        assert_eq!(e.to_string(), "mu3+nu2");
        assert_eq!(e.degree_sum(), 5);
        assert!("mu0".parse::<MeasureExpr>().is_err());
        assert!("xi2".parse::<MeasureExpr>().is_err());
    }
}
