use super::RegularGraph;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGraph {
    Petersen,
    Heawood,
    Complete(usize),
    Cycle(usize),
}

impl std::str::FromStr for NamedGraph {
    type Err = Error;

    /// Accepts `petersen`, `heawood`, `complete(k)` / `complete:k`, `cycle(n)` / `cycle:n`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let arg = |prefix: &str| -> Option<Result<usize>> {
            let rest = s.strip_prefix(prefix)?;
            let rest = rest.trim_start_matches(['(', ':']).trim_end_matches(')');
            Some(rest.parse().map_err(|_| Error::param("graph", format!("bad size in `{s}`"))))
        };
        match s.as_str() {
            "petersen" => Ok(NamedGraph::Petersen),
            "heawood" => Ok(NamedGraph::Heawood),
            _ => {
                if let Some(k) = arg("complete") {
                    Ok(NamedGraph::Complete(k?))
                } else if let Some(k) = arg("cycle") {
                    Ok(NamedGraph::Cycle(k?))
                } else {
                    Err(Error::param("graph", format!("unknown named graph `{s}`")))
                }
            }
        }
    }
}

pub fn build_named(name: NamedGraph) -> Result<RegularGraph> {
    match name {
        NamedGraph::Petersen => {
            let mut e = Vec::with_capacity(15);
            for i in 0..5 {
                e.push((i, (i + 1) % 5));
                e.push((5 + i, 5 + (i + 2) % 5));
                e.push((i, i + 5));
            }
            RegularGraph::from_edges(10, 2, &e)
        }
        NamedGraph::Heawood => {
            let mut e = Vec::with_capacity(21);
            for i in 0..14 {
                e.push((i, (i + 1) % 14));
                if i % 2 == 0 {
                    e.push((i, (i + 5) % 14));
                }
            }
            RegularGraph::from_edges(14, 2, &e)
        }
        NamedGraph::Complete(k) => {
            if k < 3 {
                return Err(Error::param("complete", format!("k = {k} must be at least 3")));
            }
            let e: Vec<_> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
            RegularGraph::from_edges(k, k - 2, &e)
        }
        NamedGraph::Cycle(n) => {
            if n < 3 {
                return Err(Error::param("cycle", format!("n = {n} must be at least 3")));
            }
            let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            RegularGraph::from_edges(n, 1, &e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let p = build_named(NamedGraph::Petersen).unwrap();
        assert_eq!((p.n(), p.q()), (10, 2));
        let h = build_named(NamedGraph::Heawood).unwrap();
        assert_eq!((h.n(), h.q(), h.num_edges()), (14, 2, 21));
        let c = build_named(NamedGraph::Cycle(6)).unwrap();
        assert_eq!((c.degree(), c.q()), (2, 1));
        assert!(build_named(NamedGraph::Complete(2)).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("complete(4)".parse::<NamedGraph>().unwrap(), NamedGraph::Complete(4));
        assert_eq!("cycle:6".parse::<NamedGraph>().unwrap(), NamedGraph::Cycle(6));
        assert!("dodecahedron".parse::<NamedGraph>().is_err());
    }
}
