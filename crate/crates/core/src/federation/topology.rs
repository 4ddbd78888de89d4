use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::FederationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Fully,
    Ring,
    Star,
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fully => "fully",
            Self::Ring => "ring",
            Self::Star => "star",
        })
    }
}

/// Undirected, connected communication graph over participants `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub n: usize,
    pub adjacency: Vec<Vec<bool>>,
    pub hub: Option<usize>,
}

/// Ring order follows participant ids; the star hub defaults to 0.
pub fn build_topology(kind: TopologyKind, n: usize, hub: Option<usize>) -> Result<Topology, FederationError> {
    let min = if kind == TopologyKind::Ring { 3 } else { 2 };
    if n < min {
        return Err(FederationError::InvalidConfig(format!("{kind} topology needs at least {min} participants, got {n}")));
    }
    if hub.is_some() && kind != TopologyKind::Star {
        return Err(FederationError::InvalidConfig("only a star topology has a hub".into()));
    }
    let mut adjacency = vec![vec![false; n]; n];
    let mut link = |a: usize, b: usize| {
        adjacency[a][b] = true;
        adjacency[b][a] = true;
    };
    let hub = match kind {
        TopologyKind::Fully => {
            for a in 0..n {
                for b in a + 1..n {
                    link(a, b);
                }
            }
            None
        }
        TopologyKind::Ring => {
            for a in 0..n {
                link(a, (a + 1) % n);
            }
            None
        }
        TopologyKind::Star => {
            let h = hub.unwrap_or(0);
            if h >= n {
                return Err(FederationError::InvalidConfig(format!("hub {h} outside 0..{n}")));
            }
            for b in (0..n).filter(|&b| b != h) {
                link(h, b);
            }
            Some(h)
        }
    };
    Ok(Topology { kind, n, adjacency, hub })
}

impl Topology {
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.adjacency[i][j]).collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&e| e).count()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.adjacency[a][b]
    }

    /// Breadth-first shortest path `from → to`, inclusive of both ends.
    /// Ties are broken towards smaller ids.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }

    pub fn is_connected(&self) -> bool {
        (1..self.n).all(|j| self.shortest_path(0, j).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_counts() {
        let f = build_topology(TopologyKind::Fully, 5, None).unwrap();
        assert_eq!(f.edge_count(), 10);
        let r = build_topology(TopologyKind::Ring, 5, None).unwrap();
        assert_eq!(r.edge_count(), 5);
        assert!((0..5).all(|i| r.degree(i) == 2));
        let s = build_topology(TopologyKind::Star, 5, None).unwrap();
        assert_eq!(s.neighbors(0), vec![1, 2, 3, 4]);
        assert!((1..5).all(|i| s.neighbors(i) == vec![0]));
        for t in [&f, &r, &s] {
            assert!(t.is_connected());
            assert!((0..5).all(|i| !t.adjacency[i][i]));
        }
    }

    #[test]
    fn invalid_sizes() {
        assert!(build_topology(TopologyKind::Ring, 2, None).is_err());
        assert!(build_topology(TopologyKind::Fully, 1, None).is_err());
        assert!(build_topology(TopologyKind::Star, 3, Some(3)).is_err());
        assert!(build_topology(TopologyKind::Fully, 3, Some(0)).is_err());
        assert_eq!(build_topology(TopologyKind::Star, 4, Some(2)).unwrap().neighbors(2), vec![0, 1, 3]);
    }

    #[test]
    fn ring_paths() {
        let r = build_topology(TopologyKind::Ring, 5, None).unwrap();
        assert_eq!(r.shortest_path(2, 0).unwrap(), vec![2, 1, 0]);
        assert_eq!(r.shortest_path(3, 0).unwrap(), vec![3, 4, 0]);
        let hops: usize = (1..5).map(|j| r.shortest_path(j, 0).unwrap().len() - 1).sum();
        assert_eq!(hops, 6);
        // Equal-length alternatives resolve towards the lower id.
        let r6 = build_topology(TopologyKind::Ring, 6, None).unwrap();
        assert_eq!(r6.shortest_path(0, 3).unwrap(), vec![0, 1, 2, 3]);
    }
}
