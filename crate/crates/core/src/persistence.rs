//! Persistent homology of a [`FilteredComplex`] over Z/2.
//!
//! Columns of the boundary matrix are reduced left to right in filtration
//! order. Edge columns always reduce to two vertices, so they are stored as
//! a pair; square columns are sorted position lists and are added with a
//! merge-based symmetric difference.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::cubical::FilteredComplex;
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Column processing order. Both produce identical pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Plain left-to-right reduction of every column.
    Standard,
    /// Squares first; edges killed by a square are cleared without reduction.
    #[default]
    Twist,
}

impl FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "twist" => Ok(Self::Twist),
            other => Err(Error::invalid(format!("unknown reduction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    /// `None` for essential classes.
    pub death: Option<f64>,
    pub birth_cell: u32,
    pub death_cell: Option<u32>,
    /// Edge ids of a representative cycle (dimension-1 pairs only), ascending.
    pub rep_cycle: Vec<u32>,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_none()
    }

    pub fn lifetime(&self) -> f64 {
        lifetime(self)
    }
}

/// `death - birth`, or infinity for an essential pair.
pub fn lifetime(p: &PersistencePair) -> f64 {
    match p.death {
        Some(d) => d - p.birth,
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    pub source_dims: (usize, usize),
    pub includes_zero_persistence: bool,
}

impl PersistenceDiagram {
    pub fn empty(source_dims: (usize, usize)) -> Self {
        Self {
            pairs: Vec::new(),
            source_dims,
            includes_zero_persistence: false,
        }
    }

    pub fn pairs_of_dim(&self, dim: u8) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    /// Drops pairs that are born and die at the same value.
    pub fn without_zero_persistence(&self) -> Self {
        Self {
            pairs: self.pairs.iter().filter(|p| p.lifetime() > 0.0).cloned().collect(),
            source_dims: self.source_dims,
            includes_zero_persistence: false,
        }
    }

    /// `dim,birth,death,lifetime,n_cycle_edges`, one row per pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death,lifetime,n_cycle_edges\n");
        for p in &self.pairs {
            let (death, life) = match p.death {
                Some(d) => (d.to_string(), (d - p.birth).to_string()),
                None => ("inf".to_owned(), "inf".to_owned()),
            };
            let _ = writeln!(out, "{},{},{},{},{}", p.dim, p.birth, death, life, p.rep_cycle.len());
        }
        out
    }

    /// Representative-cycle edges as `pair,row,col,orientation`; `pair` indexes [`Self::pairs`].
    pub fn cycles_csv(&self) -> String {
        let (w, h) = self.source_dims;
        let grid = crate::cubical::Grid::new(w, h);
        let mut out = String::from("pair,row,col,orientation\n");
        for (i, p) in self.pairs.iter().enumerate() {
            for &e in &p.rep_cycle {
                let ((r, c), o) = grid.locate(e);
                let _ = writeln!(out, "{i},{r},{c},{}", o.as_str());
            }
        }
        out
    }
}

pub fn compute_persistence(c: &FilteredComplex) -> Result<PersistenceDiagram> {
    compute_persistence_with(c, Reduction::default())
}

pub fn compute_persistence_with(c: &FilteredComplex, reduction: Reduction) -> Result<PersistenceDiagram> {
    c.validate()?;
    let reducer = Reducer::run(c, reduction);
    Ok(reducer.into_diagram(c))
}

struct Reducer {
    /// `owner[low]` = position of the column whose reduced low is `low`.
    owner: Vec<u32>,
    /// Reduced edge columns as `(other, low)` positions.
    edge_cols: Vec<(u32, u32)>,
    square_cols: Vec<Vec<u32>>,
}

impl Reducer {
    fn run(c: &FilteredComplex, reduction: Reduction) -> Self {
        let n = c.len();
        let mut r = Reducer {
            owner: vec![NONE; n],
            edge_cols: vec![(NONE, NONE); n],
            square_cols: vec![Vec::new(); n],
        };
        let order = c.order();
        match reduction {
            Reduction::Standard => {
                for (pos, &id) in order.iter().enumerate() {
                    match c.dim(id) {
                        1 => r.reduce_edge(c, pos as u32, id),
                        2 => r.reduce_square(c, pos as u32, id),
                        _ => {}
                    }
                }
            }
            Reduction::Twist => {
                for (pos, &id) in order.iter().enumerate() {
                    if c.dim(id) == 2 {
                        r.reduce_square(c, pos as u32, id);
                    }
                }
                for (pos, &id) in order.iter().enumerate() {
                    // an edge already used as a square's pivot is positive
                    if c.dim(id) == 1 && r.owner[pos] == NONE {
                        r.reduce_edge(c, pos as u32, id);
                    }
                }
            }
        }
        r
    }

    fn reduce_edge(&mut self, c: &FilteredComplex, pos: u32, id: u32) {
        let faces = c.faces(id);
        let (p, q) = (c.position(faces.as_slice()[0]), c.position(faces.as_slice()[1]));
        let (mut other, mut low) = (p.min(q), p.max(q));
        loop {
            let k = self.owner[low as usize];
            if k == NONE {
                self.owner[low as usize] = pos;
                self.edge_cols[pos as usize] = (other, low);
                return;
            }
            let (x, _) = self.edge_cols[k as usize];
            if x == other {
                return;
            }
            (other, low) = (other.min(x), other.max(x));
        }
    }

    fn reduce_square(&mut self, c: &FilteredComplex, pos: u32, id: u32) {
        let mut col: Vec<u32> = c.faces(id).as_slice().iter().map(|&f| c.position(f)).collect();
        col.sort_unstable();
        let mut scratch = Vec::new();
        while let Some(&low) = col.last() {
            let k = self.owner[low as usize];
            if k == NONE {
                self.owner[low as usize] = pos;
                self.square_cols[pos as usize] = col;
                return;
            }
            symmetric_difference_into(&col, &self.square_cols[k as usize], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
    }

    fn into_diagram(self, c: &FilteredComplex) -> PersistenceDiagram {
        let order = c.order();
        let mut paired = vec![false; order.len()];
        let mut pairs = Vec::new();
        for (death_pos, &death_id) in order.iter().enumerate() {
            let low = match c.dim(death_id) {
                1 => self.edge_cols[death_pos].1,
                2 => self.square_cols[death_pos].last().copied().unwrap_or(NONE),
                _ => NONE,
            };
            if low == NONE {
                continue;
            }
            paired[low as usize] = true;
            paired[death_pos] = true;
            let birth_id = order[low as usize];
            let rep_cycle = if c.dim(death_id) == 2 {
                let mut edges: Vec<u32> = self.square_cols[death_pos].iter().map(|&p| order[p as usize]).collect();
                edges.sort_unstable();
                edges
            } else {
                Vec::new()
            };
            pairs.push((
                low,
                PersistencePair {
                    dim: c.dim(birth_id),
                    birth: c.value(birth_id),
                    death: Some(c.value(death_id)),
                    birth_cell: birth_id,
                    death_cell: Some(death_id),
                    rep_cycle,
                },
            ));
        }
        for (pos, &id) in order.iter().enumerate() {
            if !paired[pos] {
                pairs.push((
                    pos as u32,
                    PersistencePair {
                        dim: c.dim(id),
                        birth: c.value(id),
                        death: None,
                        birth_cell: id,
                        death_cell: None,
                        rep_cycle: Vec::new(),
                    },
                ));
            }
        }
        pairs.sort_by_key(|(birth_pos, p)| (p.dim, *birth_pos));
        PersistenceDiagram {
            pairs: pairs.into_iter().map(|(_, p)| p).collect(),
            source_dims: c.source_dims(),
            includes_zero_persistence: true,
        }
    }
}

/// Z/2 sum of two ascending index lists.
fn symmetric_difference_into(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    out.reserve(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Keeps pairs with lifetime at least `min_lifetime`; essential pairs always stay.
pub fn filter_by_lifetime(d: &PersistenceDiagram, min_lifetime: f64) -> Result<PersistenceDiagram> {
    if !(min_lifetime >= 0.0) {
        return Err(Error::invalid(format!("min_lifetime {min_lifetime} must be >= 0")));
    }
    Ok(PersistenceDiagram {
        pairs: d
            .pairs
            .iter()
            .filter(|p| p.is_essential() || p.lifetime() >= min_lifetime)
            .cloned()
            .collect(),
        source_dims: d.source_dims,
        includes_zero_persistence: d.includes_zero_persistence && min_lifetime == 0.0,
    })
}

/// Number of `dim` classes alive at `eps` (half-open `[birth, death)`).
pub fn betti_curve(d: &PersistenceDiagram, dim: u8, eps: f64) -> usize {
    d.pairs_of_dim(dim)
        .filter(|p| p.birth <= eps && p.death.is_none_or(|death| eps < death))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::build_sublevel_complex;
    use crate::image::GrayImage;

    fn diagram(rows: &[&[f64]], reduction: Reduction) -> PersistenceDiagram {
        let img = GrayImage::from_rows(rows).unwrap();
        compute_persistence_with(&build_sublevel_complex(&img), reduction).unwrap()
    }

    fn ring() -> PersistenceDiagram {
        diagram(&[&[0.1, 0.1, 0.1], &[0.1, 1.0, 0.1], &[0.1, 0.1, 0.1]], Reduction::Standard)
    }

    #[test]
    fn constant_two_by_two() {
        let d = diagram(&[&[0.3, 0.3], &[0.3, 0.3]], Reduction::Standard).without_zero_persistence();
        assert_eq!(d.pairs.len(), 1);
        assert_eq!(d.pairs[0].dim, 0);
        assert_eq!(d.pairs[0].birth, 0.3);
        assert!(d.pairs[0].is_essential());
    }

    #[test]
    fn ring_has_one_loop() {
        let d = ring();
        let live: Vec<_> = d.pairs.iter().filter(|p| p.lifetime() > 0.0).collect();
        assert_eq!(live.len(), 2);
        assert_eq!((live[0].dim, live[0].birth, live[0].death), (0, 0.1, None));
        let lp = live[1];
        assert_eq!((lp.dim, lp.birth, lp.death), (1, 0.1, Some(1.0)));
        assert_eq!(lp.lifetime(), 0.9);
        assert_eq!(lp.rep_cycle.len(), 8);
    }

    #[test]
    fn one_by_two_pairs() {
        let d = diagram(&[&[0.1, 0.2]], Reduction::Standard);
        let dims0: Vec<_> = d.pairs_of_dim(0).map(|p| (p.birth, p.death)).collect();
        assert_eq!(dims0, vec![(0.1, None), (0.2, Some(0.2))]);
    }

    #[test]
    fn lifetime_values() {
        let mk = |birth, death| PersistencePair {
            dim: 1,
            birth,
            death,
            birth_cell: 0,
            death_cell: death.map(|_| 1),
            rep_cycle: vec![],
        };
        assert!((lifetime(&mk(0.1, Some(1.0))) - 0.9).abs() < 1e-15);
        assert_eq!(lifetime(&mk(0.4, Some(0.4))), 0.0);
        assert_eq!(lifetime(&mk(0.4, None)), f64::INFINITY);
    }

    #[test]
    fn filter_cases() {
        let d = ring();
        assert_eq!(filter_by_lifetime(&d, 0.0).unwrap().pairs, d.pairs);
        let kept = filter_by_lifetime(&d, 0.1).unwrap();
        assert_eq!(kept.pairs.len(), 2);
        assert!(filter_by_lifetime(&d, -1.0).is_err());
        let empty = PersistenceDiagram::empty((3, 3));
        assert!(filter_by_lifetime(&empty, 0.5).unwrap().pairs.is_empty());
    }

    #[test]
    fn filter_drops_short_loop() {
        let pair = |birth: f64, death: f64| PersistencePair {
            dim: 1,
            birth,
            death: Some(death),
            birth_cell: 0,
            death_cell: Some(1),
            rep_cycle: vec![],
        };
        let d = PersistenceDiagram {
            pairs: vec![pair(0.1, 1.0), pair(0.2, 0.25)],
            source_dims: (1, 1),
            includes_zero_persistence: false,
        };
        let kept = filter_by_lifetime(&d, 0.1).unwrap();
        assert_eq!(kept.pairs.len(), 1);
        assert_eq!(kept.pairs[0].birth, 0.1);
    }

    #[test]
    fn betti_curve_on_ring() {
        let d = ring();
        assert_eq!(betti_curve(&d, 1, 0.05), 0);
        assert_eq!(betti_curve(&d, 0, 0.05), 0);
        assert_eq!(betti_curve(&d, 1, 0.5), 1);
        assert_eq!(betti_curve(&d, 1, 1.0), 0);
        assert_eq!(betti_curve(&d, 0, 1.0), 1);
    }

    #[test]
    fn csv_format() {
        let csv = ring().without_zero_persistence().to_csv();
        assert_eq!(csv, "dim,birth,death,lifetime,n_cycle_edges\n0,0.1,inf,inf,0\n1,0.1,1,0.9,8\n");
    }

    #[test]
    fn cycles_dump_lists_edges() {
        let d = ring().without_zero_persistence();
        let dump = d.cycles_csv();
        let rows: Vec<&str> = dump.lines().skip(1).collect();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.starts_with("1,")));
        assert!(rows.contains(&"1,0,0,h"));
        assert!(rows.contains(&"1,1,2,v"));
    }

    #[test]
    fn rejects_malformed_complex() {
        let c = FilteredComplex::from_cell_values(2, 1, vec![0.5, 0.2, 0.1]).unwrap();
        assert!(compute_persistence(&c).is_err());
    }

    #[test]
    fn symdiff() {
        let mut out = Vec::new();
        symmetric_difference_into(&[1, 3, 5, 7], &[2, 3, 7, 9], &mut out);
        assert_eq!(out, vec![1, 2, 5, 9]);
    }
}
