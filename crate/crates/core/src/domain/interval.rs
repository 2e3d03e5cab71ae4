//! Subsets of the real line built from finitely many intervals.
//!
//! Ray casting against a composition tree needs exact set algebra along a
//! line, including degenerate one-point intervals: a line crossing a
//! codimension-one primitive meets it in a single parameter value, and that
//! point must survive complements and intersections.

use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: lo.is_finite(),
            hi_closed: hi.is_finite(),
        }
    }

    pub fn point(t: f64) -> Self {
        Self::closed(t, t)
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }
}

/// A normalized union of disjoint, sorted intervals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalSet {
    items: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { items: Vec::new() }
    }

    pub fn full() -> Self {
        Self {
            items: alloc::vec![Interval::open(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn from_interval(iv: Interval) -> Self {
        Self::from_items(alloc::vec![iv])
    }

    pub fn from_items(mut items: Vec<Interval>) -> Self {
        items.retain(|iv| !iv.is_empty() && !iv.lo.is_nan() && !iv.hi.is_nan());
        items.sort_by(|a, b| {
            a.lo.partial_cmp(&b.lo)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(b.lo_closed.cmp(&a.lo_closed))
        });
        let mut merged: Vec<Interval> = Vec::with_capacity(items.len());
        for iv in items {
            if let Some(last) = merged.last_mut() {
                let touches =
                    iv.lo < last.hi || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed));
                if touches {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                    if iv.lo == last.lo {
                        last.lo_closed |= iv.lo_closed;
                    }
                    continue;
                }
            }
            merged.push(iv);
        }
        Self { items: merged }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.items
    }

    pub fn contains(&self, t: f64) -> bool {
        self.items.iter().any(|iv| {
            (iv.lo < t || (iv.lo == t && iv.lo_closed))
                && (t < iv.hi || (t == iv.hi && iv.hi_closed))
        })
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.items.len() + 1);
        let mut lo = f64::NEG_INFINITY;
        let mut lo_closed = false;
        for iv in &self.items {
            out.push(Interval {
                lo,
                hi: iv.lo,
                lo_closed,
                hi_closed: !iv.lo_closed && iv.lo.is_finite(),
            });
            lo = iv.hi;
            lo_closed = !iv.hi_closed && iv.hi.is_finite();
        }
        out.push(Interval {
            lo,
            hi: f64::INFINITY,
            lo_closed,
            hi_closed: false,
        });
        Self::from_items(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut items = self.items.clone();
        items.extend_from_slice(&other.items);
        Self::from_items(items)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.complement().union(&other.complement()).complement()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_survives_double_complement_and_intersection() {
        let seg = IntervalSet::from_interval(Interval::open(-1.0, 1.0));
        let slit = IntervalSet::from_interval(Interval::point(0.25));
        // Omega = segment minus point; its complement must contain the point.
        let omega = seg.intersection(&slit.complement());
        assert!(!omega.contains(0.25));
        assert!(omega.contains(0.2) && omega.contains(0.3));
        let outside = omega.complement();
        assert!(outside.contains(0.25));
        let near = outside.intersection(&IntervalSet::from_interval(Interval::closed(0.0, 0.5)));
        assert_eq!(near.intervals(), &[Interval::point(0.25)]);
    }

    #[test]
    fn touching_closed_and_open_merge() {
        let a = IntervalSet::from_items(alloc::vec![
            Interval::open(0.0, 1.0),
            Interval::closed(1.0, 2.0)
        ]);
        assert_eq!(a.intervals().len(), 1);
        let b = IntervalSet::from_items(alloc::vec![
            Interval::open(0.0, 1.0),
            Interval::open(1.0, 2.0)
        ]);
        assert_eq!(b.intervals().len(), 2);
        assert!(!b.contains(1.0));
    }

    #[test]
    fn complement_of_full_is_empty() {
        assert!(IntervalSet::full().complement().is_empty());
        assert_eq!(IntervalSet::empty().complement(), IntervalSet::full());
    }
}
