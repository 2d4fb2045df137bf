//! Builds, for two colours of the same round `r`, a formula of depth `≤ r`
//! and counting rank `≤ c` over `{x, y}` that holds at every node of the
//! first colour and fails at every node of the second.

use std::collections::{BTreeSet, HashMap};

use super::{run_wl, ColorId, ColorStructure, WlError, WlRun};
use crate::corpus::chi_formula;
use crate::graph::{Graph, Node};
use crate::logic::{and_all, eq, pred, Formula};

/// Memoising builder over one [`WlRun`].
pub struct Distinguisher<'r> {
    run: &'r WlRun,
    /// Colours present at each round across every graph of the run.
    present: Vec<BTreeSet<ColorId>>,
    pairs: HashMap<(ColorId, ColorId), Formula>,
    separators: HashMap<ColorId, Formula>,
}

impl<'r> Distinguisher<'r> {
    pub fn new(run: &'r WlRun) -> Self {
        let rounds = run.num_rounds() + 1;
        let mut present = vec![BTreeSet::new(); rounds];
        for a in &run.graphs {
            for (r, colors) in a.rounds.iter().enumerate() {
                present[r].extend(colors.iter().copied());
            }
        }
        Distinguisher {
            run,
            present,
            pairs: HashMap::new(),
            separators: HashMap::new(),
        }
    }

    /// `None` when the round-`ell` colours of `(ga, u)` and `(gb, v)` agree.
    pub fn distinguish(
        &mut self,
        ga: usize,
        u: Node,
        gb: usize,
        v: Node,
        ell: usize,
    ) -> Result<Option<Formula>, WlError> {
        let a = self.run.color(ga, ell, u)?;
        let b = self.run.color(gb, ell, v)?;
        if a == b {
            return Ok(None);
        }
        self.colors(a, b).map(Some)
    }

    /// A formula true on colour `a` and false on colour `b`, both of the
    /// same round.
    pub fn colors(&mut self, a: ColorId, b: ColorId) -> Result<Formula, WlError> {
        if let Some(f) = self.pairs.get(&(a, b)) {
            return Ok(f.clone());
        }
        let table = &self.run.table;
        let sa = table.get(a).ok_or(WlError::InconsistentTable(a))?.clone();
        let sb = table.get(b).ok_or(WlError::InconsistentTable(b))?.clone();
        if a == b || table.round(a) != table.round(b) {
            return Err(WlError::InconsistentTable(b));
        }
        let f = match (&sa, &sb) {
            (ColorStructure::Base(la), ColorStructure::Base(lb)) => {
                let i = *la
                    .iter()
                    .collect::<BTreeSet<_>>()
                    .symmetric_difference(&lb.iter().collect())
                    .next()
                    .expect("distinct base colours differ in a bit");
                if la.contains(i) {
                    pred(*i, "x")
                } else {
                    pred(*i, "x").not()
                }
            }
            (ColorStructure::Refined { prev: pa, .. }, ColorStructure::Refined { prev: pb, .. }) if pa != pb => {
                self.colors(*pa, *pb)?
            }
            (ColorStructure::Refined { .. }, ColorStructure::Refined { .. }) => {
                let (ma, mb) = (sa.multisets().expect("refined"), sb.multisets().expect("refined"));
                let (j, t, ka, kb) = (0..4)
                    .find_map(|j| {
                        let colors: BTreeSet<ColorId> = ma[j]
                            .entries
                            .iter()
                            .chain(&mb[j].entries)
                            .map(|e| e.0)
                            .collect();
                        colors
                            .into_iter()
                            .map(|t| (t, ma[j].count(t), mb[j].count(t)))
                            .find(|(_, ka, kb)| ka != kb)
                            .map(|(t, ka, kb)| (j, t, ka, kb))
                    })
                    .ok_or(WlError::InconsistentTable(a))?;
                let sigma = self.separator(t)?;
                let body = Box::new(sigma.and(chi_formula(j + 1).expect("1..=4")));
                if ka > kb {
                    Formula::CountExists(ka as u32, "y".into(), body)
                } else {
                    Formula::CountExists(kb as u32, "y".into(), body).not()
                }
            }
            _ => return Err(WlError::InconsistentTable(b)),
        };
        self.pairs.insert((a, b), f.clone());
        Ok(f)
    }

    /// `σ_t(y)`: true on colour `t`, false on every other colour of the same
    /// round present in the run.
    fn separator(&mut self, t: ColorId) -> Result<Formula, WlError> {
        if let Some(f) = self.separators.get(&t) {
            return Ok(f.clone());
        }
        let round = self.run.table.round(t).ok_or(WlError::InconsistentTable(t))?;
        let others: Vec<ColorId> = self.present[round].iter().copied().filter(|&o| o != t).collect();
        let mut parts = Vec::with_capacity(others.len());
        for o in others {
            parts.push(self.colors(t, o)?.swap_xy());
        }
        let f = and_all(parts).unwrap_or_else(|| eq("y", "y"));
        self.separators.insert(t, f.clone());
        Ok(f)
    }
}

/// Refines `[ga, gb]` for `ell` rounds with bound `c` and distinguishes
/// `u ∈ ga` from `v ∈ gb` if their round-`ell` colours differ.
pub fn build_distinguishing_formula(
    ga: &Graph,
    u: Node,
    gb: &Graph,
    v: Node,
    ell: usize,
    c: usize,
) -> Result<Option<Formula>, WlError> {
    let run = run_wl(&[ga.clone(), gb.clone()], c, ell);
    Distinguisher::new(&run).distinguish(0, u, 1, v, ell)
}
