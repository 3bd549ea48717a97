//! Random valid routes and small fixtures for tests, demos and the
//! acceptance suite.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::route::{MoleculeToken, ReactionStep, Route, Topology};

fn tok(s: &str) -> MoleculeToken {
    MoleculeToken::new(s).expect("generated tokens are valid")
}

/// T ← {I, L3}, I ← {L1, L2}.
pub fn reference_route() -> Route {
    Route::new(
        tok("T"),
        vec![
            ReactionStep::parse("T", &["I", "L3"]).expect("valid"),
            ReactionStep::parse("I", &["L1", "L2"]).expect("valid"),
        ],
        BTreeMap::new(),
    )
    .expect("valid")
}

/// Leaves shared between generated routes so repeated tokens occur.
const SHARED_LEAVES: [&str; 4] = ["CCO", "O", "Cl", "N"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    prefix: String,
    counter: usize,
    steps: Vec<ReactionStep>,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self, kind: char) -> MoleculeToken {
        self.counter += 1;
        tok(&format!("{}{kind}{}", self.prefix, self.counter))
    }

    fn side_leaves(&mut self, reactants: &mut Vec<MoleculeToken>) {
        for _ in 0..self.rng.random_range(0..=2) {
            let leaf = if self.rng.random_bool(0.3) {
                let s = SHARED_LEAVES[self.rng.random_range(0..SHARED_LEAVES.len())];
                tok(s)
            } else {
                self.fresh('L')
            };
            if !reactants.contains(&leaf) {
                reactants.push(leaf);
            }
        }
    }

    /// A linear chain of exactly `len` reactions producing `product`.
    fn chain(&mut self, product: MoleculeToken, len: usize) {
        let mut current = product;
        for i in 0..len {
            let next = if i + 1 == len { self.fresh('L') } else { self.fresh('I') };
            let mut reactants = vec![next.clone()];
            self.side_leaves(&mut reactants);
            reactants.shuffle(self.rng);
            self.steps.push(ReactionStep::new(current, reactants).expect("valid"));
            current = next;
        }
    }
}

/// A random valid route with exactly `length` reactions on its longest path.
///
/// Convergent routes need `length >= 2`; a shorter request yields a linear
/// route. Intermediates and private leaves are named `{prefix}I{n}` and
/// `{prefix}L{n}`; a few leaf tokens are shared across routes.
pub fn random_route<R: Rng>(rng: &mut R, length: usize, topology: Topology, prefix: &str) -> Route {
    let target = tok(&format!("{prefix}T"));
    if length == 0 {
        return Route::degenerate(target);
    }
    let mut g = Gen {
        rng,
        prefix: prefix.to_string(),
        counter: 0,
        steps: Vec::new(),
    };
    let convergent = topology == Topology::Convergent && length >= 2;
    // Spine of `length` reactions; a convergent route grafts extra
    // intermediate branches onto spine steps that have depth to spare.
    let branch_at = if convergent { g.rng.random_range(0..length - 1) } else { usize::MAX };
    let mut current = target.clone();
    for i in 0..length {
        let next = if i + 1 == length { g.fresh('L') } else { g.fresh('I') };
        let mut reactants = vec![next.clone()];
        if i == branch_at {
            let room = length - i - 1;
            let n_branches = g.rng.random_range(1..=2);
            for _ in 0..n_branches {
                let b = g.fresh('I');
                let blen = g.rng.random_range(1..=room);
                reactants.push(b.clone());
                g.chain(b, blen);
            }
        }
        g.side_leaves(&mut reactants);
        reactants.shuffle(g.rng);
        g.steps.push(ReactionStep::new(current, reactants).expect("valid"));
        current = next;
    }
    let mut steps = g.steps;
    steps.shuffle(g.rng);
    Route::new(target, steps, BTreeMap::new()).expect("generator builds valid routes")
}

/// A random length in `1..=10` and a topology, the latter convergent with
/// probability one half when the length allows it.
pub fn random_shape<R: Rng>(rng: &mut R) -> (usize, Topology) {
    let length = rng.random_range(1..=10);
    let topology = if length >= 2 && rng.random_bool(0.5) {
        Topology::Convergent
    } else {
        Topology::Linear
    };
    (length, topology)
}
