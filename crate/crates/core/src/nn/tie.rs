//! Parameter tying between networks.
//!
//! `Shared` ties identical specs and shares every parameter. `Transposed` ties
//! an encoder to its mirrored decoder: decoder layer `i` uses the transpose of
//! encoder layer `L-1-i`; biases stay untied.

use std::collections::HashSet;

use crate::error::{Error, Result};

use super::{MlpParams, MlpSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TieKind {
    Shared,
    Transposed,
}

impl TieKind {
    pub fn name(self) -> &'static str {
        match self {
            TieKind::Shared => "shared",
            TieKind::Transposed => "transposed",
        }
    }
}

/// `replica` reads its tied parameters from `primary`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tie {
    pub primary: String,
    pub replica: String,
    pub kind: TieKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TieMap {
    pub ties: Vec<Tie>,
}

impl TieMap {
    pub fn new() -> Self {
        TieMap::default()
    }

    pub fn is_empty(&self) -> bool {
        self.ties.is_empty()
    }

    pub fn add(&mut self, primary: &str, replica: &str, kind: TieKind) {
        self.ties.push(Tie {
            primary: primary.to_string(),
            replica: replica.to_string(),
            kind,
        });
    }

    /// Every network may appear in at most one tie, which rules out chains and
    /// cycles; shapes must agree for the tie kind.
    pub fn validate<'a>(&self, lookup: impl Fn(&str) -> Option<&'a MlpSpec>) -> Result<()> {
        let mut seen = HashSet::new();
        for tie in &self.ties {
            if tie.primary == tie.replica {
                return Err(Error::InvalidTie(format!("{} tied to itself", tie.primary)));
            }
            for name in [&tie.primary, &tie.replica] {
                if !seen.insert(name.clone()) {
                    return Err(Error::InvalidTie(format!("{name} appears in more than one tie")));
                }
            }
            let a = lookup(&tie.primary)
                .ok_or_else(|| Error::InvalidTie(format!("unknown network {}", tie.primary)))?;
            let b = lookup(&tie.replica)
                .ok_or_else(|| Error::InvalidTie(format!("unknown network {}", tie.replica)))?;
            let ok = match tie.kind {
                TieKind::Shared => a == b,
                TieKind::Transposed => {
                    let mut rev = a.layer_dims().to_vec();
                    rev.reverse();
                    rev == b.layer_dims() && a.num_layers() > 0
                }
            };
            if !ok {
                return Err(Error::InvalidTie(format!(
                    "{} ({}) and {} ({}) are not {}-compatible",
                    tie.primary,
                    a.header(),
                    tie.replica,
                    b.header(),
                    tie.kind.name()
                )));
            }
        }
        Ok(())
    }

    pub fn partner(&self, name: &str) -> Option<&Tie> {
        self.ties
            .iter()
            .find(|t| t.primary == name || t.replica == name)
    }
}

/// Writes the tied part of `primary` into `replica`.
pub fn project(kind: TieKind, primary: &MlpParams, replica: &mut MlpParams) {
    match kind {
        TieKind::Shared => *replica = primary.clone(),
        TieKind::Transposed => {
            let n = primary.layers.len();
            for (i, layer) in replica.layers.iter_mut().enumerate() {
                layer.weight = primary.layers[n - 1 - i].weight.transpose();
            }
        }
    }
}

/// Adds the replica's gradient for tied parameters onto the primary gradient.
pub fn fold_grads(kind: TieKind, replica_grads: &MlpParams, primary_grads: &mut MlpParams) {
    match kind {
        TieKind::Shared => primary_grads.add_scaled(replica_grads, 1.0),
        TieKind::Transposed => {
            let n = primary_grads.layers.len();
            for (i, layer) in replica_grads.layers.iter().enumerate() {
                primary_grads.layers[n - 1 - i]
                    .weight
                    .add_scaled(&layer.weight.transpose(), 1.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Activation};

    fn enc() -> MlpSpec {
        MlpSpec::new(vec![10, 5, 5], vec![Activation::Relu, Activation::Relu]).unwrap()
    }

    fn dec() -> MlpSpec {
        MlpSpec::new(vec![5, 5, 10], vec![Activation::Relu, Activation::Identity]).unwrap()
    }

    #[test]
    fn validation_rules() {
        let (e, d) = (enc(), dec());
        let lookup = |n: &str| match n {
            "G1" | "H1" => Some(&e),
            "G2" | "H2" => Some(&d),
            _ => None,
        };
        let mut ok = TieMap::new();
        ok.add("G1", "H2", TieKind::Transposed);
        ok.add("H1", "G2", TieKind::Transposed);
        ok.validate(lookup).unwrap();

        let mut shared_bad = TieMap::new();
        shared_bad.add("G1", "H2", TieKind::Shared);
        assert!(shared_bad.validate(lookup).is_err());

        let mut chain = TieMap::new();
        chain.add("G1", "H1", TieKind::Shared);
        chain.add("H1", "G1", TieKind::Shared);
        assert!(chain.validate(lookup).is_err());
    }

    #[test]
    fn transposed_projection_and_fold() {
        let p = init_params(&enc(), 1);
        let mut r = init_params(&dec(), 2);
        project(TieKind::Transposed, &p, &mut r);
        assert_eq!(r.layers[0].weight, p.layers[1].weight.transpose());
        assert_eq!(r.layers[1].weight, p.layers[0].weight.transpose());

        let mut pg = p.zeros_like();
        let mut rg = r.zeros_like();
        rg.layers[1].weight[(3, 2)] = 1.5;
        fold_grads(TieKind::Transposed, &rg, &mut pg);
        assert_eq!(pg.layers[0].weight[(2, 3)], 1.5);
    }
}
