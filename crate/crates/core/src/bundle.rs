//! The six learnable maps of the adaptation model plus optional class
//! discriminator heads, and the machinery to address, tie, check, and
//! checkpoint them as one unit.
//!
//! `G1: source -> joint`, `G2: joint -> target`, `H1: target -> joint`,
//! `H2: joint -> source`, `C: joint -> probability` (or source space when the
//! classifier reads raw inputs), `D: joint -> probability`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{self, fold_grads, project, Activation, MlpParams, MlpSpec, Network, TieKind, TieMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetId {
    G1,
    G2,
    H1,
    H2,
    C,
    D,
    /// Target-space discriminator of the symmetrized cycle objective.
    DAux,
    /// Per-class discriminator head sharing D's trunk.
    Head(usize),
}

impl NetId {
    pub fn name(self) -> String {
        match self {
            NetId::G1 => "G1".into(),
            NetId::G2 => "G2".into(),
            NetId::H1 => "H1".into(),
            NetId::H2 => "H2".into(),
            NetId::C => "C".into(),
            NetId::D => "D".into(),
            NetId::DAux => "D_aux".into(),
            NetId::Head(k) => format!("D_class_{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "G1" => NetId::G1,
            "G2" => NetId::G2,
            "H1" => NetId::H1,
            "H2" => NetId::H2,
            "C" => NetId::C,
            "D" => NetId::D,
            "D_aux" => NetId::DAux,
            other => {
                let k = other
                    .strip_prefix("D_class_")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| Error::Format(format!("unknown network `{other}`")))?;
                NetId::Head(k)
            }
        })
    }

    pub fn is_discriminator(self) -> bool {
        matches!(self, NetId::D | NetId::DAux | NetId::Head(_))
    }
}

/// Which inputs the classifier consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AChoice {
    /// `C(G1(x))`: classifier on joint embeddings.
    G1,
    /// `C(x)`: separate classifier on raw source inputs.
    Identity,
}

impl AChoice {
    pub fn name(self) -> &'static str {
        match self {
            AChoice::G1 => "G1",
            AChoice::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "G1" | "g1" => Ok(AChoice::G1),
            "identity" => Ok(AChoice::Identity),
            other => Err(Error::InvalidConfig(format!("unknown A choice `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArchConfig {
    pub data_dim: usize,
    pub joint_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            data_dim: 10,
            joint_dim: 5,
            hidden_dim: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub g1: Network,
    pub g2: Network,
    pub h1: Network,
    pub h2: Network,
    pub c: Network,
    pub d: Network,
    pub d_aux: Option<Network>,
    pub heads: Vec<Network>,
    pub a_choice: AChoice,
    pub tie_map: TieMap,
}

impl ModelBundle {
    /// Encoders `d -> h(ReLU) -> m(ReLU)`, decoders `m -> h(ReLU) -> d`
    /// (linear output), classifier and discriminator `m -> h(ReLU) -> 1(sigmoid)`.
    pub fn new(arch: ArchConfig, a_choice: AChoice, class_heads: usize, seed: u64) -> Result<Self> {
        let ArchConfig {
            data_dim: d,
            joint_dim: m,
            hidden_dim: h,
        } = arch;
        let relu = Activation::Relu;
        let enc = MlpSpec::new(vec![d, h, m], vec![relu, relu])?;
        let dec = MlpSpec::new(vec![m, h, d], vec![relu, Activation::Identity])?;
        let clf_in = match a_choice {
            AChoice::G1 => m,
            AChoice::Identity => d,
        };
        let clf = MlpSpec::new(vec![clf_in, h, 1], vec![relu, Activation::Sigmoid])?;
        let disc = MlpSpec::new(vec![m, h, 1], vec![relu, Activation::Sigmoid])?;
        let head = MlpSpec::new(vec![h, 1], vec![Activation::Sigmoid])?;
        let s = |k: u64| derive_seed(seed, 100 + k);
        let bundle = ModelBundle {
            g1: Network::new(enc.clone(), s(0)),
            g2: Network::new(dec.clone(), s(1)),
            h1: Network::new(enc, s(2)),
            h2: Network::new(dec, s(3)),
            c: Network::new(clf, s(4)),
            d: Network::new(disc, s(5)),
            d_aux: None,
            heads: (0..class_heads)
                .map(|k| Network::new(head.clone(), s(10 + k as u64)))
                .collect(),
            a_choice,
            tie_map: TieMap::new(),
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Cycle-consistency layout: `H1 = H`, `G2 = G`, `G1 = H2 = id`, with `D`
    /// discriminating in the source space and `D_aux` (optional) in the target space.
    pub fn cycle(h: Network, g: Network, d_source: Network, d_target: Option<Network>) -> Result<Self> {
        let dim = h.spec.output_dim();
        let bundle = ModelBundle {
            g1: Network::identity(dim),
            g2: g,
            h1: h,
            h2: Network::identity(dim),
            c: Network::identity(dim),
            d: d_source,
            d_aux: d_target,
            heads: Vec::new(),
            a_choice: AChoice::G1,
            tie_map: TieMap::new(),
        };
        bundle.check_cycle_layout()?;
        Ok(bundle)
    }

    pub fn check_cycle_layout(&self) -> Result<()> {
        if !self.h2.is_identity() || !self.g1.is_identity() {
            return Err(Error::InvalidConfig(
                "cycle objective needs identity H2 and G1".into(),
            ));
        }
        let ds = self.h1.spec.input_dim();
        let dt = self.g2.spec.input_dim();
        if self.h1.spec.output_dim() != dt || self.g2.spec.output_dim() != ds {
            return Err(Error::InvalidConfig("H and G must map between the two data spaces".into()));
        }
        Ok(())
    }

    /// Joint-space dimensions agree and the tie map is consistent.
    pub fn validate(&self) -> Result<()> {
        let m = self.g1.spec.output_dim();
        let checks = [
            ("H1 output", self.h1.spec.output_dim()),
            ("G2 input", self.g2.spec.input_dim()),
            ("H2 input", self.h2.spec.input_dim()),
            ("D input", self.d.spec.input_dim()),
        ];
        for (what, got) in checks {
            if got != m {
                return Err(Error::dim(format!("bundle {what}"), m, got));
            }
        }
        if self.a_choice == AChoice::G1 && self.c.spec.input_dim() != m {
            return Err(Error::dim("bundle C input", m, self.c.spec.input_dim()));
        }
        if !self.heads.is_empty() {
            let dims = self.d.spec.layer_dims();
            let pen = dims[dims.len().saturating_sub(2)];
            for (k, h) in self.heads.iter().enumerate() {
                if h.spec.input_dim() != pen || h.spec.num_layers() != 1 {
                    return Err(Error::dim(format!("class head {k} input"), pen, h.spec.input_dim()));
                }
            }
        }
        self.tie_map
            .validate(|name| NetId::parse(name).ok().and_then(|id| self.net(id)).map(|n| &n.spec))
    }

    pub fn ids(&self) -> Vec<NetId> {
        let mut ids = vec![NetId::G1, NetId::G2, NetId::H1, NetId::H2, NetId::C, NetId::D];
        if self.d_aux.is_some() {
            ids.push(NetId::DAux);
        }
        ids.extend((0..self.heads.len()).map(NetId::Head));
        ids
    }

    pub fn net(&self, id: NetId) -> Option<&Network> {
        match id {
            NetId::G1 => Some(&self.g1),
            NetId::G2 => Some(&self.g2),
            NetId::H1 => Some(&self.h1),
            NetId::H2 => Some(&self.h2),
            NetId::C => Some(&self.c),
            NetId::D => Some(&self.d),
            NetId::DAux => self.d_aux.as_ref(),
            NetId::Head(k) => self.heads.get(k),
        }
    }

    pub fn net_mut(&mut self, id: NetId) -> Option<&mut Network> {
        match id {
            NetId::G1 => Some(&mut self.g1),
            NetId::G2 => Some(&mut self.g2),
            NetId::H1 => Some(&mut self.h1),
            NetId::H2 => Some(&mut self.h2),
            NetId::C => Some(&mut self.c),
            NetId::D => Some(&mut self.d),
            NetId::DAux => self.d_aux.as_mut(),
            NetId::Head(k) => self.heads.get_mut(k),
        }
    }

    /// Tie encoders to the mirrored decoders: `G1 -> H2`, `H1 -> G2`.
    pub fn tie_encoders_decoders(&mut self) -> Result<()> {
        let mut map = TieMap::new();
        map.add("G1", "H2", TieKind::Transposed);
        map.add("H1", "G2", TieKind::Transposed);
        self.tie_map = map;
        self.validate()?;
        self.sync_ties();
        Ok(())
    }

    /// Copies tied parameters from each primary to its replica.
    pub fn sync_ties(&mut self) {
        for tie in self.tie_map.ties.clone() {
            let (Ok(p), Ok(r)) = (NetId::parse(&tie.primary), NetId::parse(&tie.replica)) else {
                continue;
            };
            let primary = self.net(p).map(|n| n.params.clone());
            if let (Some(primary), Some(replica)) = (primary, self.net_mut(r)) {
                project(tie.kind, &primary, &mut replica.params);
            }
        }
    }

    /// Moves replica gradients for tied parameters onto the primaries.
    pub fn fold_tied_grads(&self, grads: &mut BundleGrads) {
        for tie in &self.tie_map.ties {
            let (Ok(p), Ok(r)) = (NetId::parse(&tie.primary), NetId::parse(&tie.replica)) else {
                continue;
            };
            let Some(rg) = grads.get(r).cloned() else {
                continue;
            };
            let primary = grads.entry(p, &self.net(p).expect("validated").params);
            fold_grads(tie.kind, &rg, primary);
            let rg = grads.get_mut(r).expect("present");
            match tie.kind {
                TieKind::Shared => rg.scale(0.0),
                TieKind::Transposed => {
                    for l in &mut rg.layers {
                        l.weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
                    }
                }
            }
        }
    }

    pub fn source_hypothesis(&self) -> Pipeline<'_> {
        match self.a_choice {
            AChoice::G1 => Pipeline::new(vec![&self.g1, &self.c]),
            AChoice::Identity => Pipeline::new(vec![&self.c]),
        }
    }

    pub fn target_hypothesis(&self) -> Pipeline<'_> {
        match self.a_choice {
            AChoice::G1 => Pipeline::new(vec![&self.h1, &self.c]),
            AChoice::Identity => Pipeline::new(vec![&self.h1, &self.h2, &self.c]),
        }
    }

    /// `H2 o H1`, target to source.
    pub fn map_ts(&self) -> Pipeline<'_> {
        Pipeline::new(vec![&self.h1, &self.h2])
    }

    /// `G2 o G1`, source to target.
    pub fn map_st(&self) -> Pipeline<'_> {
        Pipeline::new(vec![&self.g1, &self.g2])
    }

    /// Clamped class-1 probabilities of the source or target hypothesis.
    pub fn predict(&self, x: &Matrix, side: Side, eps: f64) -> Result<Vec<f64>> {
        let pipe = match side {
            Side::Source => self.source_hypothesis(),
            Side::Target => self.target_hypothesis(),
        };
        let expected = pipe.input_dim();
        if x.cols() != expected {
            return Err(Error::dim(format!("predict ({} side)", side.name()), expected, x.cols()));
        }
        let out = pipe.apply(x)?;
        Ok(out.data().iter().map(|&q| q.clamp(eps, 1.0 - eps)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.ids()
            .into_iter()
            .all(|id| self.net(id).is_none_or(|n| n.params.is_finite()))
    }

    /// One parameter file per network (`<name>.params`) plus `manifest.txt`.
    pub fn save(&self, dir: &Path, extra: &BTreeMap<String, String>) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = BTreeMap::new();
        for id in self.ids() {
            let net = self.net(id).expect("listed");
            let file = format!("{}.params", id.name());
            let path = dir.join(&file);
            let tmp = dir.join(format!(".{file}.tmp"));
            {
                let mut w = BufWriter::new(fs::File::create(&tmp)?);
                nn::write_params(&mut w, &net.spec, &net.params)?;
                w.flush()?;
            }
            fs::rename(&tmp, &path)?;
            manifest.insert(format!("net.{}", id.name()), net.spec.header());
        }
        manifest.insert("a_choice".into(), self.a_choice.name().into());
        for (i, tie) in self.tie_map.ties.iter().enumerate() {
            manifest.insert(
                format!("tie.{i}"),
                format!("{},{},{}", tie.primary, tie.replica, tie.kind.name()),
            );
        }
        for (k, v) in extra {
            manifest.insert(k.clone(), v.clone());
        }
        let text: String = manifest.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let tmp = dir.join(".manifest.txt.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, dir.join("manifest.txt"))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.txt"))?;
        let mut kv = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("manifest line `{line}`")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let read = |id: NetId| -> Result<Network> {
            let f = fs::File::open(dir.join(format!("{}.params", id.name())))?;
            let (spec, params) = nn::read_params(BufReader::new(f))?;
            Network::from_parts(spec, params)
        };
        let mut heads = Vec::new();
        while kv.contains_key(&format!("net.{}", NetId::Head(heads.len()).name())) {
            heads.push(read(NetId::Head(heads.len()))?);
        }
        let d_aux = if kv.contains_key("net.D_aux") {
            Some(read(NetId::DAux)?)
        } else {
            None
        };
        let mut tie_map = TieMap::new();
        let mut i = 0;
        while let Some(v) = kv.get(&format!("tie.{i}")) {
            let parts: Vec<&str> = v.split(',').collect();
            let kind = match parts.get(2) {
                Some(&"shared") => TieKind::Shared,
                Some(&"transposed") => TieKind::Transposed,
                _ => return Err(Error::Format(format!("tie entry `{v}`"))),
            };
            tie_map.add(parts[0], parts[1], kind);
            i += 1;
        }
        let bundle = ModelBundle {
            g1: read(NetId::G1)?,
            g2: read(NetId::G2)?,
            h1: read(NetId::H1)?,
            h2: read(NetId::H2)?,
            c: read(NetId::C)?,
            d: read(NetId::D)?,
            d_aux,
            heads,
            a_choice: AChoice::parse(kv.get("a_choice").map_or("G1", String::as_str))?,
            tie_map,
        };
        Ok(bundle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
        }
    }
}

/// A composition of networks applied left to right.
#[derive(Clone, Debug)]
pub struct Pipeline<'a> {
    stages: Vec<&'a Network>,
}

impl<'a> Pipeline<'a> {
    pub fn new(stages: Vec<&'a Network>) -> Self {
        Pipeline { stages }
    }

    pub fn identity() -> Self {
        Pipeline { stages: Vec::new() }
    }

    pub fn stages(&self) -> &[&'a Network] {
        &self.stages
    }

    /// `other` after `self`.
    pub fn then(&self, other: &Pipeline<'a>) -> Pipeline<'a> {
        let mut stages = self.stages.clone();
        stages.extend(other.stages.iter().copied());
        Pipeline { stages }
    }

    pub fn input_dim(&self) -> usize {
        self.stages.first().map_or(0, |n| n.spec.input_dim())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = x.clone();
        for net in &self.stages {
            cur = net.apply(&cur)?;
        }
        Ok(cur)
    }
}

/// Gradients keyed by network. Networks absent from the map are constants of
/// the objective that produced it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BundleGrads {
    entries: BTreeMap<NetId, MlpParams>,
}

impl BundleGrads {
    pub fn new() -> Self {
        BundleGrads::default()
    }

    pub fn get(&self, id: NetId) -> Option<&MlpParams> {
        self.entries.get(&id)
    }

    pub fn get_mut(&mut self, id: NetId) -> Option<&mut MlpParams> {
        self.entries.get_mut(&id)
    }

    pub fn entry(&mut self, id: NetId, like: &MlpParams) -> &mut MlpParams {
        self.entries.entry(id).or_insert_with(|| like.zeros_like())
    }

    pub fn accumulate(&mut self, id: NetId, g: &MlpParams, scale: f64) {
        match self.entries.get_mut(&id) {
            Some(e) => e.add_scaled(g, scale),
            None => {
                let mut e = g.clone();
                if scale != 1.0 {
                    e.scale(scale);
                }
                self.entries.insert(id, e);
            }
        }
    }

    pub fn merge(&mut self, other: &BundleGrads, scale: f64) {
        for (&id, g) in &other.entries {
            self.accumulate(id, g, scale);
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = NetId> + '_ {
        self.entries.keys().copied()
    }

    pub fn retain(&mut self, keep: impl Fn(NetId) -> bool) {
        self.entries.retain(|&id, _| keep(id));
    }

    pub fn is_finite(&self) -> bool {
        self.entries.values().all(MlpParams::is_finite)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compares the analytic gradient of `objective` against central differences
/// on a random 5% of the parameters of the networks the objective reports
/// gradients for. Returns the worst relative error.
pub fn grad_check<F>(objective: F, bundle: &ModelBundle, eps: f64, seed: u64) -> Result<f64>
where
    F: Fn(&ModelBundle) -> Result<(f64, BundleGrads)>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("grad_check eps must be positive".into()));
    }
    let (_, analytic) = objective(bundle)?;
    let coords: Vec<(NetId, usize)> = analytic
        .ids()
        .flat_map(|id| {
            let n = bundle.net(id).map_or(0, |net| net.params.len());
            (0..n).map(move |i| (id, i))
        })
        .collect();
    if coords.is_empty() {
        return Ok(0.0);
    }
    let count = ((coords.len() as f64) * 0.05).ceil().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = sample(&mut rng, coords.len(), count.min(coords.len()));
    let mut probe = bundle.clone();
    let mut worst: f64 = 0.0;
    for k in chosen.iter() {
        let (id, i) = coords[k];
        let orig = bundle.net(id).expect("listed").params.get(i);
        probe.net_mut(id).unwrap().params.set(i, orig + eps);
        let up = objective(&probe)?.0;
        probe.net_mut(id).unwrap().params.set(i, orig - eps);
        let down = objective(&probe)?.0;
        probe.net_mut(id).unwrap().params.set(i, orig);
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.get(id).expect("listed").get(i);
        worst = worst.max(nn::relative_error(a, numeric));
    }
    Ok(worst)
}
