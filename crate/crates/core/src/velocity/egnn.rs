//! E(n)-equivariant message-passing network with multi-channel coordinates
//! and sigmoid edge attention.
//!
//! Node features never see absolute positions: geometry enters only through
//! minimum-image displacements, so features are invariant and coordinate
//! updates are equivariant under rotations, translations and permutations.
//!
//! Linear maps store their weight as `[in, out]` and act on row vectors.

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::neighbors::{build_neighbor_graph, NeighborGraph};
use super::weights::{Tensor, WeightContainer};
use super::{FieldState, VelocityField, VelocityOutput};
use crate::error::{Error, Result};
use crate::types::{Lattice, MaterialSample, Vec3};

const LAYER_NORM_EPS: f64 = 1e-5;
const MLP_NAMES: [&str; 4] = ["edge", "attention", "node", "coord"];

#[derive(Clone, Debug, PartialEq)]
pub struct EgnnConfig {
    /// Number of message-passing layers.
    pub layers: usize,
    /// Node feature width and MLP hidden width.
    pub hidden_dim: usize,
    /// Coordinate channels per atom.
    pub vector_channels: usize,
    pub r_cut: f64,
    /// Aggregation normaliser, roughly the mean neighbour count.
    pub n_norm: f64,
    pub attention_dim: usize,
    /// Length of the target property vector.
    pub n_y: usize,
    /// Number of element classes (ghost included).
    pub n_elements: usize,
}

impl EgnnConfig {
    /// Four layers, width 128, eight channels, 6.5 Å cutoff, n_norm = 40.
    pub fn standard(n_elements: usize, n_y: usize) -> Self {
        Self {
            layers: 4,
            hidden_dim: 128,
            vector_channels: 8,
            r_cut: 6.5,
            n_norm: 40.0,
            attention_dim: 128,
            n_y,
            n_elements,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("vector_channels", self.vector_channels),
            ("attention_dim", self.attention_dim),
            ("n_y", self.n_y),
            ("n_elements", self.n_elements),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.r_cut > 0.0 && self.n_norm > 0.0) {
            return Err(Error::InvalidConfig("r_cut and n_norm must be positive".into()));
        }
        Ok(())
    }

    /// Recovers the architecture from tensor shapes; `r_cut` and `n_norm`
    /// are not stored with the weights.
    pub fn infer(weights: &WeightContainer, r_cut: f64, n_norm: f64) -> Result<Self> {
        let shape = |name: &str| -> Result<Vec<usize>> {
            weights
                .get(name)
                .map(|t| t.shape.clone())
                .ok_or_else(|| Error::WeightMismatch {
                    path: name.into(),
                    reason: "missing".into(),
                })
        };
        let property = shape("property.weight")?;
        let head = shape("head.element.weight")?;
        let attention = shape("layers.0.attention.lin1.weight")?;
        let coord = shape("layers.0.coord.lin2.weight")?;
        let bad = |path: &str| Error::WeightMismatch {
            path: path.into(),
            reason: "unexpected rank".into(),
        };
        if property.len() != 2 || head.len() != 2 || attention.len() != 2 || coord.len() != 2 {
            return Err(bad("property.weight"));
        }
        let k = (coord[1] as f64).sqrt().round() as usize;
        if k * k != coord[1] {
            return Err(Error::WeightMismatch {
                path: "layers.0.coord.lin2.weight".into(),
                reason: "output width is not a square channel count".into(),
            });
        }
        let layers = (0..)
            .take_while(|l| weights.get(&format!("layers.{l}.edge.lin1.weight")).is_some())
            .count();
        Ok(Self {
            layers,
            hidden_dim: property[1],
            vector_channels: k,
            r_cut,
            n_norm,
            attention_dim: attention[1],
            n_y: property[0],
            n_elements: head[1],
        })
    }

    fn mlp_dims(&self, name: &str) -> (usize, usize, usize) {
        let h = self.hidden_dim;
        match name {
            "edge" => (2 * h + 1, h, h),
            "attention" => (h, self.attention_dim, 1),
            "node" => (2 * h, h, h),
            "coord" => (2 * h + 1, h, self.vector_channels * self.vector_channels),
            _ => unreachable!("unknown mlp {name}"),
        }
    }
}

/// Smooth cutoff `2 tanh(1 - min(r, r_cut)/r_cut)^2`; zero at and beyond `r_cut`.
pub fn cutoff_weight(r: f64, r_cut: f64) -> f64 {
    let x = (1.0 - r.min(r_cut) / r_cut).tanh();
    2.0 * x * x
}

/// Edge attribute `2 tanh(d^2 / r_cut^2) - 1`.
pub fn edge_attribute(d: f64, r_cut: f64) -> f64 {
    2.0 * (d * d / (r_cut * r_cut)).tanh() - 1.0
}

/// Seeded initial weights: every linear map draws weight and bias from
/// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, layer norms start at identity and the
/// position scale starts at 1.
pub fn init_weights(cfg: &EgnnConfig, seed: u64) -> Result<WeightContainer> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = WeightContainer::new();
    let mut linear = |w: &mut WeightContainer, prefix: &str, fan_in: usize, fan_out: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let weight = draw(fan_in * fan_out);
        let bias = draw(fan_out);
        w.insert(format!("{prefix}.weight"), Tensor::new(vec![fan_in, fan_out], weight).unwrap());
        w.insert(format!("{prefix}.bias"), Tensor::new(vec![fan_out], bias).unwrap());
    };
    let h = cfg.hidden_dim;
    linear(&mut w, "property", cfg.n_y, h);
    linear(&mut w, "input", 1 + cfg.n_elements + h, h);
    for l in 0..cfg.layers {
        for name in MLP_NAMES {
            let (i, m, o) = cfg.mlp_dims(name);
            let prefix = format!("layers.{l}.{name}");
            linear(&mut w, &format!("{prefix}.lin1"), i, m);
            w.insert(format!("{prefix}.norm.weight"), Tensor::new(vec![m], vec![1.0; m]).unwrap());
            w.insert(format!("{prefix}.norm.bias"), Tensor::new(vec![m], vec![0.0; m]).unwrap());
            linear(&mut w, &format!("{prefix}.lin2"), m, o);
        }
    }
    linear(&mut w, "head.element", h, cfg.n_elements);
    w.insert("head.position_scale", Tensor::new(vec![1], vec![1.0]).unwrap());
    Ok(w)
}

#[derive(Clone, Debug)]
struct Linear {
    weight: Array2<f64>,
    bias: Array1<f64>,
}

impl Linear {
    fn load(w: &WeightContainer, prefix: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        Ok(Self {
            weight: w.matrix(&format!("{prefix}.weight"), fan_in, fan_out)?,
            bias: w.vector(&format!("{prefix}.bias"), fan_out)?,
        })
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weight);
        let bias = self.bias.as_slice().expect("contiguous");
        let data = y.as_slice_mut().expect("standard layout");
        for row in data.chunks_exact_mut(bias.len().max(1)) {
            row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
        }
        y
    }
}

/// Linear -> LayerNorm -> SiLU -> Linear.
#[derive(Clone, Debug)]
struct Mlp {
    lin1: Linear,
    gamma: Array1<f64>,
    beta: Array1<f64>,
    lin2: Linear,
}

impl Mlp {
    fn load(w: &WeightContainer, prefix: &str, dims: (usize, usize, usize)) -> Result<Self> {
        let (i, m, o) = dims;
        Ok(Self {
            lin1: Linear::load(w, &format!("{prefix}.lin1"), i, m)?,
            gamma: w.vector(&format!("{prefix}.norm.weight"), m)?,
            beta: w.vector(&format!("{prefix}.norm.bias"), m)?,
            lin2: Linear::load(w, &format!("{prefix}.lin2"), m, o)?,
        })
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = self.lin1.forward(x);
        let width = h.ncols();
        let gamma = self.gamma.as_slice().expect("contiguous");
        let beta = self.beta.as_slice().expect("contiguous");
        let data = h.as_slice_mut().expect("standard layout");
        for row in data.chunks_exact_mut(width) {
            let mean = row.iter().sum::<f64>() / width as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for ((v, g), b) in row.iter_mut().zip(gamma).zip(beta) {
                let z = (*v - mean) * inv * g + b;
                *v = z / (1.0 + (-z).exp());
            }
        }
        self.lin2.forward(&h)
    }
}

#[derive(Clone, Debug)]
struct Layer {
    edge: Mlp,
    attention: Mlp,
    node: Mlp,
    coord: Mlp,
}

/// Network with loaded parameters; cheap to share across threads.
#[derive(Clone, Debug)]
pub struct Egnn {
    cfg: EgnnConfig,
    property: Linear,
    input: Linear,
    layers: Vec<Layer>,
    element_head: Linear,
    position_scale: f64,
}

impl Egnn {
    pub fn from_weights(cfg: EgnnConfig, w: &WeightContainer) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.hidden_dim;
        let property = Linear::load(w, "property", cfg.n_y, h)?;
        let input = Linear::load(w, "input", 1 + cfg.n_elements + h, h)?;
        let layers = (0..cfg.layers)
            .map(|l| {
                let mlp = |name: &str| Mlp::load(w, &format!("layers.{l}.{name}"), cfg.mlp_dims(name));
                Ok(Layer {
                    edge: mlp("edge")?,
                    attention: mlp("attention")?,
                    node: mlp("node")?,
                    coord: mlp("coord")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            property,
            input,
            layers,
            element_head: Linear::load(w, "head.element", h, cfg.n_elements)?,
            position_scale: w.vector("head.position_scale", 1)?[0],
            cfg,
        })
    }

    pub fn random(cfg: EgnnConfig, seed: u64) -> Result<Self> {
        let w = init_weights(&cfg, seed)?;
        Self::from_weights(cfg, &w)
    }

    pub fn config(&self) -> &EgnnConfig {
        &self.cfg
    }

    /// Forward pass on a sample whose elements are logits.
    pub fn forward_sample(&self, sample: &MaterialSample, y: &[f64], t: f64) -> Result<VelocityOutput> {
        self.forward(&sample.lattice, &sample.positions, sample.logits()?, y, t)
    }

    pub fn forward(
        &self,
        lattice: &Lattice,
        positions: &[Vec3],
        logits: &Array2<f64>,
        y: &[f64],
        t: f64,
    ) -> Result<VelocityOutput> {
        let cfg = &self.cfg;
        let n = positions.len();
        if logits.dim() != (n, cfg.n_elements) {
            return Err(Error::InvalidSize(format!(
                "logits {:?} for {n} atoms and {} elements",
                logits.dim(),
                cfg.n_elements
            )));
        }
        if y.len() != cfg.n_y {
            return Err(Error::InvalidSize(format!(
                "target has {} entries, network expects {}",
                y.len(),
                cfg.n_y
            )));
        }
        let graph = build_neighbor_graph(lattice, positions, cfg.r_cut)?;
        let h = cfg.hidden_dim;
        let k = cfg.vector_channels;
        let n_edges = graph.len();

        // initial node features: [t | element logits | projected target]
        let y_row = Array2::from_shape_vec((1, cfg.n_y), y.to_vec()).expect("row");
        let y_proj = self.property.forward(&y_row);
        let mut h0 = Array2::zeros((n, 1 + cfg.n_elements + h));
        h0.column_mut(0).fill(t);
        h0.slice_mut(s![.., 1..1 + cfg.n_elements]).assign(logits);
        h0.slice_mut(s![.., 1 + cfg.n_elements..])
            .assign(&y_proj.broadcast((n, h)).expect("broadcast"));
        let mut feats = self.input.forward(&h0);

        // static edge geometry from the input positions
        let mut attr = Vec::with_capacity(n_edges);
        let mut agg_weight = Vec::with_capacity(n_edges);
        for e in 0..n_edges {
            let d = graph.displacement(positions, e).norm();
            attr.push(edge_attribute(d, cfg.r_cut));
            agg_weight.push(cutoff_weight(d, cfg.r_cut) / cfg.n_norm);
        }

        // coordinates: n x k channels of 3-vectors, stored flat
        let mut coords: Vec<Vec3> = positions
            .iter()
            .flat_map(|p| std::iter::repeat_n(*p, k))
            .collect();

        for layer in &self.layers {
            let edge_in = edge_inputs(&feats, &graph, &attr);
            let messages = layer.edge.forward(&edge_in);
            let gate = layer.attention.forward(&messages);
            let mut agg = Array2::<f64>::zeros((n, h));
            {
                let a = agg.as_slice_mut().expect("standard layout");
                let m = messages.as_slice().expect("standard layout");
                for e in 0..n_edges {
                    let alpha = sigmoid(gate[[e, 0]]) * agg_weight[e];
                    let i = graph.src[e];
                    for (dst, v) in a[i * h..(i + 1) * h].iter_mut().zip(&m[e * h..(e + 1) * h]) {
                        *dst += alpha * v;
                    }
                }
            }
            let mut node_in = Array2::zeros((n, 2 * h));
            node_in.slice_mut(s![.., ..h]).assign(&feats);
            node_in.slice_mut(s![.., h..]).assign(&agg);
            feats = feats + layer.node.forward(&node_in);

            let phi = layer.coord.forward(&edge_inputs(&feats, &graph, &attr));
            let mut updated = coords.clone();
            let inv_norm = 1.0 / cfg.n_norm;
            let mut d = vec![Vec3::zeros(); k];
            for e in 0..n_edges {
                let (i, j) = (graph.src[e], graph.dst[e]);
                for (b, db) in d.iter_mut().enumerate() {
                    *db = coords[i * k + b] - coords[j * k + b] - graph.offsets[e];
                }
                let phi_e = phi.row(e);
                for a in 0..k {
                    let mut acc = Vec3::zeros();
                    for (b, db) in d.iter().enumerate() {
                        acc += phi_e[a * k + b] * db;
                    }
                    updated[i * k + a] += inv_norm * acc;
                }
            }
            coords = updated;
        }

        let v_el = self.element_head.forward(&feats);
        let v_pos = positions
            .iter()
            .enumerate()
            .map(|(i, p)| self.position_scale * (coords[i * k] - p))
            .collect();
        Ok(VelocityOutput { v_pos, v_el })
    }
}

impl VelocityField for Egnn {
    fn velocity(&self, state: &FieldState<'_>) -> Result<VelocityOutput> {
        self.forward(state.lattice, state.positions, state.logits, state.target, state.t)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Rows `[h_i | h_j | e_ij]` for every directed edge.
fn edge_inputs(feats: &Array2<f64>, graph: &NeighborGraph, attr: &[f64]) -> Array2<f64> {
    let h = feats.ncols();
    let f = feats.as_slice().expect("standard layout");
    let mut out = Array2::zeros((graph.len(), 2 * h + 1));
    let data = out.as_slice_mut().expect("standard layout");
    for (e, row) in data.chunks_exact_mut(2 * h + 1).enumerate() {
        let (i, j) = (graph.src[e], graph.dst[e]);
        row[..h].copy_from_slice(&f[i * h..(i + 1) * h]);
        row[h..2 * h].copy_from_slice(&f[j * h..(j + 1) * h]);
        row[2 * h] = attr[e];
    }
    out
}
