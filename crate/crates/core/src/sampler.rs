//! Straight-line flow paths, the velocity-matching loss, and the constrained
//! Euler sampler.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use ndarray::{Array2, Zip};

use crate::charge::{hard_charge_from_logits, soft_charge_gradient};
use crate::error::{Error, Result};
use crate::noise::{sample_element_noise, sample_position_noise};
use crate::projection::{discrete_project, gauss_newton_step, reinterpolate, DiscreteRepair, Swap};
use crate::types::{
    ghost_padded_count, ElementState, ElementTable, GenerationConfig, Lattice, MaterialSample, Vec3,
};
use crate::velocity::{FieldState, VelocityField, VelocityOutput};

/// Point on the flow path, together with the source it started from.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub x_t: Vec<Vec3>,
    pub e_t: Array2<f64>,
    pub x0: Vec<Vec3>,
    pub e0: Array2<f64>,
}

/// `X_t = X_0 + t * min_image(X_0 -> X_1)` (wrapped) and `E_t = E_0 + t (E_1 - E_0)`.
pub fn flow_interpolate(
    x0: &[Vec3],
    x1: &[Vec3],
    e0: &Array2<f64>,
    e1: &Array2<f64>,
    t: f64,
    lattice: &Lattice,
) -> Result<FlowState> {
    if x0.len() != x1.len() {
        return Err(Error::LengthMismatch(x0.len(), x1.len()));
    }
    if e0.dim() != e1.dim() {
        return Err(Error::LengthMismatch(e0.nrows(), e1.nrows()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidConfig(format!("t = {t} outside [0, 1]")));
    }
    let x_t = x0
        .iter()
        .zip(x1)
        .map(|(a, b)| lattice.wrap(&(a + t * lattice.min_image(a, b))))
        .collect();
    let mut e_t = e0.clone();
    Zip::from(&mut e_t).and(e1).for_each(|e, &b| *e += t * (b - *e));
    Ok(FlowState {
        t,
        x_t,
        e_t,
        x0: x0.to_vec(),
        e0: e0.clone(),
    })
}

/// Squared error between predicted and target velocities, summed over every
/// entry of both matrices.
pub fn fm_loss(predicted: &VelocityOutput, target_vx: &[Vec3], target_ve: &Array2<f64>) -> Result<f64> {
    if predicted.v_pos.len() != target_vx.len() {
        return Err(Error::LengthMismatch(predicted.v_pos.len(), target_vx.len()));
    }
    if predicted.v_el.dim() != target_ve.dim() {
        return Err(Error::LengthMismatch(predicted.v_el.nrows(), target_ve.nrows()));
    }
    let pos: f64 = predicted
        .v_pos
        .iter()
        .zip(target_vx)
        .map(|(p, q)| (p - q).norm_squared())
        .sum();
    let el: f64 = predicted
        .v_el
        .iter()
        .zip(target_ve.iter())
        .map(|(p, q)| (p - q).powi(2))
        .sum();
    Ok(pos + el)
}

/// What happened at one integration step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Discrete charge of the clean extrapolation before projection.
    pub charge: i64,
    /// Whether the Gauss-Newton correction was applied.
    pub projected: bool,
    /// Set when the correction was needed but the gradient had vanished.
    pub skipped: bool,
    pub gradient_norm_sq: f64,
    /// `<grad Q_soft, correction> + Q` for applied corrections; zero up to rounding.
    pub first_order_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepairSummary {
    pub charge_before: i64,
    pub total_cost: f64,
    pub swaps: Vec<Swap>,
}

impl From<&DiscreteRepair> for RepairSummary {
    fn from(r: &DiscreteRepair) -> Self {
        Self {
            charge_before: r.charge_before,
            total_cost: r.total_cost,
            swaps: r.swaps.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationTrace {
    pub steps: Vec<StepRecord>,
    pub repair: RepairSummary,
    /// Atom slots including ghosts.
    pub slots: usize,
    pub ghosts_removed: usize,
    pub final_t: f64,
}

impl GenerationTrace {
    /// Tab-separated table, one row per step: `step t charge projected grad_norm_sq`.
    pub fn write_table<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step\tt\tcharge\tprojected\tgrad_norm_sq")?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                w,
                "{i}\t{:.6}\t{}\t{}\t{:.6e}",
                s.t,
                s.charge,
                u8::from(s.projected),
                s.gradient_norm_sq
            )?;
        }
        Ok(())
    }
}

/// Wall-clock split of one generation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Timings {
    pub total: Duration,
    pub field: Duration,
    pub discrete_projection: Duration,
}

#[derive(Clone, Debug)]
pub struct Generated {
    /// Final structure with ghosts removed.
    pub sample: MaterialSample,
    pub trace: GenerationTrace,
    pub timings: Timings,
}

/// Runs the constrained sampler with as many atom slots as the cell holds at
/// `cfg.max_density`.
pub fn generate(
    cfg: &GenerationConfig,
    table: &ElementTable,
    lattice: &Lattice,
    field: &dyn VelocityField,
) -> Result<Generated> {
    let n = ghost_padded_count(lattice, cfg.max_density);
    generate_with_count(cfg, table, lattice, n, field)
}

/// Runs the constrained sampler for an explicit number of atom slots.
///
/// Each step predicts velocities once, advances positions by an Euler step,
/// extrapolates the clean element logits, corrects them toward Q = 0 with a
/// Gauss-Newton step and re-interpolates the element state from the source.
/// The last corrected logits are repaired to exact balance by the discrete
/// projection, after which ghost atoms are dropped.
pub fn generate_with_count(
    cfg: &GenerationConfig,
    table: &ElementTable,
    lattice: &Lattice,
    n_atoms: usize,
    field: &dyn VelocityField,
) -> Result<Generated> {
    let start = Instant::now();
    cfg.validate()?;
    let half = lattice.half_min_width();
    if cfg.r_cut >= half {
        return Err(Error::CutoffExceedsCell {
            r_cut: cfg.r_cut,
            half_width: half,
        });
    }
    let x0 = sample_position_noise(n_atoms, lattice, cfg.seed);
    let e0 = sample_element_noise(n_atoms, table, cfg.sigma, cfg.seed)?.logits;

    let steps = cfg.steps;
    let mut x = x0.clone();
    let mut e = e0.clone();
    let mut clean = e0.clone();
    let mut records = Vec::with_capacity(steps);
    let mut field_time = Duration::ZERO;
    let mut t_next = 0.0;
    for step in 0..steps {
        let t = step as f64 / steps as f64;
        t_next = (step + 1) as f64 / steps as f64;
        let dt = t_next - t;

        let tic = Instant::now();
        let v = field.velocity(&FieldState {
            lattice,
            positions: &x,
            logits: &e,
            x0: &x0,
            e0: &e0,
            target: &cfg.target,
            t,
        })?;
        field_time += tic.elapsed();
        if v.v_pos.len() != n_atoms || v.v_el.dim() != e.dim() {
            return Err(Error::InvalidSize("velocity field returned the wrong shape".into()));
        }

        for (p, vp) in x.iter_mut().zip(&v.v_pos) {
            *p = lattice.wrap(&(*p + dt * vp));
        }

        let mut e1_hat = e.clone();
        e1_hat.scaled_add(1.0 - t, &v.v_el);
        let charge = hard_charge_from_logits(&e1_hat, table);
        let record = match gauss_newton_step(&e1_hat, table, cfg.tau) {
            Ok(out) => {
                let first_order_residual = out.fired().then(|| {
                    let grad = soft_charge_gradient(&e1_hat, cfg.tau, table);
                    let mut dot = 0.0;
                    Zip::from(&grad)
                        .and(&out.corrected_logits)
                        .and(&e1_hat)
                        .for_each(|g, a, b| dot += g * (a - b));
                    dot + charge as f64
                });
                clean = out.corrected_logits;
                StepRecord {
                    t,
                    charge,
                    projected: charge != 0,
                    skipped: false,
                    gradient_norm_sq: out.gradient_norm_sq,
                    first_order_residual,
                }
            }
            // saturated logits: leave them to the final discrete projection
            Err(Error::VanishingGradient { norm_sq, .. }) => {
                clean = e1_hat;
                StepRecord {
                    t,
                    charge,
                    projected: false,
                    skipped: true,
                    gradient_norm_sq: norm_sq,
                    first_order_residual: None,
                }
            }
            Err(err) => return Err(err),
        };
        records.push(record);
        e = reinterpolate(&e0, &clean, t_next);
    }

    let tic = Instant::now();
    let repair = discrete_project(&clean, table)?;
    let dp_time = tic.elapsed();

    let mut positions = Vec::with_capacity(n_atoms);
    let mut assignments = Vec::with_capacity(n_atoms);
    for (p, &a) in x.iter().zip(&repair.assignments) {
        if !table.is_ghost(a) {
            positions.push(*p);
            assignments.push(a);
        }
    }
    let ghosts_removed = n_atoms - assignments.len();
    let sample = MaterialSample::new(
        lattice.clone(),
        positions,
        ElementState::Assignments(assignments),
    )?;
    let trace = GenerationTrace {
        steps: records,
        repair: RepairSummary::from(&repair),
        slots: n_atoms,
        ghosts_removed,
        final_t: t_next,
    };
    Ok(Generated {
        sample,
        trace,
        timings: Timings {
            total: start.elapsed(),
            field: field_time,
            discrete_projection: dp_time,
        },
    })
}
