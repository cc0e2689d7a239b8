//! Residual feed-forward network on top of the physical one-step prediction.
//!
//! The network sees `[u_phy, v_phy, r_phy, δ, cos ψ, sin ψ]` (prime units)
//! and its output is added to the physical prediction, so zero weights give
//! back the physical model exactly. The same machinery in
//! [`OutputMode::Direct`] is the purely data-driven baseline, whose output
//! is an acceleration integrated by the ODE solver.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::TrialLog;
use crate::model::{ControlInput, MotionState, NondimScheme, StateDeriv};
use crate::rollout::{PhysicalModel, VelocityModel};

pub const INPUTS: usize = 6;
pub const OUTPUTS: usize = 3;

/// `[cos ψ, sin ψ]`
pub fn trig_features(psi: f64) -> (f64, f64) {
    (psi.cos(), psi.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub u_phy: f64,
    pub v_phy: f64,
    pub r_phy: f64,
    pub delta: f64,
    pub cos_psi: f64,
    pub sin_psi: f64,
}

impl FeatureVector {
    /// `velocity` in prime units.
    pub fn new(velocity: &MotionState, delta: f64, psi: f64) -> Self {
        let (cos_psi, sin_psi) = trig_features(psi);
        Self {
            u_phy: velocity.u,
            v_phy: velocity.v,
            r_phy: velocity.r,
            delta,
            cos_psi,
            sin_psi,
        }
    }

    pub fn to_array(&self) -> [f64; INPUTS] {
        [
            self.u_phy,
            self.v_phy,
            self.r_phy,
            self.delta,
            self.cos_psi,
            self.sin_psi,
        ]
    }

    pub fn velocity(&self) -> [f64; OUTPUTS] {
        [self.u_phy, self.v_phy, self.r_phy]
    }
}

/// Parameters of `tanh(tanh(x W1 + b1) W2 + b2) W3 + b3`. Matrices are
/// row-major with one row per input unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfnWeights {
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

impl FfnWeights {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            w1: vec![0.0; INPUTS * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * hidden],
            b2: vec![0.0; hidden],
            w3: vec![0.0; hidden * OUTPUTS],
            b3: vec![0.0; OUTPUTS],
        }
    }

    /// Uniform(−s, s) with `s = 1/√fan_in` for every weight and bias.
    pub fn random<R: Rng>(hidden: usize, rng: &mut R) -> Self {
        let mut w = Self::zeros(hidden);
        let fill = |v: &mut Vec<f64>, fan_in: usize, rng: &mut R| {
            let s = 1.0 / (fan_in as f64).sqrt();
            v.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
        };
        fill(&mut w.w1, INPUTS, rng);
        fill(&mut w.b1, INPUTS, rng);
        fill(&mut w.w2, hidden, rng);
        fill(&mut w.b2, hidden, rng);
        fill(&mut w.w3, hidden, rng);
        fill(&mut w.b3, hidden, rng);
        w
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden;
        let shapes = [
            (self.w1.len(), INPUTS * h),
            (self.b1.len(), h),
            (self.w2.len(), h * h),
            (self.b2.len(), h),
            (self.w3.len(), h * OUTPUTS),
            (self.b3.len(), OUTPUTS),
        ];
        if h == 0 {
            return Err(Error::InvalidParams("hidden width must be positive".into()));
        }
        if let Some((found, expected)) = shapes.iter().find(|(a, b)| a != b) {
            return Err(Error::InvalidParams(format!(
                "weight shape mismatch: {found} entries, expected {expected}"
            )));
        }
        if !self.to_flat().iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("network weights"));
        }
        Ok(())
    }

    fn parts(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn num_params(&self) -> usize {
        self.parts().iter().map(|p| p.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.parts().iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Self {
        let mut w = Self::zeros(hidden);
        assert_eq!(flat.len(), w.num_params());
        let mut rest = flat;
        for part in [
            &mut w.w1, &mut w.b1, &mut w.w2, &mut w.b2, &mut w.w3, &mut w.b3,
        ] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        w
    }

    /// `Σᵢ ‖Wⁱ‖²_F` over the weight matrices only.
    pub fn matrix_sq_norm(&self) -> f64 {
        [&self.w1, &self.w2, &self.w3]
            .iter()
            .flat_map(|m| m.iter())
            .map(|x| x * x)
            .sum()
    }
}

struct Activations {
    a1: Vec<f64>,
    a2: Vec<f64>,
    out: [f64; OUTPUTS],
}

fn forward_cached(w: &FfnWeights, x: &[f64; INPUTS]) -> Activations {
    let h = w.hidden;
    let mut a1 = w.b1.clone();
    for (i, xi) in x.iter().enumerate() {
        for j in 0..h {
            a1[j] += xi * w.w1[i * h + j];
        }
    }
    a1.iter_mut().for_each(|z| *z = z.tanh());
    let mut a2 = w.b2.clone();
    for (i, ai) in a1.iter().enumerate() {
        for j in 0..h {
            a2[j] += ai * w.w2[i * h + j];
        }
    }
    a2.iter_mut().for_each(|z| *z = z.tanh());
    let mut out = [w.b3[0], w.b3[1], w.b3[2]];
    for (i, ai) in a2.iter().enumerate() {
        for (c, o) in out.iter_mut().enumerate() {
            *o += ai * w.w3[i * OUTPUTS + c];
        }
    }
    Activations { a1, a2, out }
}

/// Raw network output for an (already standardized) input.
pub fn ffn_forward(weights: &FfnWeights, x: &FeatureVector) -> [f64; OUTPUTS] {
    forward_cached(weights, &x.to_array()).out
}

/// Input standardization and output scale stored alongside trained weights.
/// Outputs are only scaled, never shifted, so zero weights mean zero
/// correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub input_mean: [f64; INPUTS],
    pub input_std: [f64; INPUTS],
    pub output_scale: [f64; OUTPUTS],
}

impl Default for Scaling {
    fn default() -> Self {
        Self::identity()
    }
}

impl Scaling {
    pub fn identity() -> Self {
        Self {
            input_mean: [0.0; INPUTS],
            input_std: [1.0; INPUTS],
            output_scale: [1.0; OUTPUTS],
        }
    }

    /// Input mean/std of the features and standard deviation of the
    /// network's target `(target − base)` per channel.
    pub fn fit(samples: &[TrainingSample], mode: OutputMode) -> Self {
        let n = samples.len().max(1) as f64;
        let floor = |s: f64| if s > 1e-12 { s } else { 1.0 };
        let mut mean = [0.0; INPUTS];
        for s in samples {
            for (m, x) in mean.iter_mut().zip(s.feature.to_array()) {
                *m += x / n;
            }
        }
        let mut var = [0.0; INPUTS];
        for s in samples {
            for ((v, x), m) in var.iter_mut().zip(s.feature.to_array()).zip(mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let residuals: Vec<[f64; OUTPUTS]> = samples.iter().map(|s| s.network_target(mode)).collect();
        let mut rmean = [0.0; OUTPUTS];
        for r in &residuals {
            for (m, x) in rmean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut rvar = [0.0; OUTPUTS];
        for r in &residuals {
            for ((v, x), m) in rvar.iter_mut().zip(r).zip(rmean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        Self {
            input_mean: mean,
            input_std: var.map(|v| floor(v.sqrt())),
            output_scale: rvar.map(|v| floor(v.sqrt())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.input_mean.iter().all(|x| x.is_finite())
            && self.input_std.iter().all(|x| x.is_finite() && *x > 0.0)
            && self.output_scale.iter().all(|x| x.is_finite() && *x > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("invalid network scaling statistics".into()))
        }
    }

    fn standardize(&self, x: &[f64; INPUTS]) -> [f64; INPUTS] {
        let mut z = [0.0; INPUTS];
        for i in 0..INPUTS {
            z[i] = (x[i] - self.input_mean[i]) / self.input_std[i];
        }
        z
    }
}

/// How the network output is combined with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// Output is added to the velocity part of the features.
    Residual,
    /// Output is used as-is.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub feature: FeatureVector,
    /// Prime units: next-step velocities for the hybrid model, accelerations
    /// for the data-driven baseline.
    pub target: [f64; OUTPUTS],
}

impl TrainingSample {
    fn base(&self, mode: OutputMode) -> [f64; OUTPUTS] {
        match mode {
            OutputMode::Residual => self.feature.velocity(),
            OutputMode::Direct => [0.0; OUTPUTS],
        }
    }

    fn network_target(&self, mode: OutputMode) -> [f64; OUTPUTS] {
        let base = self.base(mode);
        [
            self.target[0] - base[0],
            self.target[1] - base[1],
            self.target[2] - base[2],
        ]
    }
}

/// Trained weights together with everything needed to apply them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualNet {
    pub mode: OutputMode,
    pub scaling: Scaling,
    pub weights: FfnWeights,
}

impl ResidualNet {
    pub fn zeros(mode: OutputMode, hidden: usize) -> Self {
        Self {
            mode,
            scaling: Scaling::identity(),
            weights: FfnWeights::zeros(hidden),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.scaling.validate()
    }

    /// Network contribution in prime units (before adding any base).
    pub fn correction(&self, feature: &FeatureVector) -> [f64; OUTPUTS] {
        let z = self.scaling.standardize(&feature.to_array());
        let out = forward_cached(&self.weights, &z).out;
        [
            out[0] * self.scaling.output_scale[0],
            out[1] * self.scaling.output_scale[1],
            out[2] * self.scaling.output_scale[2],
        ]
    }
}

/// `(1/N) Σ ‖(prediction − target) / scale‖² + (λ/2) Σᵢ ‖Wⁱ‖²_F`.
/// With identity scaling this is the plain mean squared error in prime
/// units.
pub fn loss(
    weights: &FfnWeights,
    scaling: &Scaling,
    mode: OutputMode,
    batch: &[TrainingSample],
    lambda: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut mse = 0.0;
    for s in batch {
        let e = scaled_error(weights, scaling, mode, s, &mut None);
        mse += e.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(mse / n + 0.5 * lambda * weights.matrix_sq_norm())
}

fn scaled_error(
    weights: &FfnWeights,
    scaling: &Scaling,
    mode: OutputMode,
    s: &TrainingSample,
    cache: &mut Option<(Activations, [f64; INPUTS])>,
) -> [f64; OUTPUTS] {
    let z = scaling.standardize(&s.feature.to_array());
    let act = forward_cached(weights, &z);
    let t = s.network_target(mode);
    let mut e = [0.0; OUTPUTS];
    for c in 0..OUTPUTS {
        e[c] = act.out[c] - t[c] / scaling.output_scale[c];
    }
    *cache = Some((act, z));
    e
}

/// Loss and its exact gradient with respect to every weight and bias.
pub fn loss_gradient(
    weights: &FfnWeights,
    scaling: &Scaling,
    mode: OutputMode,
    batch: &[TrainingSample],
    lambda: f64,
) -> Result<(f64, FfnWeights)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let h = weights.hidden;
    let n = batch.len() as f64;
    let mut g = FfnWeights::zeros(h);
    let mut mse = 0.0;
    let mut cache = None;
    let mut g_a2 = vec![0.0; h];
    let mut g_a1 = vec![0.0; h];
    for s in batch {
        let e = scaled_error(weights, scaling, mode, s, &mut cache);
        let (act, x) = cache.take().expect("forward cache");
        mse += e.iter().map(|x| x * x).sum::<f64>();
        let g_out = e.map(|e| 2.0 * e / n);

        for (c, go) in g_out.iter().enumerate() {
            g.b3[c] += go;
        }
        for i in 0..h {
            let mut acc = 0.0;
            for (c, go) in g_out.iter().enumerate() {
                g.w3[i * OUTPUTS + c] += act.a2[i] * go;
                acc += weights.w3[i * OUTPUTS + c] * go;
            }
            g_a2[i] = acc * (1.0 - act.a2[i] * act.a2[i]);
        }
        for i in 0..h {
            let mut acc = 0.0;
            for j in 0..h {
                g.w2[i * h + j] += act.a1[i] * g_a2[j];
                acc += weights.w2[i * h + j] * g_a2[j];
            }
            g_a1[i] = acc * (1.0 - act.a1[i] * act.a1[i]);
        }
        for j in 0..h {
            g.b2[j] += g_a2[j];
            g.b1[j] += g_a1[j];
        }
        for (i, xi) in x.iter().enumerate() {
            for j in 0..h {
                g.w1[i * h + j] += xi * g_a1[j];
            }
        }
    }
    for (gm, wm) in [
        (&mut g.w1, &weights.w1),
        (&mut g.w2, &weights.w2),
        (&mut g.w3, &weights.w3),
    ] {
        gm.iter_mut().zip(wm).for_each(|(g, w)| *g += lambda * w);
    }
    Ok((mse / n + 0.5 * lambda * weights.matrix_sq_norm(), g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationUnit {
    /// One iteration is one mini-batch Adam step.
    #[default]
    Steps,
    /// One iteration is a full pass over the shuffled dataset.
    Epochs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub iteration_unit: IterationUnit,
    pub batch_size: usize,
    pub lambda: f64,
    pub hidden: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            iterations: 800,
            iteration_unit: IterationUnit::Steps,
            batch_size: 64,
            lambda: 0.01,
            hidden: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("training.{name} must be positive")));
            }
        }
        if self.iterations == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "training.iterations, batch_size and hidden must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("training.lambda must be >= 0".into()));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::Config("training.beta1/beta2 must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub net: ResidualNet,
    /// Mini-batch loss before each Adam step.
    pub loss_trace: Vec<f64>,
    /// Full-dataset loss at the initial weights.
    pub initial_loss: f64,
    /// Full-dataset loss at the returned weights.
    pub final_loss: f64,
}

/// Endless stream of mini-batches drawn from seeded reshuffles.
struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, cursor: 0 }
    }

    fn next_batch(&mut self, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut batch = Vec::with_capacity(size);
        while batch.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(rng);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }
}

/// Adam on the regularized loss. Scaling statistics are fitted on
/// `dataset` first and kept with the returned weights.
pub fn train(dataset: &[TrainingSample], cfg: &TrainConfig, mode: OutputMode) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let scaling = Scaling::fit(dataset, mode);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = FfnWeights::random(cfg.hidden, &mut rng);
    let initial_loss = loss(&weights, &scaling, mode, dataset, cfg.lambda)?;

    let steps = match cfg.iteration_unit {
        IterationUnit::Steps => cfg.iterations,
        IterationUnit::Epochs => cfg.iterations * dataset.len().div_ceil(cfg.batch_size),
    };
    let mut params = weights.to_flat();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut sampler = BatchSampler::new(dataset.len(), &mut rng);
    let mut loss_trace = Vec::with_capacity(steps);
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for step in 1..=steps {
        batch.clear();
        batch.extend(
            sampler
                .next_batch(cfg.batch_size, &mut rng)
                .into_iter()
                .map(|i| dataset[i]),
        );
        let (l, grad) = loss_gradient(&weights, &scaling, mode, &batch, cfg.lambda)?;
        if !l.is_finite() {
            return Err(Error::TrainingDiverged {
                iteration: step,
                loss: l,
            });
        }
        loss_trace.push(l);
        let bc1 = 1.0 - cfg.beta1.powi(step as i32);
        let bc2 = 1.0 - cfg.beta2.powi(step as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grad.to_flat()).zip(&mut m).zip(&mut v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
        }
        weights = FfnWeights::from_flat(cfg.hidden, &params);
    }

    let final_loss = loss(&weights, &scaling, mode, dataset, cfg.lambda)?;
    if !final_loss.is_finite() {
        return Err(Error::TrainingDiverged {
            iteration: steps,
            loss: final_loss,
        });
    }
    Ok(TrainOutcome {
        net: ResidualNet {
            mode,
            scaling,
            weights,
        },
        loss_trace,
        initial_loss,
        final_loss,
    })
}

/// Teacher-forced samples for the hybrid model: the physical one-step
/// prediction from each measured state, paired with the measured next state.
pub fn hybrid_samples(log: &TrialLog, physics: &PhysicalModel) -> Vec<TrainingSample> {
    let scheme = &physics.params.nondim;
    log.rows
        .windows(2)
        .map(|w| {
            let (now, next) = (&w[0], &w[1]);
            let phy = physics.next_velocity(&now.state(), now.psi, &now.control(), log.dt);
            TrainingSample {
                feature: FeatureVector::new(&scheme.to_prime(&phy), now.delta, now.psi),
                target: scheme.to_prime(&next.state()).to_array(),
            }
        })
        .collect()
}

/// Samples for the data-driven baseline: measured state features and the
/// forward-difference acceleration (prime) as target.
pub fn datadriven_samples(log: &TrialLog, scheme: &NondimScheme) -> Vec<TrainingSample> {
    log.rows
        .windows(2)
        .map(|w| {
            let (now, next) = (&w[0], &w[1]);
            let (a, b) = (now.state(), next.state());
            let accel = StateDeriv::new(
                (b.u - a.u) / log.dt,
                (b.v - a.v) / log.dt,
                (b.r - a.r) / log.dt,
            );
            let p = scheme.deriv_to_prime(&accel);
            TrainingSample {
                feature: FeatureVector::new(&scheme.to_prime(&a), now.delta, now.psi),
                target: [p.du, p.dv, p.dr],
            }
        })
        .collect()
}

/// Physical one-step prediction plus the learned residual.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub physics: PhysicalModel,
    pub net: ResidualNet,
}

impl HybridModel {
    /// Physical one-step velocities (SI) and the network correction (prime).
    fn parts(
        &self,
        state: &MotionState,
        psi: f64,
        control: &ControlInput,
        dt: f64,
    ) -> (MotionState, [f64; OUTPUTS]) {
        let phy = self.physics.next_velocity(state, psi, control, dt);
        let scheme = &self.physics.params.nondim;
        let feature = FeatureVector::new(&scheme.to_prime(&phy), control.delta, psi);
        (phy, self.net.correction(&feature))
    }
}

/// Next-step velocities in prime units: `FFN(features) + physical step`.
pub fn hybrid_predict(
    model: &HybridModel,
    state: &MotionState,
    psi: f64,
    control: &ControlInput,
    dt: f64,
) -> MotionState {
    let (phy, corr) = model.parts(state, psi, control, dt);
    let p = model.physics.params.nondim.to_prime(&phy);
    MotionState::new(p.u + corr[0], p.v + corr[1], p.r + corr[2])
}

impl VelocityModel for HybridModel {
    fn next_velocity(&self, state: &MotionState, psi: f64, control: &ControlInput, dt: f64) -> MotionState {
        let (phy, corr) = self.parts(state, psi, control, dt);
        let c = self
            .physics
            .params
            .nondim
            .from_prime(&MotionState::from_array(corr));
        MotionState::new(phy.u + c.u, phy.v + c.v, phy.r + c.r)
    }
}

/// Accelerations (SI) of the purely data-driven baseline.
pub fn pure_datadriven_forward(
    net: &ResidualNet,
    scheme: &NondimScheme,
    state: &MotionState,
    psi: f64,
    control: &ControlInput,
) -> StateDeriv {
    let feature = FeatureVector::new(&scheme.to_prime(state), control.delta, psi);
    let a = net.correction(&feature);
    scheme.deriv_from_prime(&StateDeriv::new(a[0], a[1], a[2]))
}

/// The baseline network integrated by an explicit solver. Heading is frozen
/// over a step.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDrivenModel {
    pub net: ResidualNet,
    pub scheme: NondimScheme,
    pub solver: crate::ode::Solver,
}

impl VelocityModel for DataDrivenModel {
    fn next_velocity(&self, state: &MotionState, psi: f64, control: &ControlInput, dt: f64) -> MotionState {
        self.solver.step(
            |s, c| pure_datadriven_forward(&self.net, &self.scheme, s, psi, c),
            state,
            control,
            dt,
        )
    }
}
