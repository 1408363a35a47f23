//! Recurrent weight construction with controlled structure and scale.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{random_orthogonal, spectral_norm, spectral_radius, Matrix};
use crate::reservoir::{Activation, Reservoir};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyKind {
    /// Each entry nonzero with probability `density`, values i.i.d. N(0, 1).
    RandomSparse { density: f64 },
    /// `W[i, (i+1) mod n] = ring_weight`.
    Cycle { ring_weight: f64 },
    /// Watts–Strogatz ring lattice with `neighbors` links per node, each
    /// rewired with probability `rewire_prob`; weights i.i.d. N(0, 1).
    SmallWorld { neighbors: usize, rewire_prob: f64 },
    /// Haar-random orthogonal matrix, so σ_max = ρ.
    Orthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ScaleTarget {
    SpectralRadius(f64),
    SpectralNorm(f64),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "no_scale")]
    pub scale_target: ScaleTarget,
}

fn no_scale() -> ScaleTarget {
    ScaleTarget::None
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, n: usize, seed: u64, scale_target: ScaleTarget) -> Self {
        Self {
            kind,
            n,
            seed,
            scale_target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("topology needs n >= 2, got {}", self.n)));
        }
        match self.kind {
            TopologyKind::RandomSparse { density } if !(density > 0.0 && density <= 1.0) => {
                return Err(invalid(format!(
                    "density must lie in (0, 1], got {density}"
                )));
            }
            TopologyKind::SmallWorld {
                neighbors,
                rewire_prob,
            } => {
                if neighbors == 0 || neighbors % 2 != 0 || neighbors >= self.n {
                    return Err(invalid(format!(
                        "small-world neighbors must be even, positive and below n, got {neighbors}"
                    )));
                }
                if !(0.0..=1.0).contains(&rewire_prob) {
                    return Err(invalid(format!(
                        "rewire probability must lie in [0, 1], got {rewire_prob}"
                    )));
                }
            }
            TopologyKind::Cycle { ring_weight } if !ring_weight.is_finite() => {
                return Err(invalid("ring weight must be finite"));
            }
            _ => {}
        }
        match self.scale_target {
            ScaleTarget::SpectralRadius(v) | ScaleTarget::SpectralNorm(v) if !(v > 0.0) => {
                Err(invalid(format!("scale target must be positive, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

/// A constructed matrix together with any degeneracy warnings.
#[derive(Debug, Clone)]
pub struct Built {
    pub matrix: Matrix,
    pub warnings: Vec<String>,
}

pub fn build(spec: &TopologySpec) -> Result<Built> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = SeededRng::new(spec.seed);
    let mut warnings = Vec::new();
    let mut m = match spec.kind {
        TopologyKind::RandomSparse { density } => {
            let expected = density * (n * n) as f64;
            if expected < 1.0 {
                warnings.push(format!(
                    "density {density} gives {expected:.3} expected nonzeros for n = {n}"
                ));
            }
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if rng.bernoulli(density) {
                        m[(i, j)] = rng.standard_normal();
                    }
                }
            }
            m
        }
        TopologyKind::Cycle { ring_weight } => {
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                m[(i, (i + 1) % n)] = ring_weight;
            }
            m
        }
        TopologyKind::SmallWorld {
            neighbors,
            rewire_prob,
        } => small_world(n, neighbors, rewire_prob, &mut rng),
        TopologyKind::Orthogonal => random_orthogonal(n, &mut rng),
    };
    match spec.scale_target {
        ScaleTarget::None => {}
        target => m = rescale_to(&m, target)?,
    }
    Ok(Built {
        matrix: m,
        warnings,
    })
}

fn small_world(n: usize, k: usize, p: f64, rng: &mut SeededRng) -> Matrix {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut lattice = Vec::with_capacity(n * k / 2);
    for i in 0..n {
        for j in 1..=k / 2 {
            lattice.push((i, (i + j) % n));
        }
    }
    let mut edges: BTreeSet<(usize, usize)> = lattice.iter().map(|&(a, b)| key(a, b)).collect();
    for &(i, t) in &lattice {
        if !rng.bernoulli(p) {
            continue;
        }
        // a node already linked to everyone keeps its edge
        if (0..n).all(|c| c == i || edges.contains(&key(i, c))) {
            continue;
        }
        let target = loop {
            let c = rng.below(n);
            if c != i && !edges.contains(&key(i, c)) {
                break c;
            }
        };
        edges.remove(&key(i, t));
        edges.insert(key(i, target));
    }
    let mut m = Matrix::zeros(n, n);
    for &(a, b) in &edges {
        m[(a, b)] = rng.standard_normal();
        m[(b, a)] = rng.standard_normal();
    }
    m
}

/// Multiplies `m` so that its spectral radius or spectral norm hits the
/// target value.
pub fn rescale_to(m: &Matrix, target: ScaleTarget) -> Result<Matrix> {
    let (current, value, what) = match target {
        ScaleTarget::SpectralRadius(v) => (spectral_radius(m)?, v, "spectral radius"),
        ScaleTarget::SpectralNorm(v) => (spectral_norm(m)?, v, "spectral norm"),
        ScaleTarget::None => return Ok(m.clone()),
    };
    if !(value > 0.0) {
        return Err(invalid(format!(
            "scale target must be positive, got {value}"
        )));
    }
    if current == 0.0 {
        return Err(Error::CannotRescale(format!(
            "{what} is zero (nilpotent or zero matrix)"
        )));
    }
    Ok(m.scaled(value / current))
}

/// Everything needed to instantiate a reservoir from a seed.
///
/// `W` comes from `topology`; `W_in` entries are i.i.d. uniform on
/// `[-input_scaling, input_scaling]`, bias entries uniform on
/// `[-bias_scaling, bias_scaling]`. Input and bias streams are derived from
/// the topology seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirDesign {
    pub topology: TopologySpec,
    pub activation: Activation,
    #[serde(default = "one")]
    pub leak_rate: f64,
    #[serde(default = "one")]
    pub input_scaling: f64,
    #[serde(default)]
    pub bias_scaling: f64,
    #[serde(default = "one_usize")]
    pub input_dim: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl ReservoirDesign {
    pub fn new(topology: TopologySpec, activation: Activation) -> Self {
        Self {
            topology,
            activation,
            leak_rate: 1.0,
            input_scaling: 1.0,
            bias_scaling: 0.0,
            input_dim: 1,
        }
    }

    pub fn input_scaling(mut self, s: f64) -> Self {
        self.input_scaling = s;
        self
    }

    pub fn bias_scaling(mut self, s: f64) -> Self {
        self.bias_scaling = s;
        self
    }

    pub fn leak_rate(mut self, a: f64) -> Self {
        self.leak_rate = a;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.topology.seed = seed;
        self
    }

    pub fn build(&self) -> Result<Reservoir> {
        if !(self.input_scaling >= 0.0) || !(self.bias_scaling >= 0.0) {
            return Err(invalid("input and bias scaling must be nonnegative"));
        }
        if self.input_dim == 0 {
            return Err(invalid("input dimension must be at least 1"));
        }
        let w = build(&self.topology)?.matrix;
        let n = self.topology.n;
        let mut rng = SeededRng::new(derive_seed(self.topology.seed, 1));
        let s = self.input_scaling;
        let w_in_data = (0..n * self.input_dim)
            .map(|_| if s > 0.0 { rng.uniform(-s, s) } else { 0.0 })
            .collect();
        let w_in = Matrix::from_row_major(n, self.input_dim, w_in_data)?;
        let mut rng = SeededRng::new(derive_seed(self.topology.seed, 2));
        let bs = self.bias_scaling;
        let b = (0..n)
            .map(|_| if bs > 0.0 { rng.uniform(-bs, bs) } else { 0.0 })
            .collect();
        Reservoir::new(w_in, w, b, self.activation, self.leak_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_radius_matches_ring_weight() {
        let spec = TopologySpec::new(
            TopologyKind::Cycle { ring_weight: 0.9 },
            4,
            0,
            ScaleTarget::None,
        );
        let m = build(&spec).unwrap().matrix;
        assert!((spectral_radius(&m).unwrap() - 0.9).abs() < 1e-9);
        assert_eq!(m[(3, 0)], 0.9);
        assert_eq!(m.count_nonzero(), 4);
    }

    #[test]
    fn cycle_power_is_scaled_identity() {
        let n = 6;
        let w = 0.8;
        let spec = TopologySpec::new(
            TopologyKind::Cycle { ring_weight: w },
            n,
            0,
            ScaleTarget::None,
        );
        let m = build(&spec).unwrap().matrix;
        let mut p = Matrix::identity(n);
        for _ in 0..n {
            p = p.matmul(&m).unwrap();
        }
        let want = Matrix::identity(n).scaled(w.powi(n as i32));
        for (a, b) in p.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_random_sparse() {
        let spec = TopologySpec::new(
            TopologyKind::RandomSparse { density: 1.0 },
            12,
            9,
            ScaleTarget::None,
        );
        let m = build(&spec).unwrap().matrix;
        assert_eq!(m.count_nonzero(), 144);
    }

    #[test]
    fn sparse_density_roughly_respected() {
        let spec = TopologySpec::new(
            TopologyKind::RandomSparse { density: 0.1 },
            100,
            3,
            ScaleTarget::None,
        );
        let frac = build(&spec).unwrap().matrix.count_nonzero() as f64 / 1e4;
        assert!((frac - 0.1).abs() < 0.02);
    }

    #[test]
    fn degenerate_density_warns() {
        let spec = TopologySpec::new(
            TopologyKind::RandomSparse { density: 0.01 },
            5,
            1,
            ScaleTarget::None,
        );
        assert_eq!(build(&spec).unwrap().warnings.len(), 1);
    }

    #[test]
    fn small_world_without_rewiring_is_lattice() {
        let spec = TopologySpec::new(
            TopologyKind::SmallWorld {
                neighbors: 4,
                rewire_prob: 0.0,
            },
            10,
            5,
            ScaleTarget::None,
        );
        let m = build(&spec).unwrap().matrix;
        for i in 0..10 {
            let nz: Vec<usize> = (0..10).filter(|&j| m[(i, j)] != 0.0).collect();
            assert_eq!(nz.len(), 4);
            for d in [1, 2] {
                assert!(nz.contains(&((i + d) % 10)));
                assert!(nz.contains(&((i + 10 - d) % 10)));
            }
        }
    }

    #[test]
    fn small_world_rewiring_keeps_edge_count_and_no_loops() {
        let spec = TopologySpec::new(
            TopologyKind::SmallWorld {
                neighbors: 4,
                rewire_prob: 0.5,
            },
            30,
            8,
            ScaleTarget::None,
        );
        let m = build(&spec).unwrap().matrix;
        assert_eq!(m.count_nonzero(), 30 * 4);
        for i in 0..30 {
            assert_eq!(m[(i, i)], 0.0);
        }
    }

    #[test]
    fn seed_determinism() {
        let spec = TopologySpec::new(
            TopologyKind::SmallWorld {
                neighbors: 2,
                rewire_prob: 0.3,
            },
            20,
            77,
            ScaleTarget::SpectralRadius(0.9),
        );
        assert_eq!(build(&spec).unwrap().matrix, build(&spec).unwrap().matrix);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            TopologySpec::new(
                TopologyKind::RandomSparse { density: 0.0 },
                5,
                0,
                ScaleTarget::None,
            ),
            TopologySpec::new(
                TopologyKind::Cycle { ring_weight: 1.0 },
                1,
                0,
                ScaleTarget::None,
            ),
            TopologySpec::new(
                TopologyKind::SmallWorld {
                    neighbors: 3,
                    rewire_prob: 0.1,
                },
                10,
                0,
                ScaleTarget::None,
            ),
            TopologySpec::new(
                TopologyKind::Cycle { ring_weight: 1.0 },
                4,
                0,
                ScaleTarget::SpectralNorm(-1.0),
            ),
        ];
        for s in bad {
            assert!(build(&s).is_err(), "{s:?}");
        }
    }

    #[test]
    fn rescale_diagonal() {
        let m = Matrix::from_diag(&[2.0, 1.0]);
        let r = rescale_to(&m, ScaleTarget::SpectralRadius(0.9)).unwrap();
        assert!((r[(0, 0)] - 0.9).abs() < 1e-12);
        assert!((r[(1, 1)] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn rescale_to_norm() {
        let mut rng = SeededRng::new(12);
        let m = crate::numerics::gaussian_matrix(30, 30, &mut rng);
        let r = rescale_to(&m, ScaleTarget::SpectralNorm(3.5)).unwrap();
        assert!((spectral_norm(&r).unwrap() - 3.5).abs() < 1e-6);
    }

    #[test]
    fn rescale_cycle_radius() {
        let spec = TopologySpec::new(
            TopologyKind::Cycle { ring_weight: 2.0 },
            5,
            0,
            ScaleTarget::SpectralRadius(0.5),
        );
        let m = build(&spec).unwrap().matrix;
        assert!((m[(0, 1)].abs() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rescale_nilpotent_fails() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            rescale_to(&m, ScaleTarget::SpectralRadius(0.9)),
            Err(Error::CannotRescale(_))
        ));
        assert!(rescale_to(&m, ScaleTarget::SpectralNorm(0.9)).is_ok());
    }

    #[test]
    fn rescale_idempotent() {
        let mut rng = SeededRng::new(4);
        let m = crate::numerics::gaussian_matrix(20, 20, &mut rng);
        let once = rescale_to(&m, ScaleTarget::SpectralRadius(0.9)).unwrap();
        let twice = rescale_to(&once, ScaleTarget::SpectralRadius(0.9)).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn orthogonal_norm_equals_radius() {
        let spec = TopologySpec::new(
            TopologyKind::Orthogonal,
            40,
            6,
            ScaleTarget::SpectralNorm(1.2),
        );
        let m = build(&spec).unwrap().matrix;
        assert!((spectral_radius(&m).unwrap() - 1.2).abs() < 1e-6);
    }

    #[test]
    fn design_builds_consistent_reservoir() {
        let d = ReservoirDesign::new(
            TopologySpec::new(
                TopologyKind::RandomSparse { density: 0.2 },
                10,
                1,
                ScaleTarget::SpectralRadius(0.9),
            ),
            Activation::Tanh,
        )
        .input_scaling(0.1)
        .bias_scaling(0.2);
        let r = d.build().unwrap();
        assert_eq!(r.n(), 10);
        assert!(r.w_in().as_slice().iter().all(|v| v.abs() < 0.1));
        assert!(r.bias().iter().all(|v| v.abs() < 0.2));
        assert_eq!(r, d.build().unwrap());
    }
}
